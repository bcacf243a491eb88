#include "platoon/config.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace platoon {

using nlohmann::json;

const char* to_string(PlantFidelity fidelity) {
  switch (fidelity) {
    case PlantFidelity::ideal: return "ideal";
    case PlantFidelity::lag: return "lag";
    case PlantFidelity::nonlinear: return "nonlinear";
  }
  return "unknown";
}

const char* to_string(InitialStateConvention convention) {
  return convention == InitialStateConvention::zero_error ? "zero-error" : "paper-literal";
}

const char* to_string(LeaderProfileKind kind) {
  return kind == LeaderProfileKind::ramp_cruise_brake ? "ramp-cruise-brake" : "constant";
}

namespace {

json vec3_to_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

Vec3 vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw std::invalid_argument(std::string(what) + ": expected an array of 3 numbers");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument(std::string(what) + ": expected array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw std::invalid_argument(std::string(what) + ": rows must be non-empty arrays");
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw std::invalid_argument(std::string(what) + ": row " + std::to_string(i + 1) +
                                  " has inconsistent length");
    }
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
  }
  return m;
}

json graph_to_json(const TopologyEntry& entry) {
  if (!entry.name.empty()) return entry.name;
  json followers = json::array();
  for (int i = 1; i <= entry.graph.n_followers(); ++i) {
    json item;
    item["in"] = entry.graph.in_neighbors(i);
    item["leader"] = entry.graph.leader_link(i);
    followers.push_back(item);
  }
  return json{{"followers", followers}};
}

TopologyEntry graph_from_json(const json& j, int n_followers) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    return TopologyEntry{name, make_named_graph(name, n_followers)};
  }
  if (!j.is_object() || !j.contains("followers")) {
    throw std::invalid_argument("topologies: entries must be names or {followers: [...]} objects");
  }
  const json& followers = j["followers"];
  if (!followers.is_array() || static_cast<int>(followers.size()) != n_followers) {
    throw std::invalid_argument("topologies: follower list must have n_followers entries");
  }
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(n_followers, n_followers);
  Eigen::VectorXi leader = Eigen::VectorXi::Zero(n_followers);
  for (int i = 0; i < n_followers; ++i) {
    const json& item = followers[static_cast<std::size_t>(i)];
    if (item.contains("leader") && item["leader"].get<bool>()) leader(i) = 1;
    if (item.contains("in")) {
      for (const auto& jn : item["in"]) {
        const int j_index = jn.get<int>();
        if (j_index < 1 || j_index > n_followers || j_index == i + 1) {
          throw std::invalid_argument("topologies: in-neighbor index out of range");
        }
        adjacency(i, j_index - 1) = 1;
      }
    }
  }
  return TopologyEntry{"", DirectedGraph(std::move(adjacency), std::move(leader))};
}

std::vector<Vec3> broadcast_weight(const json& j, int n, const char* what) {
  std::vector<Vec3> result;
  if (j.is_array() && !j.empty() && j[0].is_array()) {
    if (static_cast<int>(j.size()) != n) {
      throw std::invalid_argument(std::string(what) + ": per-vehicle list must have n entries");
    }
    for (const auto& item : j) result.push_back(vec3_from_json(item, what));
  } else {
    const Vec3 value = vec3_from_json(j, what);
    result.assign(static_cast<std::size_t>(n), value);
  }
  return result;
}

std::vector<double> broadcast_scalar(const json& j, int n, const char* what) {
  std::vector<double> result;
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != n) {
      throw std::invalid_argument(std::string(what) + ": per-vehicle list must have n entries");
    }
    for (const auto& item : j) result.push_back(item.get<double>());
  } else {
    result.assign(static_cast<std::size_t>(n), j.get<double>());
  }
  return result;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n_followers < 1) throw std::invalid_argument("config: n_followers must be >= 1");
  if (d0 <= 0.0) throw std::invalid_argument("config: d0 must be positive");
  if (dt <= 0.0 || dt_sub <= 0.0) throw std::invalid_argument("config: dt and dt_sub must be positive");
  const double sub_ratio = dt / dt_sub;
  if (std::abs(sub_ratio - std::round(sub_ratio)) > 1e-9 * sub_ratio) {
    throw std::invalid_argument("config: dt_sub must divide dt");
  }
  const double step_ratio = t_end / dt;
  if (t_end < 0.0 || std::abs(step_ratio - std::round(step_ratio)) > 1e-9 * std::max(step_ratio, 1.0)) {
    throw std::invalid_argument("config: t_end must be a multiple of dt");
  }
  if (horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("config: beta must lie in (0, 1)");
  if (u_min >= u_max) throw std::invalid_argument("config: input bounds must satisfy u_min < u_max");
  const auto check_size = [&](std::size_t size, const char* what) {
    if (size != static_cast<std::size_t>(n_followers)) {
      throw std::invalid_argument(std::string("config: ") + what + " must have one entry per follower");
    }
  };
  check_size(weight_r.size(), "weights.r");
  check_size(weight_f.size(), "weights.f");
  check_size(weight_s.size(), "weights.s");
  check_size(weight_g.size(), "weights.g");
  if (topologies.empty()) throw std::invalid_argument("config: at least one topology is required");
  for (const auto& entry : topologies) {
    if (entry.graph.n_followers() != n_followers) {
      throw std::invalid_argument("config: topology follower count mismatch");
    }
  }
  if (mu.rows() != mu.cols() || mu.rows() != static_cast<Eigen::Index>(topologies.size())) {
    throw std::invalid_argument("config: mu must be square with one row per topology");
  }
  if (auto violation = validate_generator(mu)) {
    throw std::invalid_argument("config: mu cell (" + std::to_string(violation->row) + ", " +
                                std::to_string(violation->col) + "): " + violation->message);
  }
  if (initial_mode < 1 || initial_mode > static_cast<int>(topologies.size())) {
    throw std::invalid_argument("config: initial_mode out of range");
  }
  plant_params.validate();
  if (!(psi_exponent > 0.0 && psi_exponent <= 1.0)) {
    throw std::invalid_argument("config: psi_exponent must lie in (0, 1]");
  }
  if (varrho0 < 1.0) throw std::invalid_argument("config: varrho0 must be >= 1");
  if (eps_floor < 0.0) throw std::invalid_argument("config: eps_floor must be non-negative");
  if (slack_weight <= 0.0) throw std::invalid_argument("config: slack_weight must be positive");
  if (terminal_slack_linear < 0.0 || terminal_slack_quadratic <= 0.0) {
    throw std::invalid_argument("config: terminal slack weights must be positive");
  }
  if (staleness_max_age < 0) throw std::invalid_argument("config: staleness_max_age must be >= 0");
  if (qp_tolerance <= 0.0) throw std::invalid_argument("config: qp.tolerance must be positive");
  if (qp_max_iterations < 1) throw std::invalid_argument("config: qp.max_iterations must be >= 1");
  if (leader_constant_velocity < 0.0) {
    throw std::invalid_argument("config: leader velocity must be non-negative");
  }
  // Union spanning tree requirement is checked on construction.
  (void)topology_set();
}

std::string ScenarioConfig::to_json_string(int indent) const {
  json j;
  j["n_followers"] = n_followers;
  j["d0"] = d0;
  j["dt"] = dt;
  j["dt_sub"] = dt_sub;
  j["horizon"] = horizon;
  j["t_end"] = t_end;
  json weights;
  weights["r"] = weight_r;
  json f_list = json::array();
  for (const auto& w : weight_f) f_list.push_back(vec3_to_json(w));
  weights["f"] = f_list;
  json s_list = json::array();
  for (const auto& w : weight_s) s_list.push_back(vec3_to_json(w));
  weights["s"] = s_list;
  json g_list = json::array();
  for (const auto& w : weight_g) g_list.push_back(vec3_to_json(w));
  weights["g"] = g_list;
  j["weights"] = weights;
  j["beta"] = beta;
  j["input_bounds"] = json::array({u_min, u_max});
  json topo_list = json::array();
  for (const auto& entry : topologies) topo_list.push_back(graph_to_json(entry));
  j["topologies"] = topo_list;
  j["mu"] = matrix_to_json(mu);
  j["initial_mode"] = initial_mode;
  j["plant"] = json{{"fidelity", to_string(fidelity)},
                    {"params",
                     {{"mass", plant_params.mass},
                      {"efficiency", plant_params.efficiency},
                      {"wheel_radius", plant_params.wheel_radius},
                      {"drag", plant_params.drag},
                      {"gravity", plant_params.gravity},
                      {"rolling", plant_params.rolling},
                      {"lag", plant_params.lag}}}};
  json leader;
  leader["profile"] = to_string(leader_profile);
  leader["velocity"] = leader_constant_velocity;
  j["leader"] = leader;
  json observer;
  if (observer_use_paper_p) {
    observer["p"] = "paper";
  } else if (observer_has_explicit_p) {
    observer["p"] = matrix_to_json(observer_p);
  } else {
    observer["q"] = matrix_to_json(observer_q);
  }
  observer["psi_exponent"] = psi_exponent;
  observer["varrho0"] = varrho0;
  j["observer"] = observer;
  j["terminal_gain"] = json{{"mode", gain_mode == GainMode::paper_value ? "paper-value" : "discrete-lqr"}};
  j["eps_floor"] = eps_floor;
  j["slack_weight"] = slack_weight;
  j["terminal_slack"] = json{{"linear", terminal_slack_linear}, {"quadratic", terminal_slack_quadratic}};
  j["staleness_max_age"] = staleness_max_age;
  j["initial_state"] = to_string(initial_state);
  j["qp"] = json{{"tolerance", qp_tolerance}, {"max_iterations", qp_max_iterations}};
  j["default_seed"] = default_seed;
  return j.dump(indent);
}

ScenarioConfig ScenarioConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& error) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + error.what());
  }
  ScenarioConfig config = ScenarioConfig::preset("paper-iv");
  if (j.contains("n_followers")) config.n_followers = j["n_followers"].get<int>();
  const int n = config.n_followers;
  if (n < 1) throw std::invalid_argument("config: n_followers must be >= 1");
  if (n != 5) {
    // Re-broadcast the preset defaults to the requested platoon size before
    // any overrides land.
    config.weight_r.assign(static_cast<std::size_t>(n), 0.1);
    config.weight_f.assign(static_cast<std::size_t>(n), Vec3(5.0, 2.5, 1.0));
    config.weight_f.back() = Vec3::Zero();
    config.weight_s.assign(static_cast<std::size_t>(n), Vec3(5.0, 2.5, 1.0));
    config.weight_g.assign(static_cast<std::size_t>(n), Vec3(50.0, 25.0, 10.0));
    config.topologies = {{"lpf", make_lpf(n)}, {"pf", make_pf(n)}};
    config.mu = (Eigen::MatrixXd(2, 2) << -1.0, 1.0, 1.0, -1.0).finished();
  }
  if (j.contains("d0")) config.d0 = j["d0"].get<double>();
  if (j.contains("dt")) config.dt = j["dt"].get<double>();
  if (j.contains("dt_sub")) config.dt_sub = j["dt_sub"].get<double>();
  if (j.contains("horizon")) config.horizon = j["horizon"].get<int>();
  if (j.contains("t_end")) config.t_end = j["t_end"].get<double>();
  if (j.contains("weights")) {
    const json& w = j["weights"];
    if (w.contains("r")) config.weight_r = broadcast_scalar(w["r"], n, "weights.r");
    if (w.contains("f")) config.weight_f = broadcast_weight(w["f"], n, "weights.f");
    if (w.contains("s")) config.weight_s = broadcast_weight(w["s"], n, "weights.s");
    if (w.contains("g")) config.weight_g = broadcast_weight(w["g"], n, "weights.g");
  }
  if (j.contains("beta")) config.beta = j["beta"].get<double>();
  if (j.contains("input_bounds")) {
    const json& bounds = j["input_bounds"];
    if (!bounds.is_array() || bounds.size() != 2) {
      throw std::invalid_argument("config: input_bounds must be [min, max]");
    }
    config.u_min = bounds[0].get<double>();
    config.u_max = bounds[1].get<double>();
  }
  if (j.contains("topologies")) {
    config.topologies.clear();
    for (const auto& entry : j["topologies"]) {
      config.topologies.push_back(graph_from_json(entry, n));
    }
  }
  if (j.contains("mu")) config.mu = matrix_from_json(j["mu"], "mu");
  if (j.contains("initial_mode")) config.initial_mode = j["initial_mode"].get<int>();
  if (j.contains("plant")) {
    const json& plant = j["plant"];
    if (plant.contains("fidelity")) {
      const std::string fidelity = plant["fidelity"].get<std::string>();
      if (fidelity == "ideal") config.fidelity = PlantFidelity::ideal;
      else if (fidelity == "lag") config.fidelity = PlantFidelity::lag;
      else if (fidelity == "nonlinear") config.fidelity = PlantFidelity::nonlinear;
      else throw std::invalid_argument("config: unknown plant fidelity '" + fidelity + "'");
    }
    if (plant.contains("params")) {
      const json& params = plant["params"];
      if (params.contains("mass")) config.plant_params.mass = params["mass"].get<double>();
      if (params.contains("efficiency")) config.plant_params.efficiency = params["efficiency"].get<double>();
      if (params.contains("wheel_radius")) config.plant_params.wheel_radius = params["wheel_radius"].get<double>();
      if (params.contains("drag")) config.plant_params.drag = params["drag"].get<double>();
      if (params.contains("gravity")) config.plant_params.gravity = params["gravity"].get<double>();
      if (params.contains("rolling")) config.plant_params.rolling = params["rolling"].get<double>();
      if (params.contains("lag")) config.plant_params.lag = params["lag"].get<double>();
    }
  }
  if (j.contains("leader")) {
    const json& leader = j["leader"];
    if (leader.contains("profile")) {
      const std::string profile = leader["profile"].get<std::string>();
      if (profile == "ramp-cruise-brake") config.leader_profile = LeaderProfileKind::ramp_cruise_brake;
      else if (profile == "constant") config.leader_profile = LeaderProfileKind::constant_velocity;
      else throw std::invalid_argument("config: unknown leader profile '" + profile + "'");
    }
    if (leader.contains("velocity")) config.leader_constant_velocity = leader["velocity"].get<double>();
  }
  if (j.contains("observer")) {
    const json& observer = j["observer"];
    if (observer.contains("p")) {
      if (observer["p"].is_string()) {
        if (observer["p"].get<std::string>() != "paper") {
          throw std::invalid_argument("config: observer.p must be 'paper' or a 3x3 matrix");
        }
        config.observer_use_paper_p = true;
        config.observer_has_explicit_p = false;
      } else {
        config.observer_use_paper_p = false;
        config.observer_has_explicit_p = true;
        const Eigen::MatrixXd p = matrix_from_json(observer["p"], "observer.p");
        if (p.rows() != 3 || p.cols() != 3) throw std::invalid_argument("config: observer.p must be 3x3");
        config.observer_p = p;
      }
    } else if (observer.contains("q")) {
      config.observer_use_paper_p = false;
      config.observer_has_explicit_p = false;
      const Eigen::MatrixXd q = matrix_from_json(observer["q"], "observer.q");
      if (q.rows() != 3 || q.cols() != 3) throw std::invalid_argument("config: observer.q must be 3x3");
      config.observer_q = q;
    }
    if (observer.contains("psi_exponent")) config.psi_exponent = observer["psi_exponent"].get<double>();
    if (observer.contains("varrho0")) config.varrho0 = observer["varrho0"].get<double>();
  }
  if (j.contains("terminal_gain")) {
    const std::string mode = j["terminal_gain"].value("mode", "paper-value");
    if (mode == "paper-value") config.gain_mode = GainMode::paper_value;
    else if (mode == "discrete-lqr") config.gain_mode = GainMode::discrete_lqr;
    else throw std::invalid_argument("config: unknown terminal gain mode '" + mode + "'");
  }
  if (j.contains("eps_floor")) config.eps_floor = j["eps_floor"].get<double>();
  if (j.contains("slack_weight")) config.slack_weight = j["slack_weight"].get<double>();
  if (j.contains("terminal_slack")) {
    const json& ts = j["terminal_slack"];
    if (ts.contains("linear")) config.terminal_slack_linear = ts["linear"].get<double>();
    if (ts.contains("quadratic")) config.terminal_slack_quadratic = ts["quadratic"].get<double>();
  }
  if (j.contains("staleness_max_age")) config.staleness_max_age = j["staleness_max_age"].get<int>();
  if (j.contains("initial_state")) {
    const std::string convention = j["initial_state"].get<std::string>();
    if (convention == "zero-error") config.initial_state = InitialStateConvention::zero_error;
    else if (convention == "paper-literal") config.initial_state = InitialStateConvention::paper_literal;
    else throw std::invalid_argument("config: unknown initial_state convention '" + convention + "'");
  }
  if (j.contains("qp")) {
    const json& qp = j["qp"];
    if (qp.contains("tolerance")) config.qp_tolerance = qp["tolerance"].get<double>();
    if (qp.contains("max_iterations")) config.qp_max_iterations = qp["max_iterations"].get<int>();
  }
  if (j.contains("default_seed")) config.default_seed = j["default_seed"].get<std::uint64_t>();
  config.validate();
  return config;
}

ScenarioConfig ScenarioConfig::preset(const std::string& name) {
  if (name != "paper-iv") throw std::invalid_argument("unknown preset '" + name + "'");
  ScenarioConfig config;
  config.n_followers = 5;
  config.weight_r.assign(5, 0.1);
  config.weight_f.assign(5, Vec3(5.0, 2.5, 1.0));
  config.weight_f[4] = Vec3::Zero();
  config.weight_s.assign(5, Vec3(5.0, 2.5, 1.0));
  config.weight_g.assign(5, Vec3(50.0, 25.0, 10.0));
  config.topologies = {{"lpf", make_lpf(5)},
                       {"lpf-failure", make_lpf_failure(5)},
                       {"pf", make_pf(5)},
                       {"pf-failure", make_pf_failure(5)}};
  config.mu = (Eigen::MatrixXd(4, 4) << -2.0, 0.8, 0.8, 0.4,
                                         1.2, -2.4, 0.8, 0.4,
                                         0.4, 0.4, -1.2, 0.4,
                                         1.2, 0.8, 0.8, -2.8).finished();
  config.initial_mode = 1;
  config.observer_use_paper_p = true;
  return config;
}

bool ScenarioConfig::is_preset(const std::string& name) { return name == "paper-iv"; }

std::uint64_t ScenarioConfig::hash() const {
  const std::string canonical = to_json_string(0);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

TopologySet ScenarioConfig::topology_set() const {
  std::vector<DirectedGraph> graphs;
  graphs.reserve(topologies.size());
  for (const auto& entry : topologies) graphs.push_back(entry.graph);
  return TopologySet(std::move(graphs));
}

Generator ScenarioConfig::generator() const { return Generator(mu); }

ObserverDesign ScenarioConfig::observer_design() const {
  if (observer_use_paper_p) return ObserverDesign::from_p(drift_matrix(), paper_observer_p());
  if (observer_has_explicit_p) return ObserverDesign::from_p(drift_matrix(), observer_p);
  return ObserverDesign::from_q(drift_matrix(), observer_q);
}

Vec3 ScenarioConfig::terminal_gain_value() const {
  const DiscreteModel m = model();
  return terminal_gain(gain_mode, m.a_d, m.b_d);
}

int ScenarioConfig::n_steps() const { return static_cast<int>(std::llround(t_end / dt)); }

int ScenarioConfig::n_sub_steps() const { return static_cast<int>(std::llround(dt / dt_sub)); }

VehicleControllerParams ScenarioConfig::controller_params(int index) const {
  VehicleControllerParams params;
  params.index = index;
  params.horizon = horizon;
  params.weights.r = weight_r[static_cast<std::size_t>(index - 1)];
  params.weights.f = weight_f[static_cast<std::size_t>(index - 1)];
  params.weights.s = weight_s[static_cast<std::size_t>(index - 1)];
  params.weights.g = weight_g[static_cast<std::size_t>(index - 1)];
  params.d0 = d0;
  params.beta = beta;
  params.u_min = u_min;
  params.u_max = u_max;
  params.eps_floor = eps_floor;
  params.slack_weight = slack_weight;
  params.terminal_slack_linear = terminal_slack_linear;
  params.terminal_slack_quadratic = terminal_slack_quadratic;
  params.max_bundle_age = staleness_max_age;
  params.model = model();
  params.terminal_gain = terminal_gain_value();
  params.qp.tolerance = qp_tolerance;
  params.qp.max_iterations = qp_max_iterations;
  return params;
}

VehicleState ScenarioConfig::leader_state_at(double t) const {
  if (leader_profile == LeaderProfileKind::ramp_cruise_brake) return leader_state(t);
  return VehicleState{leader_constant_velocity * t, leader_constant_velocity, 0.0};
}

}  // namespace platoon
