#include "platoon/dmpc.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace platoon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Mat3> model_powers(const DiscreteModel& model, int horizon) {
  std::vector<Mat3> powers(static_cast<std::size_t>(horizon) + 1);
  powers[0] = Mat3::Identity();
  for (int k = 1; k <= horizon; ++k) {
    powers[static_cast<std::size_t>(k)] = model.a_d * powers[static_cast<std::size_t>(k - 1)];
  }
  return powers;
}

// Input-to-state map at stage k: column j is A_d^{k-1-j} B_d for j < k.
Eigen::MatrixXd stage_input_map(const std::vector<Mat3>& powers, const Vec3& b_d, int k,
                                int horizon) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(3, horizon);
  for (int j = 0; j < k; ++j) {
    e.col(j) = powers[static_cast<std::size_t>(k - 1 - j)] * b_d;
  }
  return e;
}

Trajectory zero_input_rollout(const VehicleState& x0, const DiscreteModel& model, int horizon) {
  Trajectory trajectory;
  trajectory.states.resize(static_cast<std::size_t>(horizon) + 1);
  trajectory.inputs.assign(static_cast<std::size_t>(horizon), 0.0);
  trajectory.states[0] = x0.vec();
  for (int k = 0; k < horizon; ++k) {
    trajectory.states[static_cast<std::size_t>(k + 1)] =
        model.a_d * trajectory.states[static_cast<std::size_t>(k)];
  }
  return trajectory;
}

double assumed_spacing_peak(const Trajectory& assumed, const std::vector<Vec3>& avg_obs,
                            double gap) {
  double peak = 0.0;
  for (std::size_t k = 0; k < assumed.states.size(); ++k) {
    peak = std::max(peak, std::abs(assumed.states[k](0) - avg_obs[k](0) + gap));
  }
  return peak;
}

}  // namespace

bool Trajectory::dynamically_consistent(const DiscreteModel& model, double tol) const {
  if (states.size() != inputs.size() + 1) return false;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Vec3 predicted = model.a_d * states[k] + model.b_d * inputs[k];
    if ((predicted - states[k + 1]).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

std::vector<Vec3> propagate_observation(const Vec3& vartheta, int horizon,
                                        const DiscreteModel& model) {
  if (!vartheta.allFinite()) throw std::invalid_argument("propagate_observation: non-finite estimate");
  std::vector<Vec3> sequence(static_cast<std::size_t>(horizon) + 1);
  sequence[0] = vartheta;
  for (int k = 1; k <= horizon; ++k) {
    sequence[static_cast<std::size_t>(k)] = model.a_d * sequence[static_cast<std::size_t>(k - 1)];
  }
  return sequence;
}

double spacing_error_bound(double history_max, double assumed_max, double eps_floor) {
  if (history_max < 0.0 || assumed_max < 0.0 || eps_floor < 0.0) {
    throw std::invalid_argument("spacing_error_bound: inputs must be non-negative");
  }
  return std::max({history_max, assumed_max, eps_floor});
}

void init_assumed(VehicleControllerState& ctrl, const VehicleState& x0,
                  const Vec3& initial_estimate) {
  const int horizon = ctrl.params.horizon;
  ctrl.bundle.self_assumed = zero_input_rollout(x0, ctrl.params.model, horizon);
  ctrl.bundle.obs_assumed = propagate_observation(initial_estimate, horizon, ctrl.params.model);
  ctrl.bundle.avg_obs_assumed = ctrl.bundle.obs_assumed;
  ctrl.bundle.max_assumed_spacing_error = assumed_spacing_peak(
      ctrl.bundle.self_assumed, ctrl.bundle.avg_obs_assumed, ctrl.gap_to_leader()(0));
  ctrl.hist_max_spacing_error = 0.0;
  ctrl.planned_inputs.assign(static_cast<std::size_t>(horizon), 0.0);
  ctrl.warm_inputs = Eigen::VectorXd::Zero(horizon);
  ctrl.warm_slack = 0.0;
}

void refresh_observation(VehicleControllerState& ctrl, const Vec3& vartheta_own,
                         const Vec3& vartheta_avg, const VehicleState& x_now) {
  const int horizon = ctrl.params.horizon;
  if (static_cast<int>(ctrl.planned_inputs.size()) == horizon) {
    Trajectory& assumed = ctrl.bundle.self_assumed;
    assumed.states.resize(static_cast<std::size_t>(horizon) + 1);
    assumed.inputs = ctrl.planned_inputs;
    assumed.states[0] = x_now.vec();
    for (int k = 0; k < horizon; ++k) {
      assumed.states[static_cast<std::size_t>(k + 1)] =
          ctrl.params.model.a_d * assumed.states[static_cast<std::size_t>(k)] +
          ctrl.params.model.b_d * ctrl.planned_inputs[static_cast<std::size_t>(k)];
    }
  }
  ctrl.bundle.obs_assumed = propagate_observation(vartheta_own, horizon, ctrl.params.model);
  ctrl.bundle.avg_obs_assumed = propagate_observation(vartheta_avg, horizon, ctrl.params.model);
  const double gap = ctrl.gap_to_leader()(0);
  ctrl.bundle.max_assumed_spacing_error =
      assumed_spacing_peak(ctrl.bundle.self_assumed, ctrl.bundle.avg_obs_assumed, gap);
  const double spacing_error_now = std::abs(x_now.p - vartheta_avg(0) + gap);
  ctrl.hist_max_spacing_error = std::max(ctrl.hist_max_spacing_error, spacing_error_now);
}

double published_spacing_bound(const VehicleControllerState& ctrl) {
  return spacing_error_bound(ctrl.hist_max_spacing_error, ctrl.bundle.max_assumed_spacing_error,
                             ctrl.params.eps_floor);
}

void receive_predecessor(VehicleControllerState& ctrl, const AssumedBundle& bundle,
                         double predecessor_history_max) {
  ctrl.predecessor.assumed_states = bundle.self_assumed.states;
  ctrl.predecessor.history_max = predecessor_history_max;
  ctrl.predecessor.assumed_max = bundle.max_assumed_spacing_error;
  ctrl.predecessor.age = 0;
  ctrl.predecessor.ever_received = true;
}

void age_predecessor(VehicleControllerState& ctrl) {
  auto& states = ctrl.predecessor.assumed_states;
  if (!states.empty()) {
    for (std::size_t k = 0; k + 1 < states.size(); ++k) states[k] = states[k + 1];
    states.back() = ctrl.params.model.a_d * states.back();
  }
  ctrl.predecessor.age += 1;
}

QpProblem build_problem(const VehicleControllerState& ctrl, const VehicleState& x_now,
                        const std::vector<Vec3>* predecessor_states, double d_pred,
                        bool string_rows) {
  const auto& params = ctrl.params;
  const int horizon = params.horizon;
  const std::size_t length = static_cast<std::size_t>(horizon) + 1;
  if (ctrl.bundle.self_assumed.states.size() != length ||
      ctrl.bundle.avg_obs_assumed.size() != length) {
    throw std::invalid_argument("build_problem: bundle sequences must span the horizon");
  }
  if (predecessor_states != nullptr && predecessor_states->size() != length) {
    throw std::invalid_argument("build_problem: predecessor sequence must span the horizon");
  }

  // Decision layout: stacked inputs, then (with the spacing rows) the
  // forward string slack and the current-state band exceedance, then three
  // split slack pairs (s+, s-) for the terminal pin. The k = 0 spacing rows
  // get their own slack: the current state is beyond control, and letting it
  // inflate a shared slack would switch off the enforceable rows exactly
  // when they matter.
  const int string_col = string_rows ? horizon : -1;
  const int band_col = string_rows ? horizon + 1 : -1;
  const int terminal_col = horizon + (string_rows ? 2 : 0);
  const int dim = terminal_col + 6;

  const std::vector<Mat3> powers = model_powers(params.model, horizon);
  std::vector<Eigen::MatrixXd> input_maps(length);
  std::vector<Vec3> free_states(length);
  for (int k = 0; k <= horizon; ++k) {
    input_maps[static_cast<std::size_t>(k)] = stage_input_map(powers, params.model.b_d, k, horizon);
    free_states[static_cast<std::size_t>(k)] = powers[static_cast<std::size_t>(k)] * x_now.vec();
  }

  Vec3 stage_weight = params.weights.f + params.weights.g;
  if (predecessor_states != nullptr) stage_weight += params.weights.s;
  const Vec3 gap_leader = ctrl.gap_to_leader();
  const Vec3 gap_pred = ctrl.gap_to_predecessor();

  QpProblem qp;
  qp.h = Eigen::MatrixXd::Zero(dim, dim);
  qp.f = Eigen::VectorXd::Zero(dim);

  // Stage costs on the input-reachable states k = 1..N_p plus the input
  // penalty; the terminal state additionally carries the pin below.
  for (int k = 1; k <= horizon; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const Eigen::MatrixXd& e = input_maps[idx];
    Vec3 reference = params.weights.f.cwiseProduct(ctrl.bundle.self_assumed.states[idx]) +
                     params.weights.g.cwiseProduct(ctrl.bundle.avg_obs_assumed[idx] - gap_leader);
    if (predecessor_states != nullptr) {
      reference += params.weights.s.cwiseProduct((*predecessor_states)[idx] - gap_pred);
    }
    const Vec3 weighted_free = stage_weight.cwiseProduct(free_states[idx]);
    qp.h.topLeftCorner(horizon, horizon).noalias() +=
        2.0 * e.transpose() * stage_weight.asDiagonal() * e;
    qp.f.head(horizon).noalias() += 2.0 * e.transpose() * (weighted_free - reference);
  }
  for (int j = 0; j < horizon; ++j) qp.h(j, j) += 2.0 * params.weights.r;
  if (string_rows) {
    qp.h(string_col, string_col) = 2.0 * params.slack_weight;
    qp.h(band_col, band_col) = 2.0 * params.slack_weight;
  }
  for (int c = 0; c < 6; ++c) {
    qp.h(terminal_col + c, terminal_col + c) = 2.0 * params.terminal_slack_quadratic;
    qp.f(terminal_col + c) = params.terminal_slack_linear;
  }

  // Terminal pin x(N_p) = assumed terminal, kept consistent by the split
  // slacks; the linear penalty recovers the hard equality whenever the pin
  // is reachable under the input box.
  const Vec3 terminal_gap =
      ctrl.bundle.self_assumed.states[length - 1] - free_states[length - 1];
  qp.a_eq = Eigen::MatrixXd::Zero(3, dim);
  qp.b_eq = Eigen::VectorXd::Zero(3);
  for (int c = 0; c < 3; ++c) {
    qp.a_eq.block(c, 0, 1, horizon) = input_maps[length - 1].row(c);
    qp.a_eq(c, terminal_col + 2 * c) = -1.0;
    qp.a_eq(c, terminal_col + 2 * c + 1) = 1.0;
    qp.b_eq(c) = terminal_gap(c);
  }

  // Predicted-spacing-error rows |gamma e_hat(k)| <= beta D + slack.
  if (string_rows) {
    qp.a_in = Eigen::MatrixXd::Zero(2 * (horizon + 1), dim);
    qp.b_in = Eigen::VectorXd::Zero(2 * (horizon + 1));
    const double bound = params.beta * d_pred;
    for (int k = 0; k <= horizon; ++k) {
      const auto idx = static_cast<std::size_t>(k);
      const int slack_column = k == 0 ? band_col : string_col;
      const Eigen::RowVectorXd position_row = input_maps[idx].row(0);
      const double target = ctrl.bundle.avg_obs_assumed[idx](0) - gap_leader(0);
      const double free_position = free_states[idx](0);
      qp.a_in.block(2 * k, 0, 1, horizon) = position_row;
      qp.a_in(2 * k, slack_column) = -1.0;
      qp.b_in(2 * k) = bound + target - free_position;
      qp.a_in.block(2 * k + 1, 0, 1, horizon) = -position_row;
      qp.a_in(2 * k + 1, slack_column) = -1.0;
      qp.b_in(2 * k + 1) = bound - target + free_position;
    }
  } else {
    qp.a_in.resize(0, dim);
    qp.b_in.resize(0);
  }

  qp.lb = Eigen::VectorXd::Constant(dim, params.u_min);
  qp.ub = Eigen::VectorXd::Constant(dim, params.u_max);
  if (string_rows) {
    qp.lb(string_col) = 0.0;
    qp.ub(string_col) = kInf;
    qp.lb(band_col) = 0.0;
    qp.ub(band_col) = kInf;
  }
  for (int c = 0; c < 6; ++c) {
    qp.lb(terminal_col + c) = 0.0;
    qp.ub(terminal_col + c) = kInf;
  }
  return qp;
}

StepResult step_vehicle(VehicleControllerState& ctrl, const VehicleState& x_now,
                        const std::vector<Vec3>* leader_reference) {
  const auto& params = ctrl.params;
  const int horizon = params.horizon;

  const std::vector<Vec3>* predecessor_states = nullptr;
  double d_pred = 0.0;
  bool string_rows = false;
  bool s_dropped = false;

  if (params.index == 1) {
    // The preceding vehicle is the leader; without a leader link the
    // averaged observation rollout substitutes.
    predecessor_states = leader_reference != nullptr ? leader_reference
                                                     : &ctrl.bundle.avg_obs_assumed;
  } else {
    const bool usable = ctrl.predecessor.ever_received &&
                        ctrl.predecessor.age <= params.max_bundle_age;
    if (usable) {
      predecessor_states = &ctrl.predecessor.assumed_states;
      d_pred = spacing_error_bound(ctrl.predecessor.history_max, ctrl.predecessor.assumed_max,
                                   params.eps_floor);
      string_rows = true;
    } else {
      s_dropped = true;
    }
  }

  QpProblem qp = build_problem(ctrl, x_now, predecessor_states, d_pred, string_rows);

  Eigen::VectorXd warm = Eigen::VectorXd::Zero(qp.dim());
  warm.head(horizon) = ctrl.warm_inputs;
  if (string_rows) warm(horizon) = ctrl.warm_slack;
  const QpSolution solution = solve(qp, params.qp, &warm);
  const int band_col = horizon + 1;
  if (solution.status == QpStatus::infeasible) {
    throw std::runtime_error("step_vehicle: QP infeasible for vehicle " +
                             std::to_string(params.index));
  }

  // Exact rollout of the optimal inputs; bounds stay hard on application.
  std::vector<double> optimal_inputs(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) {
    optimal_inputs[static_cast<std::size_t>(k)] =
        std::clamp(solution.z(k), params.u_min, params.u_max);
  }
  std::vector<Vec3> optimal_states(static_cast<std::size_t>(horizon) + 1);
  optimal_states[0] = x_now.vec();
  for (int k = 0; k < horizon; ++k) {
    optimal_states[static_cast<std::size_t>(k + 1)] =
        params.model.a_d * optimal_states[static_cast<std::size_t>(k)] +
        params.model.b_d * optimal_inputs[static_cast<std::size_t>(k)];
  }

  // Terminal update: extend with the gain against the averaged observation.
  // The extension input is not a decision variable and stays unclamped, so
  // the terminal chain remains a stable linear system; the pin's slack
  // absorbs the rare steps on which the extension outruns the input box.
  const Vec3 terminal_error = ctrl.bundle.avg_obs_assumed[static_cast<std::size_t>(horizon)] -
                              ctrl.bundle.self_assumed.states[static_cast<std::size_t>(horizon)] -
                              ctrl.gap_to_leader();
  const double terminal_input = params.terminal_gain.dot(terminal_error);

  Trajectory next_assumed;
  next_assumed.states.resize(static_cast<std::size_t>(horizon) + 1);
  next_assumed.inputs.resize(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) {
    next_assumed.states[static_cast<std::size_t>(k)] = optimal_states[static_cast<std::size_t>(k + 1)];
  }
  for (int k = 0; k + 1 < horizon; ++k) {
    next_assumed.inputs[static_cast<std::size_t>(k)] = optimal_inputs[static_cast<std::size_t>(k + 1)];
  }
  next_assumed.inputs[static_cast<std::size_t>(horizon - 1)] = terminal_input;
  // Extension from the rolled-out terminal state (equal to the assumed one up
  // to the solver tolerance) keeps the emitted trajectory exactly consistent.
  next_assumed.states[static_cast<std::size_t>(horizon)] =
      params.model.a_d * optimal_states[static_cast<std::size_t>(horizon)] +
      params.model.b_d * terminal_input;

  ctrl.bundle.self_assumed = std::move(next_assumed);
  ctrl.planned_inputs = ctrl.bundle.self_assumed.inputs;

  // Warm start for the next step: the shifted optimal inputs.
  for (int k = 0; k + 1 < horizon; ++k) ctrl.warm_inputs(k) = optimal_inputs[static_cast<std::size_t>(k + 1)];
  ctrl.warm_inputs(horizon - 1) = std::clamp(terminal_input, params.u_min, params.u_max);
  ctrl.warm_slack = string_rows ? std::max(solution.z(horizon), 0.0) : 0.0;

  const int terminal_col = horizon + (string_rows ? 2 : 0);
  double terminal_slack = 0.0;
  for (int c = 0; c < 3; ++c) {
    terminal_slack = std::max(terminal_slack, std::max(solution.z(terminal_col + 2 * c), 0.0) +
                                                  std::max(solution.z(terminal_col + 2 * c + 1), 0.0));
  }
  StepResult result;
  result.applied_input = optimal_inputs[0];
  result.diagnostics.qp_iterations = solution.iterations;
  result.diagnostics.qp_status = solution.status;
  result.diagnostics.slack = string_rows ? std::max(solution.z(horizon), 0.0) : 0.0;
  result.diagnostics.band_exceedance = string_rows ? std::max(solution.z(band_col), 0.0) : 0.0;
  result.diagnostics.terminal_slack = terminal_slack;
  result.diagnostics.spacing_bound = string_rows ? params.beta * d_pred : 0.0;
  result.diagnostics.bundle_age = params.index == 1 ? 0 : ctrl.predecessor.age;
  result.diagnostics.s_term_dropped = s_dropped;
  result.diagnostics.string_rows_present = string_rows;
  return result;
}

}  // namespace platoon
