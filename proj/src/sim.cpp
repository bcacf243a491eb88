#include "platoon/sim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "platoon/observer.hpp"

namespace platoon {

namespace {

struct PlantState {
  VehicleState x;
  EngineState engine;
};

void reserve_series(FollowerSeries& series, int n_steps) {
  const auto grid = static_cast<std::size_t>(n_steps) + 1;
  const auto steps = static_cast<std::size_t>(n_steps);
  for (auto* v : {&series.p, &series.v, &series.a, &series.e_p, &series.e_v, &series.e_a,
                  &series.theta_p, &series.theta_v, &series.theta_a, &series.kappa, &series.varrho}) {
    v->reserve(grid);
  }
  series.u.reserve(steps);
  series.slack.reserve(steps);
  series.band_exceedance.reserve(steps);
  series.terminal_slack.reserve(steps);
  series.spacing_bound.reserve(steps);
  series.qp_iterations.reserve(steps);
  series.bundle_age.reserve(steps);
  series.s_term_dropped.reserve(steps);
  series.string_rows.reserve(steps);
}

}  // namespace

SimResult run(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();

  const int n = config.n_followers;
  const int n_steps = config.n_steps();
  const int n_sub = config.n_sub_steps();
  const DiscreteModel model = config.model();
  const TopologySet topologies = config.topology_set();
  const Generator generator = config.generator();
  const ObserverDesign design = config.observer_design();

  const auto leader_at = [&config](double t) { return config.leader_state_at(t); };
  const auto leader_vec = [&leader_at](double t) { return leader_at(t).vec(); };

  // Initial conditions. The default convention starts every follower at its
  // equilibrium slot behind the leader; the literal alternative places them
  // ahead of it with the printed sign.
  const VehicleState leader0 = leader_at(0.0);
  std::vector<PlantState> plants(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    PlantState& plant = plants[static_cast<std::size_t>(i - 1)];
    const double offset = static_cast<double>(i) * config.d0;
    if (config.initial_state == InitialStateConvention::zero_error) {
      plant.x.p = leader0.p - offset;
      plant.x.v = leader0.v;
      plant.x.a = leader0.a;
    } else {
      plant.x.p = offset;
      plant.x.v = 0.0;
      plant.x.a = 0.0;
    }
    plant.engine.torque = equilibrium_torque(plant.x.v, plant.x.a, config.plant_params);
  }

  // Observers seeded from the offset-corrected own state.
  ObserverNetwork network(n, design, config.psi_exponent);
  {
    std::vector<Vec3> estimates;
    estimates.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
      estimates.push_back(plants[static_cast<std::size_t>(i - 1)].x.vec() +
                          Vec3(static_cast<double>(i) * config.d0, 0.0, 0.0));
    }
    network.initialize(estimates, config.varrho0);
  }

  std::vector<VehicleControllerState> controllers(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    VehicleControllerState& ctrl = controllers[static_cast<std::size_t>(i - 1)];
    ctrl.params = config.controller_params(i);
    init_assumed(ctrl, plants[static_cast<std::size_t>(i - 1)].x, network.state(i).vartheta);
  }
  // Every vehicle knows its predecessor's initial plan: the formation start
  // is shared before the mission.
  for (int i = 2; i <= n; ++i) {
    receive_predecessor(controllers[static_cast<std::size_t>(i - 1)],
                        controllers[static_cast<std::size_t>(i - 2)].bundle, 0.0);
  }

  ChainState chain(generator, config.initial_mode, seed);

  SimResult result;
  result.dt = config.dt;
  result.seed = seed;
  result.config_hash = config.hash();
  result.eps_floor = config.eps_floor;
  result.beta = config.beta;
  result.followers.resize(static_cast<std::size_t>(n));
  result.time.reserve(static_cast<std::size_t>(n_steps) + 1);
  for (auto& series : result.followers) reserve_series(series, n_steps);
  result.mode_events.push_back({0.0, chain.mode});

  const auto record_grid_point = [&](double t) {
    const DirectedGraph& graph = topologies.graph(chain.mode);
    const Vec3 x0 = leader_vec(t);
    result.time.push_back(t);
    result.leader_p.push_back(x0(0));
    result.leader_v.push_back(x0(1));
    result.leader_a.push_back(x0(2));
    for (int i = 1; i <= n; ++i) {
      FollowerSeries& series = result.followers[static_cast<std::size_t>(i - 1)];
      const VehicleState& x = plants[static_cast<std::size_t>(i - 1)].x;
      series.p.push_back(x.p);
      series.v.push_back(x.v);
      series.a.push_back(x.a);
      const Vec3 error = x.vec() - x0 + Vec3(static_cast<double>(i) * config.d0, 0.0, 0.0);
      series.e_p.push_back(error(0));
      series.e_v.push_back(error(1));
      series.e_a.push_back(error(2));
      const Vec3 theta = network.observation_error(i, x0);
      series.theta_p.push_back(theta(0));
      series.theta_v.push_back(theta(1));
      series.theta_a.push_back(theta(2));
      series.kappa.push_back(network.kappa(i, x0, graph));
      series.varrho.push_back(network.state(i).varrho);
    }
  };

  for (int step = 0; step < n_steps; ++step) {
    const double t = static_cast<double>(step) * config.dt;

    // Time-t snapshot: the graph active at the step start and the observer
    // estimates before this interval's integration.
    const DirectedGraph& graph = topologies.graph(chain.mode);
    const std::vector<Vec3> estimates = network.estimates();

    record_grid_point(t);

    // (1) Switching process over [t, t + dt].
    const ModePath path = advance(chain, generator, t + config.dt);
    for (std::size_t k = 1; k < path.segments.size(); ++k) {
      result.mode_events.push_back(path.segments[k]);
    }

    // (2) Observer network under the quantized mode path.
    network.integrate(t, config.dt_sub, path.quantize(t, config.dt_sub, n_sub), topologies,
                      leader_vec);

    // (3) Control with time-t information: refresh bundles, exchange on the
    // step-start graph, then solve.
    for (int i = 1; i <= n; ++i) {
      VehicleControllerState& ctrl = controllers[static_cast<std::size_t>(i - 1)];
      const Vec3 avg = average_observation(i, estimates, graph);
      refresh_observation(ctrl, estimates[static_cast<std::size_t>(i - 1)], avg,
                          plants[static_cast<std::size_t>(i - 1)].x);
    }
    for (int i = 2; i <= n; ++i) {
      VehicleControllerState& ctrl = controllers[static_cast<std::size_t>(i - 1)];
      if (graph.edge(i, i - 1)) {
        const VehicleControllerState& pred = controllers[static_cast<std::size_t>(i - 2)];
        receive_predecessor(ctrl, pred.bundle, pred.hist_max_spacing_error);
      } else {
        age_predecessor(ctrl);
      }
    }

    std::vector<double> inputs(static_cast<std::size_t>(n), 0.0);
    for (int i = 1; i <= n; ++i) {
      VehicleControllerState& ctrl = controllers[static_cast<std::size_t>(i - 1)];
      FollowerSeries& series = result.followers[static_cast<std::size_t>(i - 1)];

      std::vector<Vec3> leader_reference;
      const std::vector<Vec3>* leader_ptr = nullptr;
      if (i == 1 && graph.leader_link(1)) {
        leader_reference.reserve(static_cast<std::size_t>(config.horizon) + 1);
        for (int k = 0; k <= config.horizon; ++k) {
          leader_reference.push_back(leader_vec(t + k * config.dt));
        }
        leader_ptr = &leader_reference;
      }

      StepResult outcome;
      try {
        outcome = step_vehicle(ctrl, plants[static_cast<std::size_t>(i - 1)].x, leader_ptr);
      } catch (const std::exception& error) {
        throw std::runtime_error("sim: fatal controller failure at t = " + std::to_string(t) +
                                 " s, vehicle " + std::to_string(i) + ": " + error.what());
      }
      inputs[static_cast<std::size_t>(i - 1)] = outcome.applied_input;

      series.u.push_back(outcome.applied_input);
      series.slack.push_back(outcome.diagnostics.slack);
      series.band_exceedance.push_back(outcome.diagnostics.band_exceedance);
      series.terminal_slack.push_back(outcome.diagnostics.terminal_slack);
      series.spacing_bound.push_back(outcome.diagnostics.spacing_bound);
      series.qp_iterations.push_back(outcome.diagnostics.qp_iterations);
      series.bundle_age.push_back(outcome.diagnostics.bundle_age);
      series.s_term_dropped.push_back(outcome.diagnostics.s_term_dropped ? 1 : 0);
      series.string_rows.push_back(outcome.diagnostics.string_rows_present ? 1 : 0);

      auto& diag = result.diagnostics;
      if (outcome.diagnostics.string_rows_present) {
        diag.string_constraint_steps += 1;
        if (outcome.diagnostics.slack > 1e-3) diag.slack_active_steps += 1;
      }
      if (outcome.diagnostics.terminal_slack > 1e-3) diag.terminal_slack_steps += 1;
      if (outcome.diagnostics.s_term_dropped) diag.s_term_drop_steps += 1;
      if (outcome.diagnostics.qp_status == QpStatus::max_iterations) diag.qp_max_iteration_steps += 1;
      diag.max_abs_input = std::max(diag.max_abs_input, std::abs(outcome.applied_input));
    }

    // (4) Plants advance one controller period.
    for (int i = 1; i <= n; ++i) {
      PlantState& plant = plants[static_cast<std::size_t>(i - 1)];
      const double u = inputs[static_cast<std::size_t>(i - 1)];
      switch (config.fidelity) {
        case PlantFidelity::ideal:
          plant.x = linear_step(plant.x, u, model);
          break;
        case PlantFidelity::lag:
          for (int sub = 0; sub < n_sub; ++sub) {
            plant.x = lag_step(plant.x, u, config.plant_params.lag, config.dt_sub);
          }
          break;
        case PlantFidelity::nonlinear:
          for (int sub = 0; sub < n_sub; ++sub) {
            auto advanced = nonlinear_closed_loop_step(plant.x, plant.engine, u,
                                                       config.plant_params, config.dt_sub);
            plant.x = advanced.first;
            plant.engine = advanced.second;
          }
          break;
      }
      if (!plant.x.vec().allFinite()) {
        throw std::runtime_error("sim: non-finite state at t = " + std::to_string(t + config.dt) +
                                 " s, vehicle " + std::to_string(i));
      }
    }
  }

  record_grid_point(static_cast<double>(n_steps) * config.dt);
  return result;
}

MoeReport compute_moe(const SimResult& result) {
  MoeReport report;
  const int n = result.n_followers();
  report.peak_position_error.assign(static_cast<std::size_t>(n), 0.0);
  report.min_gap = std::numeric_limits<double>::infinity();

  double position_sum = 0.0;
  double velocity_sum = 0.0;
  std::size_t samples = 0;
  for (int i = 0; i < n; ++i) {
    const FollowerSeries& series = result.followers[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < series.e_p.size(); ++k) {
      const double ep = std::abs(series.e_p[k]);
      const double ev = std::abs(series.e_v[k]);
      report.peak_position_error[static_cast<std::size_t>(i)] =
          std::max(report.peak_position_error[static_cast<std::size_t>(i)], ep);
      report.mpe = std::max(report.mpe, ep);
      report.mve = std::max(report.mve, ev);
      position_sum += ep;
      velocity_sum += ev;
      samples += 1;
    }
  }
  if (samples > 0) {
    report.ape = position_sum / static_cast<double>(samples);
    report.ave = velocity_sum / static_cast<double>(samples);
  }

  // Gaps stay positive when the platoon keeps its order behind the leader.
  for (std::size_t k = 0; k < result.time.size(); ++k) {
    double ahead = result.leader_p[k];
    for (int i = 0; i < n; ++i) {
      const double own = result.followers[static_cast<std::size_t>(i)].p[k];
      report.min_gap = std::min(report.min_gap, ahead - own);
      ahead = own;
    }
  }
  report.collision = !(report.min_gap > 0.0);

  // Ratios are meaningless against a numerically idle predecessor; the guard
  // is a fixed scale, independent of the bound floor used by the controller.
  constexpr double kRatioDenominatorFloor = 0.01;
  report.ratios.assign(n >= 2 ? static_cast<std::size_t>(n - 1) : 0,
                       std::numeric_limits<double>::quiet_NaN());
  for (int i = 2; i <= n; ++i) {
    const double denominator = report.peak_position_error[static_cast<std::size_t>(i - 2)];
    if (denominator > kRatioDenominatorFloor) {
      report.ratios[static_cast<std::size_t>(i - 2)] =
          report.peak_position_error[static_cast<std::size_t>(i - 1)] / denominator;
    }
  }
  return report;
}

std::vector<StringStabilityVerdict> string_stability_check(const SimResult& result, double beta) {
  const MoeReport report = compute_moe(result);
  std::vector<StringStabilityVerdict> verdicts;
  for (int i = 2; i <= result.n_followers(); ++i) {
    StringStabilityVerdict verdict;
    verdict.vehicle = i;
    const double ratio = report.ratios[static_cast<std::size_t>(i - 2)];
    verdict.defined = std::isfinite(ratio);
    verdict.ratio = ratio;
    verdict.pass = !verdict.defined || ratio <= 1.0;
    verdict.within_beta = verdict.defined && ratio <= beta;
    verdicts.push_back(verdict);
  }
  return verdicts;
}

}  // namespace platoon
