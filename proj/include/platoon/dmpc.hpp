#pragma once

#include <optional>
#include <vector>

#include "platoon/dynamics.hpp"
#include "platoon/qp.hpp"
#include "platoon/types.hpp"

namespace platoon {

/// Horizon-indexed state and input sequences: states over k = 0..N_p, inputs
/// over k = 0..N_p-1.
struct Trajectory {
  std::vector<Vec3> states;
  std::vector<double> inputs;

  bool dynamically_consistent(const DiscreteModel& model, double tol = 1e-10) const;
};

/// What a vehicle shares with its follower: its assumed trajectory, the
/// propagated observation sequences behind it, and the peak of its assumed
/// spacing error.
struct AssumedBundle {
  Trajectory self_assumed;
  std::vector<Vec3> obs_assumed;
  std::vector<Vec3> avg_obs_assumed;
  double max_assumed_spacing_error = 0.0;
};

struct ControllerWeights {
  double r = 0.1;
  Vec3 f = Vec3(5.0, 2.5, 1.0);
  Vec3 s = Vec3(5.0, 2.5, 1.0);
  Vec3 g = Vec3(50.0, 25.0, 10.0);
};

struct VehicleControllerParams {
  int index = 1;  // 1-based follower index
  int horizon = 10;
  ControllerWeights weights;
  double d0 = 20.0;
  double beta = 0.6;
  double u_min = -3.0;
  double u_max = 3.0;
  double eps_floor = 0.01;
  double slack_weight = 1e6;
  double terminal_slack_linear = 1e3;
  double terminal_slack_quadratic = 1e4;
  int max_bundle_age = 5;
  DiscreteModel model;
  Vec3 terminal_gain = Vec3(1.66, 5.39, 2.42);
  QpSettings qp;
};

/// Last received predecessor data, aged in place while the link is down.
struct PredecessorInfo {
  std::vector<Vec3> assumed_states;
  double history_max = 0.0;
  double assumed_max = 0.0;
  int age = 0;
  bool ever_received = false;
};

struct StepDiagnostics {
  int qp_iterations = 0;
  QpStatus qp_status = QpStatus::optimal;
  double slack = 0.0;             // forward-row (k >= 1) violation
  double band_exceedance = 0.0;   // k = 0 row: current state outside the band
  double terminal_slack = 0.0;
  double spacing_bound = 0.0;  // beta * D of the predecessor, 0 without rows
  int bundle_age = 0;
  bool s_term_dropped = false;
  bool string_rows_present = false;
};

/// Per-vehicle controller state: fixed parameters plus everything that
/// evolves step to step.
struct VehicleControllerState {
  VehicleControllerParams params;
  double hist_max_spacing_error = 0.0;
  AssumedBundle bundle;
  PredecessorInfo predecessor;
  /// Input plan backing the assumed trajectory: the shifted optimal inputs
  /// plus the clamped terminal-extension input. Box-feasible by
  /// construction, so the terminal pin stays reachable from any start state.
  std::vector<double> planned_inputs;
  Eigen::VectorXd warm_inputs;
  double warm_slack = 0.0;

  Vec3 gap_to_leader() const { return Vec3(params.index * params.d0, 0.0, 0.0); }
  Vec3 gap_to_predecessor() const { return Vec3(params.d0, 0.0, 0.0); }
};

/// Observation sequence rolled forward under the discrete leader model:
/// entry k is A_d^k vartheta, for k = 0..horizon.
std::vector<Vec3> propagate_observation(const Vec3& vartheta, int horizon,
                                        const DiscreteModel& model);

/// Bound used by the follower's string-stability rows: the larger of the
/// historical and assumed peak spacing errors, floored so the constraint
/// stays feasible at startup.
double spacing_error_bound(double history_max, double assumed_max, double eps_floor);

/// Seeds the assumed trajectory with the zero-input rollout of x0 and the
/// observation sequences with the initial estimate.
void init_assumed(VehicleControllerState& ctrl, const VehicleState& x0,
                  const Vec3& initial_estimate);

/// Per-step refresh with time-t information: re-anchors the assumed
/// trajectory at the measured state (rolling the planned inputs forward),
/// re-propagates the observation sequences from the current (averaged)
/// estimates, recomputes the assumed spacing-error peak, and folds
/// |gamma e_hat(t)| into the history max. Under the nominal discrete plant
/// the re-anchored trajectory coincides with the shifted optimum exactly.
void refresh_observation(VehicleControllerState& ctrl, const Vec3& vartheta_own,
                         const Vec3& vartheta_avg, const VehicleState& x_now);

/// Bound this vehicle publishes to its follower.
double published_spacing_bound(const VehicleControllerState& ctrl);

void receive_predecessor(VehicleControllerState& ctrl, const AssumedBundle& bundle,
                         double predecessor_history_max);

/// One missed exchange: shifts the stored predecessor trajectory by one step
/// with a zero-input terminal extension and holds its peak statistics.
void age_predecessor(VehicleControllerState& ctrl);

/// Condensed QP over the stacked inputs plus slack variables: box rows from
/// the input set, +-pairs of predicted-spacing-error rows per horizon index
/// (with one shared slack, present for vehicles behind a live predecessor),
/// and the terminal pin x(N_p) = assumed terminal encoded with an
/// exact-penalty slack (linear plus quadratic). Whenever the pin is
/// reachable under the input box, its slack is zero and the solution matches
/// the hard-equality one; when a terminal jump makes it unreachable the
/// nearest-reachable terminal is taken and the gap is observable.
QpProblem build_problem(const VehicleControllerState& ctrl, const VehicleState& x_now,
                        const std::vector<Vec3>* predecessor_states, double d_pred,
                        bool string_rows);

struct StepResult {
  double applied_input = 0.0;
  StepDiagnostics diagnostics;
};

/// Solves the per-vehicle problem, applies the first optimal input, and
/// shifts the assumed trajectory with the terminal update law. For vehicle 1
/// the caller passes the leader reference sequence (or null to fall back to
/// the averaged observation rollout); vehicles behind use the stored
/// predecessor data, dropping the spacing cost and string rows when it is
/// older than the configured maximum. Throws when the problem is infeasible.
StepResult step_vehicle(VehicleControllerState& ctrl, const VehicleState& x_now,
                        const std::vector<Vec3>* leader_reference);

}  // namespace platoon
