#pragma once

#include <cstdint>
#include <vector>

#include "platoon/config.hpp"
#include "platoon/markov.hpp"

namespace platoon {

/// Per-follower time series. State, error, and observer series are sampled at
/// every grid time (n_steps + 1 entries); control and diagnostics series have
/// one entry per controller step.
struct FollowerSeries {
  std::vector<double> p, v, a;
  std::vector<double> e_p, e_v, e_a;
  std::vector<double> theta_p, theta_v, theta_a;
  std::vector<double> kappa, varrho;
  std::vector<double> u, slack, band_exceedance, terminal_slack, spacing_bound;
  std::vector<int> qp_iterations, bundle_age;
  std::vector<std::uint8_t> s_term_dropped, string_rows;
};

struct SimDiagnostics {
  long string_constraint_steps = 0;  // controller steps carrying the spacing rows
  long slack_active_steps = 0;       // of those, steps with slack above 1 mm
  long terminal_slack_steps = 0;     // steps where the terminal pin gave way
  long s_term_drop_steps = 0;
  long qp_max_iteration_steps = 0;
  double max_abs_input = 0.0;
};

struct SimResult {
  double dt = 0.0;
  std::vector<double> time;
  std::vector<double> leader_p, leader_v, leader_a;
  std::vector<FollowerSeries> followers;
  std::vector<ModeSegment> mode_events;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  double eps_floor = 0.01;
  double beta = 0.6;
  SimDiagnostics diagnostics;

  int n_followers() const { return static_cast<int>(followers.size()); }
};

/// Tracking-error measures over followers and time, plus the string-stability
/// ratios and the collision check. Ratios are NaN when the predecessor's peak
/// error does not exceed the configured floor.
struct MoeReport {
  double mpe = 0.0;
  double mve = 0.0;
  double ape = 0.0;
  double ave = 0.0;
  std::vector<double> peak_position_error;
  std::vector<double> ratios;  // entry k is vehicle k+2 versus k+1
  bool collision = false;
  double min_gap = 0.0;
};

struct StringStabilityVerdict {
  int vehicle = 0;
  double ratio = 0.0;
  bool defined = false;
  bool pass = false;         // ratio <= 1
  bool within_beta = false;  // informational: ratio <= beta
};

/// Runs one seeded scenario. Per controller step: the switching chain is
/// advanced over the interval, the observers integrate under the quantized
/// mode path, every vehicle refreshes and exchanges its bundle on the graph
/// active at the step start, solves its problem with time-t information, and
/// the plants advance at the configured fidelity. Deterministic per seed.
SimResult run(const ScenarioConfig& config, std::uint64_t seed);

MoeReport compute_moe(const SimResult& result);

std::vector<StringStabilityVerdict> string_stability_check(const SimResult& result, double beta);

}  // namespace platoon
