#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

#include "platoon/dmpc.hpp"
#include "platoon/dynamics.hpp"
#include "platoon/markov.hpp"
#include "platoon/riccati.hpp"
#include "platoon/topology.hpp"

namespace platoon {

enum class PlantFidelity { ideal, lag, nonlinear };
enum class InitialStateConvention { zero_error, paper_literal };
enum class LeaderProfileKind { ramp_cruise_brake, constant_velocity };

const char* to_string(PlantFidelity fidelity);
const char* to_string(InitialStateConvention convention);
const char* to_string(LeaderProfileKind kind);

/// One switching mode: either a named built-in or an explicit adjacency list.
struct TopologyEntry {
  std::string name;  // empty for custom graphs
  DirectedGraph graph;
};

/// Full scenario description. Parsed from / serialized to a JSON document;
/// `preset("paper-iv")` carries the reference parameterization.
struct ScenarioConfig {
  int n_followers = 5;
  double d0 = 20.0;
  double dt = 0.1;
  double dt_sub = 0.01;
  int horizon = 10;
  double t_end = 100.0;

  std::vector<double> weight_r;
  std::vector<Vec3> weight_f;
  std::vector<Vec3> weight_s;
  std::vector<Vec3> weight_g;

  double beta = 0.6;
  double u_min = -3.0;
  double u_max = 3.0;

  std::vector<TopologyEntry> topologies;
  Eigen::MatrixXd mu;
  int initial_mode = 1;

  PlantFidelity fidelity = PlantFidelity::ideal;
  PlantParams plant_params;

  LeaderProfileKind leader_profile = LeaderProfileKind::ramp_cruise_brake;
  double leader_constant_velocity = 20.0;

  bool observer_use_paper_p = true;
  bool observer_has_explicit_p = false;
  Mat3 observer_p = Mat3::Identity();
  Mat3 observer_q = Mat3::Identity();
  double psi_exponent = 0.25;
  // Initial integrated gain. Values near the lower bound 1 leave the adaptive
  // observers too slow to re-learn the leader's acceleration at the profile
  // corners under the zero-error start (which never excites the gain
  // integrator), losing the reference-scenario tracking scale.
  double varrho0 = 50.0;

  GainMode gain_mode = GainMode::paper_value;

  // Floor of the predecessor's peak-spacing-error bound. A floor near the
  // velocity-profile transient scale keeps the spacing rows enforceable at
  // startup (a centimeter floor makes them infeasible the moment the leader
  // moves) while leaving them binding against genuine amplification.
  double eps_floor = 1.0;
  double slack_weight = 1e6;
  double terminal_slack_linear = 1e3;
  double terminal_slack_quadratic = 1e4;
  int staleness_max_age = 5;

  InitialStateConvention initial_state = InitialStateConvention::zero_error;

  double qp_tolerance = 1e-6;
  int qp_max_iterations = 4000;

  std::uint64_t default_seed = 1;

  void validate() const;

  std::string to_json_string(int indent = 2) const;
  static ScenarioConfig from_json_string(const std::string& text);

  /// Names: "paper-iv". Throws on unknown presets.
  static ScenarioConfig preset(const std::string& name);
  static bool is_preset(const std::string& name);

  /// FNV-1a over the canonical serialized form.
  std::uint64_t hash() const;

  TopologySet topology_set() const;
  Generator generator() const;
  ObserverDesign observer_design() const;
  DiscreteModel model() const { return discretize(dt); }
  Vec3 terminal_gain_value() const;
  int n_steps() const;
  int n_sub_steps() const;

  VehicleControllerParams controller_params(int index) const;

  VehicleState leader_state_at(double t) const;
};

}  // namespace platoon
