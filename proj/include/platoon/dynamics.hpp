#pragma once

#include <utility>
#include <vector>

#include "platoon/types.hpp"

namespace platoon {

/// Third-order longitudinal state.
struct VehicleState {
  double p = 0.0;  // m
  double v = 0.0;  // m/s
  double a = 0.0;  // m/s^2

  Vec3 vec() const { return Vec3(p, v, a); }
  static VehicleState from_vec(const Vec3& x) { return {x(0), x(1), x(2)}; }
};

/// Parameters of the nonlinear torque-lag plant. Defaults are the nominal
/// values used by the `lag`/`nonlinear` fidelity levels.
struct PlantParams {
  double mass = 1500.0;       // kg
  double efficiency = 0.9;    // mechanical efficiency
  double wheel_radius = 0.3;  // m
  double drag = 0.5;          // kg/m aerodynamic coefficient
  double gravity = 9.8;       // m/s^2
  double rolling = 0.01;      // rolling resistance
  double lag = 0.4;           // s inertial time lag

  void validate() const;
};

struct EngineState {
  double torque = 0.0;  // N*m actual wheel torque
};

/// Continuous triple-integrator drift matrix (positions integrate velocities,
/// velocities integrate accelerations).
Mat3 drift_matrix();

/// Leader velocity profile: ramp to 25 m/s, cruise, decelerate at 1.2 m/s^2
/// to 13 m/s, cruise. Throws on negative t; holds 13 m/s past 100 s.
double leader_velocity(double t);

/// Piecewise-constant derivative of the velocity profile. Zero at t = 0 (the
/// leader starts from rest); right-continuous at the interior breakpoints.
double leader_acceleration(double t);

/// Exact piecewise-quadratic integral of the velocity profile with p(0) = 0.
double leader_position(double t);

VehicleState leader_state(double t);

/// steps+1 samples of the leader state at t0, t0 + dt, ..., t0 + steps*dt.
std::vector<VehicleState> leader_trajectory(double t0, int steps, double dt);

/// Euler-discretized triple integrator x(k+1) = A_d x(k) + B_d u(k).
struct DiscreteModel {
  Mat3 a_d;
  Vec3 b_d;
  double dt = 0.0;
};

DiscreteModel discretize(double dt);

VehicleState linear_step(const VehicleState& x, double u, const DiscreteModel& model);

/// Desired wheel torque of the feedback linearization law: cancels drag and
/// rolling resistance so the closed torque loop reduces to lag*da/dt + a = u.
double feedback_linearization_torque(double v, double a, double u, const PlantParams& params);

/// Torque that holds (v, a) stationary in the torque balance.
double equilibrium_torque(double v, double a, const PlantParams& params);

/// One explicit fourth-order step of the nonlinear plant with the desired
/// torque held constant over the sub-step. Acceleration is algebraic from the
/// torque balance; the integrated states are (p, v, torque).
std::pair<VehicleState, EngineState> nonlinear_step(const VehicleState& x, const EngineState& engine,
                                                    double desired_torque, const PlantParams& params,
                                                    double dt_sub);

/// One explicit fourth-order step of the nonlinear plant with the
/// linearization torque law evaluated continuously (at the integrator stage
/// states) and u held constant. This is the composite system whose
/// acceleration follows lag*da/dt + a = u exactly.
std::pair<VehicleState, EngineState> nonlinear_closed_loop_step(const VehicleState& x,
                                                                const EngineState& engine, double u,
                                                                const PlantParams& params,
                                                                double dt_sub);

/// One explicit fourth-order step of the exact feedback-linearized plant
/// lag*da/dt + a = u with u held constant.
VehicleState lag_step(const VehicleState& x, double u, double lag, double dt_sub);

}  // namespace platoon
