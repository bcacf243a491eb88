#include "platoon/dynamics.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace platoon {

void PlantParams::validate() const {
  if (!(mass > 0.0 && efficiency > 0.0 && wheel_radius > 0.0 && lag > 0.0)) {
    throw std::invalid_argument("PlantParams: mass, efficiency, wheel radius and lag must be positive");
  }
  if (drag < 0.0 || gravity < 0.0 || rolling < 0.0) {
    throw std::invalid_argument("PlantParams: drag, gravity and rolling resistance must be non-negative");
  }
}

Mat3 drift_matrix() {
  Mat3 a;
  a << 0, 1, 0,
       0, 0, 1,
       0, 0, 0;
  return a;
}

double leader_velocity(double t) {
  if (t < 0.0) throw std::domain_error("leader_velocity: negative time");
  if (t < 25.0) return t;
  if (t < 50.0) return 25.0;
  if (t < 60.0) return 25.0 - 1.2 * (t - 50.0);
  return 13.0;
}

double leader_acceleration(double t) {
  if (t < 0.0) throw std::domain_error("leader_acceleration: negative time");
  if (t == 0.0) return 0.0;
  if (t < 25.0) return 1.0;
  if (t < 50.0) return 0.0;
  if (t < 60.0) return -1.2;
  return 0.0;
}

double leader_position(double t) {
  if (t < 0.0) throw std::domain_error("leader_position: negative time");
  if (t < 25.0) return 0.5 * t * t;
  if (t < 50.0) return 312.5 + 25.0 * (t - 25.0);
  if (t < 60.0) {
    const double s = t - 50.0;
    return 937.5 + 25.0 * s - 0.6 * s * s;
  }
  return 1127.5 + 13.0 * (t - 60.0);
}

VehicleState leader_state(double t) {
  return {leader_position(t), leader_velocity(t), leader_acceleration(t)};
}

std::vector<VehicleState> leader_trajectory(double t0, int steps, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("leader_trajectory: dt must be positive");
  std::vector<VehicleState> samples;
  samples.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) {
    samples.push_back(leader_state(t0 + k * dt));
  }
  return samples;
}

DiscreteModel discretize(double dt) {
  if (dt <= 0.0) throw std::invalid_argument("discretize: dt must be positive");
  DiscreteModel model;
  model.a_d << 1, dt, 0,
               0, 1, dt,
               0, 0, 1;
  model.b_d << 0, 0, dt;
  model.dt = dt;
  return model;
}

VehicleState linear_step(const VehicleState& x, double u, const DiscreteModel& model) {
  return VehicleState::from_vec(model.a_d * x.vec() + model.b_d * u);
}

double feedback_linearization_torque(double v, double a, double u, const PlantParams& params) {
  params.validate();
  return params.wheel_radius / params.efficiency *
         (params.mass * u + params.mass * params.gravity * params.rolling +
          params.drag * v * (2.0 * params.lag * a + v));
}

double equilibrium_torque(double v, double a, const PlantParams& params) {
  params.validate();
  return params.wheel_radius / params.efficiency *
         (params.mass * a + params.drag * v * v + params.mass * params.gravity * params.rolling);
}

namespace {

// Acceleration from the torque balance.
double balance_acceleration(double v, double torque, const PlantParams& params) {
  return (params.efficiency / params.wheel_radius * torque - params.drag * v * v -
          params.mass * params.gravity * params.rolling) /
         params.mass;
}

}  // namespace

std::pair<VehicleState, EngineState> nonlinear_step(const VehicleState& x, const EngineState& engine,
                                                    double desired_torque, const PlantParams& params,
                                                    double dt_sub) {
  params.validate();
  if (dt_sub <= 0.0) throw std::invalid_argument("nonlinear_step: dt_sub must be positive");

  using State = std::array<double, 3>;  // p, v, torque
  const auto deriv = [&](const State& s) -> State {
    return {s[1], balance_acceleration(s[1], s[2], params), (desired_torque - s[2]) / params.lag};
  };
  const auto add = [](const State& s, const State& d, double h) -> State {
    return {s[0] + h * d[0], s[1] + h * d[1], s[2] + h * d[2]};
  };

  const State s0{x.p, x.v, engine.torque};
  const State k1 = deriv(s0);
  const State k2 = deriv(add(s0, k1, 0.5 * dt_sub));
  const State k3 = deriv(add(s0, k2, 0.5 * dt_sub));
  const State k4 = deriv(add(s0, k3, dt_sub));

  State s1;
  for (int i = 0; i < 3; ++i) {
    s1[static_cast<std::size_t>(i)] =
        s0[static_cast<std::size_t>(i)] +
        dt_sub / 6.0 *
            (k1[static_cast<std::size_t>(i)] + 2.0 * k2[static_cast<std::size_t>(i)] +
             2.0 * k3[static_cast<std::size_t>(i)] + k4[static_cast<std::size_t>(i)]);
  }
  VehicleState next{s1[0], s1[1], balance_acceleration(s1[1], s1[2], params)};
  return {next, EngineState{s1[2]}};
}

std::pair<VehicleState, EngineState> nonlinear_closed_loop_step(const VehicleState& x,
                                                                const EngineState& engine, double u,
                                                                const PlantParams& params,
                                                                double dt_sub) {
  params.validate();
  if (dt_sub <= 0.0) throw std::invalid_argument("nonlinear_closed_loop_step: dt_sub must be positive");

  using State = std::array<double, 3>;  // p, v, torque
  const auto deriv = [&](const State& s) -> State {
    const double a = balance_acceleration(s[1], s[2], params);
    const double desired = feedback_linearization_torque(s[1], a, u, params);
    return {s[1], a, (desired - s[2]) / params.lag};
  };
  const auto add = [](const State& s, const State& d, double h) -> State {
    return {s[0] + h * d[0], s[1] + h * d[1], s[2] + h * d[2]};
  };

  const State s0{x.p, x.v, engine.torque};
  const State k1 = deriv(s0);
  const State k2 = deriv(add(s0, k1, 0.5 * dt_sub));
  const State k3 = deriv(add(s0, k2, 0.5 * dt_sub));
  const State k4 = deriv(add(s0, k3, dt_sub));

  State s1;
  for (std::size_t i = 0; i < 3; ++i) {
    s1[i] = s0[i] + dt_sub / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  VehicleState next{s1[0], s1[1], balance_acceleration(s1[1], s1[2], params)};
  return {next, EngineState{s1[2]}};
}

VehicleState lag_step(const VehicleState& x, double u, double lag, double dt_sub) {
  if (lag <= 0.0) throw std::invalid_argument("lag_step: lag must be positive");
  if (dt_sub <= 0.0) throw std::invalid_argument("lag_step: dt_sub must be positive");

  const auto deriv = [&](const Vec3& s) -> Vec3 { return Vec3(s(1), s(2), (u - s(2)) / lag); };
  const Vec3 s0 = x.vec();
  const Vec3 k1 = deriv(s0);
  const Vec3 k2 = deriv(s0 + 0.5 * dt_sub * k1);
  const Vec3 k3 = deriv(s0 + 0.5 * dt_sub * k2);
  const Vec3 k4 = deriv(s0 + dt_sub * k3);
  return VehicleState::from_vec(s0 + dt_sub / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

}  // namespace platoon
