#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "platoon/dynamics.hpp"

using namespace platoon;

TEST_CASE("leader velocity profile") {
  CHECK(leader_velocity(0.0) == 0.0);
  CHECK(leader_velocity(30.0) == 25.0);
  CHECK(leader_velocity(55.0) == doctest::Approx(19.0).epsilon(1e-15));
  CHECK(leader_velocity(80.0) == 13.0);
  CHECK(leader_velocity(150.0) == 13.0);
  CHECK_THROWS_AS(leader_velocity(-0.1), std::domain_error);
}

TEST_CASE("leader acceleration derivative convention") {
  CHECK(leader_acceleration(0.0) == 0.0);
  CHECK(leader_acceleration(10.0) == 1.0);
  CHECK(leader_acceleration(25.0) == 0.0);
  CHECK(leader_acceleration(55.0) == -1.2);
  CHECK(leader_acceleration(60.0) == 0.0);
  CHECK(leader_acceleration(99.0) == 0.0);
}

TEST_CASE("leader position is the exact integral") {
  CHECK(leader_position(0.0) == 0.0);
  CHECK(leader_position(25.0) == doctest::Approx(312.5).epsilon(1e-15));
  CHECK(leader_position(50.0) == doctest::Approx(937.5).epsilon(1e-15));
  CHECK(leader_position(60.0) == doctest::Approx(1127.5).epsilon(1e-15));
  CHECK(leader_position(100.0) == doctest::Approx(1127.5 + 13.0 * 40.0).epsilon(1e-15));
}

TEST_CASE("leader trajectory sampling is self-consistent") {
  const double dt = 0.1;
  const auto samples = leader_trajectory(0.0, 1000, dt);
  REQUIRE(samples.size() == 1001);
  for (int k = 0; k <= 1000; ++k) {
    const double t = k * dt;
    CHECK(samples[static_cast<std::size_t>(k)].v == leader_velocity(t));
    CHECK(samples[static_cast<std::size_t>(k)].p == leader_position(t));
  }
  // Acceleration is constant on [60, 100).
  for (int k = 601; k < 1000; ++k) CHECK(samples[static_cast<std::size_t>(k)].a == 0.0);
  // Central differences of position recover velocity away from breakpoints.
  for (int k = 1; k < 1000; ++k) {
    const double t = k * dt;
    if (std::abs(t - 25.0) < 0.2 || std::abs(t - 50.0) < 0.2 || std::abs(t - 60.0) < 0.2) continue;
    const double v_numeric =
        (samples[static_cast<std::size_t>(k + 1)].p - samples[static_cast<std::size_t>(k - 1)].p) /
        (2.0 * dt);
    CHECK(v_numeric == doctest::Approx(samples[static_cast<std::size_t>(k)].v).epsilon(1e-9));
  }
}

TEST_CASE("Euler discretization is exact in form") {
  const DiscreteModel model = discretize(0.1);
  CHECK(model.a_d(0, 1) == 0.1);
  CHECK(model.a_d(1, 2) == 0.1);
  CHECK(model.a_d(0, 2) == 0.0);
  CHECK(model.b_d(2) == 0.1);
  CHECK(model.b_d(0) == 0.0);

  const Vec3 unit_accel = model.a_d * Vec3(0, 0, 1);
  CHECK(unit_accel(0) == 0.0);
  CHECK(unit_accel(1) == 0.1);
  CHECK(unit_accel(2) == 1.0);

  const DiscreteModel tiny = discretize(1e-9);
  CHECK((tiny.a_d - Mat3::Identity()).cwiseAbs().maxCoeff() == doctest::Approx(1e-9));

  CHECK_THROWS_AS(discretize(0.0), std::invalid_argument);
}

TEST_CASE("linear step") {
  const DiscreteModel model = discretize(0.1);
  const VehicleState origin{0, 0, 0};
  const VehicleState still = linear_step(origin, 0.0, model);
  CHECK(still.p == 0.0);
  CHECK(still.v == 0.0);
  CHECK(still.a == 0.0);

  const VehicleState cruising = linear_step({0, 10, 0}, 0.0, model);
  CHECK(cruising.p == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cruising.v == 10.0);

  const VehicleState jerked = linear_step(origin, 3.0, model);
  CHECK(jerked.a == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("feedback linearization torque") {
  PlantParams params;  // nominal values

  // Only rolling resistance at standstill.
  CHECK(feedback_linearization_torque(0, 0, 0, params) ==
        doctest::Approx(params.wheel_radius / params.efficiency * params.mass * params.gravity *
                        params.rolling)
            .epsilon(1e-15));

  PlantParams no_drag = params;
  no_drag.drag = 0.0;
  no_drag.rolling = 0.0;
  CHECK(feedback_linearization_torque(17.0, -0.4, 2.0, no_drag) ==
        doctest::Approx(no_drag.wheel_radius / no_drag.efficiency * no_drag.mass * 2.0)
            .epsilon(1e-15));

  // Hand-evaluated nominal case: (0.3/0.9) (1500*0.5 + 1500*9.8*0.01
  // + 0.5*20*(2*0.4*1 + 20)) = 1105/3.
  CHECK(feedback_linearization_torque(20.0, 1.0, 0.5, params) ==
        doctest::Approx(1105.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("nonlinear plant holds its equilibrium") {
  PlantParams params;
  const double v = 23.0;
  const double torque = equilibrium_torque(v, 0.0, params);
  VehicleState x{0.0, v, 0.0};
  EngineState engine{torque};
  for (int k = 0; k < 1000; ++k) {
    auto next = nonlinear_step(x, engine, torque, params, 1e-3);
    x = next.first;
    engine = next.second;
  }
  CHECK(x.v == doctest::Approx(v).epsilon(1e-12));
  CHECK(std::abs(x.a) <= 1e-12);
  CHECK(x.p == doctest::Approx(v * 1.0).epsilon(1e-12));
}

TEST_CASE("frozen torque tracks the algebraic balance") {
  PlantParams params;
  params.lag = 1e6;  // torque effectively frozen
  const double torque = 500.0;
  VehicleState x{0.0, 10.0, 0.0};
  EngineState engine{torque};
  auto next = nonlinear_step(x, engine, 123.0, params, 1e-3);
  const double expected_a = (params.efficiency / params.wheel_radius * next.second.torque -
                             params.drag * next.first.v * next.first.v -
                             params.mass * params.gravity * params.rolling) /
                            params.mass;
  CHECK(next.first.a == doctest::Approx(expected_a).epsilon(1e-12));
  CHECK(next.second.torque == doctest::Approx(torque).epsilon(1e-9));
}

TEST_CASE("closed torque loop reduces to the first-order lag") {
  PlantParams params;
  const double u = 0.5;
  const double a0 = 1.0;
  const double v0 = 20.0;
  VehicleState x{0.0, v0, a0};
  EngineState engine{equilibrium_torque(v0, a0, params)};

  const double dt_sub = 1e-3;
  double worst = 0.0;
  double t = 0.0;
  for (int k = 0; k < 1000; ++k) {
    auto next = nonlinear_closed_loop_step(x, engine, u, params, dt_sub);
    x = next.first;
    engine = next.second;
    t += dt_sub;
    const double analytic = u + (a0 - u) * std::exp(-t / params.lag);
    worst = std::max(worst, std::abs(x.a - analytic));
  }
  CHECK(worst <= 1e-6);

  // The sampled-torque variant stays close but visibly coarser.
  VehicleState sampled{0.0, v0, a0};
  EngineState sampled_engine{equilibrium_torque(v0, a0, params)};
  double sampled_worst = 0.0;
  t = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double torque = feedback_linearization_torque(sampled.v, sampled.a, u, params);
    auto next = nonlinear_step(sampled, sampled_engine, torque, params, dt_sub);
    sampled = next.first;
    sampled_engine = next.second;
    t += dt_sub;
    const double analytic = u + (a0 - u) * std::exp(-t / params.lag);
    sampled_worst = std::max(sampled_worst, std::abs(sampled.a - analytic));
  }
  CHECK(sampled_worst <= 1e-4);
}

TEST_CASE("lag plant matches its analytic solution") {
  const double lag = 0.4;
  const double u = -1.5;
  VehicleState x{0.0, 5.0, 0.8};
  double t = 0.0;
  for (int k = 0; k < 500; ++k) {
    x = lag_step(x, u, lag, 1e-3);
    t += 1e-3;
  }
  const double analytic = u + (0.8 - u) * std::exp(-t / lag);
  CHECK(x.a == doctest::Approx(analytic).epsilon(1e-10));
}
