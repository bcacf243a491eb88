#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "platoon/dynamics.hpp"
#include "platoon/observer.hpp"
#include "platoon/rng.hpp"

using namespace platoon;

namespace {

ObserverDesign paper_design() { return ObserverDesign::from_p(drift_matrix(), paper_observer_p()); }

ObserverDesign identity_design() {
  // Unit design matrices for hand-checkable rate arithmetic; bypasses the
  // Riccati condition on purpose.
  ObserverDesign design;
  design.p = Mat3::Identity();
  design.q = Mat3::Identity();
  design.gamma = Mat3::Identity();
  design.upsilon = Mat3::Identity();
  return design;
}

}  // namespace

TEST_CASE("psi coupling amplifier") {
  CHECK(psi(0.0, 0.25) == 1.0);
  CHECK(psi(15.0, 0.25) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(psi(1.0, 0.25) == doctest::Approx(1.189207115002721).epsilon(1e-14));
  CHECK_THROWS_AS(psi(-0.5, 0.25), std::invalid_argument);
}

TEST_CASE("relative error distributed form") {
  const DirectedGraph pf = make_pf(5);
  const Vec3 x0(7.0, 2.0, -0.3);

  std::vector<Vec3> agreed(5, x0);
  for (int i = 1; i <= 5; ++i) {
    CHECK(relative_error(i, agreed, x0, pf).cwiseAbs().maxCoeff() == 0.0);
  }

  // Leader link only: phi reduces to the own observation error.
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(5, 5);
  Eigen::VectorXi leader = Eigen::VectorXi::Zero(5);
  leader(2) = 1;
  const DirectedGraph leader_only(adjacency, leader);
  std::vector<Vec3> estimates(5, Vec3::Zero());
  estimates[2] = Vec3(1.0, 2.0, 3.0);
  const Vec3 phi = relative_error(3, estimates, x0, leader_only);
  CHECK((phi - (estimates[2] - x0)).cwiseAbs().maxCoeff() == 0.0);

  // Chain without a leader link at vehicle 3: phi_3 = vartheta_3 - vartheta_2.
  estimates[1] = Vec3(-2.0, 0.5, 0.0);
  const Vec3 phi_chain = relative_error(3, estimates, x0, pf);
  CHECK((phi_chain - (estimates[2] - estimates[1])).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("relative error equals the information-matrix form") {
  Rng rng(99);
  const Vec3 x0(4.0, -1.0, 0.25);
  for (const char* name : {"lpf", "lpf-failure", "pf", "pf-failure"}) {
    const DirectedGraph graph = make_named_graph(name, 5);
    const Eigen::MatrixXd m = graph.information_matrix();
    std::vector<Vec3> estimates;
    for (int i = 0; i < 5; ++i) {
      estimates.emplace_back(rng.uniform01() * 8 - 4, rng.uniform01() * 2 - 1,
                             rng.uniform01() - 0.5);
    }
    for (int i = 1; i <= 5; ++i) {
      Vec3 expected = Vec3::Zero();
      for (int j = 1; j <= 5; ++j) {
        expected += m(i - 1, j - 1) * (estimates[static_cast<std::size_t>(j - 1)] - x0);
      }
      const Vec3 actual = relative_error(i, estimates, x0, graph);
      CHECK((actual - expected).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("observer rates") {
  const ObserverDesign design = identity_design();

  SUBCASE("zero relative error leaves only the drift") {
    ObserverState state;
    state.vartheta = Vec3(1.0, 2.0, 3.0);
    state.varrho = 4.0;
    const ObserverRates rates = observer_rates(Vec3::Zero(), state, design, 0.25);
    CHECK((rates.d_vartheta - drift_matrix() * state.vartheta).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rates.d_varrho == 0.0);
    CHECK(rates.varsigma == 0.0);
  }

  SUBCASE("unit relative error with unit design matrices") {
    ObserverState state;
    state.vartheta = Vec3::Zero();
    state.varrho = 1.0;
    const Vec3 phi = Vec3::UnitX();
    const ObserverRates rates = observer_rates(phi, state, design, 0.25);
    CHECK(rates.varsigma == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rates.kappa == doctest::Approx(2.0 * std::pow(2.0, 0.25)).epsilon(1e-14));
    CHECK(rates.d_vartheta(0) == doctest::Approx(-rates.kappa).epsilon(1e-14));
    CHECK(rates.d_vartheta(1) == 0.0);
    CHECK(rates.d_varrho == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("kappa at rest") {
    ObserverState state;
    const ObserverRates rates = observer_rates(Vec3::Zero(), state, design, 0.25);
    CHECK(rates.kappa == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("average observation") {
  const DirectedGraph pf = make_pf(5);
  std::vector<Vec3> estimates(5, Vec3::Zero());
  estimates[1] = Vec3(10.0, 0.0, 0.0);
  estimates[2] = Vec3(20.0, 0.0, 0.0);

  // No in-neighbors: the own estimate.
  CHECK((average_observation(1, estimates, pf) - estimates[0]).cwiseAbs().maxCoeff() == 0.0);

  // Two-point mean along the chain.
  const Vec3 avg = average_observation(3, estimates, pf);
  CHECK(avg(0) == doctest::Approx(15.0).epsilon(1e-15));

  std::vector<Vec3> agreed(5, Vec3(3.0, 2.0, 1.0));
  CHECK((average_observation(4, agreed, pf) - agreed[0]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("consensus manifold is invariant under any topology path") {
  const ObserverDesign design = paper_design();
  ObserverNetwork network(5, design, 0.25);
  // Constant-acceleration leader: its flow is polynomial, so the one-step
  // integrator reproduces it exactly and the manifold error stays at
  // roundoff level.
  const auto leader = [](double t) { return Vec3(3.0 * t + 0.25 * t * t, 3.0 + 0.5 * t, 0.5); };
  network.initialize(std::vector<Vec3>(5, leader(0.0)), 1.0);

  const TopologySet topologies(
      {make_lpf(5), make_lpf_failure(5), make_pf(5), make_pf_failure(5)});
  double t = 0.0;
  for (int step = 0; step < 50; ++step) {
    const std::vector<int> modes(10, step % 4 + 1);
    network.integrate(t, 0.01, modes, topologies, leader);
    t += 0.1;
  }
  for (int i = 1; i <= 5; ++i) {
    CHECK(network.observation_error(i, leader(t)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(network.state(i).varrho >= 1.0);
  }
}

TEST_CASE("single follower converges under a step-halving oracle") {
  const ObserverDesign design = paper_design();
  const TopologySet topologies({make_pf(1)});
  const auto leader = [](double t) { return Vec3(2.0 * t + 0.5 * t * t, 2.0 + t, 1.0); };

  const auto integrate_with = [&](double dt_sub) {
    ObserverNetwork network(1, design, 0.25);
    network.initialize({leader(0.0) + Vec3(1.0, -0.5, 0.2)}, 1.0);
    const int n_sub = static_cast<int>(std::lround(1.0 / dt_sub));
    const std::vector<int> modes(static_cast<std::size_t>(n_sub), 1);
    for (int second = 0; second < 5; ++second) {
      network.integrate(second * 1.0, dt_sub, modes, topologies, leader);
    }
    return network;
  };

  const ObserverNetwork coarse = integrate_with(0.01);
  const ObserverNetwork fine = integrate_with(0.001);

  // Fine integration is the reference; the coarse run must agree to the
  // integrator's order and both must have contracted the initial error.
  const Vec3 x0 = leader(5.0);
  const Vec3 error_coarse = coarse.observation_error(1, x0);
  const Vec3 error_fine = fine.observation_error(1, x0);
  CHECK((error_coarse - error_fine).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(error_fine.cwiseAbs().maxCoeff() <= 0.05);
  CHECK(coarse.state(1).varrho == doctest::Approx(fine.state(1).varrho).epsilon(1e-4));
}

TEST_CASE("varrho is monotone along trajectories") {
  const ObserverDesign design = paper_design();
  ObserverNetwork network(3, design, 0.25);
  network.initialize({Vec3(1, 0, 0), Vec3(-1, 0.5, 0), Vec3(0, 0, 0.5)}, 1.5);
  const TopologySet topologies({make_lpf(3), make_pf(3)});
  const auto leader = [](double t) { return leader_state(t).vec(); };

  std::vector<double> previous{1.5, 1.5, 1.5};
  double t = 0.0;
  for (int step = 0; step < 100; ++step) {
    const std::vector<int> modes(10, step % 2 + 1);
    network.integrate(t, 0.01, modes, topologies, leader);
    t += 0.1;
    for (int i = 1; i <= 3; ++i) {
      CHECK(network.state(i).varrho >= previous[static_cast<std::size_t>(i - 1)] - 1e-12);
      previous[static_cast<std::size_t>(i - 1)] = network.state(i).varrho;
    }
  }
}

TEST_CASE("non-finite states are reported with the follower index") {
  ObserverDesign design = identity_design();
  design.p = 1e300 * Mat3::Identity();  // malformed on purpose
  ObserverNetwork network(2, design, 1.0);
  network.initialize({Vec3(1e300, 0, 0), Vec3::Zero()}, 1.0);
  const TopologySet topologies({make_lpf(2)});
  const std::vector<int> modes(10, 1);
  CHECK_THROWS_AS(
      network.integrate(0.0, 0.01, modes, topologies, [](double) { return Vec3::Zero(); }),
      std::runtime_error);
}

TEST_CASE("initialization guards") {
  const ObserverDesign design = paper_design();
  ObserverNetwork network(2, design, 0.25);
  CHECK_THROWS_AS(network.initialize({Vec3::Zero()}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(network.initialize({Vec3::Zero(), Vec3::Zero()}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ObserverNetwork(2, design, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ObserverNetwork(2, design, 1.5), std::invalid_argument);
}
