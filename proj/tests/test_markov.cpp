#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "platoon/markov.hpp"

using namespace platoon;

namespace {

Eigen::MatrixXd scenario_mu() {
  Eigen::MatrixXd mu(4, 4);
  mu << -2.0, 0.8, 0.8, 0.4,
         1.2, -2.4, 0.8, 0.4,
         0.4, 0.4, -1.2, 0.4,
         1.2, 0.8, 0.8, -2.8;
  return mu;
}

}  // namespace

TEST_CASE("generator validation") {
  CHECK_FALSE(validate_generator(scenario_mu()).has_value());

  Eigen::MatrixXd ok(2, 2);
  ok << -1.0, 1.0, 0.5, -0.5;
  CHECK_FALSE(validate_generator(ok).has_value());

  Eigen::MatrixXd bad_row(2, 2);
  bad_row << -1.0, 2.0, 1.0, -1.0;
  const auto violation = validate_generator(bad_row);
  REQUIRE(violation.has_value());
  CHECK(violation->row == 1);

  Eigen::MatrixXd negative(2, 2);
  negative << 1.0, -1.0, 0.0, 0.0;
  const auto negative_violation = validate_generator(negative);
  REQUIRE(negative_violation.has_value());
  CHECK(negative_violation->row == 1);
  CHECK(negative_violation->col == 2);

  CHECK_THROWS_AS(validate_generator(Eigen::MatrixXd::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("invariant distribution of the scenario matrix") {
  const Generator generator(scenario_mu());
  const Eigen::VectorXd pi = invariant_distribution(generator);
  Eigen::VectorXd expected(4);
  expected << 11.0 / 40.0, 0.2, 0.4, 0.125;
  CHECK((pi - expected).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((pi.transpose() * scenario_mu()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("invariant distribution closed forms") {
  const Generator symmetric((Eigen::MatrixXd(2, 2) << -3.0, 3.0, 3.0, -3.0).finished());
  const Eigen::VectorXd pi_symmetric = invariant_distribution(symmetric);
  CHECK(pi_symmetric(0) == doctest::Approx(0.5).epsilon(1e-14));

  const Generator skewed((Eigen::MatrixXd(2, 2) << -1.0, 1.0, 2.0, -2.0).finished());
  const Eigen::VectorXd pi = invariant_distribution(skewed);
  CHECK(pi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(pi(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("ergodicity by strong connectivity") {
  CHECK(is_ergodic(Generator(scenario_mu())));

  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(4, 4);
  block(0, 0) = -1; block(0, 1) = 1; block(1, 0) = 1; block(1, 1) = -1;
  block(2, 2) = -2; block(2, 3) = 2; block(3, 2) = 2; block(3, 3) = -2;
  const Generator disconnected(block);
  CHECK_FALSE(is_ergodic(disconnected));
  CHECK_THROWS_AS(invariant_distribution(disconnected), std::invalid_argument);

  Eigen::MatrixXd ring = Eigen::MatrixXd::Zero(3, 3);
  ring(0, 1) = 1; ring(1, 2) = 1; ring(2, 0) = 1;
  ring(0, 0) = ring(1, 1) = ring(2, 2) = -1;
  CHECK(is_ergodic(Generator(ring)));
}

TEST_CASE("holding times are exponential with the exit rate") {
  Eigen::MatrixXd mu(2, 2);
  mu << -2.0, 2.0, 2.0, -2.0;
  const Generator generator(mu);
  ChainState chain(generator, 1, 42);
  const ModePath path = advance(chain, generator, 10000.0);
  REQUIRE(path.segments.size() > 1000);
  double total = 0.0;
  std::size_t holds = 0;
  for (std::size_t k = 1; k + 1 < path.segments.size(); ++k) {
    total += path.segments[k + 1].start - path.segments[k].start;
    holds += 1;
  }
  // Mean holding time 1/2 s within Monte-Carlo error.
  CHECK(total / static_cast<double>(holds) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("zero generator is absorbing") {
  const Generator generator(Eigen::MatrixXd::Zero(3, 3));
  ChainState chain(generator, 2, 7);
  const ModePath path = advance(chain, generator, 1000.0);
  CHECK(path.segments.size() == 1);
  CHECK(path.mode_at(999.0) == 2);
  CHECK(std::isinf(chain.next_switch_time));
}

TEST_CASE("paths are deterministic per seed") {
  const Generator generator(scenario_mu());
  ChainState a(generator, 1, 99);
  ChainState b(generator, 1, 99);
  ChainState c(generator, 1, 100);
  const ModePath path_a = advance(a, generator, 50.0);
  const ModePath path_b = advance(b, generator, 50.0);
  const ModePath path_c = advance(c, generator, 50.0);
  REQUIRE(path_a.segments.size() == path_b.segments.size());
  for (std::size_t k = 0; k < path_a.segments.size(); ++k) {
    CHECK(path_a.segments[k].start == path_b.segments[k].start);
    CHECK(path_a.segments[k].mode == path_b.segments[k].mode);
  }
  CHECK(path_a.segments.size() != path_c.segments.size());
}

TEST_CASE("advance splits cleanly across interval boundaries") {
  const Generator generator(scenario_mu());
  ChainState whole(generator, 1, 314);
  const ModePath one_shot = advance(whole, generator, 20.0);

  ChainState pieces(generator, 1, 314);
  std::vector<ModeSegment> stitched{{0.0, 1}};
  for (int k = 0; k < 200; ++k) {
    const ModePath piece = advance(pieces, generator, (k + 1) * 0.1);
    for (std::size_t s = 1; s < piece.segments.size(); ++s) stitched.push_back(piece.segments[s]);
  }
  REQUIRE(stitched.size() == one_shot.segments.size());
  for (std::size_t k = 0; k < stitched.size(); ++k) {
    CHECK(stitched[k].start == one_shot.segments[k].start);
    CHECK(stitched[k].mode == one_shot.segments[k].mode);
  }
}

TEST_CASE("quantized modes switch at the next sub-step boundary") {
  ModePath path;
  path.start = 0.0;
  path.end = 0.1;
  path.segments = {{0.0, 1}, {0.034, 3}};
  const std::vector<int> modes = path.quantize(0.0, 0.01, 10);
  CHECK(modes[0] == 1);
  CHECK(modes[3] == 1);   // event lands inside [0.03, 0.04)
  CHECK(modes[4] == 3);   // first boundary at or after 0.034 is 0.04
  CHECK(modes[9] == 3);
}

TEST_CASE("long-run occupancy approaches the invariant distribution") {
  const Generator generator(scenario_mu());
  const Eigen::VectorXd pi = invariant_distribution(generator);
  ChainState chain(generator, 1, 20240501);
  const double horizon = 1e4;
  const ModePath path = advance(chain, generator, horizon);
  Eigen::VectorXd occupancy = Eigen::VectorXd::Zero(4);
  for (std::size_t k = 0; k < path.segments.size(); ++k) {
    const double start = path.segments[k].start;
    const double end = k + 1 < path.segments.size() ? path.segments[k + 1].start : horizon;
    occupancy(path.segments[k].mode - 1) += end - start;
  }
  occupancy /= horizon;
  CHECK((occupancy - pi).cwiseAbs().sum() <= 0.05);
}
