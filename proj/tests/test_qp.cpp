#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "platoon/qp.hpp"
#include "platoon/qp_oracle.hpp"
#include "platoon/verify.hpp"

using namespace platoon;

namespace {

QpProblem scalar_clamp_problem() {
  // min (z - 2)^2 over [-1, 1].
  QpProblem qp = QpProblem::unconstrained((Eigen::MatrixXd(1, 1) << 2.0).finished(),
                                          (Eigen::VectorXd(1) << -4.0).finished());
  qp.lb(0) = -1.0;
  qp.ub(0) = 1.0;
  return qp;
}

}  // namespace

TEST_CASE("clamped scalar minimum") {
  const QpSolution solution = solve(scalar_clamp_problem());
  CHECK(solution.status == QpStatus::optimal);
  CHECK(solution.z(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(solution.kkt.max() <= 1e-6);
}

TEST_CASE("equality-constrained closed form") {
  QpProblem qp = QpProblem::unconstrained(2.0 * Eigen::MatrixXd::Identity(2, 2),
                                          Eigen::VectorXd::Zero(2));
  qp.a_eq = (Eigen::MatrixXd(1, 2) << 1.0, 1.0).finished();
  qp.b_eq = (Eigen::VectorXd(1) << 1.0).finished();
  const QpSolution solution = solve(qp);
  CHECK(solution.status == QpStatus::optimal);
  CHECK(solution.z(0) == doctest::Approx(0.5).epsilon(1e-7));
  CHECK(solution.z(1) == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("unconstrained interior stationarity") {
  Eigen::MatrixXd h(2, 2);
  h << 4.0, 1.0, 1.0, 3.0;
  Eigen::VectorXd f(2);
  f << -1.0, 2.0;
  const QpProblem qp = QpProblem::unconstrained(h, f);
  const QpSolution solution = solve(qp);
  CHECK(solution.status == QpStatus::optimal);
  const Eigen::VectorXd closed_form = -h.ldlt().solve(f);
  CHECK((solution.z - closed_form).cwiseAbs().maxCoeff() <= 1e-7);

  QpMultipliers none;
  none.eq.resize(0);
  none.in.resize(0);
  none.bounds = Eigen::VectorXd::Zero(2);
  const KktResiduals at_solution = kkt_residuals(qp, closed_form, none);
  CHECK(at_solution.stationarity <= 1e-12);
}

TEST_CASE("kkt residuals flag violations") {
  const QpProblem qp = scalar_clamp_problem();
  QpMultipliers none;
  none.eq.resize(0);
  none.in.resize(0);
  none.bounds = Eigen::VectorXd::Zero(1);
  const KktResiduals res = kkt_residuals(qp, (Eigen::VectorXd(1) << 1.5).finished(), none);
  CHECK(res.primal == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("infeasible equalities are certified") {
  QpProblem qp = QpProblem::unconstrained(Eigen::MatrixXd::Identity(1, 1),
                                          Eigen::VectorXd::Zero(1));
  qp.a_eq = (Eigen::MatrixXd(2, 1) << 1.0, 1.0).finished();
  qp.b_eq = (Eigen::VectorXd(2) << 0.0, 1.0).finished();
  const QpSolution solution = solve(qp);
  CHECK(solution.status == QpStatus::infeasible);
}

TEST_CASE("crossed box is rejected") {
  QpProblem qp = scalar_clamp_problem();
  qp.lb(0) = 2.0;
  CHECK_THROWS_AS(solve(qp), std::invalid_argument);
}

TEST_CASE("indefinite Hessians are rejected, small negatives clamped") {
  QpProblem bad = QpProblem::unconstrained((Eigen::MatrixXd(1, 1) << -1.0).finished(),
                                           Eigen::VectorXd::Zero(1));
  bad.lb(0) = -1.0;
  bad.ub(0) = 1.0;
  CHECK_THROWS_AS(solve(bad), std::invalid_argument);

  QpProblem borderline = QpProblem::unconstrained(
      (Eigen::MatrixXd(1, 1) << -0.5e-10).finished(), (Eigen::VectorXd(1) << 1.0).finished());
  borderline.lb(0) = -1.0;
  borderline.ub(0) = 1.0;
  const QpSolution solution = solve(borderline);
  CHECK(solution.z(0) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("determinism bit for bit") {
  const QpProblem qp = random_qp_instance(5150, 3);
  const QpSolution first = solve(qp);
  const QpSolution second = solve(qp);
  REQUIRE(first.z.size() == second.z.size());
  for (Eigen::Index i = 0; i < first.z.size(); ++i) CHECK(first.z(i) == second.z(i));
  CHECK(first.iterations == second.iterations);
}

TEST_CASE("warm start reduces iterations") {
  const QpProblem qp = random_qp_instance(31337, 1);
  const QpSolution cold = solve(qp);
  const QpSolution warm = solve(qp, {}, &cold.z);
  CHECK(warm.iterations <= cold.iterations);
  CHECK(std::abs(warm.objective - cold.objective) <= 1e-6 * (1.0 + std::abs(cold.objective)));
}

TEST_CASE("oracle agrees on the textbook cases") {
  const OracleResult clamp = reference_solve(scalar_clamp_problem());
  REQUIRE(clamp.ok);
  CHECK(clamp.z(0) == doctest::Approx(1.0).epsilon(1e-9));

  // Interior optimum with an inactive inequality.
  QpProblem qp = QpProblem::unconstrained(2.0 * Eigen::MatrixXd::Identity(2, 2),
                                          (Eigen::VectorXd(2) << -2.0, 0.0).finished());
  qp.lb = Eigen::VectorXd::Constant(2, -5.0);
  qp.ub = Eigen::VectorXd::Constant(2, 5.0);
  qp.a_in = (Eigen::MatrixXd(1, 2) << 1.0, 1.0).finished();
  qp.b_in = (Eigen::VectorXd(1) << 4.0).finished();
  const OracleResult interior = reference_solve(qp);
  REQUIRE(interior.ok);
  CHECK(interior.z(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(interior.z(1) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("solver matches the reference oracle on random instances") {
  // The full 100-instance batch runs in the verify suite and the acceptance
  // gate; this spot-checks a slice with tight expectations.
  for (int index = 0; index < 25; ++index) {
    const QpProblem qp = random_qp_instance(777, index);
    const OracleResult oracle = reference_solve(qp);
    REQUIRE(oracle.ok);
    const QpSolution solution = solve(qp);
    REQUIRE(solution.status == QpStatus::optimal);
    CHECK(std::abs(solution.objective - oracle.objective) <=
          1e-4 * (1.0 + std::abs(oracle.objective)));
    CHECK(solution.kkt.max() <= 1e-6);
    // Feasibility of the reported point.
    CHECK(solution.kkt.primal <= 1e-6);
  }
}

TEST_CASE("debug dump lists the blocks") {
  const std::string dump = debug_dump(scalar_clamp_problem());
  CHECK(dump.find("dim 1") != std::string::npos);
  CHECK(dump.find("lb") != std::string::npos);
}
