#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "platoon/dynamics.hpp"
#include "platoon/riccati.hpp"

using namespace platoon;

TEST_CASE("scalar closed form") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd q = (Eigen::MatrixXd(1, 1) << 2.0).finished();
  const Eigen::MatrixXd p = solve_observer_care(a, q);
  // -2 p^2 + 2 = 0 with p > 0.
  CHECK(p(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("triple integrator with identity Q") {
  const Mat3 a = drift_matrix();
  const Eigen::MatrixXd p = solve_observer_care(a, Mat3::Identity());
  const CareReport report = verify_care(p, a, Mat3::Identity());
  CHECK(report.residual_fro <= 1e-8);
  CHECK(report.min_eig_p > 0.0);
  CHECK(report.min_eig_q > 0.0);
  // The closed-loop drift of the error system is stable.
  CHECK(is_hurwitz(a - 2.0 * p));
}

TEST_CASE("printed design matrix satisfies the condition strictly") {
  const Mat3 a = drift_matrix();
  const Mat3 p = paper_observer_p();
  const Mat3 residual = p * a + a.transpose() * p - 2.0 * p * p;
  Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (residual + residual.transpose()));
  CHECK(eig.eigenvalues().maxCoeff() < 0.0);

  // A positive-definite Q that the printed P solves exactly.
  const Mat3 q = -residual;
  const CareReport report = verify_care(p, a, q);
  CHECK(report.residual_fro <= 1e-12);
  CHECK(report.min_eig_q > 0.0);
}

TEST_CASE("verify_care on hand-checkable input") {
  // P = I, A = 0, Q = 2I: residual is exactly zero.
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(3, 3);
  const CareReport report =
      verify_care(identity, Eigen::MatrixXd::Zero(3, 3), 2.0 * identity);
  CHECK(report.residual_fro == 0.0);
  CHECK(report.min_eig_p == doctest::Approx(1.0));
  CHECK(report.min_eig_q == doctest::Approx(2.0));

  CHECK_THROWS_AS(verify_care(identity, Eigen::MatrixXd::Zero(2, 2), identity),
                  std::invalid_argument);
}

TEST_CASE("solver rejects invalid weight matrices") {
  const Mat3 a = drift_matrix();
  Mat3 indefinite = Mat3::Identity();
  indefinite(2, 2) = -1.0;
  CHECK_THROWS_AS(solve_observer_care(a, indefinite), std::invalid_argument);
}

TEST_CASE("terminal gain in both modes") {
  const DiscreteModel model = discretize(0.1);

  const Vec3 paper = terminal_gain(GainMode::paper_value, model.a_d, model.b_d);
  CHECK(paper(0) == 1.66);
  CHECK(paper(1) == 5.39);
  CHECK(paper(2) == 2.42);
  CHECK(closed_loop_spectral_radius(model.a_d, model.b_d, paper) < 1.0);

  const Vec3 lqr = terminal_gain(GainMode::discrete_lqr, model.a_d, model.b_d);
  CHECK(closed_loop_spectral_radius(model.a_d, model.b_d, lqr) < 1.0);

  CHECK_THROWS(terminal_gain(GainMode::discrete_lqr, model.a_d, Vec3::Zero()));
}

TEST_CASE("lyapunov solver round trip") {
  Eigen::MatrixXd f(2, 2);
  f << -1.0, 0.5, 0.0, -2.0;
  Eigen::MatrixXd rhs(2, 2);
  rhs << 3.0, 1.0, 1.0, 2.0;
  const Eigen::MatrixXd x = solve_lyapunov(f, rhs);
  CHECK((f.transpose() * x + x * f + rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("observer design helpers") {
  const Mat3 a = drift_matrix();

  const ObserverDesign from_q = ObserverDesign::from_q(a, Mat3::Identity());
  CHECK((from_q.gamma - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((from_q.upsilon * from_q.p - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12);

  const ObserverDesign from_p = ObserverDesign::from_p(a, paper_observer_p());
  CHECK((from_p.upsilon * from_p.p - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(from_p.q);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);

  // A P violating the design condition is rejected: for P = 0.01 I the
  // residual P A + A' P - 2 P^2 has a positive eigenvalue.
  CHECK_THROWS_AS(ObserverDesign::from_p(a, 0.01 * Mat3::Identity()), std::invalid_argument);
}
