#include "platoon/riccati.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace platoon {

Mat3 paper_observer_p() {
  Mat3 p;
  p << 1.5602, 0.2230, 0.0159,
       0.2230, 1.6081, 0.2275,
       0.0159, 0.2275, 1.6246;
  return p;
}

Vec3 paper_terminal_gain() { return Vec3(1.66, 5.39, 2.42); }

namespace {

bool is_symmetric_positive_definite(const Eigen::MatrixXd& m, double tol = 0.0) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff())) {
    return false;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvalues().minCoeff() > tol;
}

Eigen::MatrixXd riccati_residual(const Eigen::MatrixXd& p, const Eigen::MatrixXd& a,
                                 const Eigen::MatrixXd& q) {
  return p * a + a.transpose() * p - 2.0 * p * p + q;
}

}  // namespace

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& f, const Eigen::MatrixXd& rhs) {
  const int n = static_cast<int>(f.rows());
  if (f.cols() != n || rhs.rows() != n || rhs.cols() != n) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  // vec(F' X + X F) = (I (x) F' + F' (x) I) vec(X)
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(n * n, n * n);
  const Eigen::MatrixXd ft = f.transpose();
  for (int col_block = 0; col_block < n; ++col_block) {
    system.block(col_block * n, col_block * n, n, n) += ft;
    for (int row_block = 0; row_block < n; ++row_block) {
      system.block(row_block * n, col_block * n, n, n) +=
          ft(row_block, col_block) * Eigen::MatrixXd::Identity(n, n);
    }
  }
  Eigen::VectorXd vec_rhs(n * n);
  for (int j = 0; j < n; ++j) vec_rhs.segment(j * n, n) = -rhs.col(j);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw std::runtime_error("solve_lyapunov: singular Lyapunov operator");
  const Eigen::VectorXd vec_x = lu.solve(vec_rhs);
  Eigen::MatrixXd x(n, n);
  for (int j = 0; j < n; ++j) x.col(j) = vec_x.segment(j * n, n);
  return 0.5 * (x + x.transpose());
}

Eigen::MatrixXd solve_observer_care(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                                    double tol, int max_iterations) {
  const int n = static_cast<int>(a.rows());
  if (a.cols() != n || q.rows() != n || q.cols() != n) {
    throw std::invalid_argument("solve_observer_care: dimension mismatch");
  }
  if (!is_symmetric_positive_definite(q)) {
    throw std::invalid_argument("solve_observer_care: Q must be symmetric positive definite");
  }

  // Initial stabilizing gain K0 = A - D with D = diag(-1, ..., -n), so the
  // closed loop A - K0 = D is Hurwitz. The effective input matrix is the
  // identity, hence any pole set is directly assignable.
  Eigen::MatrixXd target = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) target(i, i) = -static_cast<double>(i + 1);
  Eigen::MatrixXd gain = a - target;  // u = -K x with closed loop A - K

  Eigen::MatrixXd p;
  double residual = std::numeric_limits<double>::infinity();
  for (int iteration = 0; iteration < max_iterations; ++iteration) {
    // Closed loop and quadratic term of the Newton step: with B = I and
    // R = I/2, the stage term is K' R K = K' K / 2.
    const Eigen::MatrixXd closed_loop = a - gain;
    p = solve_lyapunov(closed_loop, q + 0.5 * gain.transpose() * gain);
    gain = 2.0 * p;
    residual = riccati_residual(p, a, q).norm();
    if (!std::isfinite(residual)) {
      throw std::runtime_error("solve_observer_care: iteration diverged (non-finite residual)");
    }
    if (residual <= tol) break;
  }
  if (residual > 1e-8) {
    throw std::runtime_error("solve_observer_care: did not converge, final residual " +
                             std::to_string(residual));
  }
  if (!is_symmetric_positive_definite(p)) {
    throw std::runtime_error("solve_observer_care: converged to a non-positive-definite solution");
  }
  return p;
}

CareReport verify_care(const Eigen::MatrixXd& p, const Eigen::MatrixXd& a,
                       const Eigen::MatrixXd& q) {
  if (p.rows() != p.cols() || a.rows() != a.cols() || q.rows() != q.cols() ||
      p.rows() != a.rows() || p.rows() != q.rows()) {
    throw std::invalid_argument("verify_care: matrices must be square and of equal size");
  }
  CareReport report;
  report.residual_fro = riccati_residual(p, a, q).norm();
  report.min_eig_p = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (p + p.transpose()))
                         .eigenvalues()
                         .minCoeff();
  report.min_eig_q = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (q + q.transpose()))
                         .eigenvalues()
                         .minCoeff();
  return report;
}

bool is_hurwitz(const Eigen::MatrixXd& m) {
  const Eigen::VectorXcd eigenvalues = Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues();
  for (int i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues(i).real() >= 0.0) return false;
  }
  return true;
}

double spectral_radius(const Eigen::MatrixXd& m) {
  return Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().cwiseAbs().maxCoeff();
}

double closed_loop_spectral_radius(const Mat3& a_d, const Vec3& b_d, const Vec3& k) {
  return spectral_radius(a_d - b_d * k.transpose());
}

Vec3 discrete_lqr_gain(const Mat3& a_d, const Vec3& b_d, const Mat3& q, double r) {
  if (!is_symmetric_positive_definite(q) || r <= 0.0) {
    throw std::invalid_argument("discrete_lqr_gain: weights must be positive definite");
  }
  // Controllability check; every eigenvalue of the discretized chain sits on
  // the unit circle, so an uncontrollable mode cannot be stabilized.
  Eigen::Matrix3d controllability;
  controllability.col(0) = b_d;
  controllability.col(1) = a_d * b_d;
  controllability.col(2) = a_d * (a_d * b_d);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(controllability);
  lu.setThreshold(1e-10);
  if (lu.rank() < 3) {
    throw std::invalid_argument("discrete_lqr_gain: (A_d, B_d) is not stabilizable");
  }

  Mat3 x = q;
  for (int iteration = 0; iteration < 100000; ++iteration) {
    const double denom = r + b_d.dot(x * b_d);
    const Vec3 gain = (x * a_d).transpose() * b_d / denom;
    const Mat3 next =
        q + a_d.transpose() * x * a_d - (a_d.transpose() * x * b_d) * gain.transpose();
    const double delta = (next - x).cwiseAbs().maxCoeff();
    x = 0.5 * (next + next.transpose());
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > 1e14) {
      throw std::runtime_error("discrete_lqr_gain: Riccati recursion diverged");
    }
    if (delta <= 1e-12) {
      return (x * a_d).transpose() * b_d / (r + b_d.dot(x * b_d));
    }
  }
  throw std::runtime_error("discrete_lqr_gain: Riccati recursion did not converge");
}

Vec3 terminal_gain(GainMode mode, const Mat3& a_d, const Vec3& b_d, const Mat3& lqr_q,
                   double lqr_r) {
  if (mode == GainMode::paper_value) return paper_terminal_gain();
  return discrete_lqr_gain(a_d, b_d, lqr_q, lqr_r);
}

ObserverDesign ObserverDesign::from_q(const Mat3& a, const Mat3& q) {
  ObserverDesign design;
  design.p = solve_observer_care(a, q);
  design.q = q;
  design.gamma = Mat3::Identity();
  design.upsilon = design.p.llt().solve(Mat3::Identity());
  return design;
}

ObserverDesign ObserverDesign::from_p(const Mat3& a, const Mat3& p) {
  if (!is_symmetric_positive_definite(p)) {
    throw std::invalid_argument("ObserverDesign: P must be symmetric positive definite");
  }
  const Mat3 q = -riccati_residual(p, a, Mat3::Zero());
  if (!is_symmetric_positive_definite(0.5 * (q + q.transpose()))) {
    throw std::invalid_argument(
        "ObserverDesign: P A + A' P - 2 P^2 is not negative definite, P does not satisfy the "
        "design condition");
  }
  ObserverDesign design;
  design.p = p;
  design.q = 0.5 * (q + q.transpose());
  design.gamma = Mat3::Identity();
  design.upsilon = p.llt().solve(Mat3::Identity());
  return design;
}

}  // namespace platoon
