#pragma once

#include <Eigen/Core>

#include "platoon/types.hpp"

namespace platoon {

/// Residual and definiteness summary for P A + A' P - 2 P^2 + Q = 0.
struct CareReport {
  double residual_fro = 0.0;
  double min_eig_p = 0.0;
  double min_eig_q = 0.0;
};

/// Observer design matrix printed in the reference scenario.
Mat3 paper_observer_p();

/// Terminal feedback gain printed in the reference scenario.
Vec3 paper_terminal_gain();

/// Stabilizing symmetric positive-definite solution of
///   A' P + P A - 2 P^2 + Q = 0
/// (a continuous algebraic Riccati equation with B = I, R = I/2) by
/// Newton-Kleinman iteration. Each step solves the 9x9 (n^2 x n^2) vectorized
/// Lyapunov system of the current closed loop. The initial gain places the
/// poles of A - K0 at {-1, -2, ..., -n} to land on the stabilizing branch.
/// Intended envelope: small dense systems, n <= 16.
Eigen::MatrixXd solve_observer_care(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                                    double tol = 1e-10, int max_iterations = 100);

CareReport verify_care(const Eigen::MatrixXd& p, const Eigen::MatrixXd& a,
                       const Eigen::MatrixXd& q);

/// Solves F' X + X F + rhs = 0 for symmetric rhs via vectorization.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& f, const Eigen::MatrixXd& rhs);

bool is_hurwitz(const Eigen::MatrixXd& m);

double spectral_radius(const Eigen::MatrixXd& m);

/// Spectral radius of A_d - B_d k' (the terminal error closed loop under
/// u = k . (reference - state)).
double closed_loop_spectral_radius(const Mat3& a_d, const Vec3& b_d, const Vec3& k);

/// Infinite-horizon discrete LQR gain by fixed-point iteration of the
/// Riccati recursion to 1e-12. Throws when (a_d, b_d) is not stabilizable or
/// the recursion diverges.
Vec3 discrete_lqr_gain(const Mat3& a_d, const Vec3& b_d, const Mat3& q, double r);

enum class GainMode { paper_value, discrete_lqr };

/// Terminal gain for the spacing-error update law, with the convention
/// u = k . (observed-leader reference - assumed terminal state).
Vec3 terminal_gain(GainMode mode, const Mat3& a_d, const Vec3& b_d,
                   const Mat3& lqr_q = (Eigen::Matrix3d() << 5, 0, 0, 0, 2.5, 0, 0, 0, 1).finished(),
                   double lqr_r = 0.1);

/// Observer coefficient matrices of the adaptive observer: Gamma = I and
/// Upsilon = P^{-1}, with P from the Riccati condition.
struct ObserverDesign {
  Mat3 p;
  Mat3 q;
  Mat3 gamma;
  Mat3 upsilon;

  /// Solve the Riccati condition for the given positive-definite Q.
  static ObserverDesign from_q(const Mat3& a, const Mat3& q);

  /// Adopt an explicit P; Q is recovered as -(P A + A' P - 2 P^2), which must
  /// be positive definite for P to satisfy the design condition.
  static ObserverDesign from_p(const Mat3& a, const Mat3& p);
};

}  // namespace platoon
