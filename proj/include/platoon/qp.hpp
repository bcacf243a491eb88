#pragma once

#include <Eigen/Core>

#include <string>

namespace platoon {

/// Dense convex quadratic program
///   min 0.5 z' H z + f' z
///   s.t. a_eq z = b_eq,  a_in z <= b_in,  lb <= z <= ub.
/// Bound entries may be infinite. H is symmetrized on construction; a minimum
/// eigenvalue down to -1e-10 is tolerated and clamped to zero.
struct QpProblem {
  Eigen::MatrixXd h;
  Eigen::VectorXd f;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  int dim() const { return static_cast<int>(f.size()); }
  int n_eq() const { return static_cast<int>(b_eq.size()); }
  int n_in() const { return static_cast<int>(b_in.size()); }

  double objective(const Eigen::VectorXd& z) const;

  /// Throws on inconsistent dimensions or an indefinite Hessian; symmetrizes
  /// and clamps H in place.
  void normalize();

  static QpProblem unconstrained(Eigen::MatrixXd h, Eigen::VectorXd f);
};

enum class QpStatus { optimal, max_iterations, infeasible };

const char* to_string(QpStatus status);

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;

  double max() const;
};

/// Multipliers split per constraint family. Inequality multipliers are
/// non-negative at an optimum; bound multipliers are signed (positive pushing
/// at the upper bound, negative at the lower).
struct QpMultipliers {
  Eigen::VectorXd eq;
  Eigen::VectorXd in;
  Eigen::VectorXd bounds;
};

struct QpSolution {
  Eigen::VectorXd z;
  QpStatus status = QpStatus::max_iterations;
  KktResiduals kkt;
  QpMultipliers multipliers;
  int iterations = 0;
  double objective = 0.0;
  bool polished = false;
};

struct QpSettings {
  double tolerance = 1e-6;
  int max_iterations = 4000;
  double sigma = 1e-6;
  double rho = 0.1;
  double alpha = 1.6;
  bool scale = true;
  bool polish = true;
  int check_interval = 10;
};

/// Operator-splitting solve: alternates a regularized linear solve with
/// projection onto the constraint box, with dual updates and an adaptive
/// penalty. Deterministic for fixed inputs. An unbounded dual direction
/// yields status infeasible.
QpSolution solve(const QpProblem& qp, const QpSettings& settings = {},
                 const Eigen::VectorXd* warm_start = nullptr);

/// Pure KKT evaluation at (z, multipliers).
KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& z,
                           const QpMultipliers& multipliers);

/// Plain-text matrix listing for offline inspection.
std::string debug_dump(const QpProblem& qp);

}  // namespace platoon
