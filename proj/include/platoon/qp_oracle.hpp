#pragma once

#include "platoon/qp.hpp"

namespace platoon {

/// Result of the reference minimizer.
struct OracleResult {
  Eigen::VectorXd z;
  double objective = 0.0;
  bool ok = false;
};

/// Reference QP minimizer for small dense instances: dense grid search over
/// the feasible box, refined around the incumbent, followed by a primal
/// active-set polish. Shares no code with the operator-splitting solver and
/// is used to cross-check it.
///
/// Preconditions: finite bounds on every variable and no equality rows.
OracleResult reference_solve(const QpProblem& qp, int grid_points_per_dim = 5,
                             int refinement_rounds = 6);

}  // namespace platoon
