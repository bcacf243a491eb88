#include "platoon/qp_oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace platoon {

namespace {

bool inequalities_hold(const QpProblem& qp, const Eigen::VectorXd& z, double tol) {
  if (qp.n_in() == 0) return true;
  return ((qp.a_in * z - qp.b_in).array() <= tol).all();
}

// Enumerates the grid {low + k * (high - low) / (points - 1)} per dimension,
// keeping the best feasible objective.
bool grid_best(const QpProblem& qp, const Eigen::VectorXd& low, const Eigen::VectorXd& high,
               int points, Eigen::VectorXd& best, double& best_objective) {
  const int d = qp.dim();
  std::vector<int> index(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd z(d);
  bool found = false;
  while (true) {
    for (int j = 0; j < d; ++j) {
      const double fraction =
          points > 1 ? static_cast<double>(index[static_cast<std::size_t>(j)]) / (points - 1) : 0.5;
      z(j) = low(j) + fraction * (high(j) - low(j));
    }
    if (inequalities_hold(qp, z, 1e-9)) {
      const double objective = qp.objective(z);
      if (!found || objective < best_objective) {
        best = z;
        best_objective = objective;
        found = true;
      }
    }
    int j = 0;
    for (; j < d; ++j) {
      if (++index[static_cast<std::size_t>(j)] < points) break;
      index[static_cast<std::size_t>(j)] = 0;
    }
    if (j == d) break;
  }
  return found;
}

// All constraints as rows a' z <= b: the general inequalities followed by
// upper and lower bounds.
struct RowSet {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

RowSet inequality_rows(const QpProblem& qp) {
  const int d = qp.dim();
  RowSet rows;
  rows.a.resize(qp.n_in() + 2 * d, d);
  rows.b.resize(qp.n_in() + 2 * d);
  if (qp.n_in() > 0) {
    rows.a.topRows(qp.n_in()) = qp.a_in;
    rows.b.head(qp.n_in()) = qp.b_in;
  }
  for (int j = 0; j < d; ++j) {
    rows.a.row(qp.n_in() + j) = Eigen::RowVectorXd::Unit(d, j);
    rows.b(qp.n_in() + j) = qp.ub(j);
    rows.a.row(qp.n_in() + d + j) = -Eigen::RowVectorXd::Unit(d, j);
    rows.b(qp.n_in() + d + j) = -qp.lb(j);
  }
  return rows;
}

// Textbook primal active-set iteration from a feasible start; the grid
// incumbent keeps the combinatorial search short.
bool active_set_polish(const QpProblem& qp, const RowSet& rows, Eigen::VectorXd& z) {
  const int d = qp.dim();
  const int m = static_cast<int>(rows.b.size());

  std::vector<bool> working(static_cast<std::size_t>(m), false);
  for (int r = 0; r < m; ++r) {
    if (rows.a.row(r).dot(z) >= rows.b(r) - 1e-9) working[static_cast<std::size_t>(r)] = true;
  }

  for (int iteration = 0; iteration < 300; ++iteration) {
    std::vector<int> active;
    for (int r = 0; r < m; ++r) {
      if (working[static_cast<std::size_t>(r)]) active.push_back(r);
    }
    const int n_active = static_cast<int>(active.size());

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(d + n_active, d + n_active);
    kkt.topLeftCorner(d, d) = qp.h + 1e-12 * Eigen::MatrixXd::Identity(d, d);
    for (int k = 0; k < n_active; ++k) {
      kkt.block(0, d + k, d, 1) = rows.a.row(active[static_cast<std::size_t>(k)]).transpose();
      kkt.block(d + k, 0, 1, d) = rows.a.row(active[static_cast<std::size_t>(k)]);
    }
    Eigen::VectorXd rhs(d + n_active);
    rhs.head(d) = -(qp.h * z + qp.f);
    rhs.tail(n_active).setZero();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) {
      // Degenerate working set; drop the most recently added redundant row.
      if (active.empty()) return false;
      working[static_cast<std::size_t>(active.back())] = false;
      continue;
    }
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd direction = sol.head(d);

    if (direction.cwiseAbs().maxCoeff() < 1e-11) {
      int most_negative = -1;
      double lowest = -1e-9;
      for (int k = 0; k < n_active; ++k) {
        const double lambda = sol(d + k);
        if (lambda < lowest) {
          lowest = lambda;
          most_negative = active[static_cast<std::size_t>(k)];
        }
      }
      if (most_negative < 0) return true;  // all multipliers admissible
      working[static_cast<std::size_t>(most_negative)] = false;
      continue;
    }

    double step = 1.0;
    int blocking = -1;
    for (int r = 0; r < m; ++r) {
      if (working[static_cast<std::size_t>(r)]) continue;
      const double along = rows.a.row(r).dot(direction);
      if (along <= 1e-12) continue;
      const double room = (rows.b(r) - rows.a.row(r).dot(z)) / along;
      if (room < step) {
        step = room;
        blocking = r;
      }
    }
    z += std::max(step, 0.0) * direction;
    if (blocking >= 0) working[static_cast<std::size_t>(blocking)] = true;
  }
  return false;
}

}  // namespace

OracleResult reference_solve(const QpProblem& qp_in, int grid_points_per_dim,
                             int refinement_rounds) {
  QpProblem qp = qp_in;
  qp.normalize();
  if (qp.n_eq() > 0) {
    throw std::invalid_argument("reference_solve: equality rows are outside the oracle envelope");
  }
  for (int j = 0; j < qp.dim(); ++j) {
    if (!std::isfinite(qp.lb(j)) || !std::isfinite(qp.ub(j))) {
      throw std::invalid_argument("reference_solve: bounds must be finite");
    }
  }

  OracleResult result;
  Eigen::VectorXd low = qp.lb;
  Eigen::VectorXd high = qp.ub;
  Eigen::VectorXd best;
  double best_objective = 0.0;
  if (!grid_best(qp, low, high, grid_points_per_dim, best, best_objective)) {
    return result;  // no feasible grid point
  }

  for (int round = 1; round < refinement_rounds; ++round) {
    const Eigen::VectorXd half_window = 0.4 * (high - low);
    Eigen::VectorXd next_low = (best - 0.5 * half_window).cwiseMax(qp.lb);
    Eigen::VectorXd next_high = (best + 0.5 * half_window).cwiseMin(qp.ub);
    Eigen::VectorXd candidate;
    double candidate_objective = 0.0;
    if (grid_best(qp, next_low, next_high, grid_points_per_dim, candidate, candidate_objective) &&
        candidate_objective < best_objective) {
      best = candidate;
      best_objective = candidate_objective;
    }
    low = next_low;
    high = next_high;
  }

  const RowSet rows = inequality_rows(qp);
  Eigen::VectorXd z = best;
  if (!active_set_polish(qp, rows, z)) {
    result.z = best;
    result.objective = best_objective;
    return result;
  }

  result.z = z;
  result.objective = qp.objective(z);
  result.ok = true;
  return result;
}

}  // namespace platoon
