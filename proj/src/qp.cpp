#include "platoon/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace platoon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_or(double value, double fallback) { return std::isfinite(value) ? value : fallback; }

}  // namespace

double QpProblem::objective(const Eigen::VectorXd& z) const {
  return 0.5 * z.dot(h * z) + f.dot(z);
}

void QpProblem::normalize() {
  const int d = dim();
  if (h.rows() != d || h.cols() != d) throw std::invalid_argument("QpProblem: H must be d x d");
  if (lb.size() != d || ub.size() != d) throw std::invalid_argument("QpProblem: bounds must be d-vectors");
  if (a_eq.size() > 0 && a_eq.cols() != d) throw std::invalid_argument("QpProblem: A_eq column mismatch");
  if (a_in.size() > 0 && a_in.cols() != d) throw std::invalid_argument("QpProblem: A_in column mismatch");
  if (a_eq.rows() != b_eq.size()) throw std::invalid_argument("QpProblem: A_eq/b_eq row mismatch");
  if (a_in.rows() != b_in.size()) throw std::invalid_argument("QpProblem: A_in/b_in row mismatch");
  for (int j = 0; j < d; ++j) {
    if (lb(j) > ub(j)) throw std::invalid_argument("QpProblem: crossed bounds");
  }

  h = 0.5 * (h + h.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -1e-10) throw std::invalid_argument("QpProblem: H is not positive semidefinite");
  if (min_eig < 0.0) h -= min_eig * Eigen::MatrixXd::Identity(d, d);
}

QpProblem QpProblem::unconstrained(Eigen::MatrixXd h, Eigen::VectorXd f) {
  QpProblem qp;
  const int d = static_cast<int>(f.size());
  qp.h = std::move(h);
  qp.f = std::move(f);
  qp.a_eq.resize(0, d);
  qp.b_eq.resize(0);
  qp.a_in.resize(0, d);
  qp.b_in.resize(0);
  qp.lb = Eigen::VectorXd::Constant(d, -kInf);
  qp.ub = Eigen::VectorXd::Constant(d, kInf);
  return qp;
}

const char* to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::max_iterations: return "max-iterations";
    case QpStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max(std::max(stationarity, primal), std::max(dual, complementarity));
}

KktResiduals kkt_residuals(const QpProblem& qp, const Eigen::VectorXd& z,
                           const QpMultipliers& multipliers) {
  const int d = qp.dim();
  if (z.size() != d || multipliers.bounds.size() != d || multipliers.eq.size() != qp.n_eq() ||
      multipliers.in.size() != qp.n_in()) {
    throw std::invalid_argument("kkt_residuals: dimension mismatch");
  }

  KktResiduals res;

  Eigen::VectorXd grad = qp.h * z + qp.f + multipliers.bounds;
  if (qp.n_eq() > 0) grad += qp.a_eq.transpose() * multipliers.eq;
  if (qp.n_in() > 0) grad += qp.a_in.transpose() * multipliers.in;
  res.stationarity = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;

  double primal = 0.0;
  if (qp.n_eq() > 0) primal = std::max(primal, (qp.a_eq * z - qp.b_eq).cwiseAbs().maxCoeff());
  Eigen::VectorXd in_slack;
  if (qp.n_in() > 0) {
    in_slack = qp.b_in - qp.a_in * z;
    primal = std::max(primal, std::max(0.0, -in_slack.minCoeff()));
  }
  for (int j = 0; j < d; ++j) {
    if (std::isfinite(qp.lb(j))) primal = std::max(primal, qp.lb(j) - z(j));
    if (std::isfinite(qp.ub(j))) primal = std::max(primal, z(j) - qp.ub(j));
  }
  res.primal = std::max(primal, 0.0);

  double dual = 0.0;
  for (int r = 0; r < qp.n_in(); ++r) dual = std::max(dual, -multipliers.in(r));
  for (int j = 0; j < d; ++j) {
    const double mu = multipliers.bounds(j);
    if (mu > 0.0 && !std::isfinite(qp.ub(j))) dual = std::max(dual, mu);
    if (mu < 0.0 && !std::isfinite(qp.lb(j))) dual = std::max(dual, -mu);
  }
  res.dual = dual;

  double comp = 0.0;
  for (int r = 0; r < qp.n_in(); ++r) comp = std::max(comp, std::abs(multipliers.in(r) * in_slack(r)));
  for (int j = 0; j < d; ++j) {
    const double mu = multipliers.bounds(j);
    if (mu > 0.0 && std::isfinite(qp.ub(j))) comp = std::max(comp, std::abs(mu * (z(j) - qp.ub(j))));
    if (mu < 0.0 && std::isfinite(qp.lb(j))) comp = std::max(comp, std::abs(mu * (z(j) - qp.lb(j))));
  }
  res.complementarity = comp;

  return res;
}

namespace {

// Stacked single-cone form used by the splitting iteration:
//   minimize 0.5 x' P x + q' x  s.t.  l <= A x <= u
// with A = [A_eq; A_in; I].
struct Stacked {
  Eigen::MatrixXd a;
  Eigen::VectorXd l;
  Eigen::VectorXd u;
  int m_eq = 0;
  int m_in = 0;
  int d = 0;
};

Stacked stack_constraints(const QpProblem& qp) {
  Stacked s;
  s.d = qp.dim();
  s.m_eq = qp.n_eq();
  s.m_in = qp.n_in();
  const int m = s.m_eq + s.m_in + s.d;
  s.a.resize(m, s.d);
  s.l.resize(m);
  s.u.resize(m);
  if (s.m_eq > 0) {
    s.a.topRows(s.m_eq) = qp.a_eq;
    s.l.head(s.m_eq) = qp.b_eq;
    s.u.head(s.m_eq) = qp.b_eq;
  }
  if (s.m_in > 0) {
    s.a.middleRows(s.m_eq, s.m_in) = qp.a_in;
    s.l.segment(s.m_eq, s.m_in).setConstant(-kInf);
    s.u.segment(s.m_eq, s.m_in) = qp.b_in;
  }
  s.a.bottomRows(s.d) = Eigen::MatrixXd::Identity(s.d, s.d);
  s.l.tail(s.d) = qp.lb;
  s.u.tail(s.d) = qp.ub;
  return s;
}

struct Scaling {
  Eigen::VectorXd d;      // variable scaling
  Eigen::VectorXd e;      // row scaling
  double c = 1.0;         // cost scaling
};

// Modified Ruiz equilibration of the KKT data.
Scaling ruiz_scale(Eigen::MatrixXd& p, Eigen::VectorXd& q, Eigen::MatrixXd& a, int iterations) {
  const int d = static_cast<int>(q.size());
  const int m = static_cast<int>(a.rows());
  Scaling s;
  s.d = Eigen::VectorXd::Ones(d);
  s.e = Eigen::VectorXd::Ones(m);

  const auto clamp_scale = [](double value) {
    if (value < 1e-8) return 1.0;
    return std::min(std::max(1.0 / std::sqrt(value), 1e-4), 1e4);
  };

  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd delta_d(d), delta_e(m);
    for (int j = 0; j < d; ++j) {
      const double col_p = p.col(j).cwiseAbs().maxCoeff();
      const double col_a = m > 0 ? a.col(j).cwiseAbs().maxCoeff() : 0.0;
      delta_d(j) = clamp_scale(std::max(col_p, col_a));
    }
    for (int r = 0; r < m; ++r) delta_e(r) = clamp_scale(a.row(r).cwiseAbs().maxCoeff());

    p = delta_d.asDiagonal() * p * delta_d.asDiagonal();
    q = delta_d.asDiagonal() * q;
    a = delta_e.asDiagonal() * a * delta_d.asDiagonal();
    s.d = s.d.cwiseProduct(delta_d);
    s.e = s.e.cwiseProduct(delta_e);

    double mean_col = 0.0;
    for (int j = 0; j < d; ++j) mean_col += p.col(j).cwiseAbs().maxCoeff();
    mean_col /= static_cast<double>(d);
    const double q_norm = q.size() > 0 ? q.cwiseAbs().maxCoeff() : 0.0;
    const double gamma_base = std::max(mean_col, q_norm);
    if (gamma_base > 1e-8) {
      const double gamma = std::min(std::max(1.0 / gamma_base, 1e-4), 1e4);
      p *= gamma;
      q *= gamma;
      s.c *= gamma;
    }
  }
  return s;
}

Eigen::VectorXd project_box(const Eigen::VectorXd& v, const Eigen::VectorXd& l,
                            const Eigen::VectorXd& u) {
  return v.cwiseMax(l).cwiseMin(u);
}

struct Certificates {
  bool primal_infeasible = false;
};

// Primal infeasibility test on a dual direction (unscaled).
bool primal_infeasibility_certificate(const Stacked& stacked, const Eigen::VectorXd& a_t_dy,
                                      const Eigen::VectorXd& dy, double eps) {
  const double dy_norm = dy.size() > 0 ? dy.cwiseAbs().maxCoeff() : 0.0;
  if (dy_norm < 1e-12) return false;
  if (a_t_dy.cwiseAbs().maxCoeff() > eps * dy_norm) return false;
  double support = 0.0;
  for (int r = 0; r < dy.size(); ++r) {
    const double plus = std::max(dy(r), 0.0);
    const double minus = std::min(dy(r), 0.0);
    if (plus > eps * dy_norm && !std::isfinite(stacked.u(r))) return false;
    if (-minus > eps * dy_norm && !std::isfinite(stacked.l(r))) return false;
    support += finite_or(stacked.u(r), 0.0) * plus + finite_or(stacked.l(r), 0.0) * minus;
  }
  return support < -eps * dy_norm;
}

struct PolishOutcome {
  bool ok = false;
  Eigen::VectorXd x;
  Eigen::VectorXd y;  // stacked multipliers
};

// Re-solves the equality-constrained KKT system on the detected active set.
PolishOutcome polish_solution(const Eigen::MatrixXd& p, const Eigen::VectorXd& q,
                              const Stacked& stacked, const Eigen::VectorXd& z_con,
                              const Eigen::VectorXd& y) {
  PolishOutcome out;
  const int d = stacked.d;
  const int m = static_cast<int>(stacked.a.rows());

  std::vector<int> active_rows;
  std::vector<double> active_values;
  double y_norm = 1e-12;
  for (int r = 0; r < m; ++r) y_norm = std::max(y_norm, std::abs(y(r)));
  const double y_tol = 1e-6 * y_norm;
  for (int r = 0; r < m; ++r) {
    const bool is_eq = r < stacked.m_eq;
    if (is_eq) {
      active_rows.push_back(r);
      active_values.push_back(stacked.u(r));
      continue;
    }
    const bool u_finite = std::isfinite(stacked.u(r));
    const bool l_finite = std::isfinite(stacked.l(r));
    const double slack_u = u_finite ? stacked.u(r) - z_con(r) : kInf;
    const double slack_l = l_finite ? z_con(r) - stacked.l(r) : kInf;
    if (u_finite && (y(r) > y_tol || slack_u < 1e-8 * (1.0 + std::abs(stacked.u(r))))) {
      active_rows.push_back(r);
      active_values.push_back(stacked.u(r));
    } else if (l_finite && (y(r) < -y_tol || slack_l < 1e-8 * (1.0 + std::abs(stacked.l(r))))) {
      active_rows.push_back(r);
      active_values.push_back(stacked.l(r));
    }
  }
  const int n_active = static_cast<int>(active_rows.size());

  Eigen::MatrixXd a_red(n_active, d);
  Eigen::VectorXd b_red(n_active);
  for (int k = 0; k < n_active; ++k) {
    a_red.row(k) = stacked.a.row(active_rows[static_cast<std::size_t>(k)]);
    b_red(k) = active_values[static_cast<std::size_t>(k)];
  }

  // Indefinite saddle-point system; dense full-pivot LU handles the rank
  // deficiencies a degenerate active set can produce.
  const int kkt_dim = d + n_active;
  const double reg = 1e-11;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(kkt_dim, kkt_dim);
  kkt.topLeftCorner(d, d) = p + reg * Eigen::MatrixXd::Identity(d, d);
  if (n_active > 0) {
    kkt.topRightCorner(d, n_active) = a_red.transpose();
    kkt.bottomLeftCorner(n_active, d) = a_red;
    kkt.bottomRightCorner(n_active, n_active) = -reg * Eigen::MatrixXd::Identity(n_active, n_active);
  }
  Eigen::VectorXd rhs(kkt_dim);
  rhs.head(d) = -q;
  rhs.tail(n_active) = b_red;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return out;
  Eigen::VectorXd sol = lu.solve(rhs);

  // Iterative refinement against the unregularized system.
  Eigen::MatrixXd kkt0 = kkt;
  kkt0.topLeftCorner(d, d) = p;
  if (n_active > 0) kkt0.bottomRightCorner(n_active, n_active).setZero();
  for (int round = 0; round < 3; ++round) {
    const Eigen::VectorXd residual = rhs - kkt0 * sol;
    sol += lu.solve(residual);
  }
  if (!sol.allFinite()) return out;

  out.x = sol.head(d);
  out.y = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < n_active; ++k) out.y(active_rows[static_cast<std::size_t>(k)]) = sol(d + k);
  out.ok = true;
  return out;
}

QpMultipliers split_multipliers(const Stacked& stacked, const Eigen::VectorXd& y) {
  QpMultipliers mult;
  mult.eq = y.head(stacked.m_eq);
  mult.in = y.segment(stacked.m_eq, stacked.m_in);
  mult.bounds = y.tail(stacked.d);
  return mult;
}

}  // namespace

QpSolution solve(const QpProblem& qp_in, const QpSettings& settings,
                 const Eigen::VectorXd* warm_start) {
  QpProblem qp = qp_in;
  qp.normalize();
  const int d = qp.dim();
  const Stacked stacked = stack_constraints(qp);
  const int m = static_cast<int>(stacked.a.rows());

  // Scaled copies. The iteration runs in scaled space; all convergence
  // checks happen on unscaled quantities.
  Eigen::MatrixXd p_s = qp.h;
  Eigen::VectorXd q_s = qp.f;
  Eigen::MatrixXd a_s = stacked.a;
  Scaling scaling;
  if (settings.scale) {
    scaling = ruiz_scale(p_s, q_s, a_s, 10);
  } else {
    scaling.d = Eigen::VectorXd::Ones(d);
    scaling.e = Eigen::VectorXd::Ones(m);
  }
  Eigen::VectorXd l_s(m), u_s(m);
  for (int r = 0; r < m; ++r) {
    l_s(r) = stacked.l(r) * scaling.e(r);
    u_s(r) = stacked.u(r) * scaling.e(r);
  }

  // Per-row penalty: stiff on equality rows, loose on unbounded rows.
  const auto rho_for_row = [&](int r, double rho_base) {
    if (r < stacked.m_eq) return rho_base * 1e3;
    if (!std::isfinite(l_s(r)) && !std::isfinite(u_s(r))) return 1e-6;
    return rho_base;
  };
  double rho_base = settings.rho;
  Eigen::VectorXd rho(m), rho_inv(m);
  const auto refresh_rho = [&]() {
    for (int r = 0; r < m; ++r) {
      rho(r) = rho_for_row(r, rho_base);
      rho_inv(r) = 1.0 / rho(r);
    }
  };
  refresh_rho();

  Eigen::LDLT<Eigen::MatrixXd> kkt_factor;
  const auto refactor = [&]() {
    Eigen::MatrixXd kkt = p_s + settings.sigma * Eigen::MatrixXd::Identity(d, d);
    kkt.noalias() += a_s.transpose() * rho.asDiagonal() * a_s;
    kkt_factor.compute(kkt);
  };
  refactor();
  if (kkt_factor.info() != Eigen::Success) {
    throw std::runtime_error("qp::solve: failed to factor the splitting system");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  if (warm_start != nullptr) {
    if (warm_start->size() != d) throw std::invalid_argument("qp::solve: warm start size mismatch");
    x = scaling.d.cwiseInverse().cwiseProduct(*warm_start);
  }
  Eigen::VectorXd z = project_box(a_s * x, l_s, u_s);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  QpSolution solution;
  solution.status = QpStatus::max_iterations;

  double eps_target = settings.tolerance;
  const int check_every = std::max(settings.check_interval, 1);

  Eigen::VectorXd x_prev = x, y_prev = y;

  int iteration = 0;
  for (iteration = 1; iteration <= settings.max_iterations; ++iteration) {
    x_prev = x;
    y_prev = y;

    // Regularized linear solve.
    Eigen::VectorXd rhs = settings.sigma * x - q_s;
    rhs.noalias() += a_s.transpose() * (rho.cwiseProduct(z) - y);
    const Eigen::VectorXd x_tilde = kkt_factor.solve(rhs);
    const Eigen::VectorXd z_tilde = a_s * x_tilde;

    // Relaxed updates with projection onto the constraint box.
    x = settings.alpha * x_tilde + (1.0 - settings.alpha) * x;
    const Eigen::VectorXd v =
        settings.alpha * z_tilde + (1.0 - settings.alpha) * z + rho_inv.cwiseProduct(y);
    const Eigen::VectorXd z_next = project_box(v, l_s, u_s);
    y += rho.cwiseProduct(settings.alpha * z_tilde + (1.0 - settings.alpha) * z - z_next);
    z = z_next;

    if (iteration % check_every != 0 && iteration != settings.max_iterations) continue;

    // Unscaled iterates and residuals.
    const Eigen::VectorXd x_u = scaling.d.cwiseProduct(x);
    const Eigen::VectorXd z_u = z.cwiseQuotient(scaling.e);
    const Eigen::VectorXd y_u = scaling.e.cwiseProduct(y) / scaling.c;

    const Eigen::VectorXd ax = stacked.a * x_u;
    const Eigen::VectorXd hx = qp.h * x_u;
    const Eigen::VectorXd aty = stacked.a.transpose() * y_u;

    const double r_prim = m > 0 ? (ax - z_u).cwiseAbs().maxCoeff() : 0.0;
    const double r_dual = (hx + qp.f + aty).cwiseAbs().maxCoeff();
    const double prim_scale =
        std::max({ax.size() > 0 ? ax.cwiseAbs().maxCoeff() : 0.0,
                  z_u.size() > 0 ? z_u.cwiseAbs().maxCoeff() : 0.0, 1.0});
    const double dual_scale =
        std::max({hx.cwiseAbs().maxCoeff(), qp.f.cwiseAbs().maxCoeff(),
                  aty.cwiseAbs().maxCoeff(), 1.0});

    if (r_prim <= eps_target * prim_scale && r_dual <= eps_target * dual_scale) {
      // Candidate: polish, then accept if the full KKT system is within
      // tolerance.
      const PolishOutcome polished = polish_solution(qp.h, qp.f, stacked, z_u, y_u);
      if (polished.ok) {
        const QpMultipliers mult = split_multipliers(stacked, polished.y);
        const KktResiduals res = kkt_residuals(qp, polished.x, mult);
        if (res.max() <= settings.tolerance) {
          solution.z = polished.x;
          solution.multipliers = mult;
          solution.kkt = res;
          solution.status = QpStatus::optimal;
          solution.polished = true;
          break;
        }
      }
      const QpMultipliers mult = split_multipliers(stacked, y_u);
      const KktResiduals res = kkt_residuals(qp, x_u, mult);
      if (res.max() <= settings.tolerance) {
        solution.z = x_u;
        solution.multipliers = mult;
        solution.kkt = res;
        solution.status = QpStatus::optimal;
        break;
      }
      // Complementarity or dual feasibility still above tolerance: tighten
      // the splitting target and keep iterating.
      eps_target *= 0.1;
      if (eps_target < 1e-14) {
        solution.z = x_u;
        solution.multipliers = mult;
        solution.kkt = res;
        break;
      }
    }

    // Infeasibility certificate on the dual direction.
    const Eigen::VectorXd dy_u = scaling.e.cwiseProduct(y - y_prev) / scaling.c;
    const Eigen::VectorXd at_dy = stacked.a.transpose() * dy_u;
    if (primal_infeasibility_certificate(stacked, at_dy, dy_u, 1e-9)) {
      solution.status = QpStatus::infeasible;
      solution.z = scaling.d.cwiseProduct(x);
      solution.multipliers = split_multipliers(stacked, y_u);
      solution.kkt = kkt_residuals(qp, solution.z, solution.multipliers);
      break;
    }

    // Adaptive penalty.
    if (iteration % 50 == 0) {
      const double prim_rel = r_prim / prim_scale;
      const double dual_rel = r_dual / dual_scale;
      if (prim_rel > 1e-14 && dual_rel > 1e-14) {
        const double ratio = std::sqrt(prim_rel / dual_rel);
        const double rho_new = std::min(std::max(rho_base * ratio, 1e-6), 1e6);
        if (rho_new > 5.0 * rho_base || rho_new < rho_base / 5.0) {
          rho_base = rho_new;
          refresh_rho();
          refactor();
        }
      }
    }
  }

  if (solution.z.size() == 0) {
    // Ran out of iterations before any acceptance check fired.
    const Eigen::VectorXd x_u = scaling.d.cwiseProduct(x);
    const Eigen::VectorXd y_u = scaling.e.cwiseProduct(y) / scaling.c;
    solution.z = x_u;
    solution.multipliers = split_multipliers(stacked, y_u);
    solution.kkt = kkt_residuals(qp, solution.z, solution.multipliers);
  }
  solution.iterations = std::min(iteration, settings.max_iterations);
  solution.objective = qp.objective(solution.z);
  return solution;
}

std::string debug_dump(const QpProblem& qp) {
  std::ostringstream out;
  out << "dim " << qp.dim() << " eq " << qp.n_eq() << " in " << qp.n_in() << "\n";
  out << "H\n" << qp.h << "\nf\n" << qp.f.transpose() << "\n";
  if (qp.n_eq() > 0) out << "A_eq\n" << qp.a_eq << "\nb_eq\n" << qp.b_eq.transpose() << "\n";
  if (qp.n_in() > 0) out << "A_in\n" << qp.a_in << "\nb_in\n" << qp.b_in.transpose() << "\n";
  out << "lb\n" << qp.lb.transpose() << "\nub\n" << qp.ub.transpose() << "\n";
  return out.str();
}

}  // namespace platoon
