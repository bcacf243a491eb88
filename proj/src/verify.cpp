#include "platoon/verify.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "platoon/config.hpp"
#include "platoon/dynamics.hpp"
#include "platoon/markov.hpp"
#include "platoon/observer.hpp"
#include "platoon/qp_oracle.hpp"
#include "platoon/riccati.hpp"
#include "platoon/rng.hpp"
#include "platoon/topology.hpp"

namespace platoon {

namespace {

void add_check(std::vector<CheckResult>& results, const std::string& suite,
               const std::string& name, bool pass, const std::string& detail) {
  results.push_back({suite, name, pass, detail});
}

Eigen::MatrixXd scenario_mu() {
  return ScenarioConfig::preset("paper-iv").mu;
}

std::vector<CheckResult> markov_suite() {
  std::vector<CheckResult> results;
  const std::string suite = "markov";
  const Eigen::MatrixXd mu = scenario_mu();

  {
    const auto violation = validate_generator(mu);
    add_check(results, suite, "scenario-mu-valid", !violation.has_value(),
              violation ? violation->message : "rate matrix accepted");
  }

  const Generator generator(mu);
  const Eigen::VectorXd pi = invariant_distribution(generator);
  {
    Eigen::VectorXd expected(4);
    expected << 11.0 / 40.0, 1.0 / 5.0, 2.0 / 5.0, 1.0 / 8.0;
    const double error = (pi - expected).cwiseAbs().maxCoeff();
    add_check(results, suite, "scenario-invariant-distribution", error <= 1e-12,
              "max deviation " + std::to_string(error));
  }
  {
    const double balance = (pi.transpose() * mu).cwiseAbs().maxCoeff();
    add_check(results, suite, "scenario-balance-residual", balance <= 1e-12,
              "|pi mu|_inf = " + std::to_string(balance));
  }
  add_check(results, suite, "scenario-ergodic", is_ergodic(generator), "strong connectivity");
  {
    const Generator two_state((Eigen::MatrixXd(2, 2) << -1.0, 1.0, 2.0, -2.0).finished());
    const Eigen::VectorXd pi2 = invariant_distribution(two_state);
    const double error = std::abs(pi2(0) - 2.0 / 3.0) + std::abs(pi2(1) - 1.0 / 3.0);
    add_check(results, suite, "two-state-invariant", error <= 1e-12,
              "pi = [" + std::to_string(pi2(0)) + ", " + std::to_string(pi2(1)) + "]");
  }
  {
    // Long-run occupancy against the invariant distribution.
    ChainState chain(generator, 1, 123456789ULL);
    const double horizon = 1e4;
    Eigen::VectorXd occupancy = Eigen::VectorXd::Zero(4);
    const ModePath path = advance(chain, generator, horizon);
    for (std::size_t k = 0; k < path.segments.size(); ++k) {
      const double start = path.segments[k].start;
      const double end = k + 1 < path.segments.size() ? path.segments[k + 1].start : horizon;
      occupancy(path.segments[k].mode - 1) += end - start;
    }
    occupancy /= horizon;
    const double l1 = (occupancy - pi).cwiseAbs().sum();
    add_check(results, suite, "long-run-occupancy", l1 <= 0.05,
              "L1 distance " + std::to_string(l1) + " over 1e4 s");
  }
  return results;
}

std::vector<CheckResult> riccati_suite() {
  std::vector<CheckResult> results;
  const std::string suite = "riccati";
  const Mat3 a = drift_matrix();

  {
    const Eigen::MatrixXd p = solve_observer_care(a, Mat3::Identity());
    const CareReport report = verify_care(p, a, Mat3::Identity());
    add_check(results, suite, "care-identity-q",
              report.residual_fro <= 1e-8 && report.min_eig_p > 0.0,
              "residual " + std::to_string(report.residual_fro) + ", min eig P " +
                  std::to_string(report.min_eig_p));
    add_check(results, suite, "care-drift-stabilizing", is_hurwitz(a - 2.0 * p),
              "eigenvalues of A - 2P in the open left half plane");
  }
  {
    const Mat3 p = paper_observer_p();
    const Mat3 residual = p * a + a.transpose() * p - 2.0 * p * p;
    Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (residual + residual.transpose()));
    const double max_eig = eig.eigenvalues().maxCoeff();
    add_check(results, suite, "scenario-p-negative-definite", max_eig < 0.0,
              "max eigenvalue of P A + A' P - 2 P^2 = " + std::to_string(max_eig));
  }
  {
    const DiscreteModel model = discretize(0.1);
    const double radius = closed_loop_spectral_radius(model.a_d, model.b_d, paper_terminal_gain());
    add_check(results, suite, "terminal-gain-schur", radius < 1.0,
              "spectral radius " + std::to_string(radius));
    const Vec3 lqr = terminal_gain(GainMode::discrete_lqr, model.a_d, model.b_d);
    const double lqr_radius = closed_loop_spectral_radius(model.a_d, model.b_d, lqr);
    add_check(results, suite, "terminal-gain-lqr-schur", lqr_radius < 1.0,
              "spectral radius " + std::to_string(lqr_radius));
  }
  return results;
}

std::vector<CheckResult> observer_suite() {
  std::vector<CheckResult> results;
  const std::string suite = "observer";

  {
    const bool unit = std::abs(psi(0.0, 0.25) - 1.0) <= 1e-15 &&
                      std::abs(psi(15.0, 0.25) - 2.0) <= 1e-12 &&
                      std::abs(psi(1.0, 0.25) - std::pow(2.0, 0.25)) <= 1e-12;
    add_check(results, suite, "psi-values", unit, "(1 + s)^(1/4) spot checks");
  }
  {
    // Distributed form versus the information-matrix form on every scenario
    // graph with deterministic pseudo-random estimates.
    Rng rng(2024);
    double worst = 0.0;
    const Vec3 x0(3.0, -1.0, 0.5);
    for (const char* name : {"lpf", "lpf-failure", "pf", "pf-failure"}) {
      const DirectedGraph graph = make_named_graph(name, 5);
      std::vector<Vec3> estimates;
      for (int i = 0; i < 5; ++i) {
        estimates.emplace_back(rng.uniform01() * 10 - 5, rng.uniform01() * 4 - 2,
                               rng.uniform01() * 2 - 1);
      }
      const Eigen::MatrixXd m = graph.information_matrix();
      for (int i = 1; i <= 5; ++i) {
        const Vec3 distributed = relative_error(i, estimates, x0, graph);
        Vec3 matrix_form = Vec3::Zero();
        for (int j = 1; j <= 5; ++j) {
          matrix_form += m(i - 1, j - 1) * (estimates[static_cast<std::size_t>(j - 1)] - x0);
        }
        worst = std::max(worst, (distributed - matrix_form).cwiseAbs().maxCoeff());
      }
    }
    add_check(results, suite, "distributed-form-equivalence", worst <= 1e-12,
              "max deviation " + std::to_string(worst));
  }
  {
    // Consensus manifold: estimates equal to the leader stay there.
    const ObserverDesign design = ObserverDesign::from_p(drift_matrix(), paper_observer_p());
    ObserverNetwork network(5, design, 0.25);
    const auto leader = [](double t) { return Vec3(20.0 * t, 20.0, 0.0); };
    std::vector<Vec3> estimates(5, leader(0.0));
    network.initialize(estimates, 1.0);
    const TopologySet topologies({make_pf(5)});
    const std::vector<int> modes(100, 1);
    network.integrate(0.0, 0.01, modes, topologies, leader);
    double worst = 0.0;
    for (int i = 1; i <= 5; ++i) {
      worst = std::max(worst, network.observation_error(i, leader(1.0)).cwiseAbs().maxCoeff());
    }
    add_check(results, suite, "consensus-manifold", worst <= 1e-9,
              "max drift " + std::to_string(worst) + " after 1 s");
  }
  {
    // The integrated gain never decreases.
    const ObserverDesign design = ObserverDesign::from_p(drift_matrix(), paper_observer_p());
    ObserverNetwork network(5, design, 0.25);
    std::vector<Vec3> estimates;
    for (int i = 0; i < 5; ++i) {
      estimates.emplace_back(-20.0 * (i + 1) + 0.5 * i, 0.3 * i, -0.1 * i);
    }
    network.initialize(estimates, 1.0);
    const TopologySet topologies(
        {make_lpf(5), make_lpf_failure(5), make_pf(5), make_pf_failure(5)});
    const auto leader = [](double t) { return leader_state(t).vec(); };
    bool monotone = true;
    std::vector<double> previous(5, 1.0);
    for (int step = 0; step < 40; ++step) {
      const std::vector<int> modes(10, step % 4 + 1);
      network.integrate(step * 0.1, 0.01, modes, topologies, leader);
      for (int i = 1; i <= 5; ++i) {
        const double value = network.state(i).varrho;
        if (value < previous[static_cast<std::size_t>(i - 1)] - 1e-12) monotone = false;
        previous[static_cast<std::size_t>(i - 1)] = value;
      }
    }
    add_check(results, suite, "monotone-varrho", monotone, "varrho nondecreasing over 4 s");
  }
  return results;
}

std::vector<CheckResult> qp_suite() {
  std::vector<CheckResult> results;
  const std::string suite = "qp";

  {
    // min (z - 2)^2 over [-1, 1].
    QpProblem qp = QpProblem::unconstrained((Eigen::MatrixXd(1, 1) << 2.0).finished(),
                                            (Eigen::VectorXd(1) << -4.0).finished());
    qp.lb(0) = -1.0;
    qp.ub(0) = 1.0;
    const QpSolution solution = solve(qp);
    add_check(results, suite, "clamped-scalar",
              solution.status == QpStatus::optimal && std::abs(solution.z(0) - 1.0) <= 1e-8,
              "z = " + std::to_string(solution.z(0)));
  }
  {
    // min |z|^2 subject to z1 + z2 = 1.
    QpProblem qp = QpProblem::unconstrained(2.0 * Eigen::MatrixXd::Identity(2, 2),
                                            Eigen::VectorXd::Zero(2));
    qp.a_eq = (Eigen::MatrixXd(1, 2) << 1.0, 1.0).finished();
    qp.b_eq = (Eigen::VectorXd(1) << 1.0).finished();
    const QpSolution solution = solve(qp);
    const bool pass = solution.status == QpStatus::optimal &&
                      std::abs(solution.z(0) - 0.5) <= 1e-7 &&
                      std::abs(solution.z(1) - 0.5) <= 1e-7;
    add_check(results, suite, "equality-symmetric", pass,
              "z = [" + std::to_string(solution.z(0)) + ", " + std::to_string(solution.z(1)) + "]");
  }
  {
    // Cross-check against the independent reference minimizer.
    int failures = 0;
    double worst_gap = 0.0;
    double worst_kkt = 0.0;
    for (int index = 0; index < 100; ++index) {
      const QpProblem qp = random_qp_instance(777, index);
      const OracleResult oracle = reference_solve(qp);
      const QpSolution solution = solve(qp);
      const double gap = std::abs(solution.objective - oracle.objective) /
                         (1.0 + std::abs(oracle.objective));
      const double kkt = solution.status == QpStatus::optimal ? solution.kkt.max() : 1.0;
      worst_gap = std::max(worst_gap, gap);
      worst_kkt = std::max(worst_kkt, kkt);
      if (!oracle.ok || solution.status != QpStatus::optimal || gap > 1e-4 || kkt > 1e-6) {
        failures += 1;
      }
    }
    std::ostringstream detail;
    detail << failures << " failures over 100 instances, worst relative gap " << worst_gap
           << ", worst KKT residual " << worst_kkt;
    add_check(results, suite, "oracle-equivalence-batch", failures == 0, detail.str());
  }
  return results;
}

}  // namespace

QpProblem random_qp_instance(std::uint64_t seed, int index) {
  Rng rng(seed + static_cast<std::uint64_t>(index) * 1000003ULL);
  const int d = 2 + static_cast<int>(rng.next_u64() % 7);  // 2..8

  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = rng.uniform01() * 2.0 - 1.0;
  }
  QpProblem qp;
  qp.h = m.transpose() * m + (0.5 + rng.uniform01()) * Eigen::MatrixXd::Identity(d, d);
  qp.f.resize(d);
  for (int i = 0; i < d; ++i) qp.f(i) = rng.uniform01() * 4.0 - 2.0;
  qp.lb.resize(d);
  qp.ub.resize(d);
  for (int i = 0; i < d; ++i) {
    const double center = rng.uniform01() * 1.0 - 0.5;
    const double half = 0.5 + rng.uniform01() * 1.5;
    qp.lb(i) = center - half;
    qp.ub(i) = center + half;
  }
  const int rows = 4;
  qp.a_in.resize(rows, d);
  qp.b_in.resize(rows);
  Eigen::VectorXd interior(d);
  for (int i = 0; i < d; ++i) interior(i) = 0.5 * (qp.lb(i) + qp.ub(i));
  for (int r = 0; r < rows; ++r) {
    for (int i = 0; i < d; ++i) qp.a_in(r, i) = rng.uniform01() * 2.0 - 1.0;
    const double norm = qp.a_in.row(r).norm();
    if (norm > 1e-9) qp.a_in.row(r) /= norm;
    qp.b_in(r) = qp.a_in.row(r).dot(interior) + 0.2 + rng.uniform01();
  }
  qp.a_eq.resize(0, d);
  qp.b_eq.resize(0);
  return qp;
}

std::vector<CheckResult> run_suite(const std::string& suite) {
  if (suite == "markov") return markov_suite();
  if (suite == "riccati") return riccati_suite();
  if (suite == "observer") return observer_suite();
  if (suite == "qp") return qp_suite();
  if (suite == "all") {
    std::vector<CheckResult> all;
    for (const char* name : {"markov", "riccati", "observer", "qp"}) {
      const auto results = run_suite(name);
      all.insert(all.end(), results.begin(), results.end());
    }
    return all;
  }
  throw std::invalid_argument("run_suite: unknown suite '" + suite + "'");
}

}  // namespace platoon
