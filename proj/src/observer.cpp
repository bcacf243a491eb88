#include "platoon/observer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "platoon/dynamics.hpp"

namespace platoon {

double psi(double varsigma, double exponent) {
  if (varsigma < 0.0) throw std::invalid_argument("psi: varsigma must be non-negative");
  return std::pow(1.0 + varsigma, exponent);
}

Vec3 relative_error(int i, const std::vector<Vec3>& estimates, const Vec3& x0,
                    const DirectedGraph& graph) {
  if (static_cast<int>(estimates.size()) != graph.n_followers()) {
    throw std::invalid_argument("relative_error: estimate count does not match the graph");
  }
  const Vec3& own = estimates[static_cast<std::size_t>(i - 1)];
  Vec3 phi = Vec3::Zero();
  if (graph.leader_link(i)) phi += own - x0;
  for (int j : graph.in_neighbors(i)) {
    phi += own - estimates[static_cast<std::size_t>(j - 1)];
  }
  return phi;
}

ObserverRates observer_rates(const Vec3& phi, const ObserverState& state,
                             const ObserverDesign& design, double psi_exponent) {
  static const Mat3 drift = drift_matrix();
  ObserverRates rates;
  rates.varsigma = phi.dot(design.upsilon * phi);
  rates.kappa = (rates.varsigma + state.varrho) * psi(std::max(rates.varsigma, 0.0), psi_exponent);
  rates.d_vartheta = drift * state.vartheta - rates.kappa * (design.p * phi);
  rates.d_varrho = phi.dot(design.gamma * phi);
  return rates;
}

Vec3 average_observation(int i, const std::vector<Vec3>& estimates, const DirectedGraph& graph) {
  if (static_cast<int>(estimates.size()) != graph.n_followers()) {
    throw std::invalid_argument("average_observation: estimate count does not match the graph");
  }
  Vec3 sum = estimates[static_cast<std::size_t>(i - 1)];
  const auto neighbors = graph.in_neighbors(i);
  for (int j : neighbors) sum += estimates[static_cast<std::size_t>(j - 1)];
  return sum / (static_cast<double>(neighbors.size()) + 1.0);
}

ObserverNetwork::ObserverNetwork(int n_followers, ObserverDesign design, double psi_exponent)
    : states_(static_cast<std::size_t>(n_followers)),
      design_(std::move(design)),
      psi_exponent_(psi_exponent),
      design_gain_norm_(design_.p.cwiseAbs().rowwise().sum().maxCoeff()) {
  if (n_followers < 1) throw std::invalid_argument("ObserverNetwork: need at least one follower");
  if (!(psi_exponent > 0.0 && psi_exponent <= 1.0)) {
    throw std::invalid_argument("ObserverNetwork: psi exponent must lie in (0, 1]");
  }
}

void ObserverNetwork::initialize(const std::vector<Vec3>& estimates, double varrho0) {
  if (static_cast<int>(estimates.size()) != size()) {
    throw std::invalid_argument("ObserverNetwork::initialize: estimate count mismatch");
  }
  if (varrho0 < 1.0) throw std::invalid_argument("ObserverNetwork::initialize: varrho0 must be >= 1");
  for (std::size_t i = 0; i < states_.size(); ++i) {
    states_[i].vartheta = estimates[i];
    states_[i].varrho = varrho0;
  }
}

const ObserverState& ObserverNetwork::state(int i) const {
  if (i < 1 || i > size()) throw std::out_of_range("ObserverNetwork::state: index out of range");
  return states_[static_cast<std::size_t>(i - 1)];
}

std::vector<Vec3> ObserverNetwork::estimates() const {
  std::vector<Vec3> result;
  result.reserve(states_.size());
  for (const auto& s : states_) result.push_back(s.vartheta);
  return result;
}

Vec3 ObserverNetwork::observation_error(int i, const Vec3& x0) const {
  return state(i).vartheta - x0;
}

double ObserverNetwork::kappa(int i, const Vec3& x0, const DirectedGraph& graph) const {
  const Vec3 phi = relative_error(i, estimates(), x0, graph);
  const double varsigma = phi.dot(design_.upsilon * phi);
  return (varsigma + state(i).varrho) * psi(std::max(varsigma, 0.0), psi_exponent_);
}

Vec3 ObserverNetwork::average_observation(int i, const DirectedGraph& graph) const {
  return platoon::average_observation(i, estimates(), graph);
}

namespace {

struct NetworkDerivative {
  std::vector<Vec3> d_vartheta;
  std::vector<double> d_varrho;
  double kappa_max = 1.0;
};

double information_row_norm(const DirectedGraph& graph) {
  double norm = 1.0;
  for (int i = 1; i <= graph.n_followers(); ++i) {
    const double degree = static_cast<double>(graph.in_neighbors(i).size());
    norm = std::max(norm, (graph.leader_link(i) ? 1.0 : 0.0) + 2.0 * degree);
  }
  return norm;
}

}  // namespace

void ObserverNetwork::integrate(double t0, double dt_sub, const std::vector<int>& sub_modes,
                                const TopologySet& topologies,
                                const std::function<Vec3(double)>& leader_at) {
  if (dt_sub <= 0.0) throw std::invalid_argument("ObserverNetwork::integrate: dt_sub must be positive");
  const int n = size();

  // Derivative of the whole network at a frozen snapshot of estimates.
  const auto derivative = [&](const std::vector<Vec3>& thetas, const std::vector<double>& rhos,
                              double t, const DirectedGraph& graph) {
    NetworkDerivative d;
    d.d_vartheta.resize(static_cast<std::size_t>(n));
    d.d_varrho.resize(static_cast<std::size_t>(n));
    const Vec3 x0 = leader_at(t);
    for (int i = 1; i <= n; ++i) {
      const Vec3 phi = relative_error(i, thetas, x0, graph);
      ObserverState stage_state;
      stage_state.vartheta = thetas[static_cast<std::size_t>(i - 1)];
      stage_state.varrho = rhos[static_cast<std::size_t>(i - 1)];
      const ObserverRates rates = observer_rates(phi, stage_state, design_, psi_exponent_);
      d.d_vartheta[static_cast<std::size_t>(i - 1)] = rates.d_vartheta;
      d.d_varrho[static_cast<std::size_t>(i - 1)] = rates.d_varrho;
      d.kappa_max = std::max(d.kappa_max, rates.kappa);
    }
    return d;
  };

  std::vector<Vec3> thetas = estimates();
  std::vector<double> rhos;
  rhos.reserve(states_.size());
  for (const auto& s : states_) rhos.push_back(s.varrho);

  std::vector<Vec3> stage_thetas(static_cast<std::size_t>(n));
  std::vector<double> stage_rhos(static_cast<std::size_t>(n));

  const auto blend = [&](const std::vector<Vec3>& base_thetas, const std::vector<double>& base_rhos,
                         const NetworkDerivative& d, double h) {
    for (int i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      stage_thetas[idx] = base_thetas[idx] + h * d.d_vartheta[idx];
      stage_rhos[idx] = base_rhos[idx] + h * d.d_varrho[idx];
    }
  };

  for (std::size_t step = 0; step < sub_modes.size(); ++step) {
    const double t_step = t0 + static_cast<double>(step) * dt_sub;
    const DirectedGraph& graph = topologies.graph(sub_modes[step]);
    const double coupling_norm = information_row_norm(graph) * design_gain_norm_;

    double elapsed = 0.0;
    int guard = 0;
    while (elapsed < dt_sub - 1e-15) {
      const double t = t_step + elapsed;
      const NetworkDerivative k1 = derivative(thetas, rhos, t, graph);

      // The correction term's stiffness scales with the largest adaptive
      // gain; keep lambda * h inside the explicit method's stability range.
      const double lambda = k1.kappa_max * coupling_norm + 2.0;
      double h = std::min(dt_sub - elapsed, 1.5 / lambda);
      if (dt_sub - elapsed - h < 1e-12) h = dt_sub - elapsed;

      blend(thetas, rhos, k1, 0.5 * h);
      const NetworkDerivative k2 = derivative(stage_thetas, stage_rhos, t + 0.5 * h, graph);
      blend(thetas, rhos, k2, 0.5 * h);
      const NetworkDerivative k3 = derivative(stage_thetas, stage_rhos, t + 0.5 * h, graph);
      blend(thetas, rhos, k3, h);
      const NetworkDerivative k4 = derivative(stage_thetas, stage_rhos, t + h, graph);

      for (int i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        thetas[idx] += h / 6.0 *
                       (k1.d_vartheta[idx] + 2.0 * k2.d_vartheta[idx] + 2.0 * k3.d_vartheta[idx] +
                        k4.d_vartheta[idx]);
        rhos[idx] += h / 6.0 *
                     (k1.d_varrho[idx] + 2.0 * k2.d_varrho[idx] + 2.0 * k3.d_varrho[idx] +
                      k4.d_varrho[idx]);
        if (!thetas[idx].allFinite() || !std::isfinite(rhos[idx])) {
          throw std::runtime_error("ObserverNetwork::integrate: non-finite state for follower " +
                                   std::to_string(i + 1) + " at t = " + std::to_string(t + h));
        }
      }
      elapsed += h;
      if (++guard > 1000000) {
        throw std::runtime_error("ObserverNetwork::integrate: step control stalled at t = " +
                                 std::to_string(t));
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    states_[static_cast<std::size_t>(i)].vartheta = thetas[static_cast<std::size_t>(i)];
    states_[static_cast<std::size_t>(i)].varrho = rhos[static_cast<std::size_t>(i)];
  }
}

}  // namespace platoon
