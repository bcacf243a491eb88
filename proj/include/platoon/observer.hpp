#pragma once

#include <functional>
#include <vector>

#include "platoon/riccati.hpp"
#include "platoon/topology.hpp"
#include "platoon/types.hpp"

namespace platoon {

/// Per-follower observer state: leader estimate plus the integrated adaptive
/// gain. The quadratic gain varsigma is algebraic (recomputed from the live
/// relative error), not integrated.
struct ObserverState {
  Vec3 vartheta = Vec3::Zero();
  double varrho = 1.0;
};

/// Adaptive coupling amplifier (1 + varsigma)^exponent, >= 1 and increasing.
/// Throws on negative varsigma.
double psi(double varsigma, double exponent);

/// Relative observation error of follower i in distributed form:
///   phi_i = w_i0 (vartheta_i - x0) + sum_{j in-neighbors} (vartheta_i - vartheta_j),
/// algebraically identical to the information-matrix form sum_j m_ij theta_j.
/// The leader state enters only when a direct leader link exists.
Vec3 relative_error(int i, const std::vector<Vec3>& estimates, const Vec3& x0,
                    const DirectedGraph& graph);

struct ObserverRates {
  Vec3 d_vartheta = Vec3::Zero();
  double d_varrho = 0.0;
  double varsigma = 0.0;
  double kappa = 0.0;
};

/// Continuous-time observer law:
///   varsigma = phi' Upsilon phi,  kappa = (varsigma + varrho) Psi(varsigma),
///   d vartheta = A vartheta - kappa P phi,  d varrho = phi' Gamma phi.
ObserverRates observer_rates(const Vec3& phi, const ObserverState& state,
                             const ObserverDesign& design, double psi_exponent);

/// Arithmetic mean of follower i's estimate and its in-neighbors' estimates
/// under the given graph.
Vec3 average_observation(int i, const std::vector<Vec3>& estimates, const DirectedGraph& graph);

/// The N coupled observers integrated as one synchronous system: per
/// sub-step, all relative errors are evaluated against a frozen snapshot of
/// the estimates, then all states advance (explicit fourth-order one-step
/// method).
class ObserverNetwork {
 public:
  ObserverNetwork(int n_followers, ObserverDesign design, double psi_exponent);

  void initialize(const std::vector<Vec3>& estimates, double varrho0 = 1.0);

  int size() const { return static_cast<int>(states_.size()); }
  const ObserverState& state(int i) const;
  const ObserverDesign& design() const { return design_; }
  double psi_exponent() const { return psi_exponent_; }

  std::vector<Vec3> estimates() const;

  Vec3 observation_error(int i, const Vec3& x0) const;

  /// Live adaptive parameter kappa_i evaluated against the current graph.
  double kappa(int i, const Vec3& x0, const DirectedGraph& graph) const;

  Vec3 average_observation(int i, const DirectedGraph& graph) const;

  /// Advances every observer over [t0, t0 + n_sub * dt_sub]. sub_modes gives
  /// the active switching mode per sub-step; the leader state is evaluated
  /// exactly at the integration stage times. A sub-step subdivides further
  /// when the adaptive gains push the coupled system's stiffness beyond the
  /// explicit integrator's stability range. Throws when a state leaves the
  /// finite range, naming the follower and time.
  void integrate(double t0, double dt_sub, const std::vector<int>& sub_modes,
                 const TopologySet& topologies, const std::function<Vec3(double)>& leader_at);

 private:
  std::vector<ObserverState> states_;
  ObserverDesign design_;
  double psi_exponent_;
  double design_gain_norm_;
};

}  // namespace platoon
