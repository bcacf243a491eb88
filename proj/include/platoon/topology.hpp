#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace platoon {

/// Directed communication graph for one leader and n followers.
///
/// Follower indices are 1-based throughout the public surface. Entry (i, j) of
/// the adjacency means follower i receives from follower j; leader_links[i]
/// means follower i receives from the leader. Entries are restricted to {0,1}
/// and the diagonal must be zero (no self-loops). Instances are immutable
/// after construction and safe for concurrent reads.
class DirectedGraph {
 public:
  DirectedGraph(Eigen::MatrixXi adjacency, Eigen::VectorXi leader_links);

  static DirectedGraph empty(int n_followers);

  int n_followers() const { return static_cast<int>(leader_links_.size()); }

  /// True when follower i receives from follower j.
  bool edge(int i, int j) const;
  bool leader_link(int i) const;

  std::vector<int> in_neighbors(int i) const;
  std::vector<int> out_neighbors(int i) const;

  const Eigen::MatrixXi& adjacency() const { return adjacency_; }
  const Eigen::VectorXi& leader_links() const { return leader_links_; }

  /// Laplacian L with l_ii = sum_j a_ij and l_ij = -a_ij.
  Eigen::MatrixXd laplacian() const;
  /// diag(leader links).
  Eigen::MatrixXd spin_matrix() const;
  /// Information matrix M = W + L.
  Eigen::MatrixXd information_matrix() const;

  /// True when every follower is reachable from the leader along directed
  /// edges (leader links seed the frontier, a_ij is an edge j -> i).
  bool has_leader_spanning_tree() const;

  /// Diagnostic only: x'Mx > 0 for all x != 0, i.e. the symmetric part of M
  /// is positive definite. Individual switching modes need not satisfy this.
  bool information_matrix_positive_definite() const;

 private:
  Eigen::MatrixXi adjacency_;
  Eigen::VectorXi leader_links_;
};

/// Edge-wise OR of adjacency and leader links. Throws on an empty list or
/// mismatched follower counts.
DirectedGraph union_graph(const std::vector<DirectedGraph>& graphs);

/// Built-in scenario topologies. lpf/pf are defined for any n >= 1;
/// pf_failure (edge 2->3 removed) needs n >= 3; lpf_failure (leader links to
/// the last two followers removed) needs n >= 2.
DirectedGraph make_pf(int n_followers);
DirectedGraph make_lpf(int n_followers);
DirectedGraph make_pf_failure(int n_followers);
DirectedGraph make_lpf_failure(int n_followers);

/// Lookup by name: "lpf", "lpf-failure", "pf", "pf-failure".
DirectedGraph make_named_graph(const std::string& name, int n_followers);

/// Ordered set of switching modes sharing one follower count. Construction
/// verifies that the union graph contains a directed spanning tree rooted at
/// the leader.
class TopologySet {
 public:
  explicit TopologySet(std::vector<DirectedGraph> graphs);

  int n_modes() const { return static_cast<int>(graphs_.size()); }
  int n_followers() const { return union_.n_followers(); }

  /// Graph of switching mode (1-based).
  const DirectedGraph& graph(int mode) const;
  const DirectedGraph& union_of() const { return union_; }

 private:
  std::vector<DirectedGraph> graphs_;
  DirectedGraph union_;
};

}  // namespace platoon
