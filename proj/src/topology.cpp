#include "platoon/topology.hpp"

#include <Eigen/Eigenvalues>

#include <stdexcept>

namespace platoon {

namespace {

void check_index(int i, int n, const char* what) {
  if (i < 1 || i > n) {
    throw std::out_of_range(std::string(what) + ": follower index out of range");
  }
}

}  // namespace

DirectedGraph::DirectedGraph(Eigen::MatrixXi adjacency, Eigen::VectorXi leader_links)
    : adjacency_(std::move(adjacency)), leader_links_(std::move(leader_links)) {
  const int n = static_cast<int>(leader_links_.size());
  if (n < 1) throw std::invalid_argument("DirectedGraph: need at least one follower");
  if (adjacency_.rows() != n || adjacency_.cols() != n) {
    throw std::invalid_argument("DirectedGraph: adjacency must be n x n");
  }
  for (int i = 0; i < n; ++i) {
    if (leader_links_(i) != 0 && leader_links_(i) != 1) {
      throw std::invalid_argument("DirectedGraph: leader links must be 0 or 1");
    }
    for (int j = 0; j < n; ++j) {
      const int a = adjacency_(i, j);
      if (a != 0 && a != 1) throw std::invalid_argument("DirectedGraph: adjacency entries must be 0 or 1");
      if (i == j && a != 0) throw std::invalid_argument("DirectedGraph: self-loops are not allowed");
    }
  }
}

DirectedGraph DirectedGraph::empty(int n_followers) {
  return DirectedGraph(Eigen::MatrixXi::Zero(n_followers, n_followers),
                       Eigen::VectorXi::Zero(n_followers));
}

bool DirectedGraph::edge(int i, int j) const {
  check_index(i, n_followers(), "edge");
  check_index(j, n_followers(), "edge");
  return adjacency_(i - 1, j - 1) == 1;
}

bool DirectedGraph::leader_link(int i) const {
  check_index(i, n_followers(), "leader_link");
  return leader_links_(i - 1) == 1;
}

std::vector<int> DirectedGraph::in_neighbors(int i) const {
  check_index(i, n_followers(), "in_neighbors");
  std::vector<int> result;
  for (int j = 1; j <= n_followers(); ++j) {
    if (j != i && adjacency_(i - 1, j - 1) == 1) result.push_back(j);
  }
  return result;
}

std::vector<int> DirectedGraph::out_neighbors(int i) const {
  check_index(i, n_followers(), "out_neighbors");
  std::vector<int> result;
  for (int j = 1; j <= n_followers(); ++j) {
    if (j != i && adjacency_(j - 1, i - 1) == 1) result.push_back(j);
  }
  return result;
}

Eigen::MatrixXd DirectedGraph::laplacian() const {
  const int n = n_followers();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    int degree = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      degree += adjacency_(i, j);
      l(i, j) = -adjacency_(i, j);
    }
    l(i, i) = degree;
  }
  return l;
}

Eigen::MatrixXd DirectedGraph::spin_matrix() const {
  return leader_links_.cast<double>().asDiagonal();
}

Eigen::MatrixXd DirectedGraph::information_matrix() const {
  return spin_matrix() + laplacian();
}

bool DirectedGraph::has_leader_spanning_tree() const {
  const int n = n_followers();
  std::vector<bool> reached(n, false);
  std::vector<int> frontier;
  for (int i = 0; i < n; ++i) {
    if (leader_links_(i) == 1) {
      reached[i] = true;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    const int j = frontier.back();
    frontier.pop_back();
    for (int i = 0; i < n; ++i) {
      if (!reached[i] && adjacency_(i, j) == 1) {
        reached[i] = true;
        frontier.push_back(i);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    if (!reached[i]) return false;
  }
  return true;
}

bool DirectedGraph::information_matrix_positive_definite() const {
  const Eigen::MatrixXd m = information_matrix();
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  return eig.eigenvalues().minCoeff() > 0.0;
}

DirectedGraph union_graph(const std::vector<DirectedGraph>& graphs) {
  if (graphs.empty()) throw std::invalid_argument("union_graph: empty graph list");
  const int n = graphs.front().n_followers();
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(n, n);
  Eigen::VectorXi leader = Eigen::VectorXi::Zero(n);
  for (const auto& g : graphs) {
    if (g.n_followers() != n) throw std::invalid_argument("union_graph: mismatched follower counts");
    adjacency = adjacency.cwiseMax(g.adjacency());
    leader = leader.cwiseMax(g.leader_links());
  }
  return DirectedGraph(std::move(adjacency), std::move(leader));
}

DirectedGraph make_pf(int n) {
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(n, n);
  Eigen::VectorXi leader = Eigen::VectorXi::Zero(n);
  for (int i = 1; i < n; ++i) adjacency(i, i - 1) = 1;
  if (n >= 1) leader(0) = 1;
  return DirectedGraph(std::move(adjacency), std::move(leader));
}

DirectedGraph make_lpf(int n) {
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(n, n);
  for (int i = 1; i < n; ++i) adjacency(i, i - 1) = 1;
  return DirectedGraph(std::move(adjacency), Eigen::VectorXi::Ones(n));
}

DirectedGraph make_pf_failure(int n) {
  if (n < 3) throw std::invalid_argument("make_pf_failure: needs at least 3 followers");
  DirectedGraph pf = make_pf(n);
  Eigen::MatrixXi adjacency = pf.adjacency();
  adjacency(2, 1) = 0;  // channel 2 -> 3 broken
  return DirectedGraph(std::move(adjacency), pf.leader_links());
}

DirectedGraph make_lpf_failure(int n) {
  if (n < 2) throw std::invalid_argument("make_lpf_failure: needs at least 2 followers");
  DirectedGraph lpf = make_lpf(n);
  Eigen::VectorXi leader = lpf.leader_links();
  leader(n - 1) = 0;  // leader links to the last two followers broken
  leader(n - 2) = 0;
  return DirectedGraph(lpf.adjacency(), std::move(leader));
}

DirectedGraph make_named_graph(const std::string& name, int n) {
  if (name == "pf") return make_pf(n);
  if (name == "lpf") return make_lpf(n);
  if (name == "pf-failure") return make_pf_failure(n);
  if (name == "lpf-failure") return make_lpf_failure(n);
  throw std::invalid_argument("make_named_graph: unknown topology '" + name + "'");
}

TopologySet::TopologySet(std::vector<DirectedGraph> graphs)
    : graphs_(std::move(graphs)), union_(union_graph(graphs_)) {
  if (!union_.has_leader_spanning_tree()) {
    throw std::invalid_argument(
        "TopologySet: union graph has no directed spanning tree rooted at the leader");
  }
}

const DirectedGraph& TopologySet::graph(int mode) const {
  if (mode < 1 || mode > n_modes()) throw std::out_of_range("TopologySet::graph: mode out of range");
  return graphs_[static_cast<std::size_t>(mode - 1)];
}

}  // namespace platoon
