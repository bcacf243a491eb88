#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <vector>

#include "platoon/topology.hpp"

using namespace platoon;

TEST_CASE("information matrix of the predecessor-following chain") {
  const DirectedGraph pf = make_pf(5);
  Eigen::MatrixXd expected(5, 5);
  expected << 1, 0, 0, 0, 0,
             -1, 1, 0, 0, 0,
              0, -1, 1, 0, 0,
              0, 0, -1, 1, 0,
              0, 0, 0, -1, 1;
  CHECK((pf.information_matrix() - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("information matrix of the empty graph is zero") {
  const DirectedGraph g = DirectedGraph::empty(4);
  CHECK(g.information_matrix().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("information matrix with leader links everywhere") {
  const DirectedGraph lpf = make_lpf(5);
  const Eigen::MatrixXd m = lpf.information_matrix();
  CHECK(m(0, 0) == 1.0);
  for (int i = 1; i < 5; ++i) {
    CHECK(m(i, i) == 2.0);
    CHECK(m(i, i - 1) == -1.0);
  }
  CHECK(m.cwiseAbs().sum() == 13.0);
}

TEST_CASE("M = W + L and Laplacian row sums vanish") {
  for (const char* name : {"lpf", "lpf-failure", "pf", "pf-failure"}) {
    const DirectedGraph g = make_named_graph(name, 5);
    const Eigen::MatrixXd l = g.laplacian();
    for (int i = 0; i < 5; ++i) CHECK(l.row(i).sum() == 0.0);
    CHECK(((g.spin_matrix() + l) - g.information_matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("in-neighbor queries") {
  const DirectedGraph pf = make_pf(5);
  CHECK(pf.in_neighbors(3) == std::vector<int>{2});
  CHECK(pf.in_neighbors(1).empty());

  const DirectedGraph empty = DirectedGraph::empty(5);
  for (int i = 1; i <= 5; ++i) CHECK(empty.in_neighbors(i).empty());

  const DirectedGraph pf_failure = make_pf_failure(5);
  CHECK(pf_failure.in_neighbors(3).empty());
  CHECK(pf_failure.in_neighbors(2) == std::vector<int>{1});

  CHECK_THROWS_AS((void)pf.in_neighbors(0), std::out_of_range);
  CHECK_THROWS_AS((void)pf.in_neighbors(6), std::out_of_range);
}

TEST_CASE("in/out neighbor consistency") {
  for (const char* name : {"lpf", "lpf-failure", "pf", "pf-failure"}) {
    const DirectedGraph g = make_named_graph(name, 5);
    for (int i = 1; i <= 5; ++i) {
      for (int j : g.in_neighbors(i)) {
        const auto outs = g.out_neighbors(j);
        CHECK(std::find(outs.begin(), outs.end(), i) != outs.end());
      }
    }
  }
}

TEST_CASE("union graph") {
  const DirectedGraph pf = make_pf(5);
  const DirectedGraph twice = union_graph({pf, pf});
  CHECK((twice.adjacency() - pf.adjacency()).cwiseAbs().maxCoeff() == 0);
  CHECK((twice.leader_links() - pf.leader_links()).cwiseAbs().maxCoeff() == 0);

  const DirectedGraph mixed = union_graph({make_pf_failure(5), make_lpf_failure(5)});
  for (int i = 2; i <= 5; ++i) CHECK(mixed.edge(i, i - 1));
  CHECK(mixed.leader_link(1));

  CHECK_THROWS_AS(union_graph({}), std::invalid_argument);
  CHECK_THROWS_AS(union_graph({make_pf(4), make_pf(5)}), std::invalid_argument);
}

TEST_CASE("leader spanning tree reachability") {
  CHECK(make_pf(5).has_leader_spanning_tree());

  const DirectedGraph no_leader(make_pf(5).adjacency(), Eigen::VectorXi::Zero(5));
  CHECK_FALSE(no_leader.has_leader_spanning_tree());

  // With the prose-derived edge set, the leader chain through follower 1
  // still covers the platoon when the trailing leader links fail.
  CHECK(make_lpf_failure(5).has_leader_spanning_tree());

  // Mode with the broken predecessor channel loses followers 3..5.
  CHECK_FALSE(make_pf_failure(5).has_leader_spanning_tree());

  const DirectedGraph scenario_union = union_graph(
      {make_lpf(5), make_lpf_failure(5), make_pf(5), make_pf_failure(5)});
  CHECK(scenario_union.has_leader_spanning_tree());
}

TEST_CASE("topology set validates the union") {
  CHECK_NOTHROW(TopologySet({make_lpf(5), make_lpf_failure(5), make_pf(5), make_pf_failure(5)}));
  CHECK_THROWS_AS(TopologySet({DirectedGraph::empty(3)}), std::invalid_argument);

  const TopologySet set({make_lpf(5), make_pf(5)});
  CHECK(set.n_modes() == 2);
  CHECK(set.graph(2).in_neighbors(1).empty());
  CHECK_THROWS_AS((void)set.graph(3), std::out_of_range);
}

TEST_CASE("graph construction rejects invalid data") {
  Eigen::MatrixXi self_loop = Eigen::MatrixXi::Zero(2, 2);
  self_loop(0, 0) = 1;
  CHECK_THROWS_AS(DirectedGraph(self_loop, Eigen::VectorXi::Zero(2)), std::invalid_argument);

  Eigen::MatrixXi weighted = Eigen::MatrixXi::Zero(2, 2);
  weighted(0, 1) = 2;
  CHECK_THROWS_AS(DirectedGraph(weighted, Eigen::VectorXi::Zero(2)), std::invalid_argument);
}

TEST_CASE("information matrix definiteness diagnostic") {
  CHECK(make_lpf(5).information_matrix_positive_definite());
  CHECK_FALSE(DirectedGraph::empty(5).information_matrix_positive_definite());
}
