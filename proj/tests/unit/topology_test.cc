#include <gtest/gtest.h>

#include <set>
#include <utility>

#include "ismnet/error.h"
#include "ismnet/model/topology.h"

namespace ismnet {
namespace {

// Edge set as 1-based (from, to) pairs for readability.
std::set<std::pair<int, int>> edge_set(const Topology& t) {
  std::set<std::pair<int, int>> out;
  for (const auto& e : t.edges()) out.insert({e.from + 1, e.to + 1});
  return out;
}

TEST(Topology, RingOfFour) {
  const auto t = Topology::build(TopologyKind::kRing, 4);
  const std::set<std::pair<int, int>> expect{{4, 1}, {1, 2}, {2, 3}, {3, 4}};
  EXPECT_EQ(edge_set(t), expect);
}

TEST(Topology, BinaryTreeOfSeven) {
  const auto t = Topology::build(TopologyKind::kBinaryTree, 7);
  const std::set<std::pair<int, int>> expect{{1, 2}, {1, 3}, {2, 4}, {2, 5}, {3, 6}, {3, 7}};
  EXPECT_EQ(edge_set(t), expect);
  EXPECT_THROW(Topology::build(TopologyKind::kBinaryTree, 6), ConfigError);
}

TEST(Topology, StarOfFive) {
  const auto t = Topology::build(TopologyKind::kStar, 5);
  const std::set<std::pair<int, int>> expect{{1, 2}, {1, 3}, {1, 4}, {1, 5}};
  EXPECT_EQ(edge_set(t), expect);
  EXPECT_TRUE(t.in_edges(0).empty());
  EXPECT_EQ(t.out_degree(0), 4);
}

TEST(Topology, LineAndFullyConnected) {
  const auto line = Topology::build(TopologyKind::kLine, 4);
  const std::set<std::pair<int, int>> expect{{1, 2}, {2, 3}, {3, 4}};
  EXPECT_EQ(edge_set(line), expect);
  const auto full = Topology::build(TopologyKind::kFullyConnected, 5);
  EXPECT_EQ(full.edges().size(), 20u);
  for (const auto& e : full.edges()) EXPECT_NE(e.from, e.to);
}

TEST(Topology, InEdgesAscendingBySource) {
  const auto full = Topology::build(TopologyKind::kFullyConnected, 6);
  for (int i = 0; i < 6; ++i) {
    const auto in = full.in_edges(i);
    ASSERT_EQ(in.size(), 5u);
    for (std::size_t k = 1; k < in.size(); ++k) EXPECT_LT(in[k - 1].from, in[k].from);
  }
}

TEST(Topology, DefaultWeights) {
  Eigen::Matrix2d anti;
  anti << 0, 1, 1, 0;
  EXPECT_EQ(default_coupling(TopologyKind::kFullyConnected, 2), Eigen::MatrixXd(5e-4 * anti));
  EXPECT_EQ(default_coupling(TopologyKind::kRing, 2), Eigen::MatrixXd(1e-2 * anti));
}

TEST(Topology, RejectsBadInput) {
  EXPECT_THROW(Topology::build(TopologyKind::kRing, 1), ConfigError);
  const std::vector<Eigen::MatrixXd> w{Eigen::MatrixXd::Identity(2, 2)};
  EXPECT_THROW(Topology::custom(3, {{1, 1, 0}}, w), ConfigError);
  EXPECT_THROW(Topology::custom(3, {{0, 3, 0}}, w), ConfigError);
  EXPECT_THROW(Topology::custom(3, {{0, 1, 0}, {0, 1, 0}}, w), ConfigError);
  EXPECT_THROW(parse_topology_kind("mesh"), ConfigError);
  EXPECT_EQ(parse_topology_kind("binary_tree"), TopologyKind::kBinaryTree);
}

}  // namespace
}  // namespace ismnet
