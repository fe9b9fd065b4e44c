#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "mtdiff/network.hpp"
#include "support.hpp"

using namespace mtdiff;

namespace {

ErrorCode code_of(Index n, std::vector<Edge> edges, std::vector<std::vector<Index>> clusters) {
  try {
    build_network(n, 1, std::move(edges), std::move(clusters));
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::IoError;
}

using Set = std::vector<Index>;

}  // namespace

TEST(Network, IllustrativeTopologyHasFourClusters) {
  const auto net = build_network(10, 2, {{0, 1}, {1, 2}, {3, 4}, {4, 5}, {6, 7}, {8, 9}, {1, 4}, {2, 4}, {3, 9}, {0, 8}, {7, 9}},
                                 {{0, 1, 2}, {3, 4, 5}, {6, 7}, {8, 9}});
  EXPECT_EQ(net.nodes(), 10);
  EXPECT_EQ(net.cluster_count(), 4);
  EXPECT_EQ(net.dim(), 2);
  EXPECT_TRUE(net.is_connected());
  // Node 5 only talks inside its own cluster.
  EXPECT_TRUE(net.neighborhood(5).inter.empty());
  EXPECT_EQ(net.neighborhood(5).inter_with_self, Set{5});
}

TEST(Network, Singleton) {
  const auto net = build_network(1, 1, {}, {{0}});
  const auto& v = net.neighborhood(0);
  EXPECT_EQ(v.intra, Set{0});
  EXPECT_TRUE(v.intra_strict.empty());
  EXPECT_TRUE(v.inter.empty());
  EXPECT_EQ(v.inter_with_self, Set{0});
}

TEST(Network, PathWithTwoClusters) {
  const auto net = build_network(4, 1, {{0, 1}, {1, 2}, {2, 3}}, {{0, 1}, {2, 3}});
  const auto& v = net.neighborhood(1);
  EXPECT_EQ(v.intra, (Set{0, 1}));
  EXPECT_EQ(v.intra_strict, Set{0});
  EXPECT_EQ(v.inter, Set{2});
  EXPECT_EQ(v.inter_with_self, (Set{1, 2}));
}

TEST(Network, FullyConnectedSingleCluster) {
  const auto net = build_network(3, 1, {{0, 1}, {0, 2}, {1, 2}}, {{0, 1, 2}});
  EXPECT_TRUE(net.neighborhood(0).inter.empty());
  EXPECT_EQ(net.neighborhood(0).inter_with_self, Set{0});
  EXPECT_EQ(net.neighborhood(0).intra, (Set{0, 1, 2}));
}

TEST(Network, DuplicateEdgesAreMerged) {
  const auto net = build_network(2, 1, {{0, 1}, {1, 0}, {0, 1}}, {{0, 1}});
  EXPECT_EQ(net.edges().size(), 1u);
}

TEST(Network, DisconnectedGraphIsAllowed) {
  const auto net = build_network(4, 1, {{0, 1}, {2, 3}}, {{0, 1}, {2, 3}});
  EXPECT_FALSE(net.is_connected());
}

TEST(Network, Errors) {
  EXPECT_EQ(code_of(3, {}, {{0, 1}, {1, 2}}), ErrorCode::OverlappingClusters);
  EXPECT_EQ(code_of(3, {}, {{0, 1}}), ErrorCode::UncoveredNode);
  EXPECT_EQ(code_of(3, {}, {{0, 1, 5}, {2}}), ErrorCode::UncoveredNode);
  EXPECT_EQ(code_of(3, {{0, 3}}, {{0, 1, 2}}), ErrorCode::InvalidEdge);
  EXPECT_EQ(code_of(3, {{1, 1}}, {{0, 1, 2}}), ErrorCode::InvalidEdge);
  EXPECT_EQ(code_of(3, {}, {{0, 1, 2}, {}}), ErrorCode::EmptyCluster);
  const auto net = build_network(2, 1, {}, {{0, 1}});
  EXPECT_THROW(net.neighborhood(2), Error);
}

TEST(Network, PartitionAndSymmetryPropertiesOnRandomGraphs) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 9;
    const auto net = fixtures::random_network(n, 1 + trial % n, 1, 0.3, rng);
    for (Index k = 0; k < n; ++k) {
      const auto& v = net.neighborhood(k);
      std::set<Index> closed(net.adjacent(k).begin(), net.adjacent(k).end());
      closed.insert(k);
      std::set<Index> uni(v.intra.begin(), v.intra.end());
      for (Index l : v.inter) {
        EXPECT_FALSE(uni.count(l)) << "intra and inter overlap";
        uni.insert(l);
      }
      EXPECT_EQ(uni, closed);
      EXPECT_TRUE(std::binary_search(v.intra.begin(), v.intra.end(), k));
      EXPECT_TRUE(std::binary_search(v.inter_with_self.begin(), v.inter_with_self.end(), k));
      EXPECT_FALSE(std::binary_search(v.intra_strict.begin(), v.intra_strict.end(), k));
      EXPECT_FALSE(std::binary_search(v.inter.begin(), v.inter.end(), k));
      for (Index l : v.intra) EXPECT_TRUE(net.same_cluster(k, l));
      for (Index l : v.inter) EXPECT_FALSE(net.same_cluster(k, l));
      for (Index l : net.adjacent(k)) EXPECT_TRUE(net.linked(l, k));
    }
  }
}
