#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "mtdiff/error.hpp"

namespace mtdiff {

using Index = std::ptrdiff_t;
using Edge = std::pair<Index, Index>;

/// Neighborhood of one node, split by cluster membership. All lists are sorted.
struct NeighborhoodView {
  Index node = 0;
  std::vector<Index> intra;            // N_k ∩ C(k), contains node
  std::vector<Index> intra_strict;     // N_k^- ∩ C(k)
  std::vector<Index> inter;            // N_k \ C(k)
  std::vector<Index> inter_with_self;  // N_k \ C(k)^-, i.e. inter plus node
};

/// Undirected graph whose nodes are partitioned into clusters sharing one task.
/// Immutable after construction.
class ClusteredNetwork {
 public:
  ClusteredNetwork() = default;

  Index nodes() const noexcept { return static_cast<Index>(cluster_of_.size()); }
  Index dim() const noexcept { return dim_; }
  Index cluster_count() const noexcept { return static_cast<Index>(clusters_.size()); }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::vector<Index>>& clusters() const noexcept { return clusters_; }
  const std::vector<Index>& cluster(Index q) const { return clusters_.at(static_cast<std::size_t>(q)); }
  Index cluster_of(Index k) const { return cluster_of_.at(static_cast<std::size_t>(k)); }

  /// Neighbors excluding the node itself.
  const std::vector<Index>& adjacent(Index k) const { return adjacency_.at(static_cast<std::size_t>(k)); }

  bool linked(Index k, Index l) const {
    const auto& adj = adjacent(k);
    return std::binary_search(adj.begin(), adj.end(), l);
  }

  bool same_cluster(Index k, Index l) const { return cluster_of(k) == cluster_of(l); }

  const NeighborhoodView& neighborhood(Index k) const {
    if (k < 0 || k >= nodes())
      throw Error(ErrorCode::DimensionMismatch, "node index " + std::to_string(k) + " out of range");
    return views_[static_cast<std::size_t>(k)];
  }

  bool is_connected() const {
    if (nodes() == 0) return true;
    std::vector<char> seen(static_cast<std::size_t>(nodes()), 0);
    std::vector<Index> stack{0};
    seen[0] = 1;
    Index count = 1;
    while (!stack.empty()) {
      const Index k = stack.back();
      stack.pop_back();
      for (Index l : adjacent(k)) {
        if (!seen[static_cast<std::size_t>(l)]) {
          seen[static_cast<std::size_t>(l)] = 1;
          ++count;
          stack.push_back(l);
        }
      }
    }
    return count == nodes();
  }

  friend ClusteredNetwork build_network(Index, Index, std::vector<Edge>, std::vector<std::vector<Index>>);

 private:
  Index dim_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Index>> clusters_;
  std::vector<Index> cluster_of_;
  std::vector<std::vector<Index>> adjacency_;
  std::vector<NeighborhoodView> views_;
};

/// Validates the partition and edges, then precomputes every neighborhood.
/// Indices are 0-based. Duplicate edges (in either orientation) are merged.
inline ClusteredNetwork build_network(Index node_count, Index dim, std::vector<Edge> edges,
                                      std::vector<std::vector<Index>> clusters) {
  if (node_count < 1) throw Error(ErrorCode::DimensionMismatch, "network needs at least one node");
  if (dim < 1) throw Error(ErrorCode::DimensionMismatch, "parameter dimension must be positive");
  if (clusters.empty() || static_cast<Index>(clusters.size()) > node_count)
    throw Error(ErrorCode::DimensionMismatch, "cluster count must lie in [1, N]");

  ClusteredNetwork net;
  net.dim_ = dim;
  net.cluster_of_.assign(static_cast<std::size_t>(node_count), -1);
  for (std::size_t q = 0; q < clusters.size(); ++q) {
    auto& members = clusters[q];
    if (members.empty()) throw Error(ErrorCode::EmptyCluster, "cluster " + std::to_string(q) + " is empty");
    std::sort(members.begin(), members.end());
    for (Index k : members) {
      if (k < 0 || k >= node_count)
        throw Error(ErrorCode::UncoveredNode, "cluster member " + std::to_string(k) + " is not a node index");
      auto& slot = net.cluster_of_[static_cast<std::size_t>(k)];
      if (slot != -1)
        throw Error(ErrorCode::OverlappingClusters, "node " + std::to_string(k) + " belongs to clusters " +
                                                        std::to_string(slot) + " and " + std::to_string(q));
      slot = static_cast<Index>(q);
    }
  }
  for (Index k = 0; k < node_count; ++k)
    if (net.cluster_of_[static_cast<std::size_t>(k)] == -1)
      throw Error(ErrorCode::UncoveredNode, "node " + std::to_string(k) + " is in no cluster");
  net.clusters_ = std::move(clusters);

  for (auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= node_count || b >= node_count)
      throw Error(ErrorCode::InvalidEdge, "edge (" + std::to_string(a) + "," + std::to_string(b) + ") out of range");
    if (a == b) throw Error(ErrorCode::InvalidEdge, "self-edge at node " + std::to_string(a));
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  net.edges_ = std::move(edges);

  net.adjacency_.assign(static_cast<std::size_t>(node_count), {});
  for (const auto& [a, b] : net.edges_) {
    net.adjacency_[static_cast<std::size_t>(a)].push_back(b);
    net.adjacency_[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& adj : net.adjacency_) std::sort(adj.begin(), adj.end());

  net.views_.resize(static_cast<std::size_t>(node_count));
  for (Index k = 0; k < node_count; ++k) {
    NeighborhoodView& v = net.views_[static_cast<std::size_t>(k)];
    v.node = k;
    std::vector<Index> closed = net.adjacency_[static_cast<std::size_t>(k)];
    closed.insert(std::lower_bound(closed.begin(), closed.end(), k), k);
    for (Index l : closed) {
      if (net.same_cluster(k, l)) {
        v.intra.push_back(l);
        if (l != k) v.intra_strict.push_back(l);
      } else {
        v.inter.push_back(l);
      }
    }
    v.inter_with_self = v.inter;
    v.inter_with_self.insert(std::lower_bound(v.inter_with_self.begin(), v.inter_with_self.end(), k), k);
  }
  return net;
}

}  // namespace mtdiff
