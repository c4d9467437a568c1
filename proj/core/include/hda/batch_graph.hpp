#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hda/tensor.hpp"

namespace hda {

/// Undirected threshold graph over the rows of one mini-batch.
struct BatchGraph {
  std::size_t nodes = 0;
  double threshold = 0.0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // i < j, sorted
  std::vector<std::vector<std::uint32_t>> neighbors;           // sorted, no self-loops

  static BatchGraph empty(std::size_t nodes);

  std::size_t edge_count() const { return edges.size(); }
  bool has_edge(std::uint32_t i, std::uint32_t j) const;

  /// Graph on `order.size()` nodes where new node k is old node order[k].
  BatchGraph permuted(std::span<const std::size_t> order) const;
};

/// Edge (i, j) exists iff ‖φ_i − φ_j‖₂ < threshold (strict). Brute-force pair scan.
BatchGraph build_graph(const Dense& features, double threshold);

/// Same graph from an explicit edge list (deduplicated, self-loops rejected).
BatchGraph graph_from_edges(std::size_t nodes,
                            std::vector<std::pair<std::uint32_t, std::uint32_t>> edges);

/// All B(B−1)/2 pairwise Euclidean distances, in (i<j) row-major order.
std::vector<double> pairwise_distances(const Dense& features);

/// p-th percentile (linear interpolation between order statistics) of the
/// pairwise distances, p ∈ [0, 100]. Needs at least two rows. Warns and
/// returns 0 when the percentile distance is 0, since a strict threshold of 0
/// yields no edges.
double percentile_threshold(const Dense& features, double p);

struct EdgeStats {
  std::size_t right = 0;    // endpoints share a label
  std::size_t wrong = 0;    // endpoints have different labels
  std::size_t unknown = 0;  // at least one endpoint unlabelled (−1)

  std::size_t total() const { return right + wrong + unknown; }
  EdgeStats& operator+=(const EdgeStats& o) {
    right += o.right;
    wrong += o.wrong;
    unknown += o.unknown;
    return *this;
  }
};

EdgeStats edge_stats(const BatchGraph& graph, std::span<const int> labels);

}  // namespace hda
