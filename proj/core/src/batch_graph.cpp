#include "hda/batch_graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hda/errors.hpp"
#include "hda/log.hpp"

namespace hda {

BatchGraph BatchGraph::empty(std::size_t nodes) {
  BatchGraph g;
  g.nodes = nodes;
  g.neighbors.resize(nodes);
  return g;
}

bool BatchGraph::has_edge(std::uint32_t i, std::uint32_t j) const {
  if (i >= nodes || j >= nodes) return false;
  const auto& n = neighbors[i];
  return std::binary_search(n.begin(), n.end(), j);
}

BatchGraph BatchGraph::permuted(std::span<const std::size_t> order) const {
  if (order.size() != nodes) throw ShapeError("permutation length differs from node count");
  std::vector<std::uint32_t> new_index(nodes);
  for (std::size_t k = 0; k < nodes; ++k) new_index.at(order[k]) = static_cast<std::uint32_t>(k);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> moved;
  moved.reserve(edges.size());
  for (auto [i, j] : edges) moved.emplace_back(new_index[i], new_index[j]);
  BatchGraph g = graph_from_edges(nodes, std::move(moved));
  g.threshold = threshold;
  return g;
}

BatchGraph graph_from_edges(std::size_t nodes,
                            std::vector<std::pair<std::uint32_t, std::uint32_t>> edges) {
  for (auto& [i, j] : edges) {
    if (i == j) throw ContractError("self-loop on node " + std::to_string(i));
    if (i >= nodes || j >= nodes) throw ContractError("edge endpoint out of range");
    if (i > j) std::swap(i, j);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  BatchGraph g = BatchGraph::empty(nodes);
  g.edges = std::move(edges);
  for (auto [i, j] : g.edges) {
    g.neighbors[i].push_back(j);
    g.neighbors[j].push_back(i);
  }
  for (auto& n : g.neighbors) std::sort(n.begin(), n.end());
  return g;
}

namespace {

double row_distance(const Dense& f, std::size_t i, std::size_t j) {
  const std::size_t k = f.cols();
  const double* a = f.data.data() + i * k;
  const double* b = f.data.data() + j * k;
  double acc = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double d = a[p] - b[p];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

BatchGraph build_graph(const Dense& features, double threshold) {
  if (!(threshold > 0.0)) {
    throw ContractError("graph threshold must be positive, got " + std::to_string(threshold));
  }
  const std::size_t n = features.rows();
  BatchGraph g = BatchGraph::empty(n);
  g.threshold = threshold;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (row_distance(features, i, j) < threshold) {
        g.edges.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
        g.neighbors[i].push_back(static_cast<std::uint32_t>(j));
        g.neighbors[j].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }
  // Lists of low-index nodes were filled in increasing order already; the
  // j-side entries arrive in increasing i, so every list is sorted.
  return g;
}

std::vector<double> pairwise_distances(const Dense& features) {
  const std::size_t n = features.rows();
  std::vector<double> out;
  out.reserve(n * (n - (n ? 1 : 0)) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) out.push_back(row_distance(features, i, j));
  }
  return out;
}

double percentile_threshold(const Dense& features, double p) {
  if (features.rows() < 2) throw ContractError("percentile threshold needs at least two rows");
  if (!(p >= 0.0 && p <= 100.0)) {
    throw ContractError("percentile must lie in [0, 100], got " + std::to_string(p));
  }
  std::vector<double> d = pairwise_distances(features);
  std::sort(d.begin(), d.end());
  const double pos = p / 100.0 * static_cast<double>(d.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, d.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  const double t = d[lo] + frac * (d[hi] - d[lo]);
  if (t == 0.0) {
    std::ostringstream os;
    os << "percentile-" << p << " pairwise distance is 0; a strict threshold yields no edges";
    warn(os.str());
  }
  return t;
}

EdgeStats edge_stats(const BatchGraph& graph, std::span<const int> labels) {
  if (labels.size() != graph.nodes) {
    throw ShapeError("edge_stats: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(graph.nodes) + " nodes");
  }
  EdgeStats s;
  for (auto [i, j] : graph.edges) {
    const int a = labels[i];
    const int b = labels[j];
    if (a < 0 || b < 0) {
      ++s.unknown;
    } else if (a == b) {
      ++s.right;
    } else {
      ++s.wrong;
    }
  }
  return s;
}

}  // namespace hda
