#include "hda/losses.hpp"

#include <algorithm>
#include <cmath>

#include "hda/batch_graph.hpp"
#include "hda/errors.hpp"
#include "hda/log.hpp"
#include "hda/ops.hpp"

namespace hda {

void KernelSpec::validate() const {
  if (bandwidths.empty()) throw ContractError("kernel mixture needs at least one kernel");
  if (bandwidths.size() != weights.size()) {
    throw ContractError("kernel mixture has " + std::to_string(bandwidths.size()) +
                        " bandwidths but " + std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  for (std::size_t m = 0; m < size(); ++m) {
    if (!(bandwidths[m] > 0.0)) throw ContractError("kernel bandwidths must be positive");
    if (!(weights[m] >= 0.0)) throw ContractError("kernel weights must be non-negative");
    total += weights[m];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ContractError("kernel weights sum to " + std::to_string(total) + ", not 1");
  }
}

KernelSpec KernelSpec::uniform(std::vector<double> bandwidths) {
  KernelSpec spec;
  const double w = 1.0 / static_cast<double>(bandwidths.size());
  spec.weights.assign(bandwidths.size(), w);
  spec.bandwidths = std::move(bandwidths);
  return spec;
}

KernelSpec KernelSpec::median_heuristic(const Dense& joint,
                                        std::span<const double> multipliers) {
  double median = 0.0;
  if (joint.rows() >= 2) {
    std::vector<double> d = pairwise_distances(joint);
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    median = *mid;
    if (d.size() % 2 == 0) {
      const double below = *std::max_element(d.begin(), mid);
      median = 0.5 * (median + below);
    }
  }
  if (!(median > 0.0)) {
    warn("median pairwise distance is 0; using bandwidth scale 1");
    median = 1.0;
  }
  std::vector<double> bw;
  bw.reserve(multipliers.size());
  for (double m : multipliers) bw.push_back(median * m);
  return uniform(std::move(bw));
}

namespace {

// Σ_m β_m exp(−D / (2σ_m²)), averaged over all entries of D.
Tensor mean_kernel(const Tensor& sqdist, const KernelSpec& spec) {
  Tensor acc;
  for (std::size_t m = 0; m < spec.size(); ++m) {
    const double s = spec.bandwidths[m];
    Tensor k = affine(exp(affine(sqdist, -1.0 / (2.0 * s * s))), spec.weights[m]);
    acc = acc.valid() ? add(acc, k) : k;
  }
  return mean(acc);
}

}  // namespace

Tensor mmd_loss(const Tensor& source, const Tensor& target, const KernelSpec& spec) {
  spec.validate();
  if (source.value().rows() == 0 || target.value().rows() == 0) {
    throw ContractError("mmd_loss needs at least one row in each set");
  }
  const Tensor kss = mean_kernel(sq_dist(source, source), spec);
  const Tensor ktt = mean_kernel(sq_dist(target, target), spec);
  const Tensor kst = mean_kernel(sq_dist(source, target), spec);
  return sub(add(kss, ktt), affine(kst, 2.0));
}

PairLoss feature_similarity_loss(const Tensor& features, std::span<const int> labels,
                                 double margin) {
  const Dense& f = features.value();
  const std::size_t n = f.rows();
  if (labels.size() != n) {
    throw ShapeError("feature_similarity_loss: " + std::to_string(labels.size()) +
                     " labels for " + shape_string(f.shape));
  }
  Dense same({n, n});
  Dense diff({n, n});
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0) continue;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (labels[j] < 0) continue;
      (labels[i] == labels[j] ? same : diff)(i, j) = 1.0;
      ++pairs;
    }
  }
  Tape& tape = features.tape();
  if (pairs == 0) return {tape.constant(Dense::scalar(0.0)), 0};

  const Tensor d2 = sq_dist(features, features);
  const Tensor attract = mul(tape.constant(std::move(same)), d2);
  const Tensor repel = mul(tape.constant(std::move(diff)), relu(affine(d2, -1.0, margin)));
  const Tensor total = add(sum(attract), sum(repel));
  return {affine(total, 1.0 / static_cast<double>(pairs)), pairs};
}

LabelledLoss cross_entropy_loss(const Tensor& logits, std::span<const int> labels) {
  const std::size_t labelled = static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](int l) { return l >= 0; }));
  if (labelled == 0) {
    warn("cross-entropy: batch has no labelled nodes; loss term is 0");
    if (labels.size() != logits.value().rows()) {
      throw ShapeError("cross_entropy_loss: label count does not match logits");
    }
    return {logits.tape().constant(Dense::scalar(0.0)), 0};
  }
  return {cross_entropy(logits, labels), labelled};
}

TotalLoss total_loss(const LossTerms& terms, const LossWeights& weights) {
  auto weighted = [](const Tensor& t, double w) { return w == 1.0 ? t : affine(t, w); };
  const Tensor mmd = weighted(terms.mmd, weights.mmd);
  const Tensor g = weighted(terms.feature.value, weights.feature);
  const Tensor ce = weighted(terms.ce.value, weights.ce);
  const Tensor total = add(add(mmd, g), ce);

  TotalLoss out{total, {}};
  out.breakdown.l_mmd = mmd.item();
  out.breakdown.l_g = g.item();
  out.breakdown.l_ce = ce.item();
  out.breakdown.l_total = total.item();
  out.breakdown.pairs = terms.feature.pairs;
  out.breakdown.labelled = terms.ce.labelled;
  return out;
}

}  // namespace hda
