#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hda/tensor.hpp"

namespace hda {

/// Convex mixture of Gaussian kernels,
/// k(a, b) = Σ_m β_m exp(−‖a − b‖² / (2σ_m²)).
struct KernelSpec {
  std::vector<double> bandwidths;  // σ_m > 0
  std::vector<double> weights;     // β_m ≥ 0, Σ β_m = 1

  std::size_t size() const { return bandwidths.size(); }

  /// Throws ContractError unless the mixture is a valid convex combination.
  void validate() const;

  /// Equal weights over the given bandwidths.
  static KernelSpec uniform(std::vector<double> bandwidths);

  /// Bandwidths = (median pairwise distance of `joint` rows) × each
  /// multiplier, equal weights. Falls back to a median of 1 with a warning
  /// when all rows coincide.
  static KernelSpec median_heuristic(const Dense& joint, std::span<const double> multipliers);
};

inline const std::vector<double> kDefaultBandwidthMultipliers{0.25, 0.5, 1.0, 2.0, 4.0};

/// Biased (V-statistic) squared MMD between the rows of `source` and
/// `target`, including the diagonal terms. Non-negative up to rounding.
Tensor mmd_loss(const Tensor& source, const Tensor& target, const KernelSpec& spec);

struct PairLoss {
  Tensor value;
  std::size_t pairs = 0;
};

/// Contrastive margin loss over pairs j > i with both labels ≠ −1: same-label
/// pairs contribute their squared distance, different-label pairs contribute
/// max(0, margin − squared distance). Returns the mean over contributing
/// pairs, or a constant 0 when there are none.
PairLoss feature_similarity_loss(const Tensor& features, std::span<const int> labels,
                                 double margin);

struct LabelledLoss {
  Tensor value;
  std::size_t labelled = 0;
};

/// Mean −log softmax(logits)[label] over rows with label ≥ 0, computed
/// through log-sum-exp. With no labelled rows it warns and returns 0.
LabelledLoss cross_entropy_loss(const Tensor& logits, std::span<const int> labels);

struct LossWeights {
  double mmd = 1.0;
  double feature = 1.0;
  double ce = 1.0;
};

struct LossBreakdown {
  double l_mmd = 0.0;
  double l_g = 0.0;
  double l_ce = 0.0;
  double l_total = 0.0;
  std::size_t pairs = 0;     // contributing pairs of the feature loss
  std::size_t labelled = 0;  // labelled nodes of the cross-entropy
};

struct LossTerms {
  Tensor mmd;
  PairLoss feature;
  LabelledLoss ce;
};

struct TotalLoss {
  Tensor value;
  LossBreakdown breakdown;
};

/// L_total = L_mmd + L_g + L_ce. Weights other than 1 exist for ablations;
/// the breakdown records the weighted terms so that they always add up.
TotalLoss total_loss(const LossTerms& terms, const LossWeights& weights = {});

}  // namespace hda
