#pragma once

#include <filesystem>
#include <vector>

#include "hda/dataset.hpp"
#include "hda/model.hpp"

namespace hda {

/// Current pseudo labelling of the target set. `labels[i]` is −1 when
/// sample i has no confident prediction.
struct PseudoState {
  std::vector<int> labels;
  std::vector<double> confidence;  // top probability at the last assignment
  std::vector<int> assigned_epoch; // epoch at which labels[i] was set, −1 if never
  double epsilon = 0.97;
  int epoch = 0;

  static PseudoState unlabelled(std::size_t n, double epsilon);
  std::size_t labelled_count() const;
};

struct PseudoOptions {
  double epsilon = 0.97;
  /// Keep a previously assigned label when the sample is no longer confident.
  bool sticky = false;
  Precision precision = Precision::f64;
};

/// Labels row i with argmax_j probs(i, j) iff that probability is strictly
/// greater than ε; otherwise −1. With `previous` and sticky assignment,
/// labels already held are kept when the new prediction is not confident.
PseudoState assign_from_probs(const Dense& probs, int epoch, const PseudoOptions& options,
                              const PseudoState* previous = nullptr);

/// Runs the inference path over every target sample and applies
/// assign_from_probs. Requires ε ∈ (1/m, 1).
PseudoState assign_pseudo_labels(const Dataset& target, const ModelParams& params, int epoch,
                                 const PseudoOptions& options,
                                 const PseudoState* previous = nullptr);

/// Fraction of target samples holding a pseudo label.
double pseudo_coverage(const PseudoState& state);

/// Appends "id,label,confidence,epoch" rows (header written for a new file).
void append_pseudo_snapshot(const std::filesystem::path& path, const Dataset& target,
                            const PseudoState& state);

}  // namespace hda
