#pragma once

#include <span>
#include <vector>

#include "hda/dataset.hpp"
#include "hda/model.hpp"

namespace hda {

struct EvalMetrics {
  double precision = 0.0;  // TP / (TP + FP) for the positive class
  double accuracy = 0.0;
  bool precision_undefined = false;  // TP + FP == 0; precision reported as 0
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
  std::vector<std::size_t> predicted_counts;        // per class
};

EvalMetrics evaluate_predictions(std::span<const int> predicted, std::span<const int> truth,
                                 int classes, int positive_class);

/// Runs the inference path on every sample of `data` and scores it against
/// `truth`.
EvalMetrics evaluate(const ModelParams& params, const Dataset& data, const EvalLabels& truth,
                     int positive_class, Precision precision = Precision::f64);

}  // namespace hda
