#include "hda/metrics.hpp"

#include "hda/errors.hpp"

namespace hda {

EvalMetrics evaluate_predictions(std::span<const int> predicted, std::span<const int> truth,
                                 int classes, int positive_class) {
  if (predicted.size() != truth.size()) {
    throw ShapeError("evaluate: " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  }
  if (positive_class < 0 || positive_class >= classes) {
    throw ContractError("positive class " + std::to_string(positive_class) +
                        " outside [0, " + std::to_string(classes) + ")");
  }
  const auto m = static_cast<std::size_t>(classes);
  EvalMetrics out;
  out.confusion.assign(m, std::vector<std::size_t>(m, 0));
  out.predicted_counts.assign(m, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int p = predicted[i];
    const int t = truth[i];
    if (p < 0 || p >= classes || t < 0 || t >= classes) {
      throw ContractError("evaluate: class index out of range");
    }
    ++out.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    ++out.predicted_counts[static_cast<std::size_t>(p)];
    if (p == t) ++correct;
    const bool pp = p == positive_class;
    const bool tp = t == positive_class;
    if (pp && tp) ++out.tp;
    if (pp && !tp) ++out.fp;
    if (!pp && tp) ++out.fn;
    if (!pp && !tp) ++out.tn;
  }
  out.accuracy = truth.empty() ? 0.0
                               : static_cast<double>(correct) / static_cast<double>(truth.size());
  if (out.tp + out.fp == 0) {
    out.precision = 0.0;
    out.precision_undefined = true;
  } else {
    out.precision = static_cast<double>(out.tp) / static_cast<double>(out.tp + out.fp);
  }
  return out;
}

EvalMetrics evaluate(const ModelParams& params, const Dataset& data, const EvalLabels& truth,
                     int positive_class, Precision precision) {
  if (truth.size() != data.size()) {
    throw ShapeError("eval labels cover " + std::to_string(truth.size()) +
                     " samples, dataset has " + std::to_string(data.size()));
  }
  const std::vector<int> predicted = predict(infer(params, data.feature_matrix(), precision));
  return evaluate_predictions(predicted, truth.labels(), params.config().classes,
                              positive_class);
}

}  // namespace hda
