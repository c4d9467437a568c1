#include "hda/pseudo.hpp"

#include <algorithm>
#include <fstream>

#include "hda/csv.hpp"
#include "hda/errors.hpp"

namespace hda {

PseudoState PseudoState::unlabelled(std::size_t n, double epsilon) {
  PseudoState s;
  s.labels.assign(n, -1);
  s.confidence.assign(n, 0.0);
  s.assigned_epoch.assign(n, -1);
  s.epsilon = epsilon;
  return s;
}

std::size_t PseudoState::labelled_count() const {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](int l) { return l >= 0; }));
}

PseudoState assign_from_probs(const Dense& probs, int epoch, const PseudoOptions& options,
                              const PseudoState* previous) {
  const std::size_t n = probs.rows();
  if (previous != nullptr && previous->labels.size() != n) {
    throw ShapeError("previous pseudo state covers " + std::to_string(previous->labels.size()) +
                     " samples, predictions cover " + std::to_string(n));
  }
  PseudoState s = PseudoState::unlabelled(n, options.epsilon);
  s.epoch = epoch;
  const std::vector<int> top = predict(probs);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = probs(i, static_cast<std::size_t>(top[i]));
    s.confidence[i] = p;
    if (p > options.epsilon) {
      s.labels[i] = top[i];
      const bool unchanged = previous != nullptr && previous->labels[i] == top[i];
      s.assigned_epoch[i] = unchanged ? previous->assigned_epoch[i] : epoch;
    } else if (options.sticky && previous != nullptr && previous->labels[i] >= 0) {
      s.labels[i] = previous->labels[i];
      s.assigned_epoch[i] = previous->assigned_epoch[i];
    }
  }
  return s;
}

PseudoState assign_pseudo_labels(const Dataset& target, const ModelParams& params, int epoch,
                                 const PseudoOptions& options, const PseudoState* previous) {
  const double m = static_cast<double>(params.config().classes);
  if (!(options.epsilon > 1.0 / m && options.epsilon < 1.0)) {
    throw ContractError("pseudo-label threshold must lie in (1/m, 1), got " +
                        std::to_string(options.epsilon));
  }
  if (target.empty()) return PseudoState::unlabelled(0, options.epsilon);
  return assign_from_probs(infer(params, target.feature_matrix(), options.precision), epoch,
                           options, previous);
}

double pseudo_coverage(const PseudoState& state) {
  if (state.labels.empty()) return 0.0;
  return static_cast<double>(state.labelled_count()) /
         static_cast<double>(state.labels.size());
}

void append_pseudo_snapshot(const std::filesystem::path& path, const Dataset& target,
                            const PseudoState& state) {
  CsvWriter csv(path, {"id", "label", "confidence", "epoch"}, CsvWriter::Mode::Append);
  for (std::size_t i = 0; i < state.labels.size(); ++i) {
    csv.row(target[i].id, state.labels[i], state.confidence[i], state.epoch);
  }
}

}  // namespace hda
