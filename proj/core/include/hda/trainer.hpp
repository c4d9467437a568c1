#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hda/adam.hpp"
#include "hda/augment.hpp"
#include "hda/batch_graph.hpp"
#include "hda/dataset.hpp"
#include "hda/losses.hpp"
#include "hda/metrics.hpp"
#include "hda/model.hpp"
#include "hda/pseudo.hpp"

namespace hda {

enum class ThresholdMode { Fixed, Percentile };
enum class PseudoRefresh { Epoch, Batch };
enum class FeatureLossInput { Gnn, Backbone };

/// Every knob of a training run. Defaults:
/// Adam with lr 1e-3 and weight decay 1e-6, batches of 128 source + 128
/// target, T = 150, ε = 0.97, margin 2, 100 epochs.
struct TrainConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-6;
  std::size_t batch_size = 256;
  int epochs = 100;

  ThresholdMode threshold_mode = ThresholdMode::Fixed;
  double threshold = 150.0;
  double threshold_percentile = 5.0;
  bool graph_on_relu = false;  // build the graph on ReLU(φ) instead of φ

  double epsilon = 0.97;
  double margin = 2.0;
  std::vector<double> bandwidth_multipliers = kDefaultBandwidthMultipliers;

  std::vector<std::size_t> backbone_hidden{64};
  std::vector<std::size_t> conv_channels{8, 16};
  std::size_t phi_dim = 64;
  std::size_t hidden = 64;

  std::uint64_t seed = 0;
  Precision precision = Precision::f64;

  bool use_gnn = true;
  LossWeights weights;
  FeatureLossInput feature_loss_input = FeatureLossInput::Gnn;

  bool pseudo_labels = true;
  PseudoRefresh pseudo_refresh = PseudoRefresh::Epoch;
  bool sticky_pseudo = false;
  int warmup_epochs = 0;  // pseudo labelling starts after this many epochs

  bool augment = true;  // images only; applied to both domains
  AugmentConfig augment_config;

  int positive_class = 1;

  ModelConfig model_config(const Shape& input_shape, int classes) const;
  AdamConfig adam_config() const;
};

/// Read-only ground truth for diagnostics. Training never consults it: it is
/// used for the per-epoch target evaluation and for labelling graph edges.
struct Diagnostics {
  const EvalLabels* target_truth = nullptr;
};

struct StepRecord {
  std::size_t step = 0;  // 1-based, global
  int epoch = 0;
  LossBreakdown loss;
  std::size_t pseudo_count = 0;  // pseudo-labelled target rows in this batch
  BatchGraph graph;
  EdgeStats edges;
};

struct EpochMetrics {
  int epoch = 0;
  std::optional<EvalMetrics> eval;  // present when ground truth was supplied
  LossBreakdown mean_loss;          // averaged over the epoch's steps
  double pseudo_coverage = 0.0;
  std::size_t pseudo_count = 0;
  EdgeStats edges;  // summed over the epoch's batches
  std::size_t steps = 0;
};

struct TrainHooks {
  std::function<void(const ModelParams&)> on_init;  // before the first step
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochMetrics&, const ModelParams&, const PseudoState&)> on_epoch;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochMetrics> history;
  PseudoState pseudo;
};

/// Derives an independent stream seed from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// The batch graph under the threshold settings of `config`, built on φ or
/// on ReLU(φ). Percentile mode with a zero threshold yields no edges.
BatchGraph training_graph(const TrainConfig& config, const Dense& phi);

/// Runs one epoch of batches through the inference backbone and sums the
/// edge statistics of each batch graph. Target rows take `target_labels`.
EdgeStats measure_edges(const ModelParams& params, const Dataset& source, const Dataset& target,
                        std::span<const int> target_labels, const TrainConfig& config);

/// End-to-end training. Per epoch: refresh pseudo labels, then for each batch
/// run backbone → graph → GNN → classifier, form L_mmd + L_g + L_ce, back-
/// propagate and take one Adam step. Throws DivergenceError on a non-finite
/// loss. Datasets are expected to be normalized already.
TrainResult train(const TrainConfig& config, const Dataset& source, const Dataset& target,
                  const TrainHooks& hooks = {}, const Diagnostics& diagnostics = {});

}  // namespace hda
