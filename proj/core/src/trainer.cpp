#include "hda/trainer.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "hda/errors.hpp"
#include "hda/ops.hpp"
#include "hda/sampler.hpp"

namespace hda {

ModelConfig TrainConfig::model_config(const Shape& input_shape, int classes) const {
  ModelConfig c;
  c.input_shape = input_shape;
  c.backbone_hidden = backbone_hidden;
  c.conv_channels = conv_channels;
  c.phi_dim = phi_dim;
  c.hidden = hidden;
  c.classes = classes;
  return c;
}

AdamConfig TrainConfig::adam_config() const {
  AdamConfig a;
  a.learning_rate = learning_rate;
  a.weight_decay = weight_decay;
  return a;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

enum Stream : std::uint64_t { kInit = 0, kSampler = 1, kAugment = 2, kMeasure = 3 };

std::string describe_batch(const Batch& batch, const LossBreakdown& loss, int epoch,
                           std::size_t step) {
  std::ostringstream os;
  os << "epoch=" << epoch << " step=" << step << " l_mmd=" << loss.l_mmd
     << " l_g=" << loss.l_g << " l_ce=" << loss.l_ce << " l_total=" << loss.l_total << '\n';
  os << "members (domain,id,label):";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    os << ' ' << domain_name(batch.members[i].domain) << ',' << batch.members[i].id << ','
       << batch.labels[i];
  }
  os << '\n';
  return os.str();
}

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.l_mmd) && std::isfinite(l.l_g) && std::isfinite(l.l_ce) &&
         std::isfinite(l.l_total);
}

}  // namespace

BatchGraph training_graph(const TrainConfig& config, const Dense& phi) {
  Dense feat = phi;
  if (config.graph_on_relu) {
    for (double& v : feat.data) v = v > 0.0 ? v : 0.0;
  }
  const double t = config.threshold_mode == ThresholdMode::Fixed
                       ? config.threshold
                       : percentile_threshold(feat, config.threshold_percentile);
  if (!(t > 0.0)) return BatchGraph::empty(feat.rows());
  return build_graph(feat, t);
}

EdgeStats measure_edges(const ModelParams& params, const Dataset& source, const Dataset& target,
                        std::span<const int> target_labels, const TrainConfig& config) {
  if (target_labels.size() != target.size()) {
    throw ShapeError("edge labels do not cover the target set");
  }
  BatchSampler sampler(source, target, config.batch_size, derive_seed(config.seed, kMeasure));
  sampler.start_epoch();
  EdgeStats total;
  for (std::size_t s = 0; s < sampler.batches_per_epoch(); ++s) {
    Batch batch = sampler.next();
    for (std::size_t i = batch.n_source; i < batch.size(); ++i) {
      batch.labels[i] = target_labels[batch.members[i].index];
    }
    const Dense phi = extract_features(params, batch.features, config.precision);
    total += edge_stats(training_graph(config, phi), batch.labels);
  }
  return total;
}

TrainResult train(const TrainConfig& config, const Dataset& source, const Dataset& target,
                  const TrainHooks& hooks, const Diagnostics& diagnostics) {
  if (source.domain() != Domain::Source || target.domain() != Domain::Target) {
    throw ContractError("train expects a source dataset and a target dataset");
  }
  if (source.num_classes() != target.num_classes()) {
    throw ContractError("source and target disagree on the class count");
  }
  if (config.epochs < 0) throw ContractError("epoch count must be non-negative");
  if (config.use_gnn && config.threshold_mode == ThresholdMode::Fixed &&
      !(config.threshold > 0.0)) {
    throw ContractError("graph threshold must be positive");
  }
  if (diagnostics.target_truth && diagnostics.target_truth->size() != target.size()) {
    throw ShapeError("diagnostic labels do not cover the target set");
  }

  const int classes = source.num_classes();
  TrainResult result;
  result.params = ModelParams::init(config.model_config(source.feature_shape(), classes),
                                    derive_seed(config.seed, kInit));
  ModelParams& params = result.params;
  std::vector<Parameter*> plist = params.parameters();
  AdamState adam = AdamState::for_parameters(plist);
  const AdamConfig adam_cfg = config.adam_config();

  BatchSampler sampler(source, target, config.batch_size, derive_seed(config.seed, kSampler));
  std::mt19937_64 aug_rng(derive_seed(config.seed, kAugment));

  PseudoOptions pseudo_opts;
  pseudo_opts.epsilon = config.epsilon;
  pseudo_opts.sticky = config.sticky_pseudo;
  pseudo_opts.precision = config.precision;
  result.pseudo = PseudoState::unlabelled(target.size(), config.epsilon);
  PseudoState& pseudo = result.pseudo;

  auto refresh_pseudo = [&](int epoch) {
    if (!config.pseudo_labels || epoch <= config.warmup_epochs) return;
    PseudoState next = assign_pseudo_labels(target, params, epoch, pseudo_opts, &pseudo);
    pseudo = std::move(next);
  };

  if (hooks.on_init) hooks.on_init(params);

  std::size_t global_step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.pseudo_refresh == PseudoRefresh::Epoch) refresh_pseudo(epoch);
    sampler.start_epoch();

    EpochMetrics em;
    em.epoch = epoch;
    const std::size_t steps = sampler.batches_per_epoch();
    for (std::size_t s = 0; s < steps; ++s) {
      if (config.pseudo_refresh == PseudoRefresh::Batch) refresh_pseudo(epoch);
      Batch batch = sampler.next();

      std::size_t batch_pseudo = 0;
      for (std::size_t i = batch.n_source; i < batch.size(); ++i) {
        batch.labels[i] = pseudo.labels[batch.members[i].index];
        if (batch.labels[i] >= 0) ++batch_pseudo;
      }
      if (config.augment && source.is_image()) {
        const std::size_t f = source.feature_size();
        for (std::size_t i = 0; i < batch.size(); ++i) {
          Sample tmp;
          tmp.features = Dense(source.feature_shape(),
                               std::vector<double>(batch.features.data.begin() +
                                                       static_cast<std::ptrdiff_t>(i * f),
                                                   batch.features.data.begin() +
                                                       static_cast<std::ptrdiff_t>((i + 1) * f)));
          const Sample warped = augment(tmp, aug_rng, config.augment_config);
          std::copy(warped.features.data.begin(), warped.features.data.end(),
                    batch.features.data.begin() + static_cast<std::ptrdiff_t>(i * f));
        }
      }

      Tape tape(config.precision);
      const BoundModel model = bind(tape, params);
      const Tensor x = tape.constant(batch.features);
      const Tensor phi = backbone_forward(model, x);

      BatchGraph graph =
          config.use_gnn ? training_graph(config, phi.value()) : BatchGraph::empty(batch.size());
      const Tensor f = gnn_forward(model, phi, graph);
      const Classified out = classify(model, f);

      LossTerms terms;
      if (config.weights.mmd != 0.0) {
        const KernelSpec spec =
            KernelSpec::median_heuristic(phi.value(), config.bandwidth_multipliers);
        terms.mmd = mmd_loss(slice_rows(phi, 0, batch.n_source),
                             slice_rows(phi, batch.n_source, batch.n_target), spec);
      } else {
        terms.mmd = tape.constant(Dense::scalar(0.0));
      }
      if (config.weights.feature != 0.0) {
        const Tensor& feat = config.feature_loss_input == FeatureLossInput::Gnn ? f : phi;
        terms.feature = feature_similarity_loss(feat, batch.labels, config.margin);
      } else {
        terms.feature = {tape.constant(Dense::scalar(0.0)), 0};
      }
      terms.ce = cross_entropy_loss(out.logits, batch.labels);
      const TotalLoss total = total_loss(terms, config.weights);

      ++global_step;
      if (!finite(total.breakdown)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                  std::to_string(global_step),
                              describe_batch(batch, total.breakdown, epoch, global_step));
      }

      params.zero_grad();
      tape.backward(total.value);
      adam_step(plist, adam, adam_cfg);

      // Edge labels: ground truth when available, otherwise training labels.
      std::vector<int> edge_labels = batch.labels;
      if (diagnostics.target_truth) {
        for (std::size_t i = batch.n_source; i < batch.size(); ++i) {
          edge_labels[i] = (*diagnostics.target_truth)[batch.members[i].index];
        }
      }
      const EdgeStats es = edge_stats(graph, edge_labels);

      em.edges += es;
      em.mean_loss.l_mmd += total.breakdown.l_mmd;
      em.mean_loss.l_g += total.breakdown.l_g;
      em.mean_loss.l_ce += total.breakdown.l_ce;
      em.mean_loss.l_total += total.breakdown.l_total;
      em.mean_loss.pairs += total.breakdown.pairs;
      em.mean_loss.labelled += total.breakdown.labelled;
      ++em.steps;

      if (hooks.on_step) {
        StepRecord rec;
        rec.step = global_step;
        rec.epoch = epoch;
        rec.loss = total.breakdown;
        rec.pseudo_count = batch_pseudo;
        rec.graph = std::move(graph);
        rec.edges = es;
        hooks.on_step(rec);
      }
    }

    if (em.steps > 0) {
      const double n = static_cast<double>(em.steps);
      em.mean_loss.l_mmd /= n;
      em.mean_loss.l_g /= n;
      em.mean_loss.l_ce /= n;
      em.mean_loss.l_total /= n;
    }
    em.pseudo_coverage = pseudo_coverage(pseudo);
    em.pseudo_count = pseudo.labelled_count();
    if (diagnostics.target_truth) {
      em.eval = evaluate(params, target, *diagnostics.target_truth, config.positive_class,
                         config.precision);
    }
    result.history.push_back(em);
    if (hooks.on_epoch) hooks.on_epoch(em, params, pseudo);
  }
  return result;
}

}  // namespace hda
