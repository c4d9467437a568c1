#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hda/batch_graph.hpp"
#include "hda/ops.hpp"
#include "hda/tensor.hpp"

namespace hda {

/// Architecture. Flat inputs ({D}) get an MLP backbone D → hidden… → φ with
/// ReLU between layers; an empty `backbone_hidden` makes it one linear layer.
/// Image inputs ({C, H, W}) get conv3×3 → ReLU → conv3×3/2 → ReLU → linear.
/// The φ output itself is pre-activation.
struct ModelConfig {
  Shape input_shape{2};
  std::vector<std::size_t> backbone_hidden{64};
  std::vector<std::size_t> conv_channels{8, 16};
  std::size_t phi_dim = 64;
  std::size_t hidden = 64;  // width of the FC1 / GNN representation
  int classes = 2;

  bool is_image() const { return input_shape.size() == 3; }
  std::size_t input_size() const { return shape_size(input_shape); }
};

struct LinearLayer {
  Parameter weight;  // [in × out]
  Parameter bias;    // [out]
};

/// All trainable tensors of the network.
///
///   φ     = backbone(x)
///   H     = ReLU(φ) · w                    (FC1, no bias)
///   f_i   = H_i θ1 + Σ_{j ∈ N(i)} H_j θ2   (graph layer, no bias)
///   ŷ     = softmax(f · fc2 + b)
class ModelParams {
 public:
  ModelParams() = default;

  /// Fan-in scaled normal init (std = √(2/fan_in)); biases start at zero.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  /// Rebuilds a model from named tensors as written by save_checkpoint.
  static ModelParams from_tensors(const std::vector<std::pair<std::string, Dense>>& tensors);

  const ModelConfig& config() const { return config_; }

  /// Every parameter exactly once, in a fixed order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  void zero_grad();

  std::vector<LinearLayer> backbone;  // conv layers hold [Cout, Cin, K, K] weights
  Parameter w;
  Parameter theta1;
  Parameter theta2;
  Parameter fc2_weight;
  Parameter fc2_bias;

 private:
  void check_shapes() const;
  ModelConfig config_;
};

/// Parameters bound to one tape, either as trainable leaves or as constants.
struct BoundModel {
  const ModelConfig* config = nullptr;
  std::vector<std::pair<Tensor, Tensor>> backbone;
  Tensor w;
  Tensor theta1;
  Tensor theta2;
  Tensor fc2_weight;
  Tensor fc2_bias;
};

BoundModel bind(Tape& tape, ModelParams& params);
BoundModel bind_frozen(Tape& tape, const ModelParams& params);

struct ForwardOutput {
  Tensor phi;     // [B × φ], pre-ReLU backbone features
  Tensor f;       // [B × h]
  Tensor logits;  // [B × m]
  Tensor probs;   // [B × m]
};

struct Classified {
  Tensor logits;
  Tensor probs;
};

Tensor backbone_forward(const BoundModel& model, const Tensor& x);

/// Graph layer. Rows of `phi` are the graph's nodes; with no edges only the
/// θ1 branch is evaluated.
Tensor gnn_forward(const BoundModel& model, const Tensor& phi, const BatchGraph& graph);

Classified classify(const BoundModel& model, const Tensor& f);

ForwardOutput forward(const BoundModel& model, const Tensor& x, const BatchGraph& graph);

/// Inference path: the training forward with an empty graph, so each row's
/// prediction depends on that row alone. Returns [N × m] probabilities.
Dense infer(const ModelParams& params, const Dense& x, Precision precision = Precision::f64);

/// Backbone features only, [N × φ].
Dense extract_features(const ModelParams& params, const Dense& x,
                       Precision precision = Precision::f64);

/// Row-wise argmax; ties go to the lowest class index.
std::vector<int> predict(const Dense& probs);

// Checkpoint file: "HDAP", u32 version, u32 tensor count, then per tensor
// u32 name length, name bytes, u32 rank, rank × u32 dims; then every tensor's
// values as little-endian f64 in table order. The table includes a
// "config.input_shape" entry so the architecture is recoverable.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace hda
