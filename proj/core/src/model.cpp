#include "hda/model.hpp"

#include <cmath>
#include <random>

#include "hda/errors.hpp"

namespace hda {
namespace {

Dense he_normal(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Dense d(std::move(shape));
  for (double& x : d.data) x = normal(rng);
  return d;
}

const ConvSpec kConvSpecs[2] = {{1, 1}, {2, 1}};

ImageGeometry input_geometry(const ModelConfig& c) {
  return {c.input_shape[0], c.input_shape[1], c.input_shape[2]};
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  if (config.input_shape.size() != 1 && config.input_shape.size() != 3) {
    throw ContractError("model input must be a vector {D} or an image {C, H, W}, got " +
                        shape_string(config.input_shape));
  }
  if (config.classes < 1 || config.phi_dim == 0 || config.hidden == 0) {
    throw ContractError("model sizes must be positive");
  }
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.config_ = config;

  auto linear = [&](const std::string& name, std::size_t in, std::size_t out) {
    return LinearLayer{Parameter(name + ".weight", he_normal({in, out}, in, rng)),
                       Parameter(name + ".bias", Dense({out}))};
  };

  if (config.is_image()) {
    if (config.conv_channels.size() != 2) {
      throw ContractError("image backbone needs exactly two conv channel counts");
    }
    ImageGeometry g = input_geometry(config);
    for (std::size_t l = 0; l < 2; ++l) {
      const std::size_t cin = g.channels;
      const std::size_t cout = config.conv_channels[l];
      const Shape ws{cout, cin, 3, 3};
      const std::string name = "backbone." + std::to_string(l);
      p.backbone.push_back({Parameter(name + ".weight", he_normal(ws, cin * 9, rng)),
                            Parameter(name + ".bias", Dense({cout}))});
      g = conv_output_geometry(g, ws, kConvSpecs[l]);
    }
    p.backbone.push_back(linear("backbone.2", g.size(), config.phi_dim));
  } else {
    std::size_t in = config.input_size();
    std::size_t l = 0;
    for (std::size_t h : config.backbone_hidden) {
      p.backbone.push_back(linear("backbone." + std::to_string(l++), in, h));
      in = h;
    }
    p.backbone.push_back(linear("backbone." + std::to_string(l), in, config.phi_dim));
  }
  p.w = Parameter("fc1.weight", he_normal({config.phi_dim, config.hidden}, config.phi_dim, rng));
  p.theta1 = Parameter("gnn.theta1", he_normal({config.hidden, config.hidden}, config.hidden, rng));
  p.theta2 = Parameter("gnn.theta2", he_normal({config.hidden, config.hidden}, config.hidden, rng));
  const auto m = static_cast<std::size_t>(config.classes);
  p.fc2_weight = Parameter("fc2.weight", he_normal({config.hidden, m}, config.hidden, rng));
  p.fc2_bias = Parameter("fc2.bias", Dense({m}));
  p.check_shapes();
  return p;
}

void ModelParams::check_shapes() const {
  const std::size_t h = w.value.shape.at(1);
  if (theta1.value.shape != Shape{h, h} || theta2.value.shape != Shape{h, h} ||
      fc2_weight.value.shape.at(0) != h) {
    throw ShapeError("inconsistent widths: fc1 " + shape_string(w.value.shape) + ", theta1 " +
                     shape_string(theta1.value.shape) + ", theta2 " +
                     shape_string(theta2.value.shape) + ", fc2 " +
                     shape_string(fc2_weight.value.shape));
  }
  if (fc2_bias.value.size() != fc2_weight.value.shape.at(1)) {
    throw ShapeError("fc2 bias does not match class count");
  }
  if (backbone.empty() || backbone.back().weight.value.shape.at(1) != w.value.shape.at(0)) {
    throw ShapeError("backbone output width does not match fc1 input");
  }
}

std::vector<Parameter*> ModelParams::parameters() {
  std::vector<Parameter*> out;
  for (LinearLayer& l : backbone) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  for (Parameter* p : {&w, &theta1, &theta2, &fc2_weight, &fc2_bias}) out.push_back(p);
  return out;
}

std::vector<const Parameter*> ModelParams::parameters() const {
  std::vector<const Parameter*> out;
  for (Parameter* p : const_cast<ModelParams*>(this)->parameters()) out.push_back(p);
  return out;
}

void ModelParams::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

ModelParams ModelParams::from_tensors(
    const std::vector<std::pair<std::string, Dense>>& tensors) {
  auto find = [&](const std::string& name) -> const Dense& {
    for (const auto& [n, d] : tensors) {
      if (n == name) return d;
    }
    throw ContractError("checkpoint lacks tensor '" + name + "'");
  };
  ModelParams p;
  ModelConfig& c = p.config_;
  c.input_shape.clear();
  for (double v : find("config.input_shape").data) c.input_shape.push_back(static_cast<std::size_t>(v));

  std::size_t layers = 0;
  while (true) {
    const std::string name = "backbone." + std::to_string(layers);
    bool present = false;
    for (const auto& [n, d] : tensors) present = present || n == name + ".weight";
    if (!present) break;
    p.backbone.push_back({Parameter(name + ".weight", find(name + ".weight")),
                          Parameter(name + ".bias", find(name + ".bias"))});
    ++layers;
  }
  if (layers == 0) throw ContractError("checkpoint has no backbone layers");
  c.backbone_hidden.clear();
  c.conv_channels.clear();
  if (c.is_image()) {
    if (layers != 3) throw ContractError("image backbone checkpoint must have 3 layers");
    c.conv_channels = {p.backbone[0].weight.value.shape.at(0),
                       p.backbone[1].weight.value.shape.at(0)};
  } else {
    for (std::size_t l = 0; l + 1 < layers; ++l) {
      c.backbone_hidden.push_back(p.backbone[l].weight.value.shape.at(1));
    }
  }
  p.w = Parameter("fc1.weight", find("fc1.weight"));
  p.theta1 = Parameter("gnn.theta1", find("gnn.theta1"));
  p.theta2 = Parameter("gnn.theta2", find("gnn.theta2"));
  p.fc2_weight = Parameter("fc2.weight", find("fc2.weight"));
  p.fc2_bias = Parameter("fc2.bias", find("fc2.bias"));
  c.phi_dim = p.w.value.shape.at(0);
  c.hidden = p.w.value.shape.at(1);
  c.classes = static_cast<int>(p.fc2_weight.value.shape.at(1));

  // A fresh init with the recovered config must have identical shapes.
  const ModelParams reference = init(c, 0);
  const auto want = reference.parameters();
  const auto got = p.parameters();
  if (want.size() != got.size()) throw ShapeError("checkpoint layer count mismatch");
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i]->value.shape != got[i]->value.shape) {
      throw ShapeError("checkpoint tensor " + got[i]->name + " has shape " +
                       shape_string(got[i]->value.shape) + ", architecture expects " +
                       shape_string(want[i]->value.shape));
    }
  }
  p.check_shapes();
  return p;
}

BoundModel bind(Tape& tape, ModelParams& params) {
  BoundModel b;
  b.config = &params.config();
  for (LinearLayer& l : params.backbone) {
    b.backbone.emplace_back(tape.parameter(l.weight), tape.parameter(l.bias));
  }
  b.w = tape.parameter(params.w);
  b.theta1 = tape.parameter(params.theta1);
  b.theta2 = tape.parameter(params.theta2);
  b.fc2_weight = tape.parameter(params.fc2_weight);
  b.fc2_bias = tape.parameter(params.fc2_bias);
  return b;
}

BoundModel bind_frozen(Tape& tape, const ModelParams& params) {
  BoundModel b;
  b.config = &params.config();
  for (const LinearLayer& l : params.backbone) {
    b.backbone.emplace_back(tape.constant(l.weight.value), tape.constant(l.bias.value));
  }
  b.w = tape.constant(params.w.value);
  b.theta1 = tape.constant(params.theta1.value);
  b.theta2 = tape.constant(params.theta2.value);
  b.fc2_weight = tape.constant(params.fc2_weight.value);
  b.fc2_bias = tape.constant(params.fc2_bias.value);
  return b;
}

Tensor backbone_forward(const BoundModel& model, const Tensor& x) {
  const ModelConfig& c = *model.config;
  const Dense& xv = x.value();
  if (xv.rank() != 2 || xv.cols() != c.input_size()) {
    throw ShapeError("backbone expects rows of " + std::to_string(c.input_size()) +
                     " features (" + shape_string(c.input_shape) + "), got " +
                     shape_string(xv.shape));
  }
  Tensor h = x;
  std::size_t first_linear = 0;
  if (c.is_image()) {
    ImageGeometry g = input_geometry(c);
    for (std::size_t l = 0; l < 2; ++l) {
      const auto& [wt, bt] = model.backbone[l];
      h = relu(conv2d(h, wt, bt, g, kConvSpecs[l]));
      g = conv_output_geometry(g, wt.shape(), kConvSpecs[l]);
    }
    first_linear = 2;
  }
  for (std::size_t l = first_linear; l < model.backbone.size(); ++l) {
    const auto& [wt, bt] = model.backbone[l];
    h = add_row_bias(matmul(h, wt), bt);
    if (l + 1 < model.backbone.size()) h = relu(h);
  }
  return h;
}

Tensor gnn_forward(const BoundModel& model, const Tensor& phi, const BatchGraph& graph) {
  const std::size_t batch = phi.value().rows();
  if (graph.nodes != batch) {
    throw ContractError("graph has " + std::to_string(graph.nodes) + " nodes for a batch of " +
                        std::to_string(batch));
  }
  const Tensor h = matmul(relu(phi), model.w);
  const Tensor self = matmul(h, model.theta1);
  if (graph.edges.empty()) return self;
  return add(self, matmul(neighbor_sum(h, graph.neighbors), model.theta2));
}

Classified classify(const BoundModel& model, const Tensor& f) {
  const Tensor logits = add_row_bias(matmul(f, model.fc2_weight), model.fc2_bias);
  return {logits, softmax_rows(logits)};
}

ForwardOutput forward(const BoundModel& model, const Tensor& x, const BatchGraph& graph) {
  ForwardOutput out;
  out.phi = backbone_forward(model, x);
  out.f = gnn_forward(model, out.phi, graph);
  auto [logits, probs] = classify(model, out.f);
  out.logits = logits;
  out.probs = probs;
  return out;
}

Dense infer(const ModelParams& params, const Dense& x, Precision precision) {
  Tape tape(precision);
  const BoundModel m = bind_frozen(tape, params);
  return forward(m, tape.constant(x), BatchGraph::empty(x.rows())).probs.value();
}

Dense extract_features(const ModelParams& params, const Dense& x, Precision precision) {
  Tape tape(precision);
  const BoundModel m = bind_frozen(tape, params);
  return backbone_forward(m, tape.constant(x)).value();
}

std::vector<int> predict(const Dense& probs) {
  std::vector<int> out(probs.rows());
  const std::size_t m = probs.cols();
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m; ++j) {
      if (probs(i, j) > probs(i, best)) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace hda
