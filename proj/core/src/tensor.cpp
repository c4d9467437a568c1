#include "hda/tensor.hpp"

#include <functional>
#include <numeric>
#include <sstream>

#include "hda/errors.hpp"

namespace hda {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Dense::Dense(Shape s, double fill) : shape(std::move(s)), data(shape_size(shape), fill) {}

Dense::Dense(Shape s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_size(shape)) {
    throw ShapeError("value count " + std::to_string(data.size()) +
                     " does not match shape " + shape_string(shape));
  }
}

Dense Dense::matrix(std::size_t rows, std::size_t cols,
                    std::initializer_list<double> values) {
  return Dense({rows, cols}, std::vector<double>(values));
}

Dense Dense::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.front().size() : 0;
  Dense out({r, c});
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) throw ShapeError("ragged rows in Dense::from_rows");
    std::copy(rows[i].begin(), rows[i].end(), out.data.begin() + i * c);
  }
  return out;
}

std::size_t Dense::rows() const {
  if (rank() != 2) throw ShapeError("rows() needs a matrix, got " + shape_string(shape));
  return shape[0];
}

std::size_t Dense::cols() const {
  if (rank() != 2) throw ShapeError("cols() needs a matrix, got " + shape_string(shape));
  return shape[1];
}

Parameter::Parameter(std::string n, Dense v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape) {}

void Parameter::zero_grad() {
  if (grad.shape != value.shape) {
    grad = Dense(value.shape);
  } else {
    std::fill(grad.data.begin(), grad.data.end(), 0.0);
  }
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Variable: return "variable";
    case OpKind::Parameter: return "parameter";
    case OpKind::Matmul: return "matmul";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Mul: return "mul";
    case OpKind::Affine: return "affine";
    case OpKind::AddRowBias: return "add_row_bias";
    case OpKind::Relu: return "relu";
    case OpKind::Exp: return "exp";
    case OpKind::Sum: return "sum";
    case OpKind::Mean: return "mean";
    case OpKind::SqDist: return "sq_dist";
    case OpKind::Softmax: return "softmax";
    case OpKind::CrossEntropy: return "cross_entropy";
    case OpKind::SliceRows: return "slice_rows";
    case OpKind::NeighborSum: return "neighbor_sum";
    case OpKind::Conv2d: return "conv2d";
    case OpKind::Custom: return "custom";
  }
  return "?";
}

const Dense& Tensor::value() const { return tape_->value(id_); }

bool Tensor::requires_grad() const { return tape_->node(id_).requires_grad; }

Dense Tensor::grad() const {
  const Dense& g = tape_->grad(id_);
  if (g.data.empty() && !value().data.empty()) return Dense(value().shape);
  return g;
}

double Tensor::item() const {
  const Dense& v = value();
  if (v.size() != 1) {
    throw ContractError("item() on non-scalar tensor of shape " + shape_string(v.shape));
  }
  return v.data[0];
}

void Tape::round_to_precision(Dense& d) const {
  if (precision_ == Precision::f32) {
    for (double& x : d.data) x = static_cast<double>(static_cast<float>(x));
  }
}

Tensor Tape::constant(Dense value) {
  round_to_precision(value);
  Node n;
  n.kind = OpKind::Constant;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::variable(Dense value) {
  round_to_precision(value);
  Node n;
  n.kind = OpKind::Variable;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::parameter(Parameter& p) {
  Node n;
  n.kind = OpKind::Parameter;
  n.value = p.value;
  round_to_precision(n.value);
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(OpKind kind, std::vector<Tensor> inputs, Dense value,
                    BackwardFn backward) {
  if (consumed_) throw ContractError("cannot record onto a tape that was run backward");
  Node n;
  n.kind = kind;
  n.inputs.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    if (&t.tape() != this) throw ContractError("op mixes tensors from different tapes");
    n.inputs.push_back(t.id());
    n.requires_grad = n.requires_grad || t.requires_grad();
  }
  round_to_precision(value);
  n.value = std::move(value);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

void Tape::accumulate(NodeId id, const Dense& g) {
  Node& n = nodes_.at(id);
  if (!n.requires_grad) return;
  if (g.data.size() != n.value.data.size()) {
    throw ShapeError(std::string("gradient shape ") + shape_string(g.shape) +
                     " does not match node shape " + shape_string(n.value.shape) +
                     " (" + op_name(n.kind) + ")");
  }
  if (n.grad.data.empty()) {
    n.grad = Dense(n.value.shape);
  }
  for (std::size_t i = 0; i < g.data.size(); ++i) n.grad.data[i] += g.data[i];
  round_to_precision(n.grad);
}

void Tape::backward(const Tensor& loss) {
  if (&loss.tape() != this) throw ContractError("loss tensor belongs to another tape");
  if (consumed_) throw ContractError("tape was already run backward");
  if (loss.value().size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        shape_string(loss.value().shape));
  }
  consumed_ = true;
  accumulate(loss.id(), Dense(loss.value().shape, 1.0));

  for (NodeId id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.data.empty()) continue;
    if (n.backward) {
      n.backward(*this, id);
      n.backward = nullptr;
    }
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.shape != p.value.shape) p.grad = Dense(p.value.shape);
      for (std::size_t i = 0; i < n.grad.data.size(); ++i) p.grad.data[i] += n.grad.data[i];
    }
  }
  for (Node& n : nodes_) n.backward = nullptr;
}

}  // namespace hda
