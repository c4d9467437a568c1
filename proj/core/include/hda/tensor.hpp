#pragma once

// Reverse-mode automatic differentiation over dense row-major arrays.
//
// A Tape records every operation of one forward pass (define-by-run). Values
// live on the tape; Tensor is a cheap handle into it. Long-lived trainable
// state is held in Parameter objects, which are bound into a tape as leaves and
// receive their gradient when the tape is run backward. A tape is meant to be
// scoped to a single forward/backward pass and then dropped.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace hda {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

enum class Precision { f32, f64 };

/// Plain n-dimensional array of doubles, row-major. Rank 0 is a scalar.
struct Dense {
  Shape shape;
  std::vector<double> data;

  Dense() = default;
  explicit Dense(Shape s, double fill = 0.0);
  Dense(Shape s, std::vector<double> values);

  static Dense scalar(double v) { return Dense(Shape{}, std::vector<double>{v}); }
  static Dense matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values);
  static Dense from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols(), cols()};
  }

  bool operator==(const Dense&) const = default;
};

/// Trainable array that outlives any single tape.
struct Parameter {
  std::string name;
  Dense value;
  Dense grad;

  Parameter() = default;
  Parameter(std::string n, Dense v);

  void zero_grad();
};

enum class OpKind {
  Constant,
  Variable,
  Parameter,
  Matmul,
  Add,
  Sub,
  Mul,
  Affine,
  AddRowBias,
  Relu,
  Exp,
  Sum,
  Mean,
  SqDist,
  Softmax,
  CrossEntropy,
  SliceRows,
  NeighborSum,
  Conv2d,
  Custom,
};

const char* op_name(OpKind kind);

class Tape;
class Tensor;

using NodeId = std::size_t;

/// Receives the finished tape and the id of the node whose gradient is ready;
/// pushes contributions into the node's inputs with Tape::accumulate.
using BackwardFn = std::function<void(Tape&, NodeId)>;

/// One operation record of the trace.
struct Node {
  OpKind kind = OpKind::Constant;
  std::vector<NodeId> inputs;
  Dense value;
  Dense grad;  // empty until something flows in
  bool requires_grad = false;
  Parameter* param = nullptr;
  BackwardFn backward;
};

/// Handle to a node on a tape. Copying a Tensor does not copy data.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Tape* tape, NodeId id) : tape_(tape), id_(id) {}

  NodeId id() const { return id_; }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

  const Dense& value() const;
  const Shape& shape() const { return value().shape; }
  bool requires_grad() const;

  /// Accumulated gradient; zero-filled when nothing reached this node.
  Dense grad() const;
  /// Scalar value; throws ContractError if not a one-element tensor.
  double item() const;

 private:
  Tape* tape_ = nullptr;
  NodeId id_ = 0;
};

/// Computation trace. Node ids are creation-ordered, which is a valid
/// topological order because every op only refers to earlier nodes.
class Tape {
 public:
  explicit Tape(Precision precision = Precision::f64) : precision_(precision) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Precision precision() const { return precision_; }

  Tensor constant(Dense value);
  Tensor variable(Dense value);
  Tensor parameter(Parameter& p);

  /// Appends an op record. `backward` is dropped when no input needs a gradient.
  Tensor record(OpKind kind, std::vector<Tensor> inputs, Dense value,
                BackwardFn backward);

  /// Runs reverse accumulation from a one-element tensor. Gradients of bound
  /// parameters are added to Parameter::grad. A tape can be run backward once.
  void backward(const Tensor& loss);

  /// Adds `g` into the gradient slot of `id` (allocated on first use).
  void accumulate(NodeId id, const Dense& g);

  const Node& node(NodeId id) const { return nodes_.at(id); }
  const Dense& value(NodeId id) const { return nodes_.at(id).value; }
  const Dense& grad(NodeId id) const { return nodes_.at(id).grad; }
  std::size_t size() const { return nodes_.size(); }
  const std::deque<Node>& nodes() const { return nodes_; }
  bool consumed() const { return consumed_; }

 private:
  void round_to_precision(Dense& d) const;

  Precision precision_;
  std::deque<Node> nodes_;  // deque keeps value references stable
  bool consumed_ = false;
};

}  // namespace hda
