#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hda/tensor.hpp"

namespace hda {

// Differentiable operations. Every function records one op on the tape that
// owns its inputs and throws ShapeError when operand shapes disagree.

/// [m×k]·[k×n] → [m×n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);
/// scale·a + shift, elementwise.
Tensor affine(const Tensor& a, double scale, double shift = 0.0);
/// Adds a length-n bias (shape [n] or [1×n]) to every row of an [m×n] matrix.
Tensor add_row_bias(const Tensor& a, const Tensor& bias);

/// max(0, x); the subgradient at exactly 0 is 0.
Tensor relu(const Tensor& a);
Tensor exp(const Tensor& a);

/// Sum / mean of all elements, as a rank-0 tensor.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

/// Pairwise squared Euclidean distances between the rows of a [n×k] and b [m×k].
/// Computed as Σ(a−b)² so identical rows give exactly 0.
Tensor sq_dist(const Tensor& a, const Tensor& b);

/// Row-wise softmax with the row max subtracted first.
Tensor softmax_rows(const Tensor& logits);

/// Mean over rows with label ≥ 0 of −log softmax(logits)[label], evaluated
/// through log-sum-exp. Rows labelled −1 are skipped. Throws ContractError
/// if no row is labelled or a label is out of range.
Tensor cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Rows [begin, begin+count) of a matrix.
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);

/// out_i = Σ_{j ∈ neighbors[i]} a_j, summed in the order the lists are given.
Tensor neighbor_sum(const Tensor& a,
                    const std::vector<std::vector<std::uint32_t>>& neighbors);

struct ImageGeometry {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const ImageGeometry&) const = default;
};

struct ConvSpec {
  std::size_t stride = 1;
  std::size_t padding = 1;
};

ImageGeometry conv_output_geometry(const ImageGeometry& in, const Shape& weight_shape,
                                   const ConvSpec& spec);

/// 2-D convolution with zero padding. `x` is [B × C·H·W] (each row one image,
/// CHW order), `weight` is [Cout, Cin, K, K], `bias` is [Cout].
/// Output is [B × Cout·Ho·Wo].
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const ImageGeometry& in, const ConvSpec& spec);

namespace kernels {

/// C = op(A)·op(B) for plain matrices; op transposes when the flag is set.
Dense matmul(const Dense& a, const Dense& b, bool transpose_a = false,
             bool transpose_b = false);

}  // namespace kernels

}  // namespace hda
