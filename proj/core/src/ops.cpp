#include "hda/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hda/errors.hpp"

namespace hda {
namespace {

void require_matrix(const Dense& d, const char* op) {
  if (d.rank() != 2) {
    throw ShapeError(std::string(op) + " expects a matrix, got " + shape_string(d.shape));
  }
}

void require_same_shape(const Dense& a, const Dense& b, const char* op) {
  if (a.shape != b.shape) {
    throw ShapeError(std::string(op) + ": shapes " + shape_string(a.shape) + " and " +
                     shape_string(b.shape) + " differ");
  }
}

const Dense& out_grad(Tape& t, NodeId id) { return t.grad(id); }

NodeId input(Tape& t, NodeId id, std::size_t k) { return t.node(id).inputs[k]; }

}  // namespace

namespace kernels {

Dense matmul(const Dense& a, const Dense& b, bool transpose_a, bool transpose_b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = transpose_a ? a.cols() : a.rows();
  const std::size_t k = transpose_a ? a.rows() : a.cols();
  const std::size_t kb = transpose_b ? b.cols() : b.rows();
  const std::size_t n = transpose_b ? b.rows() : b.cols();
  if (k != kb) {
    throw ShapeError("matmul: inner dimensions differ for " + shape_string(a.shape) +
                     (transpose_a ? "^T" : "") + " and " + shape_string(b.shape) +
                     (transpose_b ? "^T" : ""));
  }
  Dense c({m, n});
  if (!transpose_a && !transpose_b) {
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c.data.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = a.data[i * k + p];
        const double* brow = b.data.data() + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  } else if (transpose_a && !transpose_b) {
    // a is [k×m]
    for (std::size_t p = 0; p < k; ++p) {
      const double* arow = a.data.data() + p * m;
      const double* brow = b.data.data() + p * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double api = arow[i];
        double* crow = c.data.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
      }
    }
  } else if (!transpose_a && transpose_b) {
    // b is [n×k]
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = a.data.data() + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b.data.data() + j * k;
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        c.data[i * n + j] = acc;
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += a.data[p * m + i] * b.data[j * k + p];
        c.data[i * n + j] = acc;
      }
    }
  }
  return c;
}

}  // namespace kernels

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Dense& av = a.value();
  const Dense& bv = b.value();
  require_matrix(av, "matmul");
  require_matrix(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: cannot multiply " + shape_string(av.shape) + " by " +
                     shape_string(bv.shape));
  }
  return a.tape().record(OpKind::Matmul, {a, b}, kernels::matmul(av, bv),
                         [](Tape& t, NodeId id) {
                           const Dense& g = out_grad(t, id);
                           const NodeId ia = input(t, id, 0);
                           const NodeId ib = input(t, id, 1);
                           if (t.node(ia).requires_grad)
                             t.accumulate(ia, kernels::matmul(g, t.value(ib), false, true));
                           if (t.node(ib).requires_grad)
                             t.accumulate(ib, kernels::matmul(t.value(ia), g, true, false));
                         });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a.value(), b.value(), "add");
  Dense out = a.value();
  const Dense& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv.data[i];
  return a.tape().record(OpKind::Add, {a, b}, std::move(out), [](Tape& t, NodeId id) {
    const Dense g = out_grad(t, id);
    t.accumulate(input(t, id, 0), g);
    t.accumulate(input(t, id, 1), g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a.value(), b.value(), "sub");
  Dense out = a.value();
  const Dense& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= bv.data[i];
  return a.tape().record(OpKind::Sub, {a, b}, std::move(out), [](Tape& t, NodeId id) {
    Dense g = out_grad(t, id);
    t.accumulate(input(t, id, 0), g);
    for (double& x : g.data) x = -x;
    t.accumulate(input(t, id, 1), g);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a.value(), b.value(), "mul");
  Dense out = a.value();
  const Dense& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= bv.data[i];
  return a.tape().record(OpKind::Mul, {a, b}, std::move(out), [](Tape& t, NodeId id) {
    const Dense& g = out_grad(t, id);
    const NodeId ia = input(t, id, 0);
    const NodeId ib = input(t, id, 1);
    Dense ga = g;
    Dense gb = g;
    const Dense& av = t.value(ia);
    const Dense& bv = t.value(ib);
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga.data[i] *= bv.data[i];
      gb.data[i] *= av.data[i];
    }
    t.accumulate(ia, ga);
    t.accumulate(ib, gb);
  });
}

Tensor affine(const Tensor& a, double scale, double shift) {
  Dense out = a.value();
  for (double& x : out.data) x = scale * x + shift;
  return a.tape().record(OpKind::Affine, {a}, std::move(out),
                         [scale](Tape& t, NodeId id) {
                           Dense g = out_grad(t, id);
                           for (double& x : g.data) x *= scale;
                           t.accumulate(input(t, id, 0), g);
                         });
}

Tensor add_row_bias(const Tensor& a, const Tensor& bias) {
  const Dense& av = a.value();
  const Dense& bv = bias.value();
  require_matrix(av, "add_row_bias");
  const std::size_t n = av.cols();
  if (bv.size() != n || bv.rank() > 2 || (bv.rank() == 2 && bv.shape[0] != 1)) {
    throw ShapeError("add_row_bias: bias " + shape_string(bv.shape) +
                     " does not fit rows of " + shape_string(av.shape));
  }
  Dense out = av;
  for (std::size_t i = 0; i < av.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) out.data[i * n + j] += bv.data[j];
  }
  return a.tape().record(OpKind::AddRowBias, {a, bias}, std::move(out),
                         [](Tape& t, NodeId id) {
                           const Dense& g = out_grad(t, id);
                           const NodeId ib = input(t, id, 1);
                           t.accumulate(input(t, id, 0), g);
                           Dense gb(t.value(ib).shape);
                           const std::size_t n = g.cols();
                           for (std::size_t i = 0; i < g.rows(); ++i) {
                             for (std::size_t j = 0; j < n; ++j) gb.data[j] += g.data[i * n + j];
                           }
                           t.accumulate(ib, gb);
                         });
}

Tensor relu(const Tensor& a) {
  Dense out = a.value();
  for (double& x : out.data) x = x > 0.0 ? x : 0.0;
  return a.tape().record(OpKind::Relu, {a}, std::move(out), [](Tape& t, NodeId id) {
    Dense g = out_grad(t, id);
    const NodeId ia = input(t, id, 0);
    const Dense& av = t.value(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!(av.data[i] > 0.0)) g.data[i] = 0.0;
    }
    t.accumulate(ia, g);
  });
}

Tensor exp(const Tensor& a) {
  Dense out = a.value();
  for (double& x : out.data) x = std::exp(x);
  return a.tape().record(OpKind::Exp, {a}, std::move(out), [](Tape& t, NodeId id) {
    Dense g = out_grad(t, id);
    const Dense& y = t.value(id);
    for (std::size_t i = 0; i < g.size(); ++i) g.data[i] *= y.data[i];
    t.accumulate(input(t, id, 0), g);
  });
}

Tensor sum(const Tensor& a) {
  double acc = 0.0;
  for (double x : a.value().data) acc += x;
  return a.tape().record(OpKind::Sum, {a}, Dense::scalar(acc), [](Tape& t, NodeId id) {
    const NodeId ia = input(t, id, 0);
    t.accumulate(ia, Dense(t.value(ia).shape, out_grad(t, id).data[0]));
  });
}

Tensor mean(const Tensor& a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of an empty tensor");
  double acc = 0.0;
  for (double x : a.value().data) acc += x;
  return a.tape().record(OpKind::Mean, {a}, Dense::scalar(acc / static_cast<double>(n)),
                         [n](Tape& t, NodeId id) {
                           const NodeId ia = input(t, id, 0);
                           t.accumulate(ia, Dense(t.value(ia).shape,
                                                  out_grad(t, id).data[0] /
                                                      static_cast<double>(n)));
                         });
}

Tensor sq_dist(const Tensor& a, const Tensor& b) {
  const Dense& av = a.value();
  const Dense& bv = b.value();
  require_matrix(av, "sq_dist");
  require_matrix(bv, "sq_dist");
  if (av.cols() != bv.cols()) {
    throw ShapeError("sq_dist: feature widths differ for " + shape_string(av.shape) +
                     " and " + shape_string(bv.shape));
  }
  const std::size_t n = av.rows();
  const std::size_t m = bv.rows();
  const std::size_t k = av.cols();
  Dense out({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = av.data.data() + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* bj = bv.data.data() + j * k;
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) {
        const double d = ai[p] - bj[p];
        acc += d * d;
      }
      out.data[i * m + j] = acc;
    }
  }
  return a.tape().record(OpKind::SqDist, {a, b}, std::move(out), [](Tape& t, NodeId id) {
    const Dense& g = out_grad(t, id);
    const NodeId ia = input(t, id, 0);
    const NodeId ib = input(t, id, 1);
    const Dense& av = t.value(ia);
    const Dense& bv = t.value(ib);
    const std::size_t n = av.rows();
    const std::size_t m = bv.rows();
    const std::size_t k = av.cols();
    Dense ga(av.shape);
    Dense gb(bv.shape);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double gij = g.data[i * m + j];
        if (gij == 0.0) continue;
        for (std::size_t p = 0; p < k; ++p) {
          const double d = 2.0 * gij * (av.data[i * k + p] - bv.data[j * k + p]);
          ga.data[i * k + p] += d;
          gb.data[j * k + p] -= d;
        }
      }
    }
    t.accumulate(ia, ga);
    t.accumulate(ib, gb);
  });
}

Tensor softmax_rows(const Tensor& logits) {
  const Dense& x = logits.value();
  require_matrix(x, "softmax_rows");
  Dense out(x.shape);
  const std::size_t m = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* xi = x.data.data() + i * m;
    double* yi = out.data.data() + i * m;
    const double mx = *std::max_element(xi, xi + m);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      z += yi[j];
    }
    for (std::size_t j = 0; j < m; ++j) yi[j] /= z;
  }
  return logits.tape().record(OpKind::Softmax, {logits}, std::move(out),
                              [](Tape& t, NodeId id) {
                                const Dense& g = out_grad(t, id);
                                const Dense& y = t.value(id);
                                const std::size_t m = y.cols();
                                Dense gx(y.shape);
                                for (std::size_t i = 0; i < y.rows(); ++i) {
                                  double dot = 0.0;
                                  for (std::size_t j = 0; j < m; ++j)
                                    dot += g.data[i * m + j] * y.data[i * m + j];
                                  for (std::size_t j = 0; j < m; ++j)
                                    gx.data[i * m + j] =
                                        y.data[i * m + j] * (g.data[i * m + j] - dot);
                                }
                                t.accumulate(input(t, id, 0), gx);
                              });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> labels) {
  const Dense& x = logits.value();
  require_matrix(x, "cross_entropy");
  const std::size_t rows = x.rows();
  const std::size_t m = x.cols();
  if (labels.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) +
                     " labels for logits " + shape_string(x.shape));
  }
  std::vector<int> kept(labels.begin(), labels.end());
  std::size_t labelled = 0;
  double acc = 0.0;
  // Softmax of labelled rows is kept for the backward pass.
  Dense probs(x.shape);
  for (std::size_t i = 0; i < rows; ++i) {
    const int l = kept[i];
    if (l < 0) continue;
    if (static_cast<std::size_t>(l) >= m) {
      throw ContractError("cross_entropy: label " + std::to_string(l) + " outside [0, " +
                          std::to_string(m) + ")");
    }
    const double* xi = x.data.data() + i * m;
    const double mx = *std::max_element(xi, xi + m);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) z += std::exp(xi[j] - mx);
    const double lse = mx + std::log(z);
    acc += lse - xi[l];
    for (std::size_t j = 0; j < m; ++j) probs.data[i * m + j] = std::exp(xi[j] - lse);
    ++labelled;
  }
  if (labelled == 0) throw ContractError("cross_entropy: no labelled rows");
  const double inv = 1.0 / static_cast<double>(labelled);
  return logits.tape().record(
      OpKind::CrossEntropy, {logits}, Dense::scalar(acc * inv),
      [kept = std::move(kept), probs = std::move(probs), inv](Tape& t, NodeId id) {
        const double g = out_grad(t, id).data[0] * inv;
        Dense gx(probs.shape);
        const std::size_t m = probs.cols();
        for (std::size_t i = 0; i < probs.rows(); ++i) {
          const int l = kept[i];
          if (l < 0) continue;
          for (std::size_t j = 0; j < m; ++j) gx.data[i * m + j] = g * probs.data[i * m + j];
          gx.data[i * m + static_cast<std::size_t>(l)] -= g;
        }
        t.accumulate(input(t, id, 0), gx);
      });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  const Dense& av = a.value();
  require_matrix(av, "slice_rows");
  if (begin + count > av.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " + shape_string(av.shape));
  }
  const std::size_t k = av.cols();
  Dense out({count, k});
  std::copy(av.data.begin() + static_cast<std::ptrdiff_t>(begin * k),
            av.data.begin() + static_cast<std::ptrdiff_t>((begin + count) * k),
            out.data.begin());
  return a.tape().record(OpKind::SliceRows, {a}, std::move(out),
                         [begin](Tape& t, NodeId id) {
                           const Dense& g = out_grad(t, id);
                           const NodeId ia = input(t, id, 0);
                           Dense ga(t.value(ia).shape);
                           std::copy(g.data.begin(), g.data.end(),
                                     ga.data.begin() +
                                         static_cast<std::ptrdiff_t>(begin * g.cols()));
                           t.accumulate(ia, ga);
                         });
}

Tensor neighbor_sum(const Tensor& a,
                    const std::vector<std::vector<std::uint32_t>>& neighbors) {
  const Dense& av = a.value();
  require_matrix(av, "neighbor_sum");
  const std::size_t n = av.rows();
  const std::size_t k = av.cols();
  if (neighbors.size() != n) {
    throw ShapeError("neighbor_sum: " + std::to_string(neighbors.size()) +
                     " neighbor lists for " + std::to_string(n) + " rows");
  }
  Dense out({n, k});
  for (std::size_t i = 0; i < n; ++i) {
    double* oi = out.data.data() + i * k;
    for (std::uint32_t j : neighbors[i]) {
      if (j >= n) throw ShapeError("neighbor_sum: neighbor index out of range");
      const double* aj = av.data.data() + static_cast<std::size_t>(j) * k;
      for (std::size_t p = 0; p < k; ++p) oi[p] += aj[p];
    }
  }
  return a.tape().record(OpKind::NeighborSum, {a}, std::move(out),
                         [neighbors](Tape& t, NodeId id) {
                           const Dense& g = out_grad(t, id);
                           const std::size_t k = g.cols();
                           Dense ga(g.shape);
                           for (std::size_t i = 0; i < neighbors.size(); ++i) {
                             const double* gi = g.data.data() + i * k;
                             for (std::uint32_t j : neighbors[i]) {
                               double* dj = ga.data.data() + static_cast<std::size_t>(j) * k;
                               for (std::size_t p = 0; p < k; ++p) dj[p] += gi[p];
                             }
                           }
                           t.accumulate(input(t, id, 0), ga);
                         });
}

ImageGeometry conv_output_geometry(const ImageGeometry& in, const Shape& weight_shape,
                                   const ConvSpec& spec) {
  if (weight_shape.size() != 4 || weight_shape[2] != weight_shape[3]) {
    throw ShapeError("conv2d: weight must be [Cout, Cin, K, K], got " +
                     shape_string(weight_shape));
  }
  if (weight_shape[1] != in.channels) {
    throw ShapeError("conv2d: weight expects " + std::to_string(weight_shape[1]) +
                     " input channels, image has " + std::to_string(in.channels));
  }
  if (spec.stride == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t kk = weight_shape[2];
  if (in.height + 2 * spec.padding < kk || in.width + 2 * spec.padding < kk) {
    throw ShapeError("conv2d: kernel larger than padded image");
  }
  return {weight_shape[0], (in.height + 2 * spec.padding - kk) / spec.stride + 1,
          (in.width + 2 * spec.padding - kk) / spec.stride + 1};
}

namespace {

// Visits every (output position, kernel tap, input position) triple that
// falls inside the unpadded image.
template <typename F>
void for_each_tap(const ImageGeometry& in, const ImageGeometry& out, std::size_t kk,
                  const ConvSpec& spec, F&& f) {
  const auto pad = static_cast<std::ptrdiff_t>(spec.padding);
  for (std::size_t oy = 0; oy < out.height; ++oy) {
    for (std::size_t ox = 0; ox < out.width; ++ox) {
      for (std::size_t ky = 0; ky < kk; ++ky) {
        const std::ptrdiff_t iy =
            static_cast<std::ptrdiff_t>(oy * spec.stride + ky) - pad;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.height)) continue;
        for (std::size_t kx = 0; kx < kk; ++kx) {
          const std::ptrdiff_t ix =
              static_cast<std::ptrdiff_t>(ox * spec.stride + kx) - pad;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.width)) continue;
          f(oy, ox, ky, kx, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              const ImageGeometry& in, const ConvSpec& spec) {
  const Dense& xv = x.value();
  const Dense& wv = weight.value();
  const Dense& bv = bias.value();
  require_matrix(xv, "conv2d");
  if (xv.cols() != in.size()) {
    throw ShapeError("conv2d: rows of " + shape_string(xv.shape) + " do not hold " +
                     std::to_string(in.channels) + "x" + std::to_string(in.height) + "x" +
                     std::to_string(in.width) + " images");
  }
  const ImageGeometry out = conv_output_geometry(in, wv.shape, spec);
  if (bv.size() != out.channels) throw ShapeError("conv2d: bias size mismatch");
  const std::size_t kk = wv.shape[2];
  const std::size_t batch = xv.rows();
  Dense y({batch, out.size()});
  for (std::size_t b = 0; b < batch; ++b) {
    const double* xb = xv.data.data() + b * in.size();
    double* yb = y.data.data() + b * out.size();
    for (std::size_t co = 0; co < out.channels; ++co) {
      double* yc = yb + co * out.height * out.width;
      for (std::size_t p = 0; p < out.height * out.width; ++p) yc[p] = bv.data[co];
      for (std::size_t ci = 0; ci < in.channels; ++ci) {
        const double* xc = xb + ci * in.height * in.width;
        const double* wc = wv.data.data() + (co * in.channels + ci) * kk * kk;
        for_each_tap(in, out, kk, spec,
                     [&](std::size_t oy, std::size_t ox, std::size_t ky, std::size_t kx,
                         std::size_t iy, std::size_t ix) {
                       yc[oy * out.width + ox] += wc[ky * kk + kx] * xc[iy * in.width + ix];
                     });
      }
    }
  }
  return x.tape().record(
      OpKind::Conv2d, {x, weight, bias}, std::move(y),
      [in, out, spec, kk](Tape& t, NodeId id) {
        const Dense& g = out_grad(t, id);
        const NodeId ix_ = input(t, id, 0);
        const NodeId iw = input(t, id, 1);
        const NodeId ib = input(t, id, 2);
        const Dense& xv = t.value(ix_);
        const Dense& wv = t.value(iw);
        Dense gx(xv.shape);
        Dense gw(wv.shape);
        Dense gb(t.value(ib).shape);
        const std::size_t batch = xv.rows();
        for (std::size_t b = 0; b < batch; ++b) {
          const double* xb = xv.data.data() + b * in.size();
          double* gxb = gx.data.data() + b * in.size();
          const double* gyb = g.data.data() + b * out.size();
          for (std::size_t co = 0; co < out.channels; ++co) {
            const double* gyc = gyb + co * out.height * out.width;
            for (std::size_t p = 0; p < out.height * out.width; ++p) gb.data[co] += gyc[p];
            for (std::size_t ci = 0; ci < in.channels; ++ci) {
              const std::size_t plane = ci * in.height * in.width;
              const std::size_t woff = (co * in.channels + ci) * kk * kk;
              for_each_tap(in, out, kk, spec,
                           [&](std::size_t oy, std::size_t ox, std::size_t ky,
                               std::size_t kx, std::size_t iy, std::size_t ix) {
                             const double go = gyc[oy * out.width + ox];
                             gw.data[woff + ky * kk + kx] += go * xb[plane + iy * in.width + ix];
                             gxb[plane + iy * in.width + ix] += go * wv.data[woff + ky * kk + kx];
                           });
            }
          }
        }
        t.accumulate(ix_, gx);
        t.accumulate(iw, gw);
        t.accumulate(ib, gb);
      });
}

}  // namespace hda
