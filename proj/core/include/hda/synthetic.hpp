#pragma once

#include <random>
#include <vector>

#include "hda/dataset.hpp"

namespace hda {

/// How the target domain differs from the source.
struct ShiftSpec {
  double rotation_deg = 0.0;         // counter-clockwise, in the plane of the first two axes
  std::vector<double> translation;   // empty, or one entry per feature dimension
  double cov_scale = 1.0;            // multiplies the within-class spread
};

/// Gaussian blobs. Class k has its mean on a circle of `radius` in the first
/// two axes at angle π + 2πk/m, so m = 2 gives means (−r, 0) and (+r, 0).
struct SyntheticConfig {
  int classes = 2;
  std::size_t per_class = 500;
  std::size_t dim = 2;
  double radius = 2.0;
  double spread = 1.0;  // within-class standard deviation
  std::vector<double> axis_scale;  // empty, or a per-dimension multiplier on `spread`
  ShiftSpec shift;
};

struct SyntheticDomains {
  Dataset source;
  Dataset target;  // unlabelled
  EvalLabels target_labels;
};

std::vector<std::vector<double>> class_means(const SyntheticConfig& config);

/// Rotates the first two coordinates of `x` counter-clockwise by `deg`.
std::vector<double> rotate_plane(std::vector<double> x, double deg);

/// Source: independent draws from the blobs. Target: independent draws from
/// the same blobs pushed through the shift, x ↦ R(μ + cov_scale·σ·a⊙z) + t,
/// with `a` the per-axis scale.
/// Features are rounded to f32 so they survive the dataset file unchanged.
SyntheticDomains gen_synthetic_shift(const SyntheticConfig& config, std::mt19937_64& rng);

}  // namespace hda
