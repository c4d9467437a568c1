#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hda/tensor.hpp"

namespace hda {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-6;  // coupled L2: g ← g + wd·θ before the moment update
};

/// First/second moment slots, one per parameter, plus the shared step count.
struct AdamState {
  std::vector<Dense> m;
  std::vector<Dense> v;
  std::uint64_t step = 0;

  static AdamState for_parameters(std::span<Parameter* const> params);
};

/// One bias-corrected Adam update from each Parameter::grad.
void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config);

}  // namespace hda
