#include "hda/adam.hpp"

#include <cmath>

#include "hda/errors.hpp"

namespace hda {

AdamState AdamState::for_parameters(std::span<Parameter* const> params) {
  AdamState s;
  for (const Parameter* p : params) {
    s.m.emplace_back(p->value.shape);
    s.v.emplace_back(p->value.shape);
  }
  return s;
}

void adam_step(std::span<Parameter* const> params, AdamState& state, const AdamConfig& config) {
  if (state.m.size() != params.size()) {
    throw ContractError("optimizer state has " + std::to_string(state.m.size()) +
                        " slots for " + std::to_string(params.size()) + " parameters");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    Dense& m = state.m[k];
    Dense& v = state.v[k];
    const bool has_grad = p.grad.shape == p.value.shape;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      double g = has_grad ? p.grad.data[i] : 0.0;
      g += config.weight_decay * p.value.data[i];
      m.data[i] = config.beta1 * m.data[i] + (1.0 - config.beta1) * g;
      v.data[i] = config.beta2 * v.data[i] + (1.0 - config.beta2) * g * g;
      const double mhat = m.data[i] / c1;
      const double vhat = v.data[i] / c2;
      p.value.data[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

}  // namespace hda
