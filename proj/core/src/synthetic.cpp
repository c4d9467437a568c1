#include "hda/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "hda/errors.hpp"

namespace hda {

std::vector<std::vector<double>> class_means(const SyntheticConfig& config) {
  std::vector<std::vector<double>> means;
  for (int k = 0; k < config.classes; ++k) {
    const double angle = std::numbers::pi + 2.0 * std::numbers::pi * k / config.classes;
    std::vector<double> mu(config.dim, 0.0);
    mu[0] = config.radius * std::cos(angle);
    mu[1] = config.radius * std::sin(angle);
    means.push_back(std::move(mu));
  }
  return means;
}

std::vector<double> rotate_plane(std::vector<double> x, double deg) {
  const double t = deg * std::numbers::pi / 180.0;
  const double c = std::cos(t);
  const double s = std::sin(t);
  const double x0 = x[0];
  const double x1 = x[1];
  x[0] = c * x0 - s * x1;
  x[1] = s * x0 + c * x1;
  return x;
}

SyntheticDomains gen_synthetic_shift(const SyntheticConfig& config, std::mt19937_64& rng) {
  if (config.classes < 1) throw ContractError("need at least one class");
  if (config.dim < 2) throw ContractError("synthetic blobs need at least two dimensions");
  if (config.spread < 0.0 || config.shift.cov_scale < 0.0) {
    throw ContractError("spread and covariance scale must be non-negative");
  }
  if (!config.shift.translation.empty() && config.shift.translation.size() != config.dim) {
    throw ShapeError("translation has " + std::to_string(config.shift.translation.size()) +
                     " entries for dimension " + std::to_string(config.dim));
  }
  if (!config.axis_scale.empty() && config.axis_scale.size() != config.dim) {
    throw ShapeError("axis scale has " + std::to_string(config.axis_scale.size()) +
                     " entries for dimension " + std::to_string(config.dim));
  }
  for (double a : config.axis_scale) {
    if (a < 0.0) throw ContractError("axis scales must be non-negative");
  }
  const auto means = class_means(config);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto draw = [&](const std::vector<double>& mu, double sigma) {
    std::vector<double> x(config.dim);
    for (std::size_t d = 0; d < config.dim; ++d) {
      const double a = config.axis_scale.empty() ? 1.0 : config.axis_scale[d];
      x[d] = mu[d] + sigma * a * normal(rng);
    }
    return x;
  };
  auto to_f32 = [](std::vector<double> x) {
    for (double& v : x) v = static_cast<double>(static_cast<float>(v));
    return x;
  };

  std::vector<Sample> source;
  std::vector<Sample> target;
  std::vector<int> truth;
  std::int64_t sid = 0;
  for (int k = 0; k < config.classes; ++k) {
    for (std::size_t i = 0; i < config.per_class; ++i) {
      Sample s;
      s.id = sid++;
      s.domain = Domain::Source;
      s.label = k;
      s.features = Dense({config.dim}, to_f32(draw(means[k], config.spread)));
      source.push_back(std::move(s));
    }
  }
  std::int64_t tid = 0;
  for (int k = 0; k < config.classes; ++k) {
    for (std::size_t i = 0; i < config.per_class; ++i) {
      std::vector<double> x =
          rotate_plane(draw(means[k], config.spread * config.shift.cov_scale),
                       config.shift.rotation_deg);
      for (std::size_t d = 0; d < config.shift.translation.size(); ++d) {
        x[d] += config.shift.translation[d];
      }
      Sample s;
      s.id = tid++;
      s.domain = Domain::Target;
      s.label = -1;
      s.features = Dense({config.dim}, to_f32(std::move(x)));
      target.push_back(std::move(s));
      truth.push_back(k);
    }
  }
  const Shape shape{config.dim};
  return {Dataset(Domain::Source, shape, config.classes, std::move(source)),
          Dataset(Domain::Target, shape, config.classes, std::move(target)),
          EvalLabels(std::move(truth), config.classes)};
}

}  // namespace hda
