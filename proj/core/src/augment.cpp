#include "hda/augment.hpp"

#include <cmath>
#include <numbers>

#include "hda/errors.hpp"

namespace hda {
namespace {

std::ptrdiff_t reflect(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

AffineParams draw_affine(const AugmentConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  AffineParams p;
  p.rotation_deg = (2.0 * unit(rng) - 1.0) * config.max_rotation_deg;
  p.scale = config.min_scale + unit(rng) * (config.max_scale - config.min_scale);
  p.shear = (2.0 * unit(rng) - 1.0) * config.max_shear;
  return p;
}

Dense warp_image(const Dense& image, const AffineParams& params) {
  if (image.rank() != 3) {
    throw ShapeError("warp_image expects C×H×W, got " + shape_string(image.shape));
  }
  const std::size_t channels = image.shape[0];
  const auto h = static_cast<std::ptrdiff_t>(image.shape[1]);
  const auto w = static_cast<std::ptrdiff_t>(image.shape[2]);

  // Forward map A = R · Shear · s acting on (x, y) = (col, row) about the centre.
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double k = params.shear;
  const double sc = params.scale;
  const double a00 = sc * c;
  const double a01 = sc * (c * k + s);
  const double a10 = -sc * s;
  const double a11 = sc * (-s * k + c);
  const double det = a00 * a11 - a01 * a10;
  if (det == 0.0) throw ContractError("degenerate affine transform");
  const double i00 = a11 / det;
  const double i01 = -a01 / det;
  const double i10 = -a10 / det;
  const double i11 = a00 / det;

  const double cx = static_cast<double>(w - 1) / 2.0;
  const double cy = static_cast<double>(h - 1) / 2.0;

  Dense out(image.shape);
  for (std::ptrdiff_t row = 0; row < h; ++row) {
    for (std::ptrdiff_t col = 0; col < w; ++col) {
      const double x = static_cast<double>(col) - cx;
      const double y = static_cast<double>(row) - cy;
      const double sx = i00 * x + i01 * y + cx;
      const double sy = i10 * x + i11 * y + cy;
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double fx = sx - fx0;
      const double fy = sy - fy0;
      const auto x0 = static_cast<std::ptrdiff_t>(fx0);
      const auto y0 = static_cast<std::ptrdiff_t>(fy0);
      const std::ptrdiff_t xa = reflect(x0, w);
      const std::ptrdiff_t xb = reflect(x0 + 1, w);
      const std::ptrdiff_t ya = reflect(y0, h);
      const std::ptrdiff_t yb = reflect(y0 + 1, h);
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const double* plane = image.data.data() + ch * static_cast<std::size_t>(h * w);
        const double v00 = plane[ya * w + xa];
        const double v01 = plane[ya * w + xb];
        const double v10 = plane[yb * w + xa];
        const double v11 = plane[yb * w + xb];
        double v = v00 * (1.0 - fx) * (1.0 - fy);
        if (fx != 0.0) v += v01 * fx * (1.0 - fy);
        if (fy != 0.0) v += v10 * (1.0 - fx) * fy;
        if (fx != 0.0 && fy != 0.0) v += v11 * fx * fy;
        out.data[ch * static_cast<std::size_t>(h * w) + static_cast<std::size_t>(row * w + col)] = v;
      }
    }
  }
  return out;
}

Sample augment(const Sample& sample, std::mt19937_64& rng, const AugmentConfig& config) {
  if (sample.features.rank() != 3) return sample;
  Sample out = sample;
  out.features = warp_image(sample.features, draw_affine(config, rng));
  return out;
}

}  // namespace hda
