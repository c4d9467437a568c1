#pragma once

#include <random>

#include "hda/dataset.hpp"

namespace hda {

/// Ranges for random geometric augmentation of image samples.
struct AugmentConfig {
  double max_rotation_deg = 30.0;
  double min_scale = 0.9;
  double max_scale = 1.1;
  double max_shear = 0.1;
};

/// One concrete transform. The image is scaled, then sheared along x, then
/// rotated counter-clockwise (as displayed, rows growing downward), all about
/// the image centre.
struct AffineParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double shear = 0.0;
};

AffineParams draw_affine(const AugmentConfig& config, std::mt19937_64& rng);

/// Resamples a C×H×W image under `params` with bilinear interpolation and
/// reflect padding (mirror without repeating the edge pixel).
Dense warp_image(const Dense& image, const AffineParams& params);

/// Randomly warps image samples; flat-vector samples are returned unchanged
/// and consume no randomness. Label, domain and id are preserved.
Sample augment(const Sample& sample, std::mt19937_64& rng, const AugmentConfig& config = {});

}  // namespace hda
