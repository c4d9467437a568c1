#pragma once

#include <filesystem>
#include <vector>

#include "hda/dataset.hpp"
#include "hda/model.hpp"
#include "hda/pseudo.hpp"

namespace hda {

/// Top-2 principal axes of a point cloud. Each axis is sign-fixed so that
/// its largest-magnitude coordinate is positive (first such coordinate on ties).
struct Projection2D {
  std::vector<double> mean;
  Dense axes;  // [2 × d]
  std::vector<double> variances;  // eigenvalues of the two axes, descending
};

Projection2D fit_pca2(const Dense& points);
Dense project(const Projection2D& proj, const Dense& points);

/// Writes one row per sample (source first, then target):
/// epoch,id,domain,label,phi_0..phi_{k-1},pc1,pc2. Target labels are the
/// current pseudo labels (−1 without a `pseudo` state). The projection is
/// fitted on the pooled φ of both sets.
void export_embeddings(const std::filesystem::path& path, const ModelParams& params,
                       const Dataset& source, const Dataset& target,
                       const PseudoState* pseudo, int epoch,
                       Precision precision = Precision::f64);

}  // namespace hda
