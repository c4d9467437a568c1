#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hda/tensor.hpp"

namespace hda {

enum class Domain { Source, Target };

const char* domain_name(Domain d);

struct Sample {
  std::int64_t id = 0;
  Dense features;  // shape {D} for vectors, {C, H, W} for images
  Domain domain = Domain::Source;
  int label = -1;  // −1 = unknown
};

/// Immutable collection of samples from one domain.
///
/// Source datasets must be fully labelled; target datasets must carry no
/// labels at all. Ground truth for the target lives in EvalLabels, a separate
/// type that no training entry point accepts.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Domain domain, Shape feature_shape, int num_classes, std::vector<Sample> samples);

  Domain domain() const { return domain_; }
  const Shape& feature_shape() const { return feature_shape_; }
  std::size_t feature_size() const { return shape_size(feature_shape_); }
  bool is_image() const { return feature_shape_.size() == 3; }
  int num_classes() const { return num_classes_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<Sample>& samples() const { return samples_; }

  /// [N × feature_size] matrix of all samples.
  Dense feature_matrix() const;
  /// [k × feature_size] matrix of the selected samples, in the given order.
  Dense feature_rows(std::span<const std::size_t> indices) const;
  std::vector<int> labels() const;

 private:
  Domain domain_ = Domain::Source;
  Shape feature_shape_;
  int num_classes_ = 0;
  std::vector<Sample> samples_;
};

/// Target ground truth, used only for evaluation and diagnostics.
class EvalLabels {
 public:
  EvalLabels() = default;
  EvalLabels(std::vector<int> labels, int num_classes);

  std::size_t size() const { return labels_.size(); }
  int num_classes() const { return num_classes_; }
  int operator[](std::size_t i) const { return labels_[i]; }
  const std::vector<int>& labels() const { return labels_; }

 private:
  std::vector<int> labels_;
  int num_classes_ = 0;
};

// ---------------------------------------------------------------------------
// Binary files
//
// Header: "HDA1", u32 version (=1), u32 sample count, u32 rank,
// rank × u32 dims, u32 class count. Dataset payload per sample: features as
// little-endian f32, then an i32 label. Sidecar payload: one i32 per sample.

inline constexpr std::uint32_t kDatasetFormatVersion = 1;

void write_dataset(const std::filesystem::path& path, const Dataset& data);
/// Throws FormatError on a bad magic, version or payload length, on an
/// out-of-range source label and on any label in a target file.
Dataset read_dataset(const std::filesystem::path& path, Domain domain);

void write_eval_labels(const std::filesystem::path& path, const EvalLabels& labels,
                       const Shape& feature_shape);
EvalLabels read_eval_labels(const std::filesystem::path& path);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string file_digest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Normalization

/// Per-channel statistics. A channel is one coordinate of a flat vector or
/// one plane of a C×H×W image.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline constexpr double kVarianceFloor = 1e-8;

/// Population mean/variance per channel. Variances below kVarianceFloor are
/// clamped to it with a warning.
NormStats fit_normalization(const Dataset& data);
Dataset apply_normalization(const Dataset& data, const NormStats& stats);

struct NormalizedDataset {
  Dataset data;
  NormStats stats;
};

/// Fits statistics on `data` and applies them.
NormalizedDataset normalize(const Dataset& data);

}  // namespace hda
