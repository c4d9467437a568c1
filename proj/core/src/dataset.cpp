#include "hda/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "binary_io.hpp"
#include "hda/errors.hpp"
#include "hda/log.hpp"

namespace hda {

const char* domain_name(Domain d) { return d == Domain::Source ? "source" : "target"; }

Dataset::Dataset(Domain domain, Shape feature_shape, int num_classes,
                 std::vector<Sample> samples)
    : domain_(domain),
      feature_shape_(std::move(feature_shape)),
      num_classes_(num_classes),
      samples_(std::move(samples)) {
  if (num_classes_ < 1) throw ContractError("dataset needs at least one class");
  for (const Sample& s : samples_) {
    if (s.features.shape != feature_shape_) {
      throw ShapeError("sample " + std::to_string(s.id) + " has shape " +
                       shape_string(s.features.shape) + ", dataset expects " +
                       shape_string(feature_shape_));
    }
    if (s.domain != domain_) {
      throw ContractError("sample " + std::to_string(s.id) + " is tagged " +
                          domain_name(s.domain) + " inside a " + domain_name(domain_) +
                          " dataset");
    }
    if (domain_ == Domain::Source && (s.label < 0 || s.label >= num_classes_)) {
      throw ContractError("source sample " + std::to_string(s.id) + " has label " +
                          std::to_string(s.label) + " outside [0, " +
                          std::to_string(num_classes_) + ")");
    }
    if (domain_ == Domain::Target && s.label != -1) {
      throw ContractError("target sample " + std::to_string(s.id) +
                          " carries a label; target ground truth belongs in an eval sidecar");
    }
  }
}

Dense Dataset::feature_matrix() const {
  const std::size_t f = feature_size();
  Dense out({samples_.size(), f});
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    std::copy(samples_[i].features.data.begin(), samples_[i].features.data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(i * f));
  }
  return out;
}

Dense Dataset::feature_rows(std::span<const std::size_t> indices) const {
  const std::size_t f = feature_size();
  Dense out({indices.size(), f});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& src = samples_.at(indices[r]).features.data;
    std::copy(src.begin(), src.end(), out.data.begin() + static_cast<std::ptrdiff_t>(r * f));
  }
  return out;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(samples_.size());
  for (const Sample& s : samples_) out.push_back(s.label);
  return out;
}

EvalLabels::EvalLabels(std::vector<int> labels, int num_classes)
    : labels_(std::move(labels)), num_classes_(num_classes) {
  for (int l : labels_) {
    if (l < 0 || l >= num_classes_) {
      throw ContractError("eval label " + std::to_string(l) + " outside [0, " +
                          std::to_string(num_classes_) + ")");
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'H', 'D', 'A', '1'};

using detail::put_f32;
using detail::put_i32;
using detail::put_u32;
using detail::read_file;
using detail::Reader;
using detail::write_file;

std::string header(std::size_t count, const Shape& shape, int num_classes) {
  std::string out(kMagic, 4);
  put_u32(out, kDatasetFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(count));
  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (std::size_t d : shape) put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(num_classes));
  return out;
}

struct Header {
  std::uint32_t count = 0;
  Shape shape;
  int num_classes = 0;
};

Header parse_header(Reader& r, const std::filesystem::path& path) {
  if (r.remaining() < 4 || r.bytes().compare(0, 4, kMagic, 4) != 0) {
    throw FormatError("bad magic in " + path.string() + " (expected HDA1)", 0);
  }
  r.u32("magic");
  const std::size_t version_at = r.pos();
  const std::uint32_t version = r.u32("version");
  if (version != kDatasetFormatVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version), version_at);
  }
  Header h;
  h.count = r.u32("sample count");
  const std::size_t rank_at = r.pos();
  const std::uint32_t rank = r.u32("rank");
  if (rank == 0 || rank > 8) {
    throw FormatError("implausible feature rank " + std::to_string(rank), rank_at);
  }
  for (std::uint32_t i = 0; i < rank; ++i) h.shape.push_back(r.u32("dimension"));
  const std::size_t classes_at = r.pos();
  h.num_classes = static_cast<int>(r.u32("class count"));
  if (h.num_classes < 1) throw FormatError("class count must be positive", classes_at);
  return h;
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::string out = header(data.size(), data.feature_shape(), data.num_classes());
  out.reserve(out.size() + data.size() * (data.feature_size() + 1) * 4);
  for (const Sample& s : data.samples()) {
    for (double x : s.features.data) put_f32(out, static_cast<float>(x));
    put_i32(out, s.label);
  }
  write_file(path, out);
}

Dataset read_dataset(const std::filesystem::path& path, Domain domain) {
  Reader r(read_file(path));
  const Header h = parse_header(r, path);
  const std::size_t feat = shape_size(h.shape);
  const std::size_t expected = static_cast<std::size_t>(h.count) * (feat + 1) * 4;
  if (r.remaining() != expected) {
    throw FormatError("payload of " + path.string() + " holds " +
                          std::to_string(r.remaining()) + " bytes, header declares " +
                          std::to_string(expected),
                      r.pos());
  }
  std::vector<Sample> samples;
  samples.reserve(h.count);
  for (std::uint32_t i = 0; i < h.count; ++i) {
    Sample s;
    s.id = i;
    s.domain = domain;
    s.features = Dense(h.shape);
    for (double& x : s.features.data) x = static_cast<double>(r.f32("feature"));
    const std::size_t label_at = r.pos();
    s.label = r.i32("label");
    if (domain == Domain::Source && (s.label < 0 || s.label >= h.num_classes)) {
      throw FormatError("source label " + std::to_string(s.label) + " out of range",
                        label_at);
    }
    if (domain == Domain::Target && s.label != -1) {
      throw FormatError("target file carries label " + std::to_string(s.label) +
                            "; target labels belong in an eval sidecar",
                        label_at);
    }
    samples.push_back(std::move(s));
  }
  return Dataset(domain, h.shape, h.num_classes, std::move(samples));
}

void write_eval_labels(const std::filesystem::path& path, const EvalLabels& labels,
                       const Shape& feature_shape) {
  std::string out = header(labels.size(), feature_shape, labels.num_classes());
  for (int l : labels.labels()) put_i32(out, l);
  write_file(path, out);
}

EvalLabels read_eval_labels(const std::filesystem::path& path) {
  Reader r(read_file(path));
  const Header h = parse_header(r, path);
  const std::size_t expected = static_cast<std::size_t>(h.count) * 4;
  if (r.remaining() != expected) {
    throw FormatError("eval sidecar " + path.string() + " holds " +
                          std::to_string(r.remaining()) + " payload bytes, header declares " +
                          std::to_string(expected),
                      r.pos());
  }
  std::vector<int> labels;
  labels.reserve(h.count);
  for (std::uint32_t i = 0; i < h.count; ++i) {
    const std::size_t at = r.pos();
    const int l = r.i32("label");
    if (l < 0 || l >= h.num_classes) {
      throw FormatError("eval label " + std::to_string(l) + " out of range", at);
    }
    labels.push_back(l);
  }
  return EvalLabels(std::move(labels), h.num_classes);
}

namespace detail {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace detail

std::string file_digest(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------

namespace {

std::pair<std::size_t, std::size_t> channel_layout(const Shape& shape) {
  const std::size_t channels = shape.empty() ? 1 : shape[0];
  const std::size_t per_channel = channels ? shape_size(shape) / channels : 0;
  return {channels, per_channel};
}

}  // namespace

NormStats fit_normalization(const Dataset& data) {
  const auto [channels, per_channel] = channel_layout(data.feature_shape());
  NormStats stats;
  stats.mean.assign(channels, 0.0);
  stats.stddev.assign(channels, 1.0);
  if (data.empty()) return stats;
  const double count = static_cast<double>(data.size() * per_channel);
  for (std::size_t c = 0; c < channels; ++c) {
    double acc = 0.0;
    for (const Sample& s : data.samples()) {
      for (std::size_t p = 0; p < per_channel; ++p) acc += s.features.data[c * per_channel + p];
    }
    const double mu = acc / count;
    double sq = 0.0;
    for (const Sample& s : data.samples()) {
      for (std::size_t p = 0; p < per_channel; ++p) {
        const double d = s.features.data[c * per_channel + p] - mu;
        sq += d * d;
      }
    }
    double var = sq / count;
    if (var < kVarianceFloor) {
      std::ostringstream os;
      os << "channel " << c << " of " << domain_name(data.domain())
         << " data has variance " << var << "; clamping to " << kVarianceFloor;
      warn(os.str());
      var = kVarianceFloor;
    }
    stats.mean[c] = mu;
    stats.stddev[c] = std::sqrt(var);
  }
  return stats;
}

Dataset apply_normalization(const Dataset& data, const NormStats& stats) {
  const auto [channels, per_channel] = channel_layout(data.feature_shape());
  if (stats.mean.size() != channels || stats.stddev.size() != channels) {
    throw ShapeError("normalization statistics cover " + std::to_string(stats.mean.size()) +
                     " channels, data has " + std::to_string(channels));
  }
  std::vector<Sample> out = data.samples();
  for (Sample& s : out) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t p = 0; p < per_channel; ++p) {
        double& x = s.features.data[c * per_channel + p];
        x = (x - stats.mean[c]) / stats.stddev[c];
      }
    }
  }
  return Dataset(data.domain(), data.feature_shape(), data.num_classes(), std::move(out));
}

NormalizedDataset normalize(const Dataset& data) {
  NormStats stats = fit_normalization(data);
  return {apply_normalization(data, stats), std::move(stats)};
}

}  // namespace hda
