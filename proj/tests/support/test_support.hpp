#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hda/dataset.hpp"
#include "hda/tensor.hpp"

namespace hda::test {

Dense random_dense(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0);

/// Labelled source and unlabelled target with Gaussian features, for tests
/// that need datasets but no particular geometry.
Dataset random_dataset(Domain domain, std::size_t n, std::size_t dim, int classes,
                       std::mt19937_64& rng);

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::string& bytes);

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace hda::test
