#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hda/dataset.hpp"
#include "hda/errors.hpp"
#include "hda/log.hpp"
#include "test_support.hpp"

namespace hda {
namespace {

Dataset column(std::vector<double> values) {
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < values.size(); ++i) {
    samples.push_back({static_cast<std::int64_t>(i), Dense({1}, {values[i]}), Domain::Source, 0});
  }
  return Dataset(Domain::Source, {1}, 1, std::move(samples));
}

TEST(Normalize, ThreeValueColumn) {
  const NormalizedDataset n = normalize(column({1.0, 2.0, 3.0}));
  // Population std of {1,2,3} is sqrt(2/3); (1-2)/sqrt(2/3) = -1.224744871...
  const double z = 1.0 / std::sqrt(2.0 / 3.0);
  EXPECT_NEAR(n.data[0].features.data[0], -z, 1e-12);
  EXPECT_NEAR(n.data[1].features.data[0], 0.0, 1e-12);
  EXPECT_NEAR(n.data[2].features.data[0], z, 1e-12);
  EXPECT_NEAR(z, 1.2247448713915890, 1e-12);
}

TEST(Normalize, IsIdempotent) {
  std::mt19937_64 rng(1);
  const Dataset d = test::random_dataset(Domain::Source, 50, 4, 2, rng);
  const Dataset once = normalize(d).data;
  const Dataset twice = normalize(once).data;
  for (std::size_t i = 0; i < once.size(); ++i) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(once[i].features.data[k], twice[i].features.data[k], 1e-9);
    }
  }
}

TEST(Normalize, ZeroMeanUnitVarianceProperty) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = normalize(test::random_dataset(Domain::Source, 30, 3, 2, rng)).data;
    for (std::size_t k = 0; k < 3; ++k) {
      double m = 0.0, v = 0.0;
      for (const Sample& s : d.samples()) m += s.features.data[k];
      m /= static_cast<double>(d.size());
      for (const Sample& s : d.samples()) v += (s.features.data[k] - m) * (s.features.data[k] - m);
      v /= static_cast<double>(d.size());
      EXPECT_NEAR(m, 0.0, 1e-12);
      EXPECT_NEAR(v, 1.0, 1e-9);
    }
  }
}

TEST(Normalize, ConstantChannelWarnsAndStaysFinite) {
  ScopedWarningCapture capture;
  const NormalizedDataset n = normalize(column({4.0, 4.0, 4.0}));
  EXPECT_FALSE(capture.messages().empty());
  EXPECT_EQ(n.stats.stddev[0], std::sqrt(kVarianceFloor));
  for (const Sample& s : n.data.samples()) EXPECT_EQ(s.features.data[0], 0.0);
}

TEST(Normalize, ImageStatisticsArePerPlane) {
  std::vector<Sample> samples;
  // Plane 0 holds 1s, plane 1 holds 3s and 5s: means 1 and 4.
  samples.push_back({0, Dense({2, 1, 2}, {1, 1, 3, 5}), Domain::Source, 0});
  samples.push_back({1, Dense({2, 1, 2}, {1, 1, 5, 3}), Domain::Source, 0});
  ScopedWarningCapture capture;
  const NormStats s = fit_normalization(Dataset(Domain::Source, {2, 1, 2}, 1, samples));
  ASSERT_EQ(s.mean.size(), 2u);
  EXPECT_DOUBLE_EQ(s.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(s.mean[1], 4.0);
  EXPECT_DOUBLE_EQ(s.stddev[1], 1.0);
}

TEST(DatasetFile, RoundTripIsExact) {
  test::TempDir dir;
  std::mt19937_64 rng(3);
  const Dataset src = test::random_dataset(Domain::Source, 17, 3, 3, rng);
  write_dataset(dir / "s.hda", src);
  const Dataset back = read_dataset(dir / "s.hda", Domain::Source);
  ASSERT_EQ(back.size(), src.size());
  EXPECT_EQ(back.feature_shape(), src.feature_shape());
  EXPECT_EQ(back.num_classes(), 3);
  for (std::size_t i = 0; i < src.size(); ++i) {
    EXPECT_EQ(back[i].label, src[i].label);
    EXPECT_EQ(back[i].id, static_cast<std::int64_t>(i));
    for (std::size_t k = 0; k < 3; ++k) {
      EXPECT_EQ(back[i].features.data[k], static_cast<double>(static_cast<float>(src[i].features.data[k])));
    }
  }
}

TEST(DatasetFile, ImageShapeRoundTrips) {
  test::TempDir dir;
  std::vector<Sample> samples{{0, Dense({1, 2, 3}, {0, 1, 2, 3, 4, 5}), Domain::Source, 1}};
  write_dataset(dir / "i.hda", Dataset(Domain::Source, {1, 2, 3}, 2, samples));
  const Dataset back = read_dataset(dir / "i.hda", Domain::Source);
  EXPECT_TRUE(back.is_image());
  EXPECT_EQ(back[0].features, samples[0].features);
}

TEST(DatasetFile, BadMagicReportsOffsetZero) {
  test::TempDir dir;
  test::write_bytes(dir / "bad.hda", "XXXX\x01\x00\x00\x00");
  try {
    read_dataset(dir / "bad.hda", Domain::Source);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(DatasetFile, TruncatedPayloadIsFormatError) {
  test::TempDir dir;
  std::mt19937_64 rng(4);
  write_dataset(dir / "s.hda", test::random_dataset(Domain::Source, 5, 2, 2, rng));
  std::string bytes = test::read_bytes(dir / "s.hda");
  bytes.resize(bytes.size() - 3);
  test::write_bytes(dir / "s.hda", bytes);
  EXPECT_THROW(read_dataset(dir / "s.hda", Domain::Source), FormatError);
  bytes.resize(10);
  test::write_bytes(dir / "s.hda", bytes);
  EXPECT_THROW(read_dataset(dir / "s.hda", Domain::Source), FormatError);
}

TEST(DatasetFile, LabelledFileRejectedAsTarget) {
  test::TempDir dir;
  std::mt19937_64 rng(5);
  write_dataset(dir / "s.hda", test::random_dataset(Domain::Source, 5, 2, 2, rng));
  EXPECT_THROW(read_dataset(dir / "s.hda", Domain::Target), FormatError);
}

TEST(DatasetFile, TargetCarriesNoLabels) {
  std::mt19937_64 rng(6);
  const Dataset t = test::random_dataset(Domain::Target, 8, 2, 2, rng);
  for (int l : t.labels()) EXPECT_EQ(l, -1);
  std::vector<Sample> bad{{0, Dense({2}), Domain::Target, 1}};
  EXPECT_THROW(Dataset(Domain::Target, {2}, 2, bad), ContractError);
}

TEST(EvalSidecar, RoundTripAndRangeCheck) {
  test::TempDir dir;
  const EvalLabels labels({0, 1, 1, 0, 2}, 3);
  write_eval_labels(dir / "e.hda", labels, {2});
  EXPECT_EQ(read_eval_labels(dir / "e.hda").labels(), labels.labels());
  EXPECT_THROW(EvalLabels({0, 3}, 3), ContractError);
}

TEST(Digest, StableAndSensitive) {
  test::TempDir dir;
  test::write_bytes(dir / "a", "hello");
  test::write_bytes(dir / "b", "hellp");
  // FNV-1a 64 of "hello".
  EXPECT_EQ(file_digest(dir / "a"), "a430d84680aabd0b");
  EXPECT_NE(file_digest(dir / "a"), file_digest(dir / "b"));
  EXPECT_EQ(file_digest(dir / "a").size(), 16u);
}

}  // namespace
}  // namespace hda
