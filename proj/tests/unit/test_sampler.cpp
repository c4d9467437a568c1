#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "hda/log.hpp"
#include "hda/sampler.hpp"
#include "test_support.hpp"

namespace hda {
namespace {

struct Domains {
  Dataset source;
  Dataset target;
};

Domains make(std::size_t ns, std::size_t nt, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  return {test::random_dataset(Domain::Source, ns, 2, 2, rng),
          test::random_dataset(Domain::Target, nt, 2, 2, rng)};
}

TEST(Sampler, BatchOf256IsSplitEvenly) {
  const Domains d = make(1000, 900);
  BatchSampler s(d.source, d.target, 256, 3);
  s.start_epoch();
  const Batch b = s.next();
  EXPECT_EQ(b.n_source, 128u);
  EXPECT_EQ(b.n_target, 128u);
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(b.members[i].domain, i < 128 ? Domain::Source : Domain::Target);
    if (i >= 128) {
      EXPECT_EQ(b.labels[i], -1);
    }
  }
  EXPECT_EQ(s.batches_per_epoch(), 8u);
}

TEST(Sampler, SmallestBatch) {
  const Domains d = make(10, 10);
  BatchSampler s(d.source, d.target, 4, 3);
  s.start_epoch();
  const Batch b = s.next();
  EXPECT_EQ(b.n_source, 2u);
  EXPECT_EQ(b.n_target, 2u);
}

TEST(Sampler, SameSeedSameBatches) {
  const Domains d = make(100, 80);
  BatchSampler a(d.source, d.target, 16, 42), b(d.source, d.target, 16, 42);
  for (int epoch = 0; epoch < 2; ++epoch) {
    a.start_epoch();
    b.start_epoch();
    for (std::size_t k = 0; k < a.batches_per_epoch(); ++k) {
      const Batch x = a.next(), y = b.next();
      EXPECT_EQ(x.features, y.features);
      for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x.members[i].id, y.members[i].id);
    }
  }
}

TEST(Sampler, WithoutReplacementWithinAPass) {
  const Domains d = make(64, 64);
  BatchSampler s(d.source, d.target, 16, 5);
  s.start_epoch();
  std::map<std::int64_t, int> seen;
  for (std::size_t k = 0; k < s.batches_per_epoch(); ++k) {
    for (const SampleRef& r : s.next().members) {
      if (r.domain == Domain::Source) ++seen[r.id];
    }
  }
  EXPECT_EQ(seen.size(), 64u);
  for (const auto& [id, n] : seen) EXPECT_EQ(n, 1) << id;
}

TEST(Sampler, FeaturesMatchMembers) {
  const Domains d = make(20, 30);
  BatchSampler s(d.source, d.target, 8, 6);
  s.start_epoch();
  const Batch b = s.next();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const Dataset& ds = b.members[i].domain == Domain::Source ? d.source : d.target;
    EXPECT_EQ(b.features(i, 0), ds[b.members[i].index].features.data[0]);
    EXPECT_EQ(b.features(i, 1), ds[b.members[i].index].features.data[1]);
  }
}

TEST(Sampler, SmallDomainWarnsAndDrawsWithReplacement) {
  const Domains d = make(3, 50);
  ScopedWarningCapture capture;
  BatchSampler s(d.source, d.target, 16, 7);
  EXPECT_FALSE(capture.messages().empty());
  s.start_epoch();
  const Batch b = s.next();
  EXPECT_EQ(b.n_source, 8u);
  std::set<std::int64_t> ids;
  for (std::size_t i = 0; i < b.n_source; ++i) ids.insert(b.members[i].id);
  EXPECT_LE(ids.size(), 3u);
}

}  // namespace
}  // namespace hda
