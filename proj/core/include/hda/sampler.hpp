#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hda/dataset.hpp"

namespace hda {

struct SampleRef {
  Domain domain = Domain::Source;
  std::size_t index = 0;  // position in its dataset
  std::int64_t id = 0;
};

/// One mini-batch: a source block followed by a target block.
struct Batch {
  std::vector<SampleRef> members;
  Dense features;           // [B × feature_size]
  std::vector<int> labels;  // source labels, −1 for target rows
  std::size_t n_source = 0;
  std::size_t n_target = 0;

  std::size_t size() const { return members.size(); }
};

/// Draws balanced two-domain batches: B/2 source and B/2 target samples,
/// each domain walked through a fresh random permutation (without
/// replacement) that is reshuffled when exhausted and at every epoch start.
/// A domain with fewer than B/2 samples is drawn with replacement instead.
class BatchSampler {
 public:
  BatchSampler(const Dataset& source, const Dataset& target, std::size_t batch_size,
               std::uint64_t seed);

  std::size_t batch_size() const { return batch_size_; }
  /// ceil(max(N_s, N_t) / (B/2)).
  std::size_t batches_per_epoch() const;

  void start_epoch();
  Batch next();

 private:
  struct Stream {
    const Dataset* data = nullptr;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
    bool with_replacement = false;
  };

  void reshuffle(Stream& s);
  std::vector<std::size_t> draw(Stream& s, std::size_t count);

  Stream source_;
  Stream target_;
  std::size_t batch_size_;
  std::mt19937_64 rng_;
};

}  // namespace hda
