#include "hda/sampler.hpp"

#include <algorithm>
#include <numeric>

#include "hda/errors.hpp"
#include "hda/log.hpp"

namespace hda {

BatchSampler::BatchSampler(const Dataset& source, const Dataset& target,
                           std::size_t batch_size, std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw ContractError("batch size must be even and at least 2, got " +
                        std::to_string(batch_size));
  }
  if (source.empty() || target.empty()) {
    throw ContractError("both source and target sets must be non-empty");
  }
  if (source.feature_shape() != target.feature_shape()) {
    throw ShapeError("source features " + shape_string(source.feature_shape()) +
                     " and target features " + shape_string(target.feature_shape()) +
                     " differ");
  }
  const std::size_t half = batch_size / 2;
  for (auto [stream, data] : {std::pair{&source_, &source}, std::pair{&target_, &target}}) {
    stream->data = data;
    stream->order.resize(data->size());
    std::iota(stream->order.begin(), stream->order.end(), std::size_t{0});
    stream->with_replacement = data->size() < half;
    if (stream->with_replacement) {
      warn(std::string(domain_name(data->domain())) + " set has " +
           std::to_string(data->size()) + " samples, fewer than B/2 = " +
           std::to_string(half) + "; sampling with replacement");
    }
  }
  start_epoch();
}

std::size_t BatchSampler::batches_per_epoch() const {
  const std::size_t half = batch_size_ / 2;
  const std::size_t n = std::max(source_.data->size(), target_.data->size());
  return (n + half - 1) / half;
}

void BatchSampler::reshuffle(Stream& s) {
  std::shuffle(s.order.begin(), s.order.end(), rng_);
  s.cursor = 0;
}

void BatchSampler::start_epoch() {
  reshuffle(source_);
  reshuffle(target_);
}

std::vector<std::size_t> BatchSampler::draw(Stream& s, std::size_t count) {
  std::vector<std::size_t> picked;
  picked.reserve(count);
  if (s.with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, s.data->size() - 1);
    for (std::size_t i = 0; i < count; ++i) picked.push_back(pick(rng_));
    return picked;
  }
  while (picked.size() < count) {
    if (s.cursor == s.order.size()) reshuffle(s);
    picked.push_back(s.order[s.cursor++]);
  }
  return picked;
}

Batch BatchSampler::next() {
  const std::size_t half = batch_size_ / 2;
  const std::vector<std::size_t> src = draw(source_, half);
  const std::vector<std::size_t> tgt = draw(target_, half);

  const std::size_t f = source_.data->feature_size();
  Batch b;
  b.n_source = half;
  b.n_target = half;
  b.features = Dense({batch_size_, f});
  b.members.reserve(batch_size_);
  b.labels.reserve(batch_size_);
  std::size_t row = 0;
  for (auto [stream, picks] : {std::pair{&source_, &src}, std::pair{&target_, &tgt}}) {
    for (std::size_t idx : *picks) {
      const Sample& s = (*stream->data)[idx];
      b.members.push_back({s.domain, idx, s.id});
      b.labels.push_back(s.domain == Domain::Source ? s.label : -1);
      std::copy(s.features.data.begin(), s.features.data.end(),
                b.features.data.begin() + static_cast<std::ptrdiff_t>(row * f));
      ++row;
    }
  }
  return b;
}

}  // namespace hda
