#include <benchmark/benchmark.h>

#include <random>

#include "hda/batch_graph.hpp"
#include "hda/losses.hpp"
#include "hda/ops.hpp"
#include "hda/synthetic.hpp"
#include "hda/trainer.hpp"

namespace {

hda::Dense random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  hda::Dense out({n, d});
  for (double& v : out.data) v = z(rng);
  return out;
}

void BM_BuildGraph(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const hda::Dense phi = random_rows(n, 64, 1);
  const double t = hda::percentile_threshold(phi, 5.0);
  for (auto _ : state) benchmark::DoNotOptimize(hda::build_graph(phi, t));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildGraph)->RangeMultiplier(2)->Range(32, 256)->Complexity();

void BM_MmdForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const hda::Dense s = random_rows(n, 64, 2), t = random_rows(n, 64, 3);
  hda::Dense joint({2 * n, 64});
  std::copy(s.data.begin(), s.data.end(), joint.data.begin());
  std::copy(t.data.begin(), t.data.end(), joint.data.begin() + static_cast<std::ptrdiff_t>(s.size()));
  const hda::KernelSpec spec =
      hda::KernelSpec::median_heuristic(joint, hda::kDefaultBandwidthMultipliers);
  for (auto _ : state) {
    hda::Tape tape;
    const hda::Tensor a = tape.variable(s), b = tape.variable(t);
    tape.backward(hda::mmd_loss(a, b, spec));
    benchmark::DoNotOptimize(a.grad());
  }
}
BENCHMARK(BM_MmdForwardBackward)->Arg(32)->Arg(128);

void BM_TrainEpoch(benchmark::State& state) {
  hda::SyntheticConfig sc;
  sc.per_class = 128;
  sc.shift.rotation_deg = 45.0;
  std::mt19937_64 rng(4);
  const hda::SyntheticDomains d = hda::gen_synthetic_shift(sc, rng);
  const hda::Dataset source = hda::normalize(d.source).data;
  const hda::Dataset target = hda::normalize(d.target).data;
  hda::TrainConfig c;
  c.epochs = 1;
  c.threshold_mode = hda::ThresholdMode::Percentile;
  c.threshold_percentile = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(hda::train(c, source, target));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
