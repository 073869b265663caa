// Extraction throughput: mean threshold, binarize two frames, XOR. Rates are
// reported in extracted (XOR output) bits per second on one thread.

#include <cstddef>
#include <vector>

#include <benchmark/benchmark.h>

#include "qrng/extraction.hpp"
#include "qrng/random.hpp"

namespace {

std::vector<double> gaussian_frame(std::size_t n, std::uint64_t seed) {
  qrng::GaussianSource g(qrng::Seed{seed});
  std::vector<double> v(n);
  for (auto& x : v) x = g();
  return v;
}

void BM_BinarizeXor(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_frame(n, 1);
  const auto b = gaussian_frame(n, 2);
  for (auto _ : state) {
    const qrng::BitStream bin1 = qrng::binarize(a, 0.0, 1e9);
    const qrng::BitStream bin2 = qrng::binarize(b, 0.0, 1e9);
    qrng::BitStream bin3 = qrng::xor_combine(bin1, bin2);
    benchmark::DoNotOptimize(bin3.bytes().data());
  }
  state.counters["out_bits/s"] =
      benchmark::Counter(static_cast<double>(n) * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}

void BM_ThresholdBinarizeXor(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  qrng::SampleSeries a{qrng::Seconds(1e-9), gaussian_frame(n, 1), std::nullopt, qrng::Seconds(0.0)};
  qrng::SampleSeries b{qrng::Seconds(1e-9), gaussian_frame(n, 2), std::nullopt, qrng::Seconds(0.0)};
  for (auto _ : state) {
    const qrng::BitStream bin1 = qrng::binarize(a, qrng::mean_threshold(a));
    const qrng::BitStream bin2 = qrng::binarize(b, qrng::mean_threshold(b));
    qrng::BitStream bin3 = qrng::xor_combine(bin1, bin2);
    benchmark::DoNotOptimize(bin3.bytes().data());
  }
  state.counters["out_bits/s"] =
      benchmark::Counter(static_cast<double>(n) * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}

void BM_XorOnly(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const qrng::BitStream bin1 = qrng::binarize(gaussian_frame(n, 1), 0.0);
  const qrng::BitStream bin2 = qrng::binarize(gaussian_frame(n, 2), 0.0);
  for (auto _ : state) {
    qrng::BitStream bin3 = qrng::xor_combine(bin1, bin2);
    benchmark::DoNotOptimize(bin3.bytes().data());
  }
  state.counters["out_bits/s"] =
      benchmark::Counter(static_cast<double>(n) * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}

}  // namespace

BENCHMARK(BM_BinarizeXor)->Arg(1 << 20)->Arg(1 << 24)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThresholdBinarizeXor)->Arg(1'000'000)->Arg(1 << 24)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_XorOnly)->Arg(1 << 24)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
