#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace qrng {

/// Reproducibility token. Every stochastic operation takes one explicitly.
struct Seed {
  std::uint64_t value = 0;
  constexpr auto operator<=>(const Seed&) const = default;
};

/// splitmix64 finalizer (Steele, Lea, Flood). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Child seed for counter `index` under `parent`.
///
/// Seeds form a tree: master -> sweep point -> frame -> stream. Each level is
/// derive_seed(parent, index), so a child never depends on how many siblings
/// were drawn before it and nothing is ever reseeded sequentially.
constexpr Seed derive_seed(Seed parent, std::uint64_t index) {
  constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
  return Seed{mix64(parent.value ^ mix64((index + 1) * golden))};
}

/// Well-known stream tags below a frame seed.
enum class Stream : std::uint64_t { phase = 1, drift = 2, controller = 3, electrical_noise = 4 };

constexpr Seed derive_seed(Seed frame, Stream stream) {
  return derive_seed(frame, static_cast<std::uint64_t>(stream));
}

/// xoshiro256** (Blackman & Vigna), state expanded from the seed via splitmix64.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(Seed seed) {
    std::uint64_t x = seed.value;
    for (auto& word : state_) {
      x += 0x9E3779B97F4A7C15ULL;
      word = mix64(x);
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on (0, 1], never zero.
  double uniform_open0() { return (static_cast<double>((*this)() >> 11) + 1.0) * 0x1.0p-53; }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4]{};
};

namespace detail {

/// Layer tables for a 128-layer ziggurat (Marsaglia-Tsang, Doornik's variant).
struct ZigguratTables {
  static constexpr int layers = 128;
  static constexpr double tail_start = 3.442619855899;
  static constexpr double layer_area = 9.91256303526217e-3;

  double x[layers + 1];
  double ratio[layers];

  ZigguratTables() {
    const auto density = [](double v) { return std::exp(-0.5 * v * v); };
    x[0] = layer_area / density(tail_start);
    x[1] = tail_start;
    for (int i = 2; i < layers; ++i) x[i] = std::sqrt(-2.0 * std::log(layer_area / x[i - 1] + density(x[i - 1])));
    x[layers] = 0.0;
    for (int i = 0; i < layers; ++i) ratio[i] = x[i + 1] / x[i];
  }

  static const ZigguratTables& get() {
    static const ZigguratTables tables;
    return tables;
  }
};

}  // namespace detail

/// Standard normal variates by the ziggurat method.
///
/// Implemented here rather than with std::normal_distribution so that a
/// (seed, draw count) pair yields the same value on every standard library.
class GaussianSource {
 public:
  explicit GaussianSource(Seed seed) : engine_(seed), tables_(&detail::ZigguratTables::get()) {}

  double operator()() {
    const auto& t = *tables_;
    for (;;) {
      const std::uint64_t bits = engine_();
      const int layer = static_cast<int>(bits & 0x7F);
      const double u = static_cast<double>(bits >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
      if (std::fabs(u) < t.ratio[layer]) return u * t.x[layer];
      if (layer == 0) return tail(u < 0.0);
      const double v = u * t.x[layer];
      const double f0 = std::exp(-0.5 * (t.x[layer] * t.x[layer] - v * v));
      const double f1 = std::exp(-0.5 * (t.x[layer + 1] * t.x[layer + 1] - v * v));
      if (f1 + engine_.uniform() * (f0 - f1) < 1.0) return v;
    }
  }

  Xoshiro256& engine() { return engine_; }

 private:
  double tail(bool negative) {
    constexpr double r = detail::ZigguratTables::tail_start;
    double x = 0.0;
    double y = 0.0;
    do {
      x = std::log(engine_.uniform_open0()) / r;
      y = std::log(engine_.uniform_open0());
    } while (-2.0 * y < x * x);
    return negative ? x - r : r - x;
  }

  Xoshiro256 engine_;
  const detail::ZigguratTables* tables_;
};

}  // namespace qrng
