#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qrng/extraction.hpp"
#include "qrng/random.hpp"

namespace qrng::test_support {

inline std::vector<double> gaussian_vector(std::size_t n, std::uint64_t seed, double sigma = 1.0) {
  GaussianSource g(Seed{seed});
  std::vector<double> v(n);
  for (auto& x : v) x = sigma * g();
  return v;
}

/// Bernoulli(p) stream from a seeded generator; p = 0.5 gives an ideal reference.
inline BitStream bernoulli_stream(std::size_t n, std::uint64_t seed, double p = 0.5) {
  Xoshiro256 rng(Seed{seed});
  BitStream s(Provenance::raw);
  for (std::size_t i = 0; i < n; ++i) s.push_back(rng.uniform() < p);
  return s;
}

/// Textbook two-pass autocorrelation, used as an oracle for the word-parallel one.
inline std::vector<double> naive_autocorrelation(const BitStream& bits, std::size_t max_lag) {
  const std::size_t n = bits.size();
  std::vector<double> x(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i] = bits[i] ? 1.0 : -1.0;
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : x) denom += (v - mean) * (v - mean);
  std::vector<double> rho(max_lag);
  for (std::size_t k = 1; k <= max_lag; ++k) {
    double num = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) num += (x[i] - mean) * (x[i + k] - mean);
    rho[k - 1] = num / denom;
  }
  return rho;
}

inline double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace qrng::test_support
