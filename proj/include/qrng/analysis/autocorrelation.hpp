#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qrng/error.hpp"
#include "qrng/extraction.hpp"

namespace qrng {

namespace detail {

/// Packed stream viewed as big-endian 64-bit words, zero-padded by one word so
/// reads at any bit offset inside the stream are in range.
class WordView {
 public:
  explicit WordView(const BitStream& bits) : words_(bits.size() / 64 + 2, 0) {
    const auto bytes = bits.bytes();
    for (std::size_t i = 0; i < bytes.size(); ++i)
      words_[i / 8] |= static_cast<std::uint64_t>(bytes[i]) << (56 - 8 * (i % 8));
  }

  [[nodiscard]] std::uint64_t at_bit(std::size_t offset) const {
    const std::size_t w = offset / 64;
    const unsigned r = offset % 64;
    return r == 0 ? words_[w] : (words_[w] << r) | (words_[w + 1] >> (64 - r));
  }

 private:
  std::vector<std::uint64_t> words_;
};

}  // namespace detail

/// Autocorrelation of the +/-1-mapped stream at lags 1..max_lag.
///
/// rho_k = sum_{i<N-k} (x_i - m)(x_{i+k} - m) / sum_i (x_i - m)^2, i.e. the
/// biased estimator (both sums normalized by N). Lag products are counted 64
/// bits at a time with XOR + popcount.
inline std::vector<double> autocorrelation(const BitStream& bits, std::size_t max_lag) {
  const std::size_t n = bits.size();
  detail::require(max_lag >= 1, "autocorrelation: max_lag must be >= 1");
  detail::require(n > max_lag, "autocorrelation: stream must be longer than max_lag");

  const auto ones = static_cast<double>(bits.count_ones());
  const double total = 2.0 * ones - static_cast<double>(n);  // sum of x_i
  const double mean = total / static_cast<double>(n);
  const double denom = static_cast<double>(n) * (1.0 - mean * mean);
  if (denom <= 0.0) throw UndefinedNormalization("autocorrelation: constant stream has zero variance");

  const detail::WordView view(bits);
  std::vector<double> rho(max_lag);
  double head = 0.0;  // sum of x_i for i < k
  double tail = 0.0;  // sum of x_i for i >= n - k
  for (std::size_t k = 1; k <= max_lag; ++k) {
    head += bits[k - 1] ? 1.0 : -1.0;
    tail += bits[n - k] ? 1.0 : -1.0;

    const std::size_t overlap = n - k;
    std::size_t mismatches = 0;
    const std::size_t full_words = overlap / 64;
    for (std::size_t w = 0; w < full_words; ++w)
      mismatches += static_cast<std::size_t>(std::popcount(view.at_bit(64 * w) ^ view.at_bit(64 * w + k)));
    if (const unsigned rest = overlap % 64; rest != 0) {
      const std::uint64_t mask = ~std::uint64_t{0} << (64 - rest);
      mismatches += static_cast<std::size_t>(
          std::popcount((view.at_bit(64 * full_words) ^ view.at_bit(64 * full_words + k)) & mask));
    }
    const double products = static_cast<double>(overlap) - 2.0 * static_cast<double>(mismatches);
    const double sum_first = total - tail;   // sum_{i<n-k} x_i
    const double sum_second = total - head;  // sum_{i>=k} x_i
    const double num = products - mean * (sum_first + sum_second) + static_cast<double>(overlap) * mean * mean;
    rho[k - 1] = num / denom;
  }
  return rho;
}

}  // namespace qrng
