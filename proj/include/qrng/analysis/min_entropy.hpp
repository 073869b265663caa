#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qrng/error.hpp"
#include "qrng/signal.hpp"

namespace qrng {

struct MinEntropyEstimate {
  double per_sample = 0.0;       // -log2(max bin probability) of the analog histogram
  double per_bit = 0.0;          // -log2(max(P(0), P(1))) after mean-threshold binarization
  double max_bin_probability = 0.0;
  std::size_t bin_count = 0;
  double range_lo = 0.0;
  double range_hi = 0.0;
};

/// Histogram min-entropy. Bins span [lo, hi] (default: the data range);
/// values outside the range fall into the edge bins.
inline MinEntropyEstimate min_entropy(std::span<const double> values, std::size_t bin_count,
                                      std::optional<std::pair<double, double>> range = std::nullopt) {
  detail::require(!values.empty(), "min_entropy: empty input");
  detail::require(bin_count >= 1, "min_entropy: bin_count must be >= 1");
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = range ? range->first : *min_it;
  const double hi = range ? range->second : *max_it;
  detail::require(hi >= lo, "min_entropy: empty range");

  std::vector<std::size_t> hist(bin_count, 0);
  const double width = (hi - lo) / static_cast<double>(bin_count);
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    std::size_t bin = 0;
    if (width > 0.0) {
      const double pos = std::floor((v - lo) / width);
      bin = pos <= 0.0 ? 0 : std::min(bin_count - 1, static_cast<std::size_t>(pos));
    }
    ++hist[bin];
  }
  const double n = static_cast<double>(values.size());
  const double p_max = static_cast<double>(*std::max_element(hist.begin(), hist.end())) / n;

  const double mean = sum / n;
  const auto ones = static_cast<double>(std::count_if(values.begin(), values.end(), [mean](double v) { return v > mean; }));
  const double p_bit = std::max(ones, n - ones) / n;

  // -log2(1) is -0.0; report a clean zero.
  return {std::max(0.0, -std::log2(p_max)), std::max(0.0, -std::log2(p_bit)), p_max, bin_count, lo, hi};
}

inline MinEntropyEstimate min_entropy(const SampleSeries& series, std::size_t bin_count,
                                      std::optional<std::pair<double, double>> range = std::nullopt) {
  return min_entropy(series.values, bin_count, range);
}

}  // namespace qrng
