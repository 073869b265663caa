#pragma once

// Desk-scale statistical battery in the style of NIST SP 800-22: frequency,
// block frequency, runs, longest run of ones, serial (m = 2), cumulative sums
// and approximate entropy (m = 2). Each test yields one or more p-values.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qrng/analysis/stats.hpp"
#include "qrng/error.hpp"
#include "qrng/extraction.hpp"

namespace qrng {

struct TestRecord {
  std::string name;
  double statistic = 0.0;
  std::optional<double> p_value;  // empty when the test did not run
  bool passed = false;
  std::string note;

  [[nodiscard]] bool ran() const { return p_value.has_value(); }
};

struct TestReport {
  std::vector<TestRecord> tests;
  bool passed = false;
  std::size_t input_length = 0;
  double alpha = 0.01;

  [[nodiscard]] std::size_t pass_count() const {
    return static_cast<std::size_t>(std::count_if(tests.begin(), tests.end(), [](const auto& t) { return t.passed; }));
  }

  [[nodiscard]] const TestRecord* find(const std::string& name) const {
    for (const auto& t : tests)
      if (t.name == name) return &t;
    return nullptr;
  }
};

namespace battery {

inline TestRecord not_run(std::string name, std::string why) {
  return {std::move(name), 0.0, std::nullopt, false, std::move(why)};
}

inline TestRecord finish(std::string name, double statistic, double p, double alpha) {
  return {std::move(name), statistic, p, p >= alpha, {}};
}

inline TestRecord frequency(const BitStream& bits, double alpha) {
  const std::size_t n = bits.size();
  if (n < 100) return not_run("frequency", "needs n >= 100");
  const double s = 2.0 * static_cast<double>(bits.count_ones()) - static_cast<double>(n);
  const double s_obs = std::fabs(s) / std::sqrt(static_cast<double>(n));
  return finish("frequency", s_obs, std::erfc(s_obs / std::sqrt(2.0)), alpha);
}

inline TestRecord block_frequency(const BitStream& bits, double alpha, std::size_t block = 128) {
  const std::size_t n = bits.size();
  const std::size_t blocks = n / block;
  if (n < 100 || blocks == 0) return not_run("block_frequency", "needs n >= 100 and at least one block");
  double chi2 = 0.0;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::size_t ones = 0;
    for (std::size_t i = b * block; i < (b + 1) * block; ++i) ones += bits[i];
    const double pi = static_cast<double>(ones) / static_cast<double>(block) - 0.5;
    chi2 += pi * pi;
  }
  chi2 *= 4.0 * static_cast<double>(block);
  return finish("block_frequency", chi2, stats::igamc(static_cast<double>(blocks) / 2.0, chi2 / 2.0), alpha);
}

inline TestRecord runs(const BitStream& bits, double alpha) {
  const std::size_t n = bits.size();
  if (n < 100) return not_run("runs", "needs n >= 100");
  const double nn = static_cast<double>(n);
  const double pi = static_cast<double>(bits.count_ones()) / nn;
  if (std::fabs(pi - 0.5) >= 2.0 / std::sqrt(nn)) {
    // Frequency prerequisite failed; the test is defined to fail.
    TestRecord r = finish("runs", 0.0, 0.0, alpha);
    r.note = "frequency prerequisite failed";
    return r;
  }
  std::size_t v = 1;
  for (std::size_t i = 1; i < n; ++i) v += bits[i] != bits[i - 1];
  const double expected = 2.0 * nn * pi * (1.0 - pi);
  const double p = std::erfc(std::fabs(static_cast<double>(v) - expected) /
                             (2.0 * std::sqrt(2.0 * nn) * pi * (1.0 - pi)));
  return finish("runs", static_cast<double>(v), p, alpha);
}

inline TestRecord longest_run(const BitStream& bits, double alpha) {
  const std::size_t n = bits.size();
  if (n < 128) return not_run("longest_run", "needs n >= 128");
  std::size_t block = 0;
  std::size_t lo = 0;  // run length mapped to class 0
  std::vector<double> probs;
  if (n < 6272) {
    block = 8;
    lo = 1;
    probs = {0.2148, 0.3672, 0.2305, 0.1875};
  } else if (n < 750000) {
    block = 128;
    lo = 4;
    probs = {0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124};
  } else {
    block = 10000;
    lo = 10;
    probs = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
  }
  const std::size_t classes = probs.size();
  const std::size_t blocks = n / block;
  std::vector<double> counts(classes, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::size_t longest = 0;
    std::size_t run = 0;
    for (std::size_t i = b * block; i < (b + 1) * block; ++i) {
      run = bits[i] ? run + 1 : 0;
      longest = std::max(longest, run);
    }
    const std::size_t cls = std::min(classes - 1, longest <= lo ? 0 : longest - lo);
    counts[cls] += 1.0;
  }
  double chi2 = 0.0;
  const double nb = static_cast<double>(blocks);
  for (std::size_t k = 0; k < classes; ++k) {
    const double e = nb * probs[k];
    chi2 += (counts[k] - e) * (counts[k] - e) / e;
  }
  return finish("longest_run", chi2, stats::igamc(static_cast<double>(classes - 1) / 2.0, chi2 / 2.0), alpha);
}

/// Counts of overlapping m-bit patterns with wrap-around, m in [1, 3].
inline std::vector<double> pattern_counts(const BitStream& bits, unsigned m) {
  const std::size_t n = bits.size();
  std::vector<double> counts(std::size_t{1} << m, 0.0);
  unsigned window = 0;
  const unsigned mask = (1U << m) - 1U;
  for (unsigned j = 0; j + 1 < m; ++j) window = ((window << 1) | bits[j]) & mask;
  for (std::size_t i = 0; i < n; ++i) {
    window = ((window << 1) | bits[(i + m - 1) % n]) & mask;
    counts[window] += 1.0;
  }
  return counts;
}

inline double psi_squared(const BitStream& bits, unsigned m) {
  if (m == 0) return 0.0;
  const auto counts = pattern_counts(bits, m);
  const double n = static_cast<double>(bits.size());
  double sum = 0.0;
  for (double c : counts) sum += c * c;
  return sum * static_cast<double>(std::size_t{1} << m) / n - n;
}

inline std::array<TestRecord, 2> serial(const BitStream& bits, double alpha) {
  if (bits.size() < 32)
    return {not_run("serial_1", "needs n >= 32"), not_run("serial_2", "needs n >= 32")};
  const double p2 = psi_squared(bits, 2);
  const double p1 = psi_squared(bits, 1);
  const double del1 = p2 - p1;
  const double del2 = p2 - 2.0 * p1;
  return {finish("serial_1", del1, stats::igamc(1.0, del1 / 2.0), alpha),
          finish("serial_2", del2, stats::igamc(0.5, del2 / 2.0), alpha)};
}

inline double cusum_p_value(double z, double n) {
  const double sqrt_n = std::sqrt(n);
  double sum1 = 0.0;
  for (long k = static_cast<long>(std::floor((-n / z + 1.0) / 4.0)); k <= static_cast<long>(std::floor((n / z - 1.0) / 4.0)); ++k)
    sum1 += stats::normal_cdf((4.0 * k + 1.0) * z / sqrt_n) - stats::normal_cdf((4.0 * k - 1.0) * z / sqrt_n);
  double sum2 = 0.0;
  for (long k = static_cast<long>(std::floor((-n / z - 3.0) / 4.0)); k <= static_cast<long>(std::floor((n / z - 1.0) / 4.0)); ++k)
    sum2 += stats::normal_cdf((4.0 * k + 3.0) * z / sqrt_n) - stats::normal_cdf((4.0 * k + 1.0) * z / sqrt_n);
  return std::clamp(1.0 - sum1 + sum2, 0.0, 1.0);
}

inline std::array<TestRecord, 2> cumulative_sums(const BitStream& bits, double alpha) {
  const std::size_t n = bits.size();
  if (n < 100)
    return {not_run("cusum_forward", "needs n >= 100"), not_run("cusum_backward", "needs n >= 100")};
  long s = 0;
  long max_fwd = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s += bits[i] ? 1 : -1;
    max_fwd = std::max(max_fwd, std::labs(s));
  }
  s = 0;
  long max_bwd = 0;
  for (std::size_t i = n; i-- > 0;) {
    s += bits[i] ? 1 : -1;
    max_bwd = std::max(max_bwd, std::labs(s));
  }
  const double nn = static_cast<double>(n);
  auto record = [&](std::string name, long z) {
    return finish(std::move(name), static_cast<double>(z), cusum_p_value(static_cast<double>(z), nn), alpha);
  };
  return {record("cusum_forward", max_fwd), record("cusum_backward", max_bwd)};
}

inline TestRecord approximate_entropy(const BitStream& bits, double alpha, unsigned m = 2) {
  const std::size_t n = bits.size();
  if (n < 64) return not_run("approximate_entropy", "needs n >= 64");
  const double nn = static_cast<double>(n);
  auto phi = [&](unsigned mm) {
    if (mm == 0) return 0.0;
    double sum = 0.0;
    for (double c : pattern_counts(bits, mm))
      if (c > 0.0) sum += (c / nn) * std::log(c / nn);
    return sum;
  };
  const double apen = phi(m) - phi(m + 1);
  const double chi2 = 2.0 * nn * (std::log(2.0) - apen);
  return finish("approximate_entropy", chi2, stats::igamc(std::ldexp(1.0, static_cast<int>(m) - 1), chi2 / 2.0), alpha);
}

}  // namespace battery

/// Runs every test. Overall pass requires every test to have run and passed.
inline TestReport run_battery(const BitStream& bits, double alpha = 0.01) {
  detail::require(alpha > 0.0 && alpha < 1.0, "run_battery: alpha must be in (0, 1)");
  TestReport report;
  report.alpha = alpha;
  report.input_length = bits.size();
  report.tests.push_back(battery::frequency(bits, alpha));
  report.tests.push_back(battery::block_frequency(bits, alpha));
  report.tests.push_back(battery::runs(bits, alpha));
  report.tests.push_back(battery::longest_run(bits, alpha));
  for (auto& r : battery::serial(bits, alpha)) report.tests.push_back(std::move(r));
  for (auto& r : battery::cumulative_sums(bits, alpha)) report.tests.push_back(std::move(r));
  report.tests.push_back(battery::approximate_entropy(bits, alpha));
  report.passed = std::all_of(report.tests.begin(), report.tests.end(),
                              [](const TestRecord& t) { return t.ran() && t.passed; });
  return report;
}

}  // namespace qrng
