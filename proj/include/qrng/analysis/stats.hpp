#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "qrng/error.hpp"

namespace qrng::stats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Regularized upper incomplete gamma Q(a, x).
inline double igamc(double a, double x) {
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(a, x);
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;         // unbiased
  double excess_kurtosis = 0.0;  // sample estimate, 0 for a Gaussian
  std::size_t count = 0;
};

inline Moments moments(std::span<const double> x) {
  detail::require(x.size() >= 2, "moments: need at least two values");
  Moments m;
  m.count = x.size();
  const double n = static_cast<double>(x.size());
  double sum = 0.0;
  for (double v : x) sum += v;
  m.mean = sum / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m.variance = m2 / (n - 1.0);
  const double pop_var = m2 / n;
  m.excess_kurtosis = pop_var > 0.0 ? (m4 / n) / (pop_var * pop_var) - 3.0 : 0.0;
  return m;
}

/// Asymptotic Kolmogorov survival function Q_KS(lambda).
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against a continuous CDF.
inline KsResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  detail::require(!x.empty(), "ks_test: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  const double sqrt_n = std::sqrt(n);
  return {d, kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d)};
}

inline KsResult ks_uniform(std::vector<double> x, double lo = 0.0, double hi = 1.0) {
  return ks_test(std::move(x), [lo, hi](double v) { return std::clamp((v - lo) / (hi - lo), 0.0, 1.0); });
}

}  // namespace qrng::stats
