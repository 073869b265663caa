#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include <fftw3.h>

#include "qrng/error.hpp"
#include "qrng/signal.hpp"
#include "qrng/units.hpp"

namespace qrng {

enum class Window { rectangular, hann };

inline const char* to_string(Window w) { return w == Window::hann ? "hann" : "rectangular"; }

inline Window window_from_string(std::string_view s) {
  if (s == "hann") return Window::hann;
  if (s == "rectangular") return Window::rectangular;
  throw InvalidParameter("unknown window '" + std::string(s) + "' (expected hann or rectangular)");
}

/// One-sided averaged-periodogram estimate. DC is excluded; bins run from
/// fs/L to fs/2. Densities are in dB relative to `reference_level` (units^2/Hz).
struct SpectrumEstimate {
  std::vector<double> frequencies;    // Hz
  std::vector<double> power_density;  // dB re reference_level
  std::size_t segment_length = 0;
  Window window = Window::hann;
  std::size_t averages = 0;
  double reference_level = 1.0;

  [[nodiscard]] double linear(std::size_t i) const {
    return reference_level * std::pow(10.0, power_density[i] / 10.0);
  }

  /// Mean linear density over bins with f in [lo, hi], returned in dB.
  [[nodiscard]] double band_level_db(double lo, double hi) const {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
      if (frequencies[i] >= lo && frequencies[i] <= hi) {
        sum += linear(i);
        ++count;
      }
    }
    detail::require(count > 0, "spectrum: no bins in the requested band");
    return 10.0 * std::log10(sum / static_cast<double>(count) / reference_level);
  }
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

}  // namespace detail

/// Averaged periodogram over non-overlapping segments of `segment_length`.
inline SpectrumEstimate psd_estimate(std::span<const double> values, Seconds sample_period,
                                     std::size_t segment_length, Window window = Window::hann,
                                     double reference_level = 1.0) {
  detail::require(segment_length >= 4, "psd_estimate: segment_length must be >= 4");
  detail::require(values.size() >= 2 * segment_length, "psd_estimate: input must hold at least two segments");
  detail::require(sample_period.value() > 0.0, "psd_estimate: sample period must be > 0");
  detail::require(reference_level > 0.0, "psd_estimate: reference level must be > 0");

  const std::size_t len = segment_length;
  const std::size_t bins = len / 2 + 1;
  std::vector<double> taper(len, 1.0);
  if (window == Window::hann)
    for (std::size_t i = 0; i < len; ++i)
      taper[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(len));
  double taper_power = 0.0;
  for (double w : taper) taper_power += w * w;

  std::unique_ptr<double, detail::FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * len)));
  std::unique_ptr<fftw_complex, detail::FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  std::unique_ptr<fftw_plan_s, detail::FftwPlanDeleter> plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(len), in.get(), out.get(), FFTW_ESTIMATE));
  }

  const std::size_t segments = values.size() / len;
  std::vector<double> accum(bins, 0.0);
  for (std::size_t s = 0; s < segments; ++s) {
    const double* seg = values.data() + s * len;
    double mean = 0.0;
    for (std::size_t i = 0; i < len; ++i) mean += seg[i];
    mean /= static_cast<double>(len);
    for (std::size_t i = 0; i < len; ++i) in.get()[i] = (seg[i] - mean) * taper[i];
    fftw_execute_dft_r2c(plan.get(), in.get(), out.get());
    for (std::size_t k = 0; k < bins; ++k) {
      const double re = out.get()[k][0];
      const double im = out.get()[k][1];
      accum[k] += re * re + im * im;
    }
  }

  const double fs = 1.0 / sample_period.value();
  SpectrumEstimate est;
  est.segment_length = len;
  est.window = window;
  est.averages = segments;
  est.reference_level = reference_level;
  for (std::size_t k = 1; k < bins; ++k) {
    const bool nyquist = (len % 2 == 0) && k == len / 2;
    const double scale = (nyquist ? 1.0 : 2.0) / (fs * taper_power * static_cast<double>(segments));
    const double density = accum[k] * scale;
    est.frequencies.push_back(static_cast<double>(k) * fs / static_cast<double>(len));
    est.power_density.push_back(10.0 * std::log10(std::max(density / reference_level, 1e-300)));
  }
  return est;
}

inline SpectrumEstimate psd_estimate(const SampleSeries& series, std::size_t segment_length,
                                     Window window = Window::hann, double reference_level = 1.0) {
  return psd_estimate(series.values, series.sampling_period, segment_length, window, reference_level);
}

inline SpectrumEstimate psd_estimate(const SignalTrace& trace, std::size_t segment_length,
                                     Window window = Window::hann, double reference_level = 1.0) {
  return psd_estimate(trace.values, trace.time_step, segment_length, window, reference_level);
}

/// Mean linear density of an estimate, for use as the reference of another.
inline double mean_density(const SpectrumEstimate& est) {
  double sum = 0.0;
  for (std::size_t i = 0; i < est.frequencies.size(); ++i) sum += est.linear(i);
  return sum / static_cast<double>(est.frequencies.size());
}

/// First frequency where the density drops `drop_db` below the mean of the
/// lowest `plateau_bins` bins. Linear interpolation between bins.
inline double knee_frequency(const SpectrumEstimate& est, double drop_db = 3.0, std::size_t plateau_bins = 8) {
  detail::require(est.frequencies.size() > plateau_bins, "knee_frequency: too few bins");
  double plateau = 0.0;
  for (std::size_t i = 0; i < plateau_bins; ++i) plateau += est.linear(i);
  const double plateau_db = 10.0 * std::log10(plateau / static_cast<double>(plateau_bins) / est.reference_level);
  const double target = plateau_db - drop_db;
  for (std::size_t i = plateau_bins; i < est.frequencies.size(); ++i) {
    if (est.power_density[i] <= target) {
      const double f0 = est.frequencies[i - 1];
      const double f1 = est.frequencies[i];
      const double d0 = est.power_density[i - 1];
      const double d1 = est.power_density[i];
      return d0 == d1 ? f1 : f0 + (target - d0) * (f1 - f0) / (d1 - d0);
    }
  }
  return est.frequencies.back();
}

}  // namespace qrng
