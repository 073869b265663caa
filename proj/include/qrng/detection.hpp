#pragma once

// Photodetection channels: first-order detector response, electrical noise,
// fixed-interval sampling and the slow monitor channel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "qrng/error.hpp"
#include "qrng/random.hpp"
#include "qrng/signal.hpp"
#include "qrng/units.hpp"

namespace qrng {

struct SpectralSpike {
  Hertz frequency{0.0};
  double amplitude = 0.0;
  double phase = 0.0;  // rad
};

struct DetectorConfig {
  Hertz bandwidth{5e9};
  double gain = 1.0;
  double white_noise_std = 0.0;  // per sample at the simulation rate
  std::vector<SpectralSpike> spikes;

  /// T_R, the reciprocal of the bandwidth.
  [[nodiscard]] Seconds response_time() const { return reciprocal(bandwidth); }

  void validate() const {
    using detail::require;
    require(bandwidth.value() > 0.0, "detector: bandwidth must be > 0");
    require(white_noise_std >= 0.0, "detector: white_noise_std must be >= 0");
    for (const auto& s : spikes) {
      require(s.frequency.value() >= 0.0, "detector: spike frequency must be >= 0");
      require(s.amplitude >= 0.0, "detector: spike amplitude must be >= 0");
    }
  }
};

/// Causal first-order low-pass, bilinear transform prewarped so the -3 dB point
/// lands exactly on the cutoff. DC gain equals `gain`.
class FirstOrderLowpass {
 public:
  FirstOrderLowpass(Hertz cutoff, Seconds time_step, double gain = 1.0) {
    detail::require(cutoff.value() > 0.0, "lowpass: cutoff must be > 0");
    detail::require(time_step.value() > 0.0, "lowpass: time_step must be > 0");
    detail::require(time_step.value() <= 0.5 / cutoff.value(),
                    "lowpass: trace time_step must be <= T_R / 2 to resolve the detector response");
    const double k = std::tan(std::numbers::pi * cutoff.value() * time_step.value());
    b0_ = gain * k / (1.0 + k);
    a1_ = (k - 1.0) / (k + 1.0);
    gain_ = gain;
  }

  /// Start from steady state for a constant input x.
  void reset(double x) {
    x_prev_ = x;
    y_prev_ = gain_ * x;
  }

  double process(double x) {
    const double y = b0_ * (x + x_prev_) - a1_ * y_prev_;
    x_prev_ = x;
    y_prev_ = y;
    return y;
  }

 private:
  double b0_ = 0.0;
  double a1_ = 0.0;
  double gain_ = 1.0;
  double x_prev_ = 0.0;
  double y_prev_ = 0.0;
};

inline SignalTrace lowpass_filter(const SignalTrace& trace, const DetectorConfig& cfg) {
  trace.validate();
  cfg.validate();
  FirstOrderLowpass filter(cfg.bandwidth, trace.time_step, cfg.gain);
  filter.reset(trace.values.front());
  SignalTrace out = trace;
  for (auto& v : out.values) v = filter.process(v);
  out.origin = TraceOrigin::detector_filtered;
  out.metadata.emplace_back("detector_bandwidth", cfg.bandwidth.value());
  out.metadata.emplace_back("detector_gain", cfg.gain);
  return out;
}

/// White Gaussian noise plus deterministic pickup lines, evaluated at absolute time t.
class ElectricalNoise {
 public:
  ElectricalNoise(const DetectorConfig& cfg, Seed seed)
      : white_std_(cfg.white_noise_std), spikes_(cfg.spikes), noise_(seed) {}

  double at(double t) {
    double v = white_std_ > 0.0 ? white_std_ * noise_() : 0.0;
    for (const auto& s : spikes_)
      v += s.amplitude * std::sin(2.0 * std::numbers::pi * s.frequency.value() * t + s.phase);
    return v;
  }

  [[nodiscard]] bool silent() const {
    return white_std_ == 0.0 && std::all_of(spikes_.begin(), spikes_.end(),
                                            [](const SpectralSpike& s) { return s.amplitude == 0.0; });
  }

 private:
  double white_std_;
  std::vector<SpectralSpike> spikes_;
  GaussianSource noise_;
};

/// Adds electrical noise to every point; `start_time` is the absolute time of
/// the first point (sets the pickup-line phases).
inline SignalTrace add_electrical_noise(const SignalTrace& trace, const DetectorConfig& cfg, Seed seed,
                                        Seconds start_time = Seconds(0.0)) {
  trace.validate();
  cfg.validate();
  ElectricalNoise noise(cfg, seed);
  SignalTrace out = trace;
  if (!noise.silent()) {
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] += noise.at(start_time.value() + static_cast<double>(i) * trace.time_step.value());
  }
  out.origin = TraceOrigin::detector_noisy;
  out.metadata.emplace_back("white_noise_std", cfg.white_noise_std);
  return out;
}

/// Number of samples at period T_S and offset within a trace of the given span.
inline std::size_t sample_count(Seconds span, Seconds period, Seconds offset) {
  if (offset > span) return 0;
  // Tolerate representation error when span is an exact multiple of the period.
  return static_cast<std::size_t>(std::floor((span - offset) / period + 1e-9)) + 1;
}

/// Nearest trace point to offset + i * T_S.
inline std::size_t nearest_index(Seconds time_step, Seconds period, Seconds offset, std::size_t i) {
  return static_cast<std::size_t>(
      std::llround((offset.value() + static_cast<double>(i) * period.value()) / time_step.value()));
}

inline SampleSeries sample(const SignalTrace& trace, Seconds period, Seconds offset = Seconds(0.0)) {
  trace.validate();
  detail::require(period >= trace.time_step, "sample: sampling period must be >= trace time_step");
  detail::require(offset.value() >= 0.0 && offset < period, "sample: offset must be in [0, T_S)");
  const std::size_t n = sample_count(trace.span(), period, offset);
  detail::require(n > 0, "sample: no samples fall inside the trace");
  SampleSeries out{period, std::vector<double>(n), std::nullopt, offset};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = std::min(nearest_index(trace.time_step, period, offset, i), trace.values.size() - 1);
    out.values[i] = trace.values[idx];
  }
  return out;
}

/// Uniform mid-rise quantizer over [-full_scale, full_scale), clipping outside.
inline double quantize(double value, int bits, double full_scale) {
  const double levels = std::ldexp(1.0, bits);
  const double step = 2.0 * full_scale / levels;
  const double code = std::clamp(std::floor((value + full_scale) / step), 0.0, levels - 1.0);
  return -full_scale + (code + 0.5) * step;
}

inline SampleSeries quantize(SampleSeries series, int bits, double full_scale) {
  detail::require(bits >= 1 && bits <= 24, "quantize: bits must be in [1, 24]");
  detail::require(full_scale > 0.0, "quantize: full_scale must be > 0");
  for (auto& v : series.values) v = quantize(v, bits, full_scale);
  return series;
}

/// Slow monitoring channel: bandwidth-limited photoreceiver sampled by a DAQ card.
struct MonitorConfig {
  Hertz bandwidth{1e6};
  Seconds sampling_period{500e-9};

  void validate() const {
    detail::require(bandwidth.value() > 0.0, "monitor: bandwidth must be > 0");
    detail::require(sampling_period.value() > 0.0, "monitor: sampling_period must be > 0");
    detail::require(sampling_period.value() <= 0.5 / bandwidth.value(),
                    "monitor: sampling_period must be <= 1 / (2 bandwidth)");
  }
};

inline SampleSeries monitor_channel(const SignalTrace& trace, const MonitorConfig& cfg = {}) {
  cfg.validate();
  DetectorConfig receiver;
  receiver.bandwidth = cfg.bandwidth;
  return sample(lowpass_filter(trace, receiver), cfg.sampling_period);
}

}  // namespace qrng
