#pragma once

// End-to-end generator: laser phase -> interferometer -> detector -> sampler
// -> threshold bits -> XOR. The fine-resolution trace is never materialized;
// each frame streams through the chain one simulation step at a time, so
// memory scales with the number of samples, not simulation steps.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

#include "qrng/analysis/spectrum.hpp"
#include "qrng/analysis/timing.hpp"
#include "qrng/detection.hpp"
#include "qrng/error.hpp"
#include "qrng/extraction.hpp"
#include "qrng/interferometer.hpp"
#include "qrng/laser.hpp"
#include "qrng/random.hpp"
#include "qrng/signal.hpp"
#include "qrng/units.hpp"

namespace qrng {

struct LaserSection {
  LinewidthModel model = LinewidthModel::dfb_1550();
  OperatingPoint operating_point = OperatingPoint::low_power();
  std::optional<Seconds> coherence_time;  // overrides the linewidth model when set

  [[nodiscard]] Seconds resolved_coherence_time() const {
    if (coherence_time) {
      detail::require(coherence_time->value() > 0.0, "laser: coherence_time must be > 0");
      return *coherence_time;
    }
    return qrng::coherence_time(total_linewidth(model, operating_point).total);
  }
};

/// Photodetector plus optional oscilloscope front end, both first order.
struct FastChannelConfig {
  DetectorConfig detector = default_detector();
  std::optional<Hertz> frontend_bandwidth = Hertz(3e9);
  int adc_bits = 0;  // 0 keeps full precision
  double adc_full_scale = 2.0;

  static DetectorConfig default_detector() {
    DetectorConfig d;
    d.bandwidth = Hertz(5e9);
    d.gain = 1.0;
    d.white_noise_std = 0.01;
    // Placeholder pickup lines; the real ones are not documented.
    d.spikes = {{Hertz(87.5e6), 0.004, 0.0}, {Hertz(212.3e6), 0.003, 1.0}, {Hertz(431.7e6), 0.002, 2.0}};
    return d;
  }
};

struct SamplingSection {
  Seconds period{1e-9};
  Seconds offset{0.0};
  std::size_t frame_length = 1'000'000;
  std::size_t frame_count = 2;
};

struct ExtractionSection {
  bool xor_enabled = true;
};

struct AnalysisSection {
  double alpha = 0.01;
  std::size_t max_lag = 100;
  std::size_t psd_segment_length = 1024;
  Window psd_window = Window::hann;
  std::size_t min_entropy_bins = 256;
  double dominance_factor = 10.0;
};

struct ScenarioConfig {
  Seconds time_step{50e-12};
  LaserSection laser;
  MziConfig mzi;
  FastChannelConfig fast;
  MonitorConfig monitor;
  SamplingSection sampling;
  ExtractionSection extraction;
  AnalysisSection analysis;
  Seed master_seed{20090417};
  double memory_budget_mb = 2048.0;

  [[nodiscard]] std::size_t frames_per_unit() const { return extraction.xor_enabled ? 2 : 1; }

  /// Peak resident estimate for a run with `workers` concurrent units.
  [[nodiscard]] double estimated_memory_mb(unsigned workers) const {
    const double frame_bytes = static_cast<double>(sampling.frame_length) * sizeof(double);
    const double in_flight = static_cast<double>(std::max(1U, workers)) * static_cast<double>(frames_per_unit()) * frame_bytes;
    const double total_bits = static_cast<double>(sampling.frame_length) * static_cast<double>(sampling.frame_count);
    const double packed = total_bits / 8.0 * (extraction.xor_enabled ? 1.5 : 1.0);
    return (in_flight + frame_bytes + packed) / (1024.0 * 1024.0);
  }

  void validate(unsigned workers = 1) const {
    using detail::require;
    require(time_step.value() > 0.0, "simulation: time_step must be > 0");
    laser.model.validate();
    laser.operating_point.validate();
    (void)laser.resolved_coherence_time();
    mzi.validate();
    fast.detector.validate();
    require(time_step.value() <= 0.5 * fast.detector.response_time().value(),
            "simulation: time_step must be <= T_R / 2 of the photodetector");
    if (fast.frontend_bandwidth) {
      require(fast.frontend_bandwidth->value() > 0.0, "detector: frontend_bandwidth must be > 0");
      require(time_step.value() <= 0.5 / fast.frontend_bandwidth->value(),
              "simulation: time_step must be <= T_R / 2 of the front end");
    }
    require(fast.adc_bits >= 0 && fast.adc_bits <= 24, "detector: adc_bits must be in [0, 24]");
    require(fast.adc_full_scale > 0.0, "detector: adc_full_scale must be > 0");
    monitor.validate();
    require(monitor.sampling_period >= time_step, "monitor: sampling_period must be >= time_step");
    require(sampling.period >= time_step, "sampling: period must be >= time_step");
    require(sampling.offset.value() >= 0.0 && sampling.offset < sampling.period, "sampling: offset must be in [0, T_S)");
    require(sampling.frame_length >= 1, "sampling: frame_length must be >= 1");
    require(sampling.frame_count >= 1, "sampling: frame_count must be >= 1");
    if (extraction.xor_enabled) {
      require(sampling.frame_count >= 2, "extraction: XOR requires two frames (frame_count >= 2)");
      require(sampling.frame_count % 2 == 0, "extraction: XOR pairs frames, frame_count must be even");
    }
    require(analysis.alpha > 0.0 && analysis.alpha < 1.0, "analysis: alpha must be in (0, 1)");
    require(analysis.max_lag >= 1, "analysis: max_lag must be >= 1");
    require(analysis.psd_segment_length >= 4, "analysis: psd_segment_length must be >= 4");
    require(analysis.min_entropy_bins >= 1, "analysis: min_entropy_bins must be >= 1");
    require(analysis.dominance_factor > 1.0, "analysis: dominance_factor must be > 1");
    require(memory_budget_mb > 0.0, "memory_budget_mb must be > 0");
    require(estimated_memory_mb(workers) <= memory_budget_mb,
            "frame_length x frame_count exceeds the memory budget; lower frame_length or raise memory_budget_mb");
  }

  [[nodiscard]] TimingCheck timing_check() const {
    TimingCheck c;
    c.mode = mzi.stabilization_enabled ? TimingMode::stabilized : TimingMode::unstabilized;
    c.delay = mzi.delay;
    c.coherence_time = laser.resolved_coherence_time();
    c.sampling_period = sampling.period;
    c.response_time = fast.detector.response_time();
    c.dominance_factor = analysis.dominance_factor;
    return c;
  }
};

/// Seed of frame `frame` in sweep point `sweep_point`. A plain run is sweep point 0.
constexpr Seed frame_seed(Seed master, std::size_t sweep_point, std::size_t frame) {
  return derive_seed(derive_seed(master, sweep_point), frame);
}

struct FrameResult {
  std::size_t index = 0;
  SampleSeries samples;
  double dphase_mean = 0.0;      // phase difference at the sample instants
  double dphase_variance = 0.0;
  DelaySnap delay;
};

/// Streams one frame through the full optical/electrical chain.
inline FrameResult simulate_frame(const ScenarioConfig& cfg, Seed seed, std::size_t frame_index) {
  const Seconds dt = cfg.time_step;
  const std::size_t n = cfg.sampling.frame_length;
  const DelaySnap delay = snap_delay(cfg.mzi.delay, dt);
  const std::size_t lag = delay.steps;

  // Absolute start time; frames are successive acquisitions.
  const double t0 = static_cast<double>(frame_index) * static_cast<double>(n) * cfg.sampling.period.value();

  PhaseWalk phase(cfg.laser.resolved_coherence_time(), dt, derive_seed(seed, Stream::phase));
  const std::size_t ring_size = std::bit_ceil(lag + 1);
  const std::size_t ring_mask = ring_size - 1;
  std::vector<double> ring(ring_size, 0.0);
  for (std::size_t j = 0; j < lag; ++j) ring[j] = phase.next();

  // Drift lives on the monitor grid and is interpolated linearly in between;
  // the lock (when enabled) updates on the same grid.
  const Seconds node_period = cfg.monitor.sampling_period;
  const bool drifting = cfg.mzi.drift_amplitude > 0.0;
  DriftWalk drift(cfg.mzi, node_period, derive_seed(seed, Stream::drift));
  double drift_start = drifting ? drift.next() : 0.0;
  double drift_end = drifting ? drift.next() : 0.0;
  std::size_t node = 0;
  std::size_t node_begin = 0;
  auto node_index = [&](std::size_t j) {
    return static_cast<std::size_t>(std::llround(static_cast<double>(j) * node_period.value() / dt.value()));
  };
  std::size_t node_end = node_index(1);
  double drift_slope = (drift_end - drift_start) / static_cast<double>(node_end - node_begin);

  std::optional<QuadratureLock> lock;
  if (cfg.mzi.stabilization_enabled) {
    lock.emplace(cfg.mzi, derive_seed(seed, Stream::controller));
    lock->update(drift_start);
  }
  const double free_bias = cfg.mzi.free_running_bias();

  FirstOrderLowpass detector(cfg.fast.detector.bandwidth, dt, cfg.fast.detector.gain);
  std::optional<FirstOrderLowpass> frontend;
  if (cfg.fast.frontend_bandwidth) frontend.emplace(*cfg.fast.frontend_bandwidth, dt);
  ElectricalNoise noise(cfg.fast.detector, derive_seed(seed, Stream::electrical_noise));
  const bool noisy = !noise.silent();

  const double dc = cfg.mzi.dc_background;
  const double vis = cfg.mzi.visibility;

  FrameResult result;
  result.index = frame_index;
  result.delay = delay;
  result.samples.sampling_period = cfg.sampling.period;
  result.samples.sample_offset = cfg.sampling.offset;
  result.samples.values.resize(n);

  const std::size_t last_step = nearest_index(dt, cfg.sampling.period, cfg.sampling.offset, n - 1);
  std::size_t next_sample = nearest_index(dt, cfg.sampling.period, cfg.sampling.offset, 0);
  std::size_t sample_i = 0;
  double dphase_sum = 0.0;
  double dphase_sq = 0.0;

  for (std::size_t k = 0; k <= last_step; ++k) {
    if (k == node_end) {
      ++node;
      node_begin = node_end;
      node_end = node_index(node + 1);
      drift_start = drift_end;
      drift_end = drifting ? drift.next() : 0.0;
      drift_slope = (drift_end - drift_start) / static_cast<double>(node_end - node_begin);
      if (lock) lock->update(drift_start);
    }
    const double drift_now = drift_start + drift_slope * static_cast<double>(k - node_begin);
    const double bias = lock ? lock->bias(drift_now) : free_bias + drift_now;

    const double ahead = phase.next();
    ring[(k + lag) & ring_mask] = ahead;
    const double dphase = ring[k & ring_mask] - ahead;

    const double optical = dc + vis * std::cos(bias + dphase);
    if (k == 0) {
      detector.reset(optical);
      if (frontend) frontend->reset(cfg.fast.detector.gain * optical);
    }
    double y = detector.process(optical);
    if (frontend) y = frontend->process(y);

    if (k == next_sample) {
      if (noisy) y += noise.at(t0 + static_cast<double>(k) * dt.value());
      if (cfg.fast.adc_bits > 0) y = quantize(y, cfg.fast.adc_bits, cfg.fast.adc_full_scale);
      result.samples.values[sample_i] = y;
      dphase_sum += dphase;
      dphase_sq += dphase * dphase;
      if (++sample_i < n) next_sample = nearest_index(dt, cfg.sampling.period, cfg.sampling.offset, sample_i);
    }
  }

  const double count = static_cast<double>(n);
  result.dphase_mean = dphase_sum / count;
  result.dphase_variance = n > 1 ? (dphase_sq - count * result.dphase_mean * result.dphase_mean) / (count - 1.0) : 0.0;
  return result;
}

/// Output of one work unit: a single frame, or a Bin1/Bin2 frame pair when XOR is on.
struct UnitOutput {
  std::size_t index = 0;
  BitStream bin1;
  std::optional<BitStream> bin2;
  std::optional<BitStream> bin3;
};

struct RunOptions {
  unsigned workers = 1;
  std::size_t sweep_point = 0;
  bool keep_first_frame = true;
  bool accumulate = true;  // false leaves the RunResult streams empty
  std::function<void(const UnitOutput&)> on_unit;  // called in unit order
};

struct RunResult {
  BitStream bin1{Provenance::raw};
  std::optional<BitStream> bin2;
  std::optional<BitStream> bin3;
  std::optional<SampleSeries> first_frame;
  std::vector<double> thresholds;  // per frame, in frame order
  double dphase_variance = 0.0;    // mean over frames
  DelaySnap delay;
};

/// Runs every frame. Frames are grouped into units (pairs under XOR); units
/// are computed `workers` at a time and emitted strictly in index order, so
/// the output does not depend on the worker count.
inline RunResult run_pipeline(const ScenarioConfig& cfg, const RunOptions& options = {}) {
  const unsigned workers = std::max(1U, options.workers);
  cfg.validate(workers);

  const std::size_t per_unit = cfg.frames_per_unit();
  const std::size_t units = cfg.sampling.frame_count / per_unit;
  const double raw_rate = 1.0 / cfg.sampling.period.value();

  RunResult result;
  result.bin1 = BitStream(Provenance::raw, raw_rate);
  if (cfg.extraction.xor_enabled) {
    result.bin2 = BitStream(Provenance::raw, raw_rate);
    result.bin3 = BitStream(Provenance::xor_extracted, raw_rate / 2.0);
  }
  result.thresholds.resize(cfg.sampling.frame_count);
  double variance_sum = 0.0;

  struct UnitWork {
    UnitOutput output;
    std::vector<double> thresholds;
    std::vector<double> variances;
    std::optional<SampleSeries> first_frame;
    DelaySnap delay;
  };

  auto compute_unit = [&](std::size_t u) {
    UnitWork work;
    work.output.index = u;
    std::vector<BitStream> bits;
    for (std::size_t f = u * per_unit; f < (u + 1) * per_unit; ++f) {
      FrameResult frame = simulate_frame(cfg, frame_seed(cfg.master_seed, options.sweep_point, f), f);
      const double threshold = mean_threshold(frame.samples);
      bits.push_back(binarize(frame.samples, threshold));
      work.thresholds.push_back(threshold);
      work.variances.push_back(frame.dphase_variance);
      work.delay = frame.delay;
      if (f == 0 && options.keep_first_frame) work.first_frame = std::move(frame.samples);
    }
    work.output.bin1 = std::move(bits[0]);
    if (per_unit == 2) {
      work.output.bin2 = std::move(bits[1]);
      work.output.bin3 = xor_combine(work.output.bin1, *work.output.bin2);
    }
    return work;
  };

  for (std::size_t wave = 0; wave < units; wave += workers) {
    const std::size_t wave_end = std::min(units, wave + workers);
    std::vector<std::optional<UnitWork>> slots(wave_end - wave);
    std::vector<std::exception_ptr> errors(wave_end - wave);
    {
      std::vector<std::jthread> pool;
      for (std::size_t u = wave + 1; u < wave_end; ++u)
        pool.emplace_back([&, u] {
          try {
            slots[u - wave] = compute_unit(u);
          } catch (...) {
            errors[u - wave] = std::current_exception();
          }
        });
      try {
        slots[0] = compute_unit(wave);
      } catch (...) {
        errors[0] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    for (auto& slot : slots) {
      UnitWork& work = *slot;
      const std::size_t first_frame = work.output.index * per_unit;
      for (std::size_t j = 0; j < work.thresholds.size(); ++j) {
        result.thresholds[first_frame + j] = work.thresholds[j];
        variance_sum += work.variances[j];
      }
      result.delay = work.delay;
      if (work.first_frame) result.first_frame = std::move(work.first_frame);
      if (options.on_unit) options.on_unit(work.output);
      if (!options.accumulate) {
        slot.reset();
        continue;
      }
      result.bin1.append(work.output.bin1);
      if (per_unit == 2) {
        result.bin2->append(*work.output.bin2);
        result.bin3->append(*work.output.bin3);
      }
      slot.reset();
    }
  }
  result.dphase_variance = variance_sum / static_cast<double>(cfg.sampling.frame_count);
  return result;
}

}  // namespace qrng
