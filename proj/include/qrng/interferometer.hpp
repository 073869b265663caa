#pragma once

// Imbalanced Mach-Zehnder interferometer: converts the delayed phase
// difference into intensity, with ambient drift and an idealized quadrature
// lock.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "qrng/error.hpp"
#include "qrng/laser.hpp"
#include "qrng/random.hpp"
#include "qrng/signal.hpp"
#include "qrng/units.hpp"

namespace qrng {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Optical angular frequency for a vacuum wavelength in metres.
inline double angular_frequency_from_wavelength(double wavelength) {
  detail::require(wavelength > 0.0, "wavelength must be > 0");
  return two_pi * constants::speed_of_light / wavelength;
}

/// T_d = n * dL / c.
inline Seconds delay_from_path_imbalance(double path_imbalance, double refractive_index) {
  detail::require(path_imbalance > 0.0, "path imbalance must be > 0");
  detail::require(refractive_index > 0.0, "refractive index must be > 0");
  return Seconds(refractive_index * path_imbalance / constants::speed_of_light);
}

struct MziConfig {
  Seconds delay{650e-12};
  double optical_angular_frequency = angular_frequency_from_wavelength(1550e-9);
  double visibility = 0.9;
  double dc_background = 1.0;
  bool stabilization_enabled = true;
  int setpoint_index = 0;
  double control_error_std = 0.01;  // rad
  double drift_amplitude = 1.0;     // rad
  Seconds drift_timescale{1.0};

  void validate() const {
    using detail::require;
    require(delay.value() > 0.0, "mzi: delay must be > 0");
    require(visibility >= 0.0 && visibility <= 1.0, "mzi: visibility must be in [0, 1]");
    require(control_error_std >= 0.0, "mzi: control_error_std must be >= 0");
    require(drift_amplitude >= 0.0, "mzi: drift_amplitude must be >= 0");
    require(drift_timescale.value() > 0.0, "mzi: drift_timescale must be > 0");
  }

  /// omega_0 * T_d reduced to [0, 2 pi).
  [[nodiscard]] double free_running_bias() const {
    const double bias = std::fmod(optical_angular_frequency * delay.value(), two_pi);
    return bias < 0.0 ? bias + two_pi : bias;
  }

  /// Quadrature set point 2 m pi + pi / 2.
  [[nodiscard]] double setpoint() const {
    return two_pi * static_cast<double>(setpoint_index) + std::numbers::pi / 2.0;
  }

  /// RMS drift increment over one step of length dt.
  [[nodiscard]] double drift_step_std(Seconds dt) const {
    return drift_amplitude * std::sqrt(dt / drift_timescale);
  }
};

/// S_i = dc + visibility * cos(bias_i + dphase_i).
///
/// With bias at the +pi/2 set point, S - dc = -visibility * sin(dphase). The
/// global sign does not matter for threshold bits.
inline SignalTrace interference_signal(std::span<const double> dphase, const MziConfig& cfg,
                                       std::span<const double> bias, Seconds time_step) {
  cfg.validate();
  detail::require(dphase.size() == bias.size(), "interference_signal: dphase and bias lengths differ");
  detail::require(!dphase.empty(), "interference_signal: empty input");
  SignalTrace trace{time_step, std::vector<double>(dphase.size()), TraceOrigin::interferometer,
                    {{"delay", cfg.delay.value()},
                     {"visibility", cfg.visibility},
                     {"dc_background", cfg.dc_background},
                     {"stabilization_enabled", cfg.stabilization_enabled ? 1.0 : 0.0}}};
  for (std::size_t i = 0; i < dphase.size(); ++i)
    trace.values[i] = cfg.dc_background + cfg.visibility * std::cos(bias[i] + dphase[i]);
  trace.validate();
  return trace;
}

/// Slow random walk of the interferometer bias, starting at zero.
class DriftWalk {
 public:
  DriftWalk(const MziConfig& cfg, Seconds time_step, Seed seed)
      : step_std_(cfg.drift_step_std(time_step)), noise_(seed) {}

  double next() {
    const double current = value_;
    value_ += step_std_ * noise_();
    return current;
  }

 private:
  double step_std_;
  double value_ = 0.0;
  GaussianSource noise_;
};

inline std::vector<double> ambient_drift(const MziConfig& cfg, std::size_t count, Seconds time_step, Seed seed) {
  cfg.validate();
  detail::require(time_step.value() > 0.0, "ambient_drift: time_step must be > 0");
  DriftWalk walk(cfg, time_step, seed);
  std::vector<double> drift(count);
  for (auto& d : drift) d = walk.next();
  return drift;
}

/// Idealized phase lock: at each monitor update the bias is clamped to the set
/// point plus a Gaussian residual; between updates the residual follows the drift.
class QuadratureLock {
 public:
  QuadratureLock(const MziConfig& cfg, Seed seed)
      : setpoint_(cfg.setpoint()), error_std_(cfg.control_error_std), noise_(seed) {
    if (!cfg.stabilization_enabled)
      throw ContractViolation("stabilized_bias: stabilization is disabled; use the free-running bias plus drift");
  }

  void update(double drift_now) {
    residual_ = error_std_ * noise_();
    drift_reference_ = drift_now;
  }

  [[nodiscard]] double bias(double drift_now) const { return setpoint_ + residual_ + (drift_now - drift_reference_); }

 private:
  double setpoint_;
  double error_std_;
  double residual_ = 0.0;
  double drift_reference_ = 0.0;
  GaussianSource noise_;
};

/// Trace index of monitor update j, clamped to the trace.
inline std::size_t monitor_update_index(const SampleSeries& monitor, std::size_t j, Seconds time_step) {
  const double t = monitor.sample_offset.value() + static_cast<double>(j) * monitor.sampling_period.value();
  return static_cast<std::size_t>(std::llround(t / time_step.value()));
}

/// Total bias under stabilization, one value per drift sample.
///
/// `monitor` supplies the controller's update schedule (its sampling period and
/// offset); the lock updates once per monitor sample.
inline std::vector<double> stabilized_bias(std::span<const double> drift, Seconds time_step, const MziConfig& cfg,
                                           const SampleSeries& monitor, Seed seed) {
  cfg.validate();
  QuadratureLock lock(cfg, seed);
  detail::require(time_step.value() > 0.0, "stabilized_bias: time_step must be > 0");
  detail::require(monitor.sampling_period >= time_step,
                  "stabilized_bias: monitor sampling period must be at least the trace time step");
  std::vector<double> bias(drift.size());
  std::size_t next_update = 0;
  std::size_t update_count = 0;
  for (std::size_t i = 0; i < drift.size(); ++i) {
    if (i == 0 || i >= next_update) {
      lock.update(drift[i]);
      ++update_count;
      next_update = monitor_update_index(monitor, update_count, time_step);
    }
    bias[i] = lock.bias(drift[i]);
  }
  return bias;
}

/// Bias without stabilization: omega_0 T_d + drift.
inline std::vector<double> free_running_bias(std::span<const double> drift, const MziConfig& cfg) {
  cfg.validate();
  std::vector<double> bias(drift.size());
  const double base = cfg.free_running_bias();
  for (std::size_t i = 0; i < drift.size(); ++i) bias[i] = base + drift[i];
  return bias;
}

/// Wrap a phase to [-pi, pi).
inline double wrap_phase(double phase) {
  double w = std::fmod(phase + std::numbers::pi, two_pi);
  if (w < 0.0) w += two_pi;
  return w - std::numbers::pi;
}

}  // namespace qrng
