#pragma once

// Single-mode laser phase noise: power-dependent linewidth, coherence time,
// and Wiener-process phase paths.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qrng/error.hpp"
#include "qrng/random.hpp"
#include "qrng/units.hpp"

namespace qrng {

namespace constants {
inline constexpr double planck = 6.62607015e-34;        // J s
inline constexpr double speed_of_light = 299792458.0;   // m/s
}  // namespace constants

/// Parameters of the spontaneous-emission linewidth formula (Henry model).
struct LinewidthModel {
  double group_velocity = 0.0;               // m/s
  double photon_energy = 0.0;                // J
  double gain = 0.0;                         // 1/m
  double spontaneous_emission_factor = 0.0;  // dimensionless
  double waveguide_loss = 0.0;               // 1/m
  double henry_alpha = 0.0;                  // linewidth enhancement factor
  Hertz classical_linewidth_floor{0.0};      // power-independent part

  /// Facet loss, gain minus waveguide loss.
  [[nodiscard]] double facet_loss() const { return gain - waveguide_loss; }

  void validate() const {
    using detail::require;
    require(group_velocity > 0.0, "laser: group_velocity must be > 0");
    require(photon_energy > 0.0, "laser: photon_energy must be > 0");
    require(gain > 0.0, "laser: gain must be > 0");
    require(spontaneous_emission_factor > 0.0, "laser: spontaneous_emission_factor must be > 0");
    require(waveguide_loss > 0.0, "laser: waveguide_loss must be > 0");
    require(gain > waveguide_loss, "laser: gain must exceed waveguide_loss (facet loss must be positive)");
    require(henry_alpha >= 0.0, "laser: henry_alpha must be >= 0");
    require(classical_linewidth_floor.value() >= 0.0, "laser: classical_linewidth_floor must be >= 0");
  }

  /// Linewidth-power product: quantum linewidth = coefficient / P0.
  [[nodiscard]] double linewidth_power_product() const {
    return group_velocity * group_velocity * photon_energy * gain * spontaneous_emission_factor *
           facet_loss() * (1.0 + henry_alpha * henry_alpha) / (8.0 * std::numbers::pi);
  }

  /// 1550 nm DFB profile. The individual parameters are textbook-typical; the
  /// operating points below are placed so the total linewidth is 30 MHz at the
  /// low-power point with a 1 MHz classical floor.
  static LinewidthModel dfb_1550() {
    LinewidthModel m;
    m.group_velocity = constants::speed_of_light / 3.7;
    m.photon_energy = constants::planck * constants::speed_of_light / 1550e-9;
    m.gain = 5000.0;
    m.spontaneous_emission_factor = 2.0;
    m.waveguide_loss = 2000.0;
    m.henry_alpha = 5.0;
    m.classical_linewidth_floor = Hertz(1e6);
    return m;
  }
};

struct OperatingPoint {
  Watts output_power{0.0};  // per facet
  std::string label;

  void validate() const {
    detail::require(output_power.value() > 0.0, "laser: output_power must be > 0");
  }

  /// Near-threshold point of the calibrated profile: 29 MHz quantum + 1 MHz floor.
  static OperatingPoint low_power(const LinewidthModel& model = LinewidthModel::dfb_1550()) {
    return {Watts(model.linewidth_power_product() / 29e6), "I=12mA (low power)"};
  }

  /// 1000x the low-power output; quantum part 29 kHz, total ~1.03 MHz (floor dominated).
  static OperatingPoint high_power(const LinewidthModel& model = LinewidthModel::dfb_1550()) {
    return {Watts(1000.0 * model.linewidth_power_product() / 29e6), "I=50mA (high power)"};
  }
};

inline Hertz quantum_linewidth(const LinewidthModel& model, const OperatingPoint& op) {
  model.validate();
  op.validate();
  return Hertz(model.linewidth_power_product() / op.output_power.value());
}

struct LinewidthBreakdown {
  Hertz quantum;
  Hertz classical;
  Hertz total;
  double quantum_fraction = 0.0;
};

inline LinewidthBreakdown total_linewidth(const LinewidthModel& model, const OperatingPoint& op) {
  const Hertz quantum = quantum_linewidth(model, op);
  const Hertz total = quantum + model.classical_linewidth_floor;
  return {quantum, model.classical_linewidth_floor, total, quantum / total};
}

/// tau_c = 1 / (pi * linewidth).
inline Seconds coherence_time(Hertz linewidth) {
  detail::require(linewidth.value() > 0.0, "coherence_time: linewidth must be > 0");
  return Seconds(1.0 / (std::numbers::pi * linewidth.value()));
}

/// Variance of the phase accumulated over `interval`: 2 * interval / tau_c.
inline double phase_variance(Seconds interval, Seconds coherence) {
  return 2.0 * interval.value() / coherence.value();
}

/// Streaming Wiener phase: theta_0 = 0, increments N(0, 2 dt / tau_c).
class PhaseWalk {
 public:
  PhaseWalk(Seconds coherence, Seconds time_step, Seed seed)
      : step_std_(std::sqrt(phase_variance(time_step, coherence))), noise_(seed) {
    detail::require(coherence.value() > 0.0, "phase walk: coherence_time must be > 0");
    detail::require(time_step.value() > 0.0, "phase walk: time_step must be > 0");
  }

  /// Current phase, then advance.
  double next() {
    const double current = phase_;
    phase_ += step_std_ * noise_();
    return current;
  }

  [[nodiscard]] double step_std() const { return step_std_; }

 private:
  double step_std_;
  double phase_ = 0.0;
  GaussianSource noise_;
};

/// Unwrapped phase samples theta(t_i), t_i = i * time_step.
struct PhasePath {
  Seconds time_step{0.0};
  std::vector<double> values;
  Seconds coherence_time{0.0};
  Seed seed;

  [[nodiscard]] Seconds span() const {
    return time_step * static_cast<double>(values.empty() ? 0 : values.size() - 1);
  }
};

inline PhasePath simulate_phase_path(Seconds coherence, Seconds time_step, std::size_t count, Seed seed) {
  detail::require(count >= 2, "simulate_phase_path: count must be >= 2");
  PhaseWalk walk(coherence, time_step, seed);
  PhasePath path{time_step, std::vector<double>(count), coherence, seed};
  for (auto& v : path.values) v = walk.next();
  return path;
}

/// A delay rounded to a whole number of simulation steps.
struct DelaySnap {
  Seconds requested{0.0};
  Seconds applied{0.0};
  std::size_t steps = 0;

  [[nodiscard]] Seconds snap_error() const { return applied - requested; }
};

inline DelaySnap snap_delay(Seconds delay, Seconds time_step) {
  detail::require(time_step.value() > 0.0, "snap_delay: time_step must be > 0");
  detail::require(delay.value() >= 0.0, "snap_delay: delay must be >= 0");
  const auto steps = static_cast<std::size_t>(std::llround(delay / time_step));
  return {delay, time_step * static_cast<double>(steps), steps};
}

struct PhaseDifference {
  std::vector<double> values;  // theta(t_i) - theta(t_i + T_d)
  DelaySnap delay;
};

inline PhaseDifference delayed_phase_difference(std::span<const double> phase, Seconds time_step, Seconds delay) {
  const DelaySnap snap = snap_delay(delay, time_step);
  detail::require(snap.steps < phase.size(), "delayed_phase_difference: delay exceeds the path span");
  PhaseDifference out{std::vector<double>(phase.size() - snap.steps), snap};
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = phase[i] - phase[i + snap.steps];
  return out;
}

inline PhaseDifference delayed_phase_difference(const PhasePath& path, Seconds delay) {
  return delayed_phase_difference(path.values, path.time_step, delay);
}

}  // namespace qrng
