#pragma once

#include <string>

#include "qrng/error.hpp"
#include "qrng/units.hpp"

namespace qrng {

enum class TimingMode { unstabilized, stabilized };

inline const char* to_string(TimingMode m) { return m == TimingMode::stabilized ? "stabilized" : "unstabilized"; }

/// Inputs to the sampling-condition check. "Much greater than" is quantified
/// by dominance_factor.
struct TimingCheck {
  TimingMode mode = TimingMode::stabilized;
  Seconds delay{0.0};            // T_d
  Seconds coherence_time{0.0};   // tau_c
  Seconds sampling_period{0.0};  // T_S
  Seconds response_time{0.0};    // T_R
  double dominance_factor = 10.0;

  void validate() const {
    using detail::require;
    require(delay.value() > 0.0, "timing: T_d must be > 0");
    require(coherence_time.value() > 0.0, "timing: tau_c must be > 0");
    require(sampling_period.value() > 0.0, "timing: T_S must be > 0");
    require(response_time.value() > 0.0, "timing: T_R must be > 0");
    require(dominance_factor > 1.0, "timing: dominance_factor must be > 1");
  }
};

/// Margins are ratios; a value > 1 (>= 1 for the dominance inequalities) satisfies the inequality.
struct TimingVerdict {
  bool passed = false;
  bool overlapping_windows = false;  // T_S <= T_d
  double delay_margin = 0.0;         // unstabilized: T_d / (k tau_c)
  double spacing_margin = 0.0;       // unstabilized: (T_S - T_d) / (k (tau_c + T_R)); stabilized: (T_S - T_d) / T_R
  std::string diagnosis;
};

inline TimingVerdict validate_timing(const TimingCheck& c) {
  c.validate();
  TimingVerdict v;
  const double td = c.delay.value();
  const double ts = c.sampling_period.value();
  const double gap = ts - td;
  const double k = c.dominance_factor;

  if (gap <= 0.0) {
    v.overlapping_windows = true;
    v.spacing_margin = gap / c.response_time.value();
    if (c.mode == TimingMode::unstabilized) v.delay_margin = td / (k * c.coherence_time.value());
    v.diagnosis =
        "T_S <= T_d: consecutive samples integrate phase noise from overlapping emission windows and are correlated";
    return v;
  }

  if (c.mode == TimingMode::stabilized) {
    v.spacing_margin = gap / c.response_time.value();
    v.passed = v.spacing_margin > 1.0;
    v.diagnosis = v.passed ? "T_S - T_d > T_R" : "T_S - T_d <= T_R: detector response smears adjacent samples";
    return v;
  }

  v.delay_margin = td / (k * c.coherence_time.value());
  v.spacing_margin = gap / (k * (c.coherence_time.value() + c.response_time.value()));
  const bool delay_ok = v.delay_margin >= 1.0;
  const bool spacing_ok = v.spacing_margin >= 1.0;
  v.passed = delay_ok && spacing_ok;
  if (v.passed) {
    v.diagnosis = "T_d >> tau_c and T_S - T_d >> tau_c + T_R";
  } else {
    v.diagnosis.clear();
    if (!delay_ok) v.diagnosis += "T_d is not >> tau_c: phase difference is not uniform over [-pi, pi)";
    if (!spacing_ok) {
      if (!v.diagnosis.empty()) v.diagnosis += "; ";
      v.diagnosis += "T_S - T_d is not >> tau_c + T_R";
    }
  }
  return v;
}

/// Smallest T_S that passes the unstabilized check when T_d may be chosen
/// freely: T_d = k tau_c, T_S = T_d + k (tau_c + T_R).
inline Seconds minimum_unstabilized_period(Seconds coherence, Seconds response, double dominance_factor = 10.0) {
  detail::require(dominance_factor > 1.0, "timing: dominance_factor must be > 1");
  return dominance_factor * coherence + dominance_factor * (coherence + response);
}

}  // namespace qrng
