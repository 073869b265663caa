#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qrng/error.hpp"
#include "qrng/units.hpp"

namespace qrng {

enum class TraceOrigin { interferometer, detector_filtered, detector_noisy };

inline const char* to_string(TraceOrigin origin) {
  switch (origin) {
    case TraceOrigin::interferometer: return "interferometer";
    case TraceOrigin::detector_filtered: return "detector-filtered";
    case TraceOrigin::detector_noisy: return "detector-noisy";
  }
  return "unknown";
}

/// Named numeric parameters recorded alongside a trace.
using ParameterSnapshot = std::vector<std::pair<std::string, double>>;

/// Finely discretized continuous-time signal.
struct SignalTrace {
  Seconds time_step{0.0};
  std::vector<double> values;
  TraceOrigin origin = TraceOrigin::interferometer;
  ParameterSnapshot metadata;

  void validate() const {
    detail::require(time_step.value() > 0.0, "signal trace: time_step must be > 0");
    detail::require(!values.empty(), "signal trace: must contain at least one value");
  }

  [[nodiscard]] Seconds span() const {
    return time_step * static_cast<double>(values.empty() ? 0 : values.size() - 1);
  }
};

/// Fixed-interval samples of a trace, with the binarization threshold once known.
struct SampleSeries {
  Seconds sampling_period{0.0};
  std::vector<double> values;
  std::optional<double> threshold;
  Seconds sample_offset{0.0};

  void validate() const {
    detail::require(sampling_period.value() > 0.0, "sample series: sampling_period must be > 0");
    detail::require(!values.empty(), "sample series: must contain at least one value");
  }
};

}  // namespace qrng
