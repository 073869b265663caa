#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "qrng/analysis/spectrum.hpp"
#include "qrng/analysis/stats.hpp"
#include "qrng/detection.hpp"
#include "qrng/error.hpp"
#include "qrng/interferometer.hpp"
#include "qrng/laser.hpp"
#include "support.hpp"

using namespace qrng;
using namespace qrng::literals;

namespace {

constexpr double pi = std::numbers::pi;

SignalTrace make_trace(std::vector<double> v, Seconds dt = 50_ps) {
  return SignalTrace{dt, std::move(v), TraceOrigin::interferometer, {}};
}

// Steady-state amplitude of the response to sin(2 pi f t), by least squares
// against sin and cos over the second half of the run.
double sine_gain(Hertz cutoff, Seconds dt, Hertz f, std::size_t n) {
  FirstOrderLowpass filter(cutoff, dt);
  filter.reset(0.0);
  double ss = 0.0, sc = 0.0, cc = 0.0, ys = 0.0, yc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt.value();
    const double s = std::sin(2.0 * pi * f.value() * t);
    const double c = std::cos(2.0 * pi * f.value() * t);
    const double y = filter.process(s);
    if (i < n / 2) continue;
    ss += s * s;
    sc += s * c;
    cc += c * c;
    ys += y * s;
    yc += y * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det;
  const double b = (yc * ss - ys * sc) / det;
  return std::hypot(a, b);
}

}  // namespace

TEST(Lowpass, DcGain) {
  FirstOrderLowpass filter(5_GHz, 50_ps, 2.5);
  filter.reset(0.0);
  double y = 0.0;
  for (int i = 0; i < 2000; ++i) y = filter.process(1.0);
  EXPECT_NEAR(y, 2.5, 1e-12);

  FirstOrderLowpass settled(5_GHz, 50_ps, 2.5);
  settled.reset(0.4);
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(settled.process(0.4), 1.0, 1e-14);
}

TEST(Lowpass, HalfPowerAtCutoff) {
  EXPECT_NEAR(sine_gain(5_GHz, 50_ps, 5_GHz, 4000), 1.0 / std::sqrt(2.0), 0.01 / std::sqrt(2.0));
  EXPECT_NEAR(sine_gain(100_MHz, 50_ps, 100_MHz, 400'000), 1.0 / std::sqrt(2.0), 0.01 / std::sqrt(2.0));
}

TEST(Lowpass, TwentyDecibelsPerDecade) {
  // Well below Nyquist the bilinear response follows the analog first-order slope.
  const double g1 = sine_gain(10_MHz, 50_ps, 100_MHz, 400'000);
  const double g2 = sine_gain(10_MHz, 50_ps, 1_GHz, 40'000);
  const double slope_db = 20.0 * std::log10(g2 / g1);
  EXPECT_NEAR(slope_db, -20.0, 1.0);
  EXPECT_NEAR(g1, 1.0 / std::sqrt(1.0 + 100.0), 0.01);
}

TEST(Lowpass, ImpulseResponseSumsToGain) {
  FirstOrderLowpass filter(5_GHz, 50_ps, 0.7);
  filter.reset(0.0);
  double sum = filter.process(1.0);
  for (int i = 0; i < 10'000; ++i) sum += filter.process(0.0);
  EXPECT_NEAR(sum, 0.7, 0.7 * 1e-3);
}

TEST(Lowpass, RequiresResolvedResponse) {
  EXPECT_THROW(FirstOrderLowpass(5_GHz, 200_ps), InvalidParameter);
  EXPECT_NO_THROW(FirstOrderLowpass(5_GHz, 100_ps));
  DetectorConfig cfg;
  EXPECT_THROW(lowpass_filter(make_trace({1.0, 2.0}, 150_ps), cfg), InvalidParameter);
}

TEST(Lowpass, TraceFilterRecordsOrigin) {
  DetectorConfig cfg;
  const auto out = lowpass_filter(make_trace(std::vector<double>(100, 1.0)), cfg);
  EXPECT_EQ(out.origin, TraceOrigin::detector_filtered);
  for (double v : out.values) EXPECT_NEAR(v, 1.0, 1e-14);
}

TEST(ElectricalNoise, SilentConfigLeavesTraceUntouched) {
  DetectorConfig cfg;
  const auto in = make_trace(test_support::gaussian_vector(1000, 3));
  const auto out = add_electrical_noise(in, cfg, Seed{1});
  EXPECT_EQ(out.values, in.values);
}

TEST(ElectricalNoise, WhiteNoiseStd) {
  DetectorConfig cfg;
  cfg.white_noise_std = 0.02;
  const auto out = add_electrical_noise(make_trace(std::vector<double>(200'000, 0.0)), cfg, Seed{5});
  const double sd = std::sqrt(stats::moments(out.values).variance);
  EXPECT_NEAR(sd, 0.02, 0.02 * 0.01);
}

TEST(ElectricalNoise, SingleSpikeLineHeight) {
  // A bin-centred tone with rectangular window puts A^2 L / (2 fs) in its bin.
  const Seconds dt = 1_ns;
  const std::size_t len = 1024;
  const double fs = 1e9;
  const double a = 0.05;
  DetectorConfig cfg;
  cfg.spikes = {{Hertz(100.0 * fs / static_cast<double>(len)), a, 0.3}};
  const auto out = add_electrical_noise(make_trace(std::vector<double>(16 * len, 0.0), dt), cfg, Seed{1});
  const auto est = psd_estimate(out, len, Window::rectangular);
  const std::size_t bin = 99;  // frequencies start at fs / L
  EXPECT_NEAR(est.frequencies[bin], 100.0 * fs / static_cast<double>(len), 1e-6);
  const double expected = a * a * static_cast<double>(len) / (2.0 * fs);
  EXPECT_NEAR(est.linear(bin), expected, expected * 1e-6);
  for (std::size_t k = 0; k < est.frequencies.size(); ++k) {
    if (k == bin) continue;
    ASSERT_LT(est.linear(k), expected * 1e-12) << k;
  }
}

TEST(ElectricalNoise, BlockedInputShowsSpikesAboveFloor) {
  DetectorConfig cfg;
  cfg.white_noise_std = 0.01;
  cfg.spikes = {{100_MHz, 0.02, 0.0}, {250_MHz, 0.015, 1.0}};
  const auto noisy = add_electrical_noise(make_trace(std::vector<double>(2'000'001, 0.0)), cfg, Seed{9});
  const auto series = sample(noisy, 1_ns);
  const auto est = psd_estimate(series, 4096);
  std::vector<double> sorted = est.power_density;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  for (const auto& s : cfg.spikes) {
    double peak = -1e300;
    for (std::size_t k = 0; k < est.frequencies.size(); ++k)
      if (std::fabs(est.frequencies[k] - s.frequency.value()) < 1e6) peak = std::max(peak, est.power_density[k]);
    EXPECT_GT(peak - median, 10.0) << s.frequency.value();
  }
}

TEST(Sampling, IdentityAtTraceRate) {
  const auto in = make_trace(test_support::gaussian_vector(1000, 2));
  const auto out = sample(in, 50_ps);
  EXPECT_EQ(out.values, in.values);
}

TEST(Sampling, EveryTwentiethPoint) {
  std::vector<double> v(10'001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const auto out = sample(make_trace(v), 1_ns);
  ASSERT_EQ(out.values.size(), 501u);
  for (std::size_t i = 0; i < out.values.size(); ++i) EXPECT_EQ(out.values[i], 20.0 * static_cast<double>(i));

  const auto shifted = sample(make_trace(v), 1_ns, 300_ps);
  ASSERT_EQ(shifted.values.size(), 500u);
  for (std::size_t i = 0; i < shifted.values.size(); ++i)
    EXPECT_EQ(shifted.values[i], 6.0 + 20.0 * static_cast<double>(i));
}

TEST(Sampling, CountOverOneMillisecond) {
  // A 1 ms trace at 50 ps holds 2e7 points spanning (2e7 - 1) steps.
  const Seconds span = 50_ps * (2e7 - 1.0);
  EXPECT_EQ(sample_count(span, 1_ns, Seconds(0.0)), 1'000'000u);
  EXPECT_EQ(sample_count(1_ms, 1_ns, Seconds(0.0)), 1'000'001u);
}

TEST(Sampling, RejectsBadTiming) {
  const auto in = make_trace(std::vector<double>(100, 0.0));
  EXPECT_THROW(sample(in, 1_ns, 1_ns), InvalidParameter);
  EXPECT_THROW(sample(in, 1_ns, Seconds(-1e-12)), InvalidParameter);
  EXPECT_THROW(sample(in, 20_ps), InvalidParameter);
}

TEST(Quantize, MidRiseLevels) {
  EXPECT_DOUBLE_EQ(quantize(0.0, 1, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(quantize(-0.1, 1, 1.0), -0.5);
  EXPECT_DOUBLE_EQ(quantize(5.0, 8, 1.0), 1.0 - 1.0 / 256.0);
  EXPECT_DOUBLE_EQ(quantize(-5.0, 8, 1.0), -1.0 + 1.0 / 256.0);
  for (double x : {-0.73, -0.01, 0.0, 0.2, 0.999})
    EXPECT_LE(std::fabs(quantize(x, 8, 1.0) - x), 1.0 / 256.0 + 1e-15);
  SampleSeries s{1_ns, {0.1, 0.2}, std::nullopt, Seconds(0.0)};
  EXPECT_THROW(quantize(s, 0, 1.0), InvalidParameter);
  EXPECT_THROW(quantize(s, 8, 0.0), InvalidParameter);
}

TEST(Monitor, ConstantInputPassesThrough) {
  const auto out = monitor_channel(make_trace(std::vector<double>(100'001, 1.3)));
  EXPECT_EQ(out.values.size(), 11u);
  for (double v : out.values) EXPECT_NEAR(v, 1.3, 1e-12);
}

TEST(Monitor, AveragesOutFastFluctuations) {
  // 1 MHz monitor on a ~GHz-wide quadrature signal passes only a few percent of its std.
  const std::size_t n = 10'000'013;
  const auto path = simulate_phase_path(10_ns, 50_ps, n, Seed{61});
  const auto d = delayed_phase_difference(path, 650_ps);
  MziConfig mzi;
  mzi.control_error_std = 0.0;
  const std::vector<double> bias(d.values.size(), mzi.setpoint());
  const auto optical = interference_signal(d.values, mzi, bias, 50_ps);
  const auto fast = lowpass_filter(optical, DetectorConfig{});
  const auto mon = monitor_channel(optical);
  std::vector<double> settled(mon.values.begin() + 4, mon.values.end());
  const double fast_sd = std::sqrt(stats::moments(fast.values).variance);
  const double mon_sd = std::sqrt(stats::moments(settled).variance);
  EXPECT_LT(mon_sd / fast_sd, 0.05);
}

TEST(Monitor, TracksSlowRampWithinOneMicrosecond) {
  const Seconds dt = 50_ps;
  const double rate = 1e3;  // units per second
  std::vector<double> v(400'001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = rate * static_cast<double>(i) * dt.value();
  const auto mon = monitor_channel(make_trace(v, dt));
  for (std::size_t j = 4; j < mon.values.size(); ++j) {
    const double t = static_cast<double>(j) * mon.sampling_period.value();
    const double lag = t - mon.values[j] / rate;
    EXPECT_GT(lag, 0.0);
    EXPECT_LT(lag, 1e-6);
  }
}
