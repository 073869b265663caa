#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "qrng/analysis/stats.hpp"
#include "qrng/error.hpp"
#include "qrng/laser.hpp"
#include "support.hpp"

using namespace qrng;
using namespace qrng::literals;

namespace {

// Relative standard error of the sample variance of a delayed difference with
// L = T_d / dt steps of overlap: the autocorrelation is triangular over L lags,
// so sum(rho^2) ~ 2L/3 and Var[s^2] / sigma^4 ~ 2 (1 + 2L/3) / n.
double delayed_variance_rel_error(std::size_t lag_steps, std::size_t n) {
  return std::sqrt(2.0 * (1.0 + 2.0 * static_cast<double>(lag_steps) / 3.0) / static_cast<double>(n));
}

}  // namespace

TEST(Linewidth, PowerProductMatchesIndependentEvaluation) {
  // Evaluated separately in double precision from the profile parameters.
  const auto m = LinewidthModel::dfb_1550();
  EXPECT_NEAR(m.linewidth_power_product(), 26111.855570445779, 1e-9);
  EXPECT_NEAR(OperatingPoint::low_power(m).output_power.value(), 0.00090040881277399243, 1e-15);
}

TEST(Linewidth, LowPowerPointIsThirtyMegahertz) {
  const auto m = LinewidthModel::dfb_1550();
  const auto lw = total_linewidth(m, OperatingPoint::low_power(m));
  EXPECT_NEAR(lw.quantum.value(), 29e6, 1e-3);
  EXPECT_DOUBLE_EQ(lw.classical.value(), 1e6);
  EXPECT_NEAR(lw.total.value(), 30e6, 1e-3);
  EXPECT_NEAR(lw.quantum_fraction, 29.0 / 30.0, 1e-12);
  EXPECT_GT(lw.quantum_fraction, 0.9);
  // tau_c ~ 10 ns, the low-power coherence time.
  EXPECT_NEAR(coherence_time(lw.total).value(), 10.61032954e-9, 1e-16);
}

TEST(Linewidth, HighPowerPointIsFloorDominated) {
  const auto m = LinewidthModel::dfb_1550();
  const auto lw = total_linewidth(m, OperatingPoint::high_power(m));
  EXPECT_NEAR(lw.total.value(), 1.029e6, 1.0);
  EXPECT_LT(lw.quantum_fraction, 0.05);
  const double tau = coherence_time(lw.total).value();
  EXPECT_NEAR(tau, 309.3390536e-9, 1e-15);
  // Agrees with 320 ns to one significant figure.
  EXPECT_EQ(std::lround(tau / 100e-9), 3);
}

TEST(Linewidth, QuantumPartIsInverseInPower) {
  const auto m = LinewidthModel::dfb_1550();
  for (double p : {1e-4, 1e-3, 5e-3, 0.02}) {
    const Hertz a = quantum_linewidth(m, {Watts(p), ""});
    const Hertz b = quantum_linewidth(m, {Watts(2.0 * p), ""});
    EXPECT_NEAR(a / b, 2.0, 1e-12) << p;
  }
}

TEST(Linewidth, AlphaEnhancementFactor) {
  auto m0 = LinewidthModel::dfb_1550();
  m0.henry_alpha = 0.0;
  auto m1 = m0;
  m1.henry_alpha = 1.0;
  const OperatingPoint op{1_mW, ""};
  EXPECT_NEAR(quantum_linewidth(m1, op) / quantum_linewidth(m0, op), 2.0, 1e-12);
}

TEST(Linewidth, InfinitePowerLeavesOnlyTheFloor) {
  const auto m = LinewidthModel::dfb_1550();
  const auto lw = total_linewidth(m, {Watts(1e12), ""});
  EXPECT_NEAR(lw.total.value(), 1e6, 1e-3);
  EXPECT_LT(lw.quantum_fraction, 1e-10);
}

TEST(Linewidth, RejectsUnphysicalParameters) {
  const auto good = LinewidthModel::dfb_1550();
  EXPECT_THROW(quantum_linewidth(good, {Watts(0.0), ""}), InvalidParameter);
  EXPECT_THROW(quantum_linewidth(good, {Watts(-1e-3), ""}), InvalidParameter);
  auto bad = good;
  bad.gain = bad.waveguide_loss;
  EXPECT_THROW(quantum_linewidth(bad, {1_mW, ""}), InvalidParameter);
  bad = good;
  bad.spontaneous_emission_factor = 0.0;
  EXPECT_THROW(quantum_linewidth(bad, {1_mW, ""}), InvalidParameter);
  EXPECT_THROW(coherence_time(Hertz(0.0)), InvalidParameter);
}

TEST(CoherenceTime, KnownValues) {
  EXPECT_NEAR(coherence_time(30_MHz).value(), 10.61032954e-9, 1e-17);
  EXPECT_NEAR(coherence_time(1_MHz).value(), 318.3098862e-9, 1e-16);
  EXPECT_NEAR(coherence_time(Hertz(1.0 / std::numbers::pi)).value(), 1.0, 1e-15);
}

TEST(PhaseWalk, IncrementVariance) {
  const Seconds tau = 10_ns;
  const Seconds dt = 50_ps;
  const std::size_t n = 1'000'000;
  const auto path = simulate_phase_path(tau, dt, n + 1, Seed{11});
  std::vector<double> inc(n);
  for (std::size_t i = 0; i < n; ++i) inc[i] = path.values[i + 1] - path.values[i];
  const auto m = stats::moments(inc);
  EXPECT_NEAR(m.variance, 0.01, 0.01 * 0.02);
  EXPECT_NEAR(m.mean, 0.0, 3.0 * 0.1 / std::sqrt(static_cast<double>(n)));
  // Gaussian increments: excess kurtosis within 3 standard errors of zero.
  EXPECT_LT(std::fabs(m.excess_kurtosis), 3.0 * std::sqrt(24.0 / static_cast<double>(n)));
}

TEST(PhaseWalk, StartsAtZeroAndIsDeterministic) {
  const auto a = simulate_phase_path(10_ns, 50_ps, 4096, Seed{5});
  const auto b = simulate_phase_path(10_ns, 50_ps, 4096, Seed{5});
  const auto c = simulate_phase_path(10_ns, 50_ps, 4096, Seed{6});
  EXPECT_EQ(a.values.front(), 0.0);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  EXPECT_NEAR(a.span().value(), 4095 * 50e-12, 1e-20);
}

TEST(PhaseWalk, UnwrappedPathIsNotConfinedToPi) {
  // Var after 1 us is 200 rad^2; a wrapped path would stay in [-pi, pi).
  const auto path = simulate_phase_path(10_ns, 50_ps, 20'001, Seed{8});
  double max_abs = 0.0;
  for (double v : path.values) max_abs = std::max(max_abs, std::fabs(v));
  EXPECT_GT(max_abs, std::numbers::pi);
}

TEST(PhaseWalk, VeryLongCoherenceGivesNegligiblePhase) {
  const auto path = simulate_phase_path(Seconds(1e6), 50_ps, 100'000, Seed{2});
  for (double v : path.values) ASSERT_LT(std::fabs(v), 1e-3);
}

TEST(PhaseWalk, RejectsBadArguments) {
  EXPECT_THROW(simulate_phase_path(10_ns, 50_ps, 1, Seed{1}), InvalidParameter);
  EXPECT_THROW(simulate_phase_path(Seconds(0.0), 50_ps, 10, Seed{1}), InvalidParameter);
  EXPECT_THROW(simulate_phase_path(10_ns, Seconds(-1e-12), 10, Seed{1}), InvalidParameter);
}

TEST(DelayedPhase, VarianceAtDefaultDelay) {
  const std::size_t n = 1'000'000;
  const auto path = simulate_phase_path(10_ns, 50_ps, n + 13, Seed{21});
  const auto d = delayed_phase_difference(path, 650_ps);
  ASSERT_EQ(d.values.size(), n);
  EXPECT_EQ(d.delay.steps, 13u);
  EXPECT_NEAR(stats::moments(d.values).variance, 0.130, 0.130 * 0.02);
}

TEST(DelayedPhase, VarianceLawAcrossParameters) {
  struct Case {
    double tau;
    double delay;
  };
  const std::size_t n = 1'000'000;
  std::uint64_t seed = 100;
  for (const Case c : {Case{10e-9, 250e-12}, Case{10e-9, 1e-9}, Case{1e-9, 500e-12}, Case{50e-9, 2e-9}}) {
    const Seconds dt = 50_ps;
    const auto snap = snap_delay(Seconds(c.delay), dt);
    const auto path = simulate_phase_path(Seconds(c.tau), dt, n + snap.steps, Seed{seed++});
    const auto d = delayed_phase_difference(path, Seconds(c.delay));
    const double expected = phase_variance(snap.applied, Seconds(c.tau));
    const double tol = 3.0 * delayed_variance_rel_error(snap.steps, n) * expected;
    EXPECT_NEAR(stats::moments(d.values).variance, expected, tol) << c.tau << " " << c.delay;
  }
}

TEST(DelayedPhase, CoherenceRatioScalesVariance) {
  const std::size_t n = 1'000'000;
  const auto short_tau = simulate_phase_path(10_ns, 50_ps, n + 13, Seed{31});
  const auto long_tau = simulate_phase_path(320_ns, 50_ps, n + 13, Seed{32});
  const double a = stats::moments(delayed_phase_difference(short_tau, 650_ps).values).variance;
  const double b = stats::moments(delayed_phase_difference(long_tau, 650_ps).values).variance;
  EXPECT_NEAR(a / b, 32.0, 32.0 * 0.05);
}

TEST(DelayedPhase, ZeroDelayIsIdenticallyZero) {
  const auto path = simulate_phase_path(10_ns, 50_ps, 1000, Seed{3});
  const auto d = delayed_phase_difference(path, Seconds(0.0));
  ASSERT_EQ(d.values.size(), 1000u);
  for (double v : d.values) EXPECT_EQ(v, 0.0);
}

TEST(DelayedPhase, DelayLongerThanPathThrows) {
  const auto path = simulate_phase_path(10_ns, 50_ps, 10, Seed{3});
  EXPECT_THROW(delayed_phase_difference(path, 1_ns), InvalidParameter);
}

TEST(DelayedPhase, SnapIsRecorded) {
  const auto s = snap_delay(660_ps, 50_ps);
  EXPECT_EQ(s.steps, 13u);
  EXPECT_NEAR(s.applied.value(), 650e-12, 1e-22);
  EXPECT_NEAR(s.requested.value(), 660e-12, 1e-22);
  EXPECT_NEAR(s.snap_error().value(), -10e-12, 1e-22);
  EXPECT_EQ(snap_delay(690_ps, 50_ps).steps, 14u);
  EXPECT_THROW(snap_delay(Seconds(-1e-12), 50_ps), InvalidParameter);
}
