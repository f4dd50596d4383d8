#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "thermnet/analysis/fitting.hpp"
#include "thermnet/analysis/steady_scan.hpp"
#include "thermnet/analysis/thermal.hpp"
#include "thermnet/dynamics/density_matrix.hpp"
#include "thermnet/dynamics/evolve.hpp"
#include "thermnet/dynamics/operators.hpp"
#include "thermnet/error.hpp"

using namespace thermnet;
using namespace thermnet::analysis;

namespace {

constexpr double kWc = units::ghz(7.48);

double be_oracle(double omega, double t) { return 1.0 / (std::exp(kHbar * omega / (kBoltzmann * t)) - 1.0); }

std::vector<double> grid(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

ScanTemplate qa_template() {
  dynamics::QubitParams q;
  q.anharmonicity = units::mhz(-204.0);
  q.levels = 5;
  q.relaxation = 1.0 / 1.08e-6;
  q.occupancy = 0.52;
  return {q, units::mhz(5.0), units::ghz(7.429), 0};
}

}  // namespace

TEST(BoseEinstein, MatchesDirectFormula) {
  EXPECT_NEAR(bose_einstein(kWc, 2.0), be_oracle(kWc, 2.0), 1e-12);
  EXPECT_NEAR(bose_einstein(kWc, 2.0), 5.09, 0.01);
  EXPECT_NEAR(bose_einstein(kWc, 4.0), 10.66, 0.02);
}

TEST(BoseEinstein, ColdLimit) {
  EXPECT_EQ(bose_einstein(kWc, 1e-6), 0.0);
  const double x = 35.0;
  const double t = kHbar * kWc / (kBoltzmann * x);
  EXPECT_NEAR(bose_einstein(kWc, t) / std::exp(-x), 1.0, 1e-12);
  EXPECT_LT(bose_einstein(kWc, 0.01), 1e-15);
}

TEST(BoseEinstein, RejectsNonPositiveInputs) {
  EXPECT_THROW(bose_einstein(kWc, 0.0), InvalidArgument);
  EXPECT_THROW(bose_einstein(-kWc, 1.0), InvalidArgument);
  EXPECT_THROW(effective_temperature(kWc, 0.0), InvalidArgument);
}

TEST(BoseEinstein, InversePairOverDecades) {
  for (double n = 1e-4; n <= 1e3; n *= 1.7) {
    const double t = effective_temperature(kWc, n);
    EXPECT_NEAR(bose_einstein(kWc, t) / n, 1.0, 1e-10) << n;
  }
  EXPECT_NEAR(effective_temperature(kWc, 5.09), 2.0, 0.005);
  const double x = std::log1p(1.0 / 0.06);
  EXPECT_NEAR(effective_temperature(kWc, 0.06), kHbar * kWc / (kBoltzmann * x), 1e-12);
  EXPECT_NEAR(effective_temperature(kWc, 0.06), 0.125, 0.001);
}

TEST(ThermalPoint, Constructors) {
  const auto a = ThermalPoint::from_temperature(kWc, 3.0);
  EXPECT_NEAR(a.occupancy, be_oracle(kWc, 3.0), 1e-12);
  const auto b = ThermalPoint::from_occupancy(kWc, a.occupancy);
  EXPECT_NEAR(b.temperature, 3.0, 1e-9);
}

TEST(FitExponential, NoiselessRecovery) {
  const auto t = grid(0.0, 4e-6, 201);
  std::vector<double> y;
  for (double x : t) y.push_back(-0.34 * std::exp(-x / 760e-9) + 0.34);
  const auto f = fit_exponential(t, y);
  EXPECT_NEAR(f.time_constant() / 760e-9, 1.0, 1e-6);
  EXPECT_NEAR(f.amplitude / -0.34, 1.0, 1e-6);
  EXPECT_NEAR(f.offset / 0.34, 1.0, 1e-6);

  std::vector<double> z;
  for (double x : t) z.push_back(1.0 * std::exp(-x / 760e-9) + 0.34);
  const auto g = fit_exponential(t, z);
  EXPECT_NEAR(g.time_constant() / 760e-9, 1.0, 1e-6);
  EXPECT_NEAR(g.amplitude, 1.0, 1e-6);
  EXPECT_NEAR(g.offset, 0.34, 1e-6);
}

TEST(FitExponential, ConstantSeries) {
  const auto t = grid(0.0, 1e-6, 20);
  const std::vector<double> y(20, 0.42);
  const auto f = fit_exponential(t, y);
  EXPECT_EQ(f.amplitude, 0.0);
  EXPECT_NEAR(f.offset, 0.42, 1e-15);
}

TEST(FitExponential, NoisyRecoveryWithinFivePercent) {
  const auto t = grid(0.0, 4e-6, 201);
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> y;
    for (double x : t) y.push_back(std::exp(-x / 760e-9) + 0.34 + noise(rng));
    const auto f = fit_exponential(t, y);
    EXPECT_NEAR(f.time_constant() / 760e-9, 1.0, 0.05) << seed;
  }
}

TEST(FitExponential, RejectsBadInput) {
  const std::vector<double> t{0, 1, 2, 3};
  const std::vector<double> y{1, 0.5, 0.25, 0.125};
  EXPECT_THROW(fit_exponential(t, y), InvalidArgument);
  const std::vector<double> t2{0, 1, 1, 3, 4};
  const std::vector<double> y2{1, 0.5, 0.25, 0.125, 0.06};
  EXPECT_THROW(fit_exponential(t2, y2), InvalidArgument);
}

TEST(FitDampedSine, NoiselessRecovery) {
  const double omega = units::mhz(5.0);
  const auto t = grid(0.0, 1e-6, 401);
  std::vector<double> y;
  for (double x : t) y.push_back(0.4 * std::exp(-x / 400e-9) * std::cos(omega * x + 0.3) + 0.5);
  const auto f = fit_damped_sine(t, y);
  EXPECT_NEAR(f.omega / omega, 1.0, 1e-6);
  EXPECT_NEAR(f.time_constant() / 400e-9, 1.0, 1e-6);
  EXPECT_NEAR(f.amplitude, 0.4, 1e-6);
  EXPECT_NEAR(f.phase, 0.3, 1e-6);
  EXPECT_NEAR(f.offset, 0.5, 1e-6);
}

TEST(FitDampedSine, PureCosineHasNoDecay) {
  const double omega = units::mhz(12.0);
  const auto t = grid(0.0, 500e-9, 301);
  std::vector<double> y;
  for (double x : t) y.push_back(std::cos(omega * x));
  const auto f = fit_damped_sine(t, y);
  EXPECT_NEAR(f.omega / omega, 1.0, 1e-6);
  EXPECT_LT(std::abs(f.rate), 1e-3 / 500e-9);
}

TEST(FitDampedSine, NoPeakIsAnError) {
  const auto t = grid(0.0, 1e-6, 64);
  std::vector<double> y;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) y.push_back(n(rng));
  EXPECT_THROW(fit_damped_sine(t, y), NumericalError);
}

TEST(FitDampedSine, RamseyTraceFromDynamics) {
  // Qubit in |+>, detuned from the frame, with pure dephasing: <X>(t) rings at the detuning.
  const double delta = units::mhz(7.0);
  dynamics::QubitParams q;
  q.frequency = kWc + delta;
  q.levels = 2;
  q.pure_dephasing = 1.0 / 300e-9;
  const std::vector<dynamics::QubitParams> qs{q};
  const dynamics::ModeParams mode{kWc, 2, 0.0, 0.0};
  const std::vector<double> g{0.0};
  const auto sys = dynamics::build_open_system(qs, mode, g, kWc);
  dynamics::DensityMatrix rho0 = dynamics::DensityMatrix::Zero(4, 4);
  const int i0 = sys.space.index(std::vector<int>{0, 0});
  const int i1 = sys.space.index(std::vector<int>{1, 0});
  rho0(i0, i0) = rho0(i1, i1) = rho0(i0, i1) = rho0(i1, i0) = 0.5;
  dynamics::SparseOp x(4, 4);
  x.insert(i0, i1) = 1.0;
  x.insert(i1, i0) = 1.0;
  dynamics::EvolveOptions opts;
  opts.sample_interval = 2e-9;
  std::vector<double> t, y;
  dynamics::evolve(rho0, sys.hamiltonian, sys.collapse_ops, 600e-9, opts,
                   [&](double time, const dynamics::DensityMatrix& rho) {
                     t.push_back(time);
                     y.push_back(dynamics::expectation(rho, x));
                   });
  const auto f = fit_damped_sine(t, y);
  EXPECT_NEAR(f.omega / delta, 1.0, 0.01);
  // Dephasing L = sqrt(G/2) n decays coherences at G/4.
  EXPECT_NEAR(f.rate * 300e-9 * 4.0, 1.0, 0.01);
}

TEST(SteadyScan, SinglePointEqualToTargetIsTheContour) {
  const auto tpl = qa_template();
  const double kap = 1.0 / 820e-9;
  const double n = 3.0;
  const double pe = steady_excitation(tpl, kap, n);
  const std::vector<double> occ{n}, kaps{kap};
  const auto r = steady_scan(tpl, occ, kaps, pe);
  ASSERT_EQ(r.contour.size(), 1u);
  EXPECT_EQ(r.contour[0].occupancy, n);
  EXPECT_EQ(r.contour[0].kappa, kap);
  EXPECT_TRUE(r.contour_found);
}

TEST(SteadyScan, TargetOutsideRangeIsFlagged) {
  const auto tpl = qa_template();
  const auto occ = log_grid(0.01, 1.0, 4);
  const auto kap = log_grid(1e6, 1e8, 3);
  const auto r = steady_scan(tpl, occ, kap, 0.99);
  EXPECT_FALSE(r.contour_found);
  EXPECT_TRUE(r.contour.empty());
}

TEST(SteadyScan, MonotoneAndContourOnSurface) {
  const auto tpl = qa_template();
  const auto occ = log_grid(0.01, 10.0, 12);
  const auto kap = log_grid(1.0 / 2000e-9, 1.0 / 5e-9, 8);
  const auto r = steady_scan(tpl, occ, kap, 0.45, 1.0 / 820e-9);
  ASSERT_TRUE(r.contour_found);
  EXPECT_TRUE(monotone_in_occupancy(r));
  for (Eigen::Index i = 0; i < r.excited.size(); ++i) {
    EXPECT_GE(r.excited(i), 0.0);
    EXPECT_LE(r.excited(i), 1.0);
  }
  ASSERT_FALSE(r.contour.empty());
  for (const auto& p : r.contour) EXPECT_NEAR(interpolate_surface(r, p.occupancy, p.kappa), 0.45, 1e-4);
  // Single crossing per kappa row.
  for (std::size_t i = 0; i < kap.size(); ++i) {
    int hits = 0;
    for (const auto& p : r.contour) hits += p.kappa == kap[i];
    EXPECT_LE(hits, 1);
  }
  ASSERT_TRUE(r.readout.has_value());
  EXPECT_LT(r.readout->occupancy_low, r.readout->occupancy);
  EXPECT_GT(r.readout->occupancy_high, r.readout->occupancy);
}

TEST(SteadyScan, OccupancyReadoutsAt4K) {
  const auto tpl = qa_template();
  const double ki = 1.0 / 820e-9, kd = 1.0 / 9.6e-9;
  const double off = solve_occupancy(tpl, ki, 0.556, 1e-3, 30.0);
  const double on = solve_occupancy(tpl, ki + kd, 0.095, 1e-6, 30.0);
  EXPECT_NEAR(off, 5.64, 0.5);
  EXPECT_NEAR(on, 0.059, 0.006);
  // Reduction ratio against the bath-merge estimate 1 + kd/ki.
  EXPECT_NEAR((off / on) / (1.0 + kd / ki), 1.0, 0.15);
}

TEST(LogGrid, EndpointsAndSpacing) {
  const auto g = log_grid(0.01, 100.0, 5);
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 0.01);
  EXPECT_DOUBLE_EQ(g.back(), 100.0);
  EXPECT_NEAR(g[2], 1.0, 1e-12);
  EXPECT_THROW(log_grid(0.0, 1.0, 3), InvalidArgument);
}
