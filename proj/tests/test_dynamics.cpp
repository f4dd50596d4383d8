#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "thermnet/dynamics/density_matrix.hpp"
#include "thermnet/dynamics/evolve.hpp"
#include "thermnet/dynamics/liouvillian.hpp"
#include "thermnet/dynamics/operators.hpp"
#include "thermnet/dynamics/steady_state.hpp"
#include "thermnet/error.hpp"

using namespace thermnet;
using namespace thermnet::dynamics;

namespace {

constexpr double kWc = units::ghz(7.48);
constexpr double kG = units::mhz(5.0);

QubitParams qubit(int levels, double freq = kWc) {
  QubitParams q;
  q.frequency = freq;
  q.anharmonicity = units::mhz(-204.0);
  q.levels = levels;
  return q;
}

QubitParams qa_4k(int levels) {
  auto q = qubit(levels, units::ghz(7.429));
  q.relaxation = 1.0 / 1.08e-6;
  q.occupancy = 0.52;
  return q;
}

// Geometric populations truncated to `dim` and renormalised.
std::vector<double> geometric(int dim, double n) {
  std::vector<double> p(dim);
  double z = 0.0;
  for (int k = 0; k < dim; ++k) z += p[k] = std::pow(n / (n + 1.0), k);
  for (auto& x : p) x /= z;
  return p;
}

Eigen::MatrixXcd dense(const SparseOp& op) { return Eigen::MatrixXcd(op); }

double excited(const DensityMatrix& rho, const TensorSpace& space, int site) {
  return expectation(rho, embed(excited_projector(space.dim(site)), site, space));
}

}  // namespace

TEST(MergeBaths, SingleBathIsItself) {
  const Bath b[] = {{3.0e6, 0.7}};
  const auto m = merge_baths(b);
  EXPECT_DOUBLE_EQ(m.kappa, 3.0e6);
  EXPECT_DOUBLE_EQ(m.occupancy, 0.7);
}

TEST(MergeBaths, RadiativeCoolingFactor) {
  const double ki = 1.0 / 820e-9, kd = 1.0 / 9.6e-9;
  const Bath b[] = {{ki, 5.0}, {kd, 0.0}};
  const auto m = merge_baths(b);
  EXPECT_NEAR(m.kappa, ki + kd, 1e-6);
  EXPECT_NEAR(m.occupancy, 5.0 * ki / (ki + kd), 1e-12);
  EXPECT_NEAR(5.0 / m.occupancy, 1.0 + kd / ki, 1e-9);
  EXPECT_NEAR(m.occupancy, 0.058, 0.002);
}

TEST(MergeBaths, EqualRatesAverage) {
  const Bath b[] = {{1e6, 0.2}, {1e6, 1.4}};
  EXPECT_NEAR(merge_baths(b).occupancy, 0.8, 1e-15);
}

TEST(MergeBaths, RejectsZeroTotalRate) {
  const Bath b[] = {{0.0, 1.0}, {0.0, 2.0}};
  EXPECT_THROW(merge_baths(b), InvalidArgument);
  EXPECT_THROW(merge_baths(std::span<const Bath>{}), InvalidArgument);
}

TEST(FockCutoff, RuleAndFloor) {
  const int expect = static_cast<int>(std::ceil(std::log(1e-3) / std::log(5.64 / 6.64)));
  EXPECT_EQ(fock_cutoff_for(5.64), expect);
  EXPECT_NEAR(expect, 42, 1);
  EXPECT_EQ(fock_cutoff_for(0.06), 10);
  EXPECT_EQ(fock_cutoff_for(0.0), 10);
  for (double n : {0.5, 2.0, 5.64, 11.0}) EXPECT_LT(truncated_tail(n, fock_cutoff_for(n)), 1e-3);
}

TEST(Hamiltonian, ResonantUncoupledIsDuffingOnly) {
  const std::vector<QubitParams> qs{qubit(3)};
  const ModeParams mode{kWc, 4, 0.0, 0.0};
  const std::vector<double> g{0.0};
  const auto h = dense(build_hamiltonian(qs, mode, g, kWc));
  const auto space = system_space(qs, mode);
  for (int i = 0; i < space.size(); ++i) {
    const int q = space.level(i, 0);
    EXPECT_NEAR(h(i, i).real(), 0.5 * qs[0].anharmonicity * q * (q - 1), 1e-6);
    for (int j = 0; j < space.size(); ++j) {
      if (j == i) continue;
      EXPECT_EQ(h(i, j), Complex{});
    }
  }
  EXPECT_NEAR(h(0, 0).real(), 0.0, 1e-12);
}

TEST(Hamiltonian, JaynesCummingsDoublet) {
  const std::vector<QubitParams> qs{qubit(2)};
  const ModeParams mode{kWc, 3, 0.0, 0.0};
  const std::vector<double> g{kG};
  const auto h = dense(build_hamiltonian(qs, mode, g, kWc));
  EXPECT_LT((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  const auto space = system_space(qs, mode);
  const int a = space.index(std::vector<int>{1, 0});
  const int b = space.index(std::vector<int>{0, 1});
  Eigen::Matrix2cd block;
  block << h(a, a), h(a, b), h(b, a), h(b, b);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(block);
  EXPECT_NEAR(es.eigenvalues()(1) - es.eigenvalues()(0), 2.0 * kG, 1e-6);
}

TEST(Hamiltonian, IdleDetuningOfQubitB) {
  const std::vector<QubitParams> qs{qubit(3, units::ghz(7.429)), qubit(3, units::ghz(7.538))};
  const ModeParams mode{kWc, 3, 0.0, 0.0};
  const std::vector<double> g{0.0, 0.0};
  const auto h = dense(build_hamiltonian(qs, mode, g, kWc));
  const auto space = system_space(qs, mode);
  const int i = space.index(std::vector<int>{0, 1, 0});
  EXPECT_NEAR(h(i, i).real(), kTwoPi * (7.538 - 7.48) * 1e9, 1.0);
}

TEST(CollapseOps, ZeroTemperatureOnlyLowers) {
  auto q = qubit(3);
  q.relaxation = 1e6;
  const std::vector<QubitParams> qs{q};
  const ModeParams mode{kWc, 4, 2e6, 0.0};
  const auto ls = build_collapse_operators(qs, mode);
  EXPECT_EQ(ls.size(), 2u);
  for (const auto& l : ls) {
    const auto d = dense(l);
    EXPECT_EQ(d.triangularView<Eigen::StrictlyLower>().toDenseMatrix().cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(CollapseOps, ThermalRatesForQubitA) {
  const std::vector<QubitParams> qs{qa_4k(3)};
  const ModeParams mode{kWc, 2, 0.0, 0.0};
  const auto ls = build_collapse_operators(qs, mode);
  ASSERT_EQ(ls.size(), 2u);
  const auto space = system_space(qs, mode);
  const int one = space.index(std::vector<int>{1, 0});
  const int zero = space.index(std::vector<int>{0, 0});
  // The lowering partner has weight on <0|L|1>, the raising one on <1|L|0>.
  double down = 0.0, up = 0.0;
  for (const auto& l : ls) {
    const auto d = dense(l);
    down += std::norm(d(zero, one));
    up += std::norm(d(one, zero));
  }
  EXPECT_NEAR(down * 1e-6, 1.407, 1e-3);
  EXPECT_NEAR(up * 1e-6, 0.481, 1e-3);
}

TEST(CollapseOps, RejectNegativeRates) {
  auto q = qubit(2);
  q.relaxation = -1.0;
  const std::vector<QubitParams> qs{q};
  EXPECT_THROW(build_collapse_operators(qs, ModeParams{kWc, 3, 0.0, 0.0}), InvalidArgument);
}

TEST(DensityMatrixChecks, DetectsEachViolation) {
  DensityMatrix rho = thermal_state(4, 0.5);
  EXPECT_TRUE(check_density_matrix(rho).valid);
  DensityMatrix bad = rho;
  bad(0, 1) = Complex{1e-6, 0.0};
  EXPECT_FALSE(check_density_matrix(bad).valid);
  bad = rho * 1.001;
  EXPECT_FALSE(check_density_matrix(bad).valid);
  bad = rho;
  bad(0, 0) += 0.01;
  bad(1, 1) -= 0.01 + rho(1, 1).real() + 1e-3;
  bad(2, 2) += rho(1, 1).real() + 1e-3;
  EXPECT_FALSE(check_density_matrix(bad).valid);
  EXPECT_LT(check_density_matrix(bad).min_eigenvalue, -1e-7);
}

TEST(Expectation, GroundStateHasNoExcitation) {
  const TensorSpace space({3, 3, 5});
  const auto rho = basis_state(space, std::vector<int>{0, 0, 0});
  EXPECT_EQ(excited(rho, space, 0), 0.0);
  EXPECT_NEAR(expectation(rho, identity_op(space.size())), 1.0, 1e-15);
}

TEST(Expectation, ThermalPhotonNumber) {
  const int dim = fock_cutoff_for(5.0);
  const auto p = geometric(dim, 5.0);
  double n = 0.0;
  for (int k = 0; k < dim; ++k) n += k * p[k];
  const auto rho = thermal_state(dim, 5.0);
  EXPECT_NEAR(expectation(rho, number_op(dim)), n, 1e-12);
  EXPECT_NEAR(expectation(rho, number_op(dim)), 5.0, 0.05);
}

TEST(Expectation, RejectsNonHermitianObservable) {
  const auto rho = thermal_state(3, 0.3);
  EXPECT_THROW(expectation(rho, lowering_op(3)), InvalidArgument);
}

TEST(PartialTrace, ProductStateFactorises) {
  const auto a = thermal_state(3, 0.4);
  const auto b = thermal_state(5, 1.2);
  const TensorSpace space({3, 5});
  const auto ab = kron(a, b);
  const std::vector<int> keep_a{0}, keep_b{1};
  EXPECT_LT((partial_trace(ab, space, keep_a) - a).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((partial_trace(ab, space, keep_b) - b).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Evolve, VacuumRabiCosineSquared) {
  const std::vector<QubitParams> qs{qubit(2)};
  const ModeParams mode{kWc, 3, 0.0, 0.0};
  const std::vector<double> g{kG};
  const auto sys = build_open_system(qs, mode, g, kWc);
  const auto rho0 = basis_state(sys.space, std::vector<int>{1, 0});
  EvolveOptions opts;
  opts.sample_interval = 5e-9;
  const auto traj = evolve_trajectory(rho0, sys.hamiltonian, sys.collapse_ops, 100e-9, opts, sys.space.charges());
  ASSERT_EQ(traj.times.size(), 21u);
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double c = std::cos(kG * traj.times[i]);
    EXPECT_NEAR(excited(traj.states[i], sys.space, 0), c * c, 1e-8) << traj.times[i];
  }
  // Full swap at pi / (2g) = 50 ns.
  EXPECT_NEAR(kPi / (2.0 * kG), 50e-9, 1e-15);
  EXPECT_NEAR(excited(traj.states[10], sys.space, 0), 0.0, 1e-8);
}

TEST(Evolve, ExcitationNumberConservedWhenClosed) {
  const std::vector<QubitParams> qs{qubit(3), qubit(3)};
  const ModeParams mode{kWc, 6, 0.0, 0.0};
  const std::vector<double> g{kG, 0.7 * kG};
  const auto sys = build_open_system(qs, mode, g, kWc);
  DensityMatrix rho0 = kron(std::vector<DensityMatrix>{thermal_state(3, 0.3), thermal_state(3, 0.1), thermal_state(6, 0.5)});
  SparseOp ntot(sys.space.size(), sys.space.size());
  for (int s = 0; s < 3; ++s) ntot += embed(number_op(sys.space.dim(s)), s, sys.space);
  const double n0 = expectation(rho0, ntot);
  EvolveOptions opts;
  opts.sample_interval = 10e-9;
  evolve(rho0, sys.hamiltonian, sys.collapse_ops, 200e-9, opts,
         [&](double, const DensityMatrix& rho) { EXPECT_NEAR(expectation(rho, ntot), n0, 1e-8); });
}

TEST(Evolve, InvariantsHoldAlongDissipativeRun) {
  const std::vector<QubitParams> qs{qa_4k(3)};
  const ModeParams mode{kWc, fock_cutoff_for(1.5), 1.0 / 820e-9, 1.5};
  const std::vector<double> g{kG};
  const auto sys = build_open_system(qs, mode, g, kWc);
  const auto rho0 = basis_state(sys.space, std::vector<int>{1, 0});
  EvolveOptions opts;
  opts.sample_interval = 20e-9;
  int samples = 0;
  evolve(rho0, sys.hamiltonian, sys.collapse_ops, 1e-6, opts, [&](double, const DensityMatrix& rho) {
    const auto r = check_density_matrix(rho);
    EXPECT_LT(std::abs(rho.trace().real() - 1.0), 1e-8);
    EXPECT_LT((rho - rho.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE(r.valid);
    ++samples;
  });
  EXPECT_EQ(samples, 51);
}

TEST(Evolve, FrameInvariance) {
  const std::vector<QubitParams> qs{qa_4k(3)};
  const ModeParams mode{kWc, 12, 1.0 / 820e-9, 0.8};
  const std::vector<double> g{kG};
  const auto rest = build_open_system(qs, mode, g, kWc);
  const auto moved = build_open_system(qs, mode, g, kWc + units::mhz(100.0));
  const auto rho0 = basis_state(rest.space, std::vector<int>{1, 0});
  EvolveOptions opts;
  opts.sample_interval = 10e-9;
  opts.max_dt = 0.01e-9;
  const auto a = evolve_trajectory(rho0, rest.hamiltonian, rest.collapse_ops, 200e-9, opts);
  const auto b = evolve_trajectory(rho0, moved.hamiltonian, moved.collapse_ops, 200e-9, opts);
  ASSERT_EQ(a.times.size(), b.times.size());
  for (std::size_t i = 0; i < a.times.size(); ++i)
    EXPECT_NEAR(excited(a.states[i], rest.space, 0), excited(b.states[i], rest.space, 0), 1e-6);
}

TEST(Evolve, QubitAloneThermalises) {
  const std::vector<QubitParams> qs{qa_4k(3)};
  const ModeParams mode{kWc, 2, 0.0, 0.0};
  const std::vector<double> g{0.0};
  const auto sys = build_open_system(qs, mode, g, kWc);
  const auto rho0 = basis_state(sys.space, std::vector<int>{0, 0});
  EvolveOptions opts;
  opts.max_dt = 1e-9;
  const auto rho = evolve(rho0, sys.hamiltonian, sys.collapse_ops, 10e-6, opts);
  const double pe = excited(rho, sys.space, 0);
  EXPECT_GE(pe, 0.31);
  EXPECT_LE(pe, 0.35);
}

TEST(Evolve, StepSizeAgainstFastDetuning) {
  const double delta = units::ghz(5.0);
  const std::vector<QubitParams> qs{qubit(2, kWc + delta)};
  const ModeParams mode{kWc, 2, 0.0, 0.0};
  const std::vector<double> g{0.0};
  const auto sys = build_open_system(qs, mode, g, kWc);
  DensityMatrix rho0 = DensityMatrix::Zero(sys.space.size(), sys.space.size());
  const int i0 = sys.space.index(std::vector<int>{0, 0});
  const int i1 = sys.space.index(std::vector<int>{1, 0});
  rho0(i0, i0) = rho0(i1, i1) = rho0(i0, i1) = rho0(i1, i0) = 0.5;
  const double t = 10.3e-9;

  EvolveOptions coarse;
  coarse.max_dt = 1e-9;
  EXPECT_THROW(evolve(rho0, sys.hamiltonian, sys.collapse_ops, t, coarse), NumericalError);

  EvolveOptions fine;
  const double d[] = {delta};
  fine.max_dt = stable_time_step(d, 0.0, 0.0);
  const auto rho = evolve(rho0, sys.hamiltonian, sys.collapse_ops, t, fine);
  const Complex expect = 0.5 * std::exp(Complex{0.0, delta * t});
  EXPECT_LT(std::abs(rho(i0, i1) - expect), 1e-6);
}

TEST(SteadyState, DetailedBalanceForUncoupledElements) {
  for (double n : {0.06, 0.52, 3.0}) {
    auto q = qubit(4);
    q.relaxation = 1e6;
    q.occupancy = n;
    const std::vector<QubitParams> qs{q};
    const ModeParams mode{kWc, fock_cutoff_for(2.0 * n), 2e6, 2.0 * n};
    const std::vector<double> g{0.0};
    const auto sys = build_open_system(qs, mode, g, kWc);
    const auto ss = steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges());
    EXPECT_FALSE(ss.degenerate);
    const auto pq = geometric(4, n);
    const auto pm = geometric(mode.fock_cutoff, 2.0 * n);
    for (int i = 0; i < sys.space.size(); ++i)
      for (int j = 0; j < sys.space.size(); ++j) {
        const double expect = i == j ? pq[sys.space.level(i, 0)] * pm[sys.space.level(i, 1)] : 0.0;
        ASSERT_NEAR(std::abs(ss.rho(i, j) - expect), 0.0, 1e-6) << n << " " << i << " " << j;
      }
  }
}

TEST(SteadyState, NullSpaceMatchesLongTimeEvolution) {
  auto q = qubit(2, kWc + units::mhz(3.0));
  q.relaxation = 1.0 / 1.08e-6;
  q.occupancy = 0.52;
  const std::vector<QubitParams> qs{q};
  const ModeParams mode{kWc, 5, 1.0 / 200e-9, 0.4};
  const std::vector<double> g{kG};
  const auto sys = build_open_system(qs, mode, g, kWc);
  const auto direct = steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges());
  const auto rho0 = basis_state(sys.space, std::vector<int>{0, 0});
  const auto relaxed = steady_state_by_evolution(sys.hamiltonian, sys.collapse_ops, rho0, {}, sys.space.charges());
  EXPECT_LT((direct.rho - relaxed.rho).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_TRUE(check_density_matrix(direct.rho).valid);
}

TEST(SteadyState, DegenerateWithoutDissipation) {
  const std::vector<QubitParams> qs{qubit(2)};
  auto q = qubit(2);
  q.relaxation = 1e6;
  const std::vector<QubitParams> lossy{q};
  const ModeParams mode{kWc, 3, 0.0, 0.0};
  const std::vector<double> g{0.0};
  // Qubit decays but the uncoupled mode keeps every Fock state stationary.
  const auto sys = build_open_system(lossy, mode, g, kWc);
  const auto ss = steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges());
  EXPECT_TRUE(ss.degenerate);
  EXPECT_TRUE(check_density_matrix(ss.rho).valid);
}

TEST(SteadyState, CoupledQubitAt4K) {
  const std::vector<QubitParams> qs{qa_4k(5)};
  const ModeParams mode{units::ghz(7.429), fock_cutoff_for(5.64), 1.0 / 820e-9, 5.64};
  const std::vector<double> g{kG};
  const auto sys = build_open_system(qs, mode, g, units::ghz(7.429));
  const auto ss = steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges());
  EXPECT_NEAR(excited(ss.rho, sys.space, 0), 0.556, 0.02);
}

TEST(SteadyState, TruncationConverged) {
  for (double n : {5.64, 0.059}) {
    const int base = fock_cutoff_for(n);
    double pe[2];
    for (int k = 0; k < 2; ++k) {
      const std::vector<QubitParams> qs{qa_4k(5)};
      const ModeParams mode{units::ghz(7.429), base << k, n > 1 ? 1.0 / 820e-9 : 1.0 / 820e-9 + 1.0 / 9.6e-9, n};
      const std::vector<double> g{kG};
      const auto sys = build_open_system(qs, mode, g, units::ghz(7.429));
      pe[k] = excited(steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges()).rho, sys.space, 0);
    }
    EXPECT_LT(std::abs(pe[1] - pe[0]), 1e-3) << n;
  }
}

TEST(Liouvillian, SectoredMatchesFullGenerator) {
  const std::vector<QubitParams> qs{qa_4k(3)};
  const ModeParams mode{kWc, 4, 1.0 / 300e-9, 0.9};
  const std::vector<double> g{kG};
  const auto sys = build_open_system(qs, mode, g, kWc);
  const auto charges = sys.space.charges();
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Random(sys.space.size(), sys.space.size());
  rho = rho * rho.adjoint();
  rho /= rho.trace();
  std::vector<int> orders;
  for (int c = 0; c <= 6; ++c) orders.push_back(c);
  const Liouvillian sectored(sys.hamiltonian, sys.collapse_ops, charges, orders);
  const Liouvillian full(sys.hamiltonian, sys.collapse_ops);
  const auto a = sectored.apply(rho);

  // Direct oracle: -i[H, rho] + sum L rho L^+ - 1/2 {L^+L, rho}.
  const Eigen::MatrixXcd h = dense(sys.hamiltonian);
  Eigen::MatrixXcd expect = Complex{0, -1} * (h * rho - rho * h);
  for (const auto& op : sys.collapse_ops) {
    const Eigen::MatrixXcd l = dense(op);
    const Eigen::MatrixXcd ll = l.adjoint() * l;
    expect += l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll);
  }
  const double scale = expect.cwiseAbs().maxCoeff();
  EXPECT_LT((a - expect).cwiseAbs().maxCoeff(), 1e-10 * scale);
  EXPECT_LT((full.apply(rho) - expect).cwiseAbs().maxCoeff(), 1e-10 * scale);
}

TEST(StableStep, RespectsCapAndRates) {
  const double d[] = {units::mhz(58.0)};
  EXPECT_DOUBLE_EQ(stable_time_step({}, 0.0, 0.0), 0.05e-9);
  EXPECT_NEAR(stable_time_step(d, 0.0, 0.0, 1.0), 0.02 / units::mhz(58.0), 1e-18);
  EXPECT_NEAR(stable_time_step({}, 0.0, 1e10, 1.0), 2e-12, 1e-24);
}
