// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "thermnet/analysis/fitting.hpp"
#include "thermnet/analysis/thermal.hpp"
#include "thermnet/circuit/circuit.hpp"
#include "thermnet/dynamics/density_matrix.hpp"
#include "thermnet/dynamics/evolve.hpp"
#include "thermnet/dynamics/operators.hpp"
#include "thermnet/dynamics/steady_state.hpp"
#include "thermnet/protocols/protocols.hpp"
#include "thermnet/tomography/tomography.hpp"

#ifdef THERMNET_ACCEPTANCE_CLI
#include "thermnet_cli/config.hpp"
#include "thermnet_cli/experiments.hpp"
#include <spdlog/spdlog.h>
#endif

using namespace thermnet;
namespace pr = thermnet::protocols;
using dynamics::DensityMatrix;

namespace {

constexpr double kNs = 1e-9;
constexpr double kUs = 1e-6;
constexpr double kTarget = units::ghz(7.48);

int failures = 0;

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(clock::now() - start_).count(); }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_ = clock::now();
};

void report(const std::string& id, bool pass, const std::string& detail, double seconds) {
  if (!pass) ++failures;
  std::printf("%s %-4s %s [%.1f s]\n", pass ? "PASS" : "FAIL", id.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

double excited(const Eigen::MatrixXcd& rho_q) { return 1.0 - rho_q(0, 0).real(); }

double reduced_excited(const DensityMatrix& joint, int levels) {
  const dynamics::TensorSpace space({levels, static_cast<int>(joint.rows()) / levels});
  const std::vector<int> keep{0};
  return excited(dynamics::partial_trace(joint, space, keep));
}

// Criteria 1 and 2 share the flux search.
void circuit_criteria() {
  Stopwatch sw;
  const auto net = circuit::CircuitNetwork::reference();
  const auto on = circuit::find_on_point(net, kTarget);
  const double t_on = sw.seconds();
  const double life_on = 1.0 / on.mode.kappa;
  report("1a", within(life_on, 9.6 * kNs, 0.25 * 9.6 * kNs) && t_on < 10.0,
         fmt::format("on-point (phi = {:.4f}) mode {:.4f} GHz lifetime {:.3f} ns, target 9.6 ns +-25%",
                     on.flux.phi_ratio(), units::to_ghz(on.mode.omega_m), life_on / kNs),
         t_on);

  Stopwatch sw2;
  const auto off = circuit::find_off_point(net, kTarget);
  const double t_off = sw2.seconds();
  const double life_off = 1.0 / off.mode.kappa;
  report("1b", within(life_off, 1.7e-3, 0.25 * 1.7e-3) && t_off < 10.0,
         fmt::format("off-point lifetime {:.3g} s, target 1.7 ms +-25% (lossless-SQUID network has no floor)",
                     life_off),
         t_off);

  report("2", within(std::abs(off.flux.phi_ratio()), 0.454, 0.02) && t_off < 10.0,
         fmt::format("off-point |phi| = {:.4f}, target 0.454 +-0.02", std::abs(off.flux.phi_ratio())), t_off);
}

void merge_criterion() {
  Stopwatch sw;
  const std::array<dynamics::Bath, 2> baths{{{1.0 / (820 * kNs), 5.0}, {1.0 / (9.6 * kNs), 0.0}}};
  const auto merged = dynamics::merge_baths(baths);
  const double factor = 5.0 / merged.occupancy;
  const double t = sw.seconds();
  report("3", within(merged.occupancy, 0.058, 0.002) && within(factor, 86.0, 1.0) && t < 1.0,
         fmt::format("merged <N_c> = {:.4f} (0.058 +-0.002), reduction {:.2f} (86 +-1)", merged.occupancy, factor), t);
}

void steady_criteria(const pr::SystemModel& m) {
  Stopwatch sa;
  const double alone = excited(pr::qubit_thermal_state(m, 0));
  report("4a", within(alone, 0.34, 0.03), fmt::format("qubit-alone P_e = {:.4f}, target 0.34 +-0.03", alone),
         sa.seconds());

  Stopwatch sb;
  const int cutoff = dynamics::fock_cutoff_for(m.mode_occupancy_off[0]);
  const double coupled = reduced_excited(pr::coupled_steady_state(m, 0, pr::DCoupler::off, cutoff), m.qubits[0].levels);
  const double tb = sb.seconds();
  report("4b", within(coupled, 0.556, 0.02) && tb < 300.0,
         fmt::format("coupled P_e = {:.4f} at N_max = {}, target 0.556 +-0.02", coupled, cutoff), tb);

  Stopwatch sc;
  const double cooled = excited(pr::cooled_qubit_state(m, 0));
  report("4c", within(cooled, 0.095, 0.02), fmt::format("cooled-mode P_e = {:.4f}, target 0.095 +-0.02", cooled),
         sc.seconds());
}

void retherm_criteria(const pr::SystemModel& m) {
  pr::RunOptions ro;
  ro.sample_interval = 20 * kNs;
  struct Case {
    const char* id;
    pr::RethermVariant variant;
    double target;
  };
  for (const Case c : {Case{"5a", pr::RethermVariant::qubit_alone, 0.76}, Case{"5b", pr::RethermVariant::coupled, 1.14}}) {
    Stopwatch sw;
    const auto r = pr::rethermalization_protocol(m, 4 * kUs, c.variant, ro);
    const auto fit = analysis::fit_exponential(r.times, r.excited_population[0]);
    const double tau = fit.time_constant() / kUs;
    const double t = sw.seconds();
    report(c.id, within(tau, c.target, 0.2 * c.target) && t < 600.0,
           fmt::format("{} tau = {:.3f} us (fit 0-4 us, asymptote {:.3f}), target {} us +-20%",
                       c.variant == pr::RethermVariant::coupled ? "coupled" : "qubit-alone", tau, fit.offset,
                       c.target),
           t);
  }
}

struct LadderPoint {
  double t_hot = 0.0;
  double f_chi = 0.0;
  double f_rho = 0.0;
};

LadderPoint transfer_and_bell(double t_hot, double time, double phase, const pr::BellTiming& timing, double bell_phase) {
  const auto m = pr::reference_model(t_hot);
  pr::TransferOptions to;
  to.time = time;
  to.receiver_phase = phase;
  pr::BellOptions bo;
  bo.timing = timing;
  bo.receiver_phase = bell_phase;
  return {t_hot, pr::transfer_process_tomography(m, {}, to).process.fidelity, pr::bell_protocol(m, bo).fidelity};
}

void transfer_criteria() {
  Stopwatch sw;
  const auto m = pr::reference_model(4.0);
  const double time = pr::lossless_transfer_time(m);
  const double phase = pr::calibrate_receiver_phase(m, time);
  const auto timing = pr::bell_timing_search(m);
  const double bell_phase = pr::calibrate_bell_phase(m, timing);

  pr::TransferOptions to;
  to.time = time;
  to.receiver_phase = phase;
  const double lossless_chi = pr::transfer_process_tomography(m.lossless(), {}, to).process.fidelity;
  pr::BellOptions bo;
  bo.timing = timing;
  bo.receiver_phase = bell_phase;
  const double lossless_rho = pr::bell_protocol(m.lossless(), bo).fidelity;
  const double t_lossless = sw.seconds();
  report("6c",
         lossless_chi >= 0.999 && lossless_rho >= 0.999 && within(time / kNs, 70.7, 2.0),
         fmt::format("lossless F_chi = {:.5f}, F_rho = {:.5f} (stages {:.0f}/{:.0f} ns), t* = {:.2f} ns (70.7 +-2)",
                     lossless_chi, lossless_rho, timing.stage1 / kNs, timing.stage2 / kNs, time / kNs),
         t_lossless);

  std::vector<LadderPoint> ladder;
  double t_warm = 0.0;
  for (const auto& row : pr::reference_rows()) {
    Stopwatch point;
    ladder.push_back(transfer_and_bell(row.t_hot, time, phase, timing, bell_phase));
    if (row.t_hot == 4.0) t_warm = point.seconds();
  }
  const auto& warm = ladder.back();
  report("6a", within(warm.f_rho, 0.633, 0.03) && t_warm + t_lossless < 900.0,
         fmt::format("4 K Bell F_rho = {:.4f}, target 0.633 +-0.03", warm.f_rho), t_warm);
  report("6b", warm.f_chi >= 0.55 && warm.f_chi <= 0.70 && t_warm + t_lossless < 900.0,
         fmt::format("4 K transfer F_chi = {:.4f}, target band [0.55, 0.70]", warm.f_chi), t_warm);

  bool decreasing = true;
  std::string trend;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (i > 0)
      decreasing = decreasing && ladder[i].f_chi < ladder[i - 1].f_chi && ladder[i].f_rho < ladder[i - 1].f_rho;
    trend += fmt::format("{}{} K: {:.3f}/{:.3f}", i ? ", " : "", ladder[i].t_hot, ladder[i].f_chi, ladder[i].f_rho);
  }
  report("7", decreasing, "F_chi/F_rho strictly decreasing with T_hot (" + trend + ")", sw.seconds());
}

// Compact re-runs of the property suites; each returns the worst observed error.
struct Property {
  std::string name;
  double error;
  double tolerance;
};

DensityMatrix random_state(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = Complex{n(rng), n(rng)};
  DensityMatrix rho = a * a.adjoint();
  return rho / rho.trace().real();
}

Eigen::Matrix2cd random_unitary(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  const double a = u(rng), b = u(rng), c = u(rng), th = 0.5 * u(rng);
  Eigen::Matrix2cd m;
  m << std::exp(Complex{0, a}) * std::cos(th), -std::exp(Complex{0, b}) * std::sin(th),
      std::exp(Complex{0, c - b}) * std::sin(th), std::exp(Complex{0, c - a}) * std::cos(th);
  return m;
}

Property validity_property() {
  auto m = pr::reference_model(4.0, 3);
  m.fock_cutoff = 12;
  pr::ScheduleSegment a;
  a.duration = 40 * kNs;
  a.couplings = m.couplings;
  a.initial_ops = {{pr::PrepKind::half_pi_pulse, 0, {}}};
  pr::ScheduleSegment b = a;
  b.d_coupler = pr::DCoupler::on;
  b.initial_ops.clear();
  double worst = 0.0;
  pr::RunOptions ro;
  ro.sample_interval = 10 * kNs;
  const auto r = pr::run_schedule(m, {a, b}, pr::cooled_initial_state(m, 12), ro);
  const auto& rho = r.final_state;
  worst = std::max(worst, std::abs(rho.trace().real() - 1.0));
  worst = std::max(worst, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
  worst = std::max(worst, std::max(0.0, -dynamics::min_eigenvalue(rho)));
  return {"density-matrix validity (trace, Hermiticity, positivity)", worst, 1e-10};
}

Property detailed_balance_property() {
  double worst = 0.0;
  for (double n : {0.05, 0.52, 3.0}) {
    dynamics::QubitParams q;
    q.frequency = kTarget;
    q.anharmonicity = units::mhz(-204.0);
    q.levels = 5;
    q.relaxation = 1.0 / (1.08 * kUs);
    q.occupancy = n;
    const std::vector<dynamics::QubitParams> qs{q};
    // Uncoupled lossy mode in vacuum, so the qubit factor must be geometric.
    const dynamics::ModeParams mode{kTarget, 2, 1.0 / (100 * kNs), 0.0};
    const std::vector<double> g{0.0};
    const auto sys = dynamics::build_open_system(qs, mode, g, kTarget);
    const auto ss = dynamics::steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges());
    const std::vector<int> keep{0};
    const auto rq = dynamics::partial_trace(ss.rho, sys.space, keep);
    worst = std::max(worst, (rq - dynamics::thermal_state(5, n)).cwiseAbs().maxCoeff());
  }
  return {"detailed-balance geometric steady states", worst, 1e-6};
}

Property null_space_property() {
  dynamics::QubitParams q;
  q.frequency = kTarget + units::mhz(3.0);
  q.anharmonicity = units::mhz(-204.0);
  q.levels = 2;
  q.relaxation = 1.0 / (1.08 * kUs);
  q.occupancy = 0.52;
  const std::vector<dynamics::QubitParams> qs{q};
  const dynamics::ModeParams mode{kTarget, 5, 1.0 / (200 * kNs), 0.4};
  const std::vector<double> g{units::mhz(5.0)};
  const auto sys = dynamics::build_open_system(qs, mode, g, kTarget);
  const auto direct = dynamics::steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges());
  const auto rho0 = dynamics::basis_state(sys.space, std::vector<int>{0, 0});
  const auto relaxed =
      dynamics::steady_state_by_evolution(sys.hamiltonian, sys.collapse_ops, rho0, {}, sys.space.charges());
  return {"null-space vs long-time steady state", (direct.rho - relaxed.rho).cwiseAbs().maxCoeff(), 1e-6};
}

Property tomography_property(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Matrix2cd u = random_unitary(rng);
    const auto tomo = tomography::process_tomography([&](const Eigen::Matrix2cd& prep) {
      const Eigen::Matrix2cd v = u * prep;
      return Eigen::Matrix2cd(v.col(0) * v.col(0).adjoint());
    });
    worst = std::max(worst, (tomo.chi - tomography::chi_of_unitary(u)).cwiseAbs().maxCoeff());
    const DensityMatrix rho = random_state(4, rng);
    worst = std::max(worst, (tomography::state_tomography(rho).rho - rho).cwiseAbs().maxCoeff());
  }
  return {"chi and rho tomography round trips", worst, 1e-8};
}

Property spam_property(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    std::vector<tomography::ConfusionMatrix> conf(2);
    for (auto& c : conf) {
      const double e0 = 0.1 * u(rng), e1 = 0.1 * u(rng);
      c.m << 1.0 - e0, e0, e1, 1.0 - e1;
    }
    Eigen::VectorXd p(4);
    for (int i = 0; i < 4; ++i) p[i] = 0.05 + u(rng);
    p /= p.sum();
    const auto back = tomography::spam_correct(tomography::apply_confusion(p, conf), conf);
    worst = std::max(worst, (back - p).cwiseAbs().maxCoeff());
  }
  return {"SPAM correction round trip", worst, 1e-12};
}

Property bose_einstein_property() {
  double worst = 0.0;
  for (double n = 1e-4; n <= 1e3; n *= 1.3)
    worst = std::max(worst, std::abs(analysis::bose_einstein(kTarget, analysis::effective_temperature(kTarget, n)) / n - 1.0));
  return {"Bose-Einstein inverse pair (relative)", worst, 1e-10};
}

Property fit_property() {
  std::vector<double> t, y, z;
  for (int i = 0; i <= 200; ++i) {
    t.push_back(i * 20 * kNs);
    y.push_back(-0.34 * std::exp(-t.back() / (760 * kNs)) + 0.34);
    z.push_back(0.4 * std::exp(-t.back() / (1.5 * kUs)) * std::cos(units::mhz(5.0) * t.back() + 0.3) + 0.5);
  }
  const auto e = analysis::fit_exponential(t, y);
  const auto d = analysis::fit_damped_sine(t, z);
  const double worst = std::max({std::abs(e.time_constant() / (760 * kNs) - 1.0), std::abs(e.offset / 0.34 - 1.0),
                                 std::abs(d.omega / units::mhz(5.0) - 1.0), std::abs(d.time_constant() / (1.5 * kUs) - 1.0)});
  return {"noiseless fit recovery (relative)", worst, 1e-6};
}

Property config_property() {
#ifdef THERMNET_ACCEPTANCE_CLI
  namespace fs = std::filesystem;
  spdlog::set_level(spdlog::level::warn);
  const auto cfg = cli::load_default({"protocol.cooling_duration_ns=200", "protocol.fit_noise=0.01", "seed=3"});
  const auto root = fs::temp_directory_path() / "thermnet_acceptance";
  fs::remove_all(root);
  const auto a = cli::run_experiment("cooling", cfg, root / "a");
  const auto b = cli::run_experiment("cooling", cfg, root / "b");
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  double mismatches = a.artifacts == b.artifacts ? 0.0 : 1.0;
  for (const auto& f : a.artifacts) mismatches += slurp(root / "a" / f) == slurp(root / "b" / f) ? 0.0 : 1.0;
  fs::remove_all(root);
  return {"config determinism (byte-identical reruns, mismatching files)", mismatches, 0.0};
#else
  return {"config determinism (tool library not built)", 1.0, 0.0};
#endif
}

void property_criterion() {
  Stopwatch sw;
  std::mt19937_64 rng(2024);
  std::vector<std::function<Property()>> checks{
      validity_property,
      detailed_balance_property,
      null_space_property,
      [&] { return tomography_property(rng); },
      [&] { return spam_property(rng); },
      bose_einstein_property,
      fit_property,
      config_property,
  };
  int passed = 0;
  for (const auto& check : checks) {
    Property p{"", 0.0, 0.0};
    bool ok = false;
    try {
      p = check();
      ok = p.error <= p.tolerance;
    } catch (const std::exception& e) {
      p.name = std::string("threw: ") + e.what();
    }
    passed += ok;
    std::printf("       %-4s %s: %.3g (tol %.1g)\n", ok ? "ok" : "bad", p.name.c_str(), p.error, p.tolerance);
  }
  report("8", passed == static_cast<int>(checks.size()),
         fmt::format("{}/{} property checks within tolerance", passed, checks.size()), sw.seconds());
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> steps{
      {"1-2", circuit_criteria},
      {"3", merge_criterion},
      {"4", [] { steady_criteria(pr::reference_model(4.0)); }},
      {"5", [] { retherm_criteria(pr::reference_model(4.0)); }},
      {"6-7", transfer_criteria},
      {"8", property_criterion},
  };
  for (const auto& [id, step] : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what(), 0.0);
    }
  }
  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
