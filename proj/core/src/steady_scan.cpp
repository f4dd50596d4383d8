#include "thermnet/analysis/steady_scan.hpp"

#include <algorithm>
#include <cmath>

#include "thermnet/dynamics/density_matrix.hpp"
#include "thermnet/dynamics/steady_state.hpp"
#include "thermnet/error.hpp"

namespace thermnet::analysis {
namespace {

void require_ascending_positive(std::span<const double> v, const char* what) {
  if (v.empty()) throw InvalidArgument(std::string(what) + " grid is empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0)) throw InvalidArgument(std::string(what) + " grid must be positive");
    if (i > 0 && !(v[i] > v[i - 1])) throw InvalidArgument(std::string(what) + " grid must be ascending");
  }
}

// Position of x inside [v[i], v[i+1]] as (i, fraction) using `map` on both.
template <typename Map>
std::pair<std::size_t, double> locate(std::span<const double> v, double x, Map map) {
  if (v.size() == 1) return {0, 0.0};
  auto it = std::upper_bound(v.begin(), v.end(), x);
  std::size_t i = it == v.begin() ? 0 : static_cast<std::size_t>(it - v.begin()) - 1;
  i = std::min(i, v.size() - 2);
  const double f = (map(x) - map(v[i])) / (map(v[i + 1]) - map(v[i]));
  return {i, f};
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw InvalidArgument("log_grid needs 0 < lo <= hi and n >= 1");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return g;
}

double steady_excitation(const ScanTemplate& tpl, double kappa, double occupancy) {
  dynamics::QubitParams q = tpl.qubit;
  q.frequency = tpl.mode_frequency;
  const int cutoff = tpl.fock_cutoff > 0 ? tpl.fock_cutoff : dynamics::fock_cutoff_for(occupancy);
  const dynamics::ModeParams mode{tpl.mode_frequency, cutoff, kappa, occupancy};
  const std::vector<dynamics::QubitParams> qubits{q};
  const std::vector<double> g{tpl.coupling};
  const auto sys = dynamics::build_open_system(qubits, mode, g, tpl.mode_frequency);
  const auto ss = dynamics::steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges());
  const std::vector<int> keep{0};
  const auto rq = dynamics::partial_trace(ss.rho, sys.space, keep);
  return 1.0 - rq(0, 0).real();
}

double solve_occupancy(const ScanTemplate& tpl, double kappa, double target, double lo, double hi) {
  if (!(lo > 0.0) || !(hi > lo)) throw InvalidArgument("occupancy bracket must satisfy 0 < lo < hi");
  double a = std::log(lo);
  double b = std::log(hi);
  const double fa = steady_excitation(tpl, kappa, lo) - target;
  const double fb = steady_excitation(tpl, kappa, hi) - target;
  if (fa > 0.0 || fb < 0.0) throw NumericalError("target excitation is not bracketed by the occupancy range");
  while (b - a > 1e-7) {
    const double m = 0.5 * (a + b);
    if (steady_excitation(tpl, kappa, std::exp(m)) < target)
      a = m;
    else
      b = m;
  }
  return std::exp(0.5 * (a + b));
}

std::vector<ContourPoint> marching_squares(std::span<const double> occ, std::span<const double> kap,
                                           const Eigen::MatrixXd& z, double target) {
  const auto rows = static_cast<Eigen::Index>(kap.size());
  const auto cols = static_cast<Eigen::Index>(occ.size());
  if (z.rows() != rows || z.cols() != cols) throw InvalidArgument("surface does not match the grid");
  std::vector<ContourPoint> pts;
  const auto crosses = [&](double a, double b) { return (a - target) * (b - target) < 0.0; };
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double v = z(r, c);
      if (v == target) pts.push_back({occ[static_cast<std::size_t>(c)], kap[static_cast<std::size_t>(r)]});
      if (c + 1 < cols && crosses(v, z(r, c + 1))) {
        const double f = (target - v) / (z(r, c + 1) - v);
        const double lx = std::log(occ[static_cast<std::size_t>(c)]) +
                          f * (std::log(occ[static_cast<std::size_t>(c + 1)]) - std::log(occ[static_cast<std::size_t>(c)]));
        pts.push_back({std::exp(lx), kap[static_cast<std::size_t>(r)]});
      }
      if (r + 1 < rows && crosses(v, z(r + 1, c))) {
        const double f = (target - v) / (z(r + 1, c) - v);
        const double k = kap[static_cast<std::size_t>(r)] +
                         f * (kap[static_cast<std::size_t>(r + 1)] - kap[static_cast<std::size_t>(r)]);
        pts.push_back({occ[static_cast<std::size_t>(c)], k});
      }
    }
  }
  return pts;
}

double interpolate_surface(const SteadyScanResult& scan, double occupancy, double kappa) {
  const auto [c, fx] = locate(scan.occupancies, occupancy, [](double x) { return std::log(x); });
  const auto [r, fy] = locate(scan.kappas, kappa, [](double x) { return x; });
  const auto ri = static_cast<Eigen::Index>(r);
  const auto ci = static_cast<Eigen::Index>(c);
  const Eigen::Index r1 = scan.kappas.size() > 1 ? ri + 1 : ri;
  const Eigen::Index c1 = scan.occupancies.size() > 1 ? ci + 1 : ci;
  const auto& z = scan.excited;
  return (1 - fy) * ((1 - fx) * z(ri, ci) + fx * z(ri, c1)) + fy * ((1 - fx) * z(r1, ci) + fx * z(r1, c1));
}

bool monotone_in_occupancy(const SteadyScanResult& scan, double tolerance) {
  for (Eigen::Index r = 0; r < scan.excited.rows(); ++r) {
    int crossings = 0;
    for (Eigen::Index c = 0; c + 1 < scan.excited.cols(); ++c) {
      const double a = scan.excited(r, c);
      const double b = scan.excited(r, c + 1);
      if (b < a - tolerance) return false;
      if ((a - scan.target) * (b - scan.target) < 0.0) ++crossings;
    }
    if (crossings > 1) return false;
  }
  return true;
}

SteadyScanResult steady_scan(const ScanTemplate& tpl, std::span<const double> occupancies,
                             std::span<const double> kappas, double target, std::optional<double> readout_kappa,
                             double band) {
  require_ascending_positive(occupancies, "occupancy");
  require_ascending_positive(kappas, "kappa");
  SteadyScanResult out;
  out.occupancies.assign(occupancies.begin(), occupancies.end());
  out.kappas.assign(kappas.begin(), kappas.end());
  out.target = target;
  out.excited.resize(static_cast<Eigen::Index>(kappas.size()), static_cast<Eigen::Index>(occupancies.size()));
  for (std::size_t r = 0; r < kappas.size(); ++r)
    for (std::size_t c = 0; c < occupancies.size(); ++c)
      out.excited(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          steady_excitation(tpl, kappas[r], occupancies[c]);

  out.contour_found = target >= out.excited.minCoeff() && target <= out.excited.maxCoeff();
  if (out.contour_found) out.contour = marching_squares(occupancies, kappas, out.excited, target);

  if (readout_kappa) {
    OccupancyReadout ro;
    ro.kappa = *readout_kappa;
    const double lo = occupancies.front();
    const double hi = occupancies.back();
    ro.occupancy = solve_occupancy(tpl, ro.kappa, target, lo, hi);
    ro.occupancy_low = solve_occupancy(tpl, ro.kappa, target - band, lo, hi);
    ro.occupancy_high = solve_occupancy(tpl, ro.kappa, target + band, lo, hi);
    if (out.contour_found && kappas.size() > 1 && ro.kappa >= kappas.front() && ro.kappa <= kappas.back()) {
      // Crossing on the two rows bracketing kappa, blended linearly.
      const auto [r, fy] = locate(kappas, ro.kappa, [](double x) { return x; });
      std::optional<double> row_x[2];
      for (int k = 0; k < 2; ++k) {
        const auto ri = static_cast<Eigen::Index>(r) + k;
        for (Eigen::Index c = 0; c + 1 < out.excited.cols(); ++c) {
          const double a = out.excited(ri, c);
          const double b = out.excited(ri, c + 1);
          if ((a - target) * (b - target) <= 0.0 && a != b) {
            const double f = (target - a) / (b - a);
            row_x[k] = std::log(occupancies[static_cast<std::size_t>(c)]) +
                       f * (std::log(occupancies[static_cast<std::size_t>(c + 1)]) -
                            std::log(occupancies[static_cast<std::size_t>(c)]));
            break;
          }
        }
      }
      if (row_x[0] && row_x[1]) ro.contour_occupancy = std::exp((1 - fy) * *row_x[0] + fy * *row_x[1]);
    }
    out.readout = ro;
  }
  return out;
}

}  // namespace thermnet::analysis
