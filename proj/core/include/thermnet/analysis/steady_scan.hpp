#pragma once

// Steady-state thermometry: probe-qubit excitation versus the occupancy and
// decay rate of the mode it is coupled to.

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thermnet/dynamics/operators.hpp"

namespace thermnet::analysis {

struct ScanTemplate {
  dynamics::QubitParams qubit;  // own bath fixed; frequency is ignored (resonant)
  double coupling = 0.0;
  double mode_frequency = 0.0;
  /// 0 picks the cutoff from the occupancy rule at each grid point.
  int fock_cutoff = 0;
};

struct ContourPoint {
  double occupancy = 0.0;
  double kappa = 0.0;
};

struct OccupancyReadout {
  double kappa = 0.0;
  double occupancy = 0.0;       // direct solve at `kappa`
  double occupancy_low = 0.0;   // target - band
  double occupancy_high = 0.0;  // target + band
  std::optional<double> contour_occupancy;  // interpolated from the grid contour
};

struct SteadyScanResult {
  std::vector<double> occupancies;  // columns, ascending
  std::vector<double> kappas;       // rows, ascending
  Eigen::MatrixXd excited;          // (kappa, occupancy)
  double target = 0.0;
  std::vector<ContourPoint> contour;
  /// True when the target lies inside the surface range.
  bool contour_found = false;
  std::optional<OccupancyReadout> readout;
};

std::vector<double> log_grid(double lo, double hi, int n);

double steady_excitation(const ScanTemplate& tpl, double kappa, double occupancy);

/// Occupancy giving `target` excitation at fixed kappa, by bisection in
/// log-occupancy over [lo, hi].
double solve_occupancy(const ScanTemplate& tpl, double kappa, double target, double lo, double hi);

/// Grid crossings of the `target` level (linear in log-occupancy along rows,
/// linear in kappa along columns) plus nodes that hit it exactly.
std::vector<ContourPoint> marching_squares(std::span<const double> occupancies, std::span<const double> kappas,
                                           const Eigen::MatrixXd& surface, double target);

/// Bilinear interpolation in (log occupancy, kappa).
double interpolate_surface(const SteadyScanResult& scan, double occupancy, double kappa);

/// Every row crosses the target at most once and the surface never decreases
/// along occupancy.
bool monotone_in_occupancy(const SteadyScanResult& scan, double tolerance = 1e-9);

SteadyScanResult steady_scan(const ScanTemplate& tpl, std::span<const double> occupancies,
                             std::span<const double> kappas, double target,
                             std::optional<double> readout_kappa = std::nullopt, double band = 0.01);

}  // namespace thermnet::analysis
