#pragma once

#include <functional>
#include <span>
#include <vector>

#include "thermnet/dynamics/liouvillian.hpp"

namespace thermnet::dynamics {

struct EvolveOptions {
  /// Upper bound on the RK4 step; the step actually used divides every
  /// sample interval evenly.
  double max_dt = 0.05e-9;
  /// Spacing of observer calls; 0 reports only the initial and final states.
  double sample_interval = 0.0;
  /// Run the full density-matrix check (including positivity) on each sample.
  bool validate_samples = true;
  ValidityTolerance tolerance{};
  /// Trace drift that is silently renormalised; anything larger is an error.
  double max_trace_drift = 1e-6;
  double max_negativity = -1e-5;
};

using Observer = std::function<void(double time, const DensityMatrix& rho)>;

/// dt = min(cap, 0.02 / max(|detunings|, g, dissipation)).
double stable_time_step(std::span<const double> detunings, double max_coupling,
                        double max_dissipation, double cap = 0.05e-9);

/// Largest thermal jump rate kappa (N + 1) among the operators' owners.
double max_dissipation_rate(std::span<const SparseOp> collapse_ops);

/// Fixed-step RK4 integration of the Lindblad equation. `charges` enables the
/// sector split (see Liouvillian). The observer sees t = 0 and every sample.
DensityMatrix evolve(const DensityMatrix& rho0, const SparseOp& hamiltonian,
                     std::span<const SparseOp> collapse_ops, double duration,
                     const EvolveOptions& opts = {}, const Observer& observer = {},
                     const std::vector<int>& charges = {});

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix> states;
};

Trajectory evolve_trajectory(const DensityMatrix& rho0, const SparseOp& hamiltonian,
                             std::span<const SparseOp> collapse_ops, double duration,
                             const EvolveOptions& opts, const std::vector<int>& charges = {});

/// Low-level stepping on an existing generator; returns the number of steps.
long integrate(const Liouvillian& generator, SectorState& state, double duration, double max_dt);

}  // namespace thermnet::dynamics
