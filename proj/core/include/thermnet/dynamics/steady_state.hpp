#pragma once

#include <span>
#include <string>
#include <vector>

#include "thermnet/dynamics/evolve.hpp"

namespace thermnet::dynamics {

struct SteadyStateResult {
  DensityMatrix rho;
  /// The generator has more than one null vector; `rho` is one of them.
  bool degenerate = false;
  /// max |L rho| of the returned state.
  double residual = 0.0;
  std::string method;
};

/// Null vector of the Lindblad generator with the trace fixed to one. Only the
/// diagonal-order sector is solved when `charges` grade the problem. A singular
/// bordered system marks the result degenerate and falls back to evolution.
SteadyStateResult steady_state(const SparseOp& hamiltonian, std::span<const SparseOp> collapse_ops,
                               const std::vector<int>& charges = {});

struct RelaxationOptions {
  double max_dt = 0.05e-9;
  /// Stop once max |d rho / dt| falls below this, in 1/s (1e-10 per ns).
  double rate_tolerance = 0.1;
  double check_interval = 100e-9;
  double max_time = 1e-3;
};

/// Long-time evolution from `rho0` until the generator residual is below
/// tolerance. Used as an oracle for steady_state.
SteadyStateResult steady_state_by_evolution(const SparseOp& hamiltonian,
                                            std::span<const SparseOp> collapse_ops,
                                            const DensityMatrix& rho0,
                                            const RelaxationOptions& opts = {},
                                            const std::vector<int>& charges = {});

}  // namespace thermnet::dynamics
