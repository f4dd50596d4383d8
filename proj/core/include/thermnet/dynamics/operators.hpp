#pragma once

// Duffing-qubit / single-mode Hamiltonian and thermal Lindblad operators.
// Rates are energy-decay rates in 1/s, frequencies in rad/s.

#include <span>
#include <vector>

#include "thermnet/dynamics/hilbert.hpp"

namespace thermnet::dynamics {

struct QubitParams {
  double frequency = 0.0;
  double anharmonicity = 0.0;  // negative for a transmon
  int levels = 3;
  double relaxation = 0.0;
  double occupancy = 0.0;
  double pure_dephasing = 0.0;

  void validate() const;
};

struct ModeParams {
  double frequency = 0.0;
  int fock_cutoff = 10;
  double relaxation = 0.0;
  double occupancy = 0.0;

  void validate() const;
};

struct Bath {
  double kappa = 0.0;
  double occupancy = 0.0;
};

/// kappa = sum kappa_j, occupancy = sum kappa_j N_j / sum kappa_j.
Bath merge_baths(std::span<const Bath> baths);

/// Smallest cutoff with (N/(N+1))^cutoff < tail, never below `floor`.
int fock_cutoff_for(double occupancy, double tail = 1e-3, int floor = 10);

/// Weight a geometric distribution with mean `occupancy` puts at or above `cutoff`.
double truncated_tail(double occupancy, int cutoff);

/// Site layout: one site per qubit followed by the mode.
TensorSpace system_space(std::span<const QubitParams> qubits, const ModeParams& mode);

/// H / hbar in the frame rotating at `frame`. couplings[n] is g between qubit n
/// and the mode.
SparseOp build_hamiltonian(std::span<const QubitParams> qubits, const ModeParams& mode,
                           std::span<const double> couplings, double frame);

/// Thermal up/down jumps for every qubit and the mode, plus qubit dephasing.
/// Zero-rate operators are left out.
std::vector<SparseOp> build_collapse_operators(std::span<const QubitParams> qubits,
                                               const ModeParams& mode);

struct OpenSystem {
  TensorSpace space;
  SparseOp hamiltonian;
  std::vector<SparseOp> collapse_ops;
};

OpenSystem build_open_system(std::span<const QubitParams> qubits, const ModeParams& mode,
                             std::span<const double> couplings, double frame);

}  // namespace thermnet::dynamics
