#pragma once

#include <span>
#include <vector>

#include "thermnet/dynamics/hilbert.hpp"

namespace thermnet::dynamics {

/// Dense density operator in the flat basis of a TensorSpace.
using DensityMatrix = Eigen::MatrixXcd;

struct ValidityTolerance {
  double hermiticity = 1e-10;
  double trace = 1e-8;
  double min_eigenvalue = -1e-7;
};

struct ValidityReport {
  double trace_error = 0.0;
  double hermiticity_error = 0.0;
  /// Only computed exactly when the Cholesky shortcut fails; otherwise a
  /// lower bound of -|tol.min_eigenvalue|.
  double min_eigenvalue = 0.0;
  bool valid = true;
};

ValidityReport check_density_matrix(const DensityMatrix& rho, const ValidityTolerance& tol = {});
/// Throws NumericalError naming the violated bound.
void require_valid(const DensityMatrix& rho, const ValidityTolerance& tol = {});

double min_eigenvalue(const DensityMatrix& rho);

DensityMatrix basis_state(const TensorSpace& space, std::span<const int> levels);
/// Truncated geometric distribution with mean `occupancy`, renormalised.
std::vector<double> geometric_populations(int dim, double occupancy);
DensityMatrix thermal_state(int dim, double occupancy);
DensityMatrix kron(const DensityMatrix& a, const DensityMatrix& b);
DensityMatrix kron(std::span<const DensityMatrix> factors);

/// Reduced state on `keep` (ascending site order preserved).
DensityMatrix partial_trace(const DensityMatrix& rho, const TensorSpace& space,
                            std::span<const int> keep);

/// Tr(rho O). O must be Hermitian; imaginary residue above 1e-9 is an error.
double expectation(const DensityMatrix& rho, const SparseOp& observable);
double expectation(const DensityMatrix& rho, const DenseOp& observable);

struct QubitSubspace {
  DensityMatrix rho;       // 2^k x 2^k, unit trace
  double leakage = 0.0;    // weight outside {|0>,|1>}^k before renormalisation
};

/// Restricts a reduced multi-level state (dims per site) to the qubit
/// subspace and renormalises.
QubitSubspace project_to_qubits(const DensityMatrix& rho, std::span<const int> dims);

/// 2x2 unitary acting on levels {0,1} of `site`, identity on higher levels.
SparseOp qubit_rotation(const Eigen::Matrix2cd& u, int site, const TensorSpace& space);

DensityMatrix conjugate(const DensityMatrix& rho, const SparseOp& u);

/// Replaces the state of `site` by |0> (trace-preserving reset channel).
DensityMatrix reset_site(const DensityMatrix& rho, int site, const TensorSpace& space);

}  // namespace thermnet::dynamics
