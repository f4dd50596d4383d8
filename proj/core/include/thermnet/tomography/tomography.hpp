#pragma once

// Linear-inversion state and process tomography on qubit-subspace states,
// with optional confusion-matrix distortion and correction of outcome
// probabilities. Pauli ordering is (I, X, Y, Z) throughout.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "thermnet/units.hpp"

namespace thermnet::tomography {

using Matrix2 = Eigen::Matrix2cd;
using Matrix4 = Eigen::Matrix4cd;

const std::array<Matrix2, 4>& pauli_basis();

/// M(i, j) = P(read j | prepared i) over {ground, excited}.
struct ConfusionMatrix {
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();

  static ConfusionMatrix identity() { return {}; }
  /// Symmetric readout error `e` on both outcomes.
  static ConfusionMatrix symmetric(double e);
  void validate() const;
  bool is_identity() const { return m == Eigen::Matrix2d::Identity(); }
};

/// Outcome distribution seen through the per-qubit confusion matrices.
/// Outcome index bits follow qubit order, first qubit most significant.
Eigen::VectorXd apply_confusion(const Eigen::VectorXd& probabilities,
                                std::span<const ConfusionMatrix> confusion);

/// Inverts the tensor-product confusion matrix, renormalises and clips
/// negatives down to -1e-6 (anything below is kept and reported by callers).
Eigen::VectorXd spam_correct(const Eigen::VectorXd& probabilities,
                             std::span<const ConfusionMatrix> confusion);

struct TomographyOptions {
  /// One per measured qubit; empty means ideal readout.
  std::vector<ConfusionMatrix> confusion;
  bool spam_correction = true;
};

struct StateTomogram {
  Eigen::MatrixXcd rho;
  /// Sum of negative eigenvalues removed by clipping (absolute value).
  double clipped = 0.0;
  double raw_min_eigenvalue = 0.0;
};

/// Simulates Pauli-basis measurements of `rho` (1 or 2 qubits) and rebuilds
/// it by linear inversion.
StateTomogram state_tomography(const Eigen::MatrixXcd& rho, const TomographyOptions& opts = {});

/// Pauli expectation values <P_a (x) P_b ...> in (I, X, Y, Z) digit order.
Eigen::VectorXd pauli_expectations(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd from_pauli_expectations(const Eigen::VectorXd& expectations);

double fidelity_state(const Eigen::MatrixXcd& rho, const Eigen::VectorXcd& target);

/// (|01> + |10>) / sqrt(2).
Eigen::VectorXcd bell_psi_plus();

struct ProcessTomogram {
  Matrix4 chi;
  double fidelity = 0.0;  // Tr(chi chi_ideal) against the identity process
  double clipped = 0.0;
};

/// Input preparations |0>, |1>, |+>, |+i> as unitaries acting on |0>.
const std::array<Matrix2, 4>& process_inputs();

/// chi from the channel outputs for the four inputs above.
Matrix4 chi_from_outputs(const std::array<Matrix2, 4>& outputs);

/// Runs `channel` for each preparation unitary (input state U|0>), tomographs
/// the outputs and assembles chi.
ProcessTomogram process_tomography(const std::function<Matrix2(const Matrix2& prep)>& channel,
                                   const TomographyOptions& opts = {});

double process_fidelity(const Matrix4& chi, const Matrix4& chi_ideal);
Matrix4 chi_of_unitary(const Matrix2& u);
/// chi of a channel given by Kraus operators.
Matrix4 chi_of_kraus(std::span<const Matrix2> kraus);
/// Applies sum_mn chi_mn P_m rho P_n^dagger.
Matrix2 apply_chi(const Matrix4& chi, const Matrix2& rho);
/// max |sum_mn chi_mn P_n^dagger P_m - I|.
double trace_preservation_error(const Matrix4& chi);

}  // namespace thermnet::tomography
