#pragma once

// Tensor-product bookkeeping for the Q_A (x) Q_B (x) mode space. The first
// site is the most significant digit of the flat basis index.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>
#include <vector>

#include "thermnet/units.hpp"

namespace thermnet::dynamics {

using SparseOp = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using DenseOp = Eigen::MatrixXcd;

class TensorSpace {
 public:
  TensorSpace() = default;
  explicit TensorSpace(std::vector<int> dims);

  int sites() const { return static_cast<int>(dims_.size()); }
  int dim(int site) const { return dims_.at(site); }
  const std::vector<int>& dims() const { return dims_; }
  int size() const { return size_; }

  int index(std::span<const int> levels) const;
  std::vector<int> levels(int index) const;
  int level(int index, int site) const;

  /// Total excitation number of every basis state.
  std::vector<int> charges() const;

 private:
  std::vector<int> dims_;
  std::vector<int> strides_;
  int size_ = 0;
};

SparseOp identity_op(int dim);
/// sqrt(n) ladder, truncated at `dim` levels.
SparseOp lowering_op(int dim);
SparseOp number_op(int dim);
/// Projector onto levels >= 1.
SparseOp excited_projector(int dim);

/// I (x) ... (x) op (x) ... (x) I with `op` acting on `site`.
SparseOp embed(const SparseOp& op, int site, const TensorSpace& space);

SparseOp adjoint(const SparseOp& op);

}  // namespace thermnet::dynamics
