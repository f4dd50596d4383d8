#include "thermnet/dynamics/hilbert.hpp"

#include <cmath>
#include <string>

#include "thermnet/error.hpp"

namespace thermnet::dynamics {

TensorSpace::TensorSpace(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw InvalidArgument("tensor space needs at least one site");
  strides_.assign(dims_.size(), 1);
  long size = 1;
  for (int k = static_cast<int>(dims_.size()) - 1; k >= 0; --k) {
    if (dims_[k] < 1) throw InvalidArgument("site dimension must be positive");
    strides_[k] = static_cast<int>(size);
    size *= dims_[k];
    if (size > (1L << 30)) throw InvalidArgument("tensor space too large");
  }
  size_ = static_cast<int>(size);
}

int TensorSpace::index(std::span<const int> levels) const {
  if (levels.size() != dims_.size()) throw InvalidArgument("level tuple has wrong length");
  int idx = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (levels[k] < 0 || levels[k] >= dims_[k])
      throw InvalidArgument("level " + std::to_string(levels[k]) + " out of range on site " +
                            std::to_string(k));
    idx += levels[k] * strides_[k];
  }
  return idx;
}

std::vector<int> TensorSpace::levels(int index) const {
  std::vector<int> out(dims_.size());
  for (std::size_t k = 0; k < dims_.size(); ++k) out[k] = (index / strides_[k]) % dims_[k];
  return out;
}

int TensorSpace::level(int index, int site) const {
  return (index / strides_.at(site)) % dims_.at(site);
}

std::vector<int> TensorSpace::charges() const {
  std::vector<int> q(size_, 0);
  for (int i = 0; i < size_; ++i)
    for (int k = 0; k < sites(); ++k) q[i] += level(i, k);
  return q;
}

SparseOp identity_op(int dim) {
  SparseOp id(dim, dim);
  id.setIdentity();
  return id;
}

SparseOp lowering_op(int dim) {
  std::vector<Eigen::Triplet<Complex>> t;
  for (int n = 1; n < dim; ++n) t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
  SparseOp a(dim, dim);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

SparseOp number_op(int dim) {
  std::vector<Eigen::Triplet<Complex>> t;
  for (int n = 1; n < dim; ++n) t.emplace_back(n, n, static_cast<double>(n));
  SparseOp op(dim, dim);
  op.setFromTriplets(t.begin(), t.end());
  return op;
}

SparseOp excited_projector(int dim) {
  std::vector<Eigen::Triplet<Complex>> t;
  for (int n = 1; n < dim; ++n) t.emplace_back(n, n, 1.0);
  SparseOp op(dim, dim);
  op.setFromTriplets(t.begin(), t.end());
  return op;
}

SparseOp embed(const SparseOp& op, int site, const TensorSpace& space) {
  if (site < 0 || site >= space.sites()) throw InvalidArgument("site index out of range");
  const int d = space.dim(site);
  if (op.rows() != d || op.cols() != d) throw InvalidArgument("operator does not match site dimension");
  int after = 1;
  for (int k = site + 1; k < space.sites(); ++k) after *= space.dim(k);
  const int before = space.size() / (d * after);

  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(static_cast<std::size_t>(op.nonZeros()) * before * after);
  for (int r = 0; r < d; ++r) {
    for (SparseOp::InnerIterator it(op, r); it; ++it) {
      for (int b = 0; b < before; ++b) {
        const int row0 = (b * d + r) * after;
        const int col0 = (b * d + static_cast<int>(it.col())) * after;
        for (int a = 0; a < after; ++a) t.emplace_back(row0 + a, col0 + a, it.value());
      }
    }
  }
  SparseOp out(space.size(), space.size());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SparseOp adjoint(const SparseOp& op) { return SparseOp(op.adjoint()); }

}  // namespace thermnet::dynamics
