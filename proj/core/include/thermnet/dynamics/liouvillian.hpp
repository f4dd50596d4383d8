#pragma once

// Lindblad generator split into coherence-order sectors. When H conserves the
// total excitation number and every jump operator shifts it by a fixed amount,
// rho_ij only couples to elements with the same q_i - q_j, so each order evolves
// independently. Negative orders are the adjoint of positive ones and are not
// stored. Without such a structure a single sector holds every element.

#include <span>
#include <vector>

#include "thermnet/dynamics/density_matrix.hpp"

namespace thermnet::dynamics {

using SuperOp = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

struct Sector {
  int order = 0;
  std::vector<int> rows;
  std::vector<int> cols;
  std::vector<int> diagonal;  // positions of (i, i) elements, order 0 only
  SuperOp generator;
};

/// One vector per sector, aligned with Liouvillian::sectors().
using SectorState = std::vector<Eigen::VectorXcd>;

class Liouvillian {
 public:
  /// `charges` may be empty, which disables the sector split. `orders` lists
  /// the non-negative coherence orders to build; order 0 is always included.
  Liouvillian(const SparseOp& hamiltonian, std::span<const SparseOp> collapse_ops,
              std::vector<int> charges = {}, std::vector<int> orders = {0});

  int dim() const { return dim_; }
  bool sectored() const { return sectored_; }
  const std::vector<Sector>& sectors() const { return sectors_; }
  std::size_t element_count() const;

  /// Non-negative coherence orders carrying weight in `rho` under `charges`.
  static std::vector<int> orders_present(const DensityMatrix& rho, const std::vector<int>& charges);

  /// True when H and every jump operator respect the excitation-number grading.
  static bool charges_consistent(const SparseOp& hamiltonian, std::span<const SparseOp> collapse_ops,
                                 const std::vector<int>& charges);

  SectorState pack(const DensityMatrix& rho) const;
  DensityMatrix unpack(const SectorState& state) const;
  void apply(const SectorState& in, SectorState& out) const;
  Complex trace(const SectorState& state) const;

  /// d rho / dt for a full matrix, restricted to the built sectors.
  DensityMatrix apply(const DensityMatrix& rho) const;

 private:
  void build_sector(Sector& s, const SparseOp& k, std::span<const SparseOp> collapse_ops) const;

  int dim_ = 0;
  bool sectored_ = false;
  std::vector<int> charges_;
  std::vector<Sector> sectors_;
};

}  // namespace thermnet::dynamics
