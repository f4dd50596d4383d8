#include "thermnet/dynamics/density_matrix.hpp"

#include <cmath>
#include <sstream>

#include "thermnet/error.hpp"

namespace thermnet::dynamics {
namespace {

void require_square(const DensityMatrix& rho, int n) {
  if (rho.rows() != n || rho.cols() != n) throw InvalidArgument("density matrix dimension mismatch");
}

double hermiticity_error(const DenseOp& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

}  // namespace

double min_eigenvalue(const DensityMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<DensityMatrix> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

ValidityReport check_density_matrix(const DensityMatrix& rho, const ValidityTolerance& tol) {
  if (rho.rows() != rho.cols() || rho.rows() == 0) throw InvalidArgument("density matrix must be square");
  ValidityReport r;
  r.trace_error = std::abs(rho.trace() - 1.0);
  r.hermiticity_error = hermiticity_error(rho);
  const double shift = -tol.min_eigenvalue;
  DensityMatrix shifted = rho;
  shifted.diagonal().array() += shift;
  Eigen::LLT<DensityMatrix> llt(shifted);
  r.min_eigenvalue = llt.info() == Eigen::Success ? -shift : min_eigenvalue(rho);
  r.valid = r.trace_error <= tol.trace && r.hermiticity_error <= tol.hermiticity &&
            r.min_eigenvalue >= tol.min_eigenvalue;
  return r;
}

void require_valid(const DensityMatrix& rho, const ValidityTolerance& tol) {
  const auto r = check_density_matrix(rho, tol);
  if (r.valid) return;
  std::ostringstream os;
  os << "invalid density matrix: trace error " << r.trace_error << ", hermiticity error "
     << r.hermiticity_error << ", min eigenvalue " << r.min_eigenvalue;
  throw NumericalError(os.str());
}

DensityMatrix basis_state(const TensorSpace& space, std::span<const int> levels) {
  DensityMatrix rho = DensityMatrix::Zero(space.size(), space.size());
  const int i = space.index(levels);
  rho(i, i) = 1.0;
  return rho;
}

std::vector<double> geometric_populations(int dim, double occupancy) {
  if (dim < 1) throw InvalidArgument("dimension must be positive");
  if (!(occupancy >= 0.0)) throw InvalidArgument("occupancy must be non-negative");
  std::vector<double> p(dim, 0.0);
  if (occupancy == 0.0) {
    p[0] = 1.0;
    return p;
  }
  const double x = occupancy / (occupancy + 1.0);
  double sum = 0.0;
  double w = 1.0;
  for (int n = 0; n < dim; ++n) {
    p[n] = w;
    sum += w;
    w *= x;
  }
  for (auto& v : p) v /= sum;
  return p;
}

DensityMatrix thermal_state(int dim, double occupancy) {
  const auto p = geometric_populations(dim, occupancy);
  DensityMatrix rho = DensityMatrix::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) rho(n, n) = p[n];
  return rho;
}

DensityMatrix kron(const DensityMatrix& a, const DensityMatrix& b) {
  DensityMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

DensityMatrix kron(std::span<const DensityMatrix> factors) {
  if (factors.empty()) throw InvalidArgument("kron of an empty list");
  DensityMatrix out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = kron(out, factors[k]);
  return out;
}

DensityMatrix partial_trace(const DensityMatrix& rho, const TensorSpace& space,
                            std::span<const int> keep) {
  require_square(rho, space.size());
  std::vector<bool> kept(space.sites(), false);
  std::vector<int> keep_dims;
  int prev = -1;
  for (const int s : keep) {
    if (s <= prev || s >= space.sites()) throw InvalidArgument("keep sites must be ascending and valid");
    kept[s] = true;
    keep_dims.push_back(space.dim(s));
    prev = s;
  }
  if (keep.empty()) {
    DensityMatrix out(1, 1);
    out(0, 0) = rho.trace();
    return out;
  }
  const TensorSpace reduced(keep_dims);
  std::vector<int> red_index(space.size());
  std::vector<int> env_index(space.size());
  for (int i = 0; i < space.size(); ++i) {
    const auto lv = space.levels(i);
    int r = 0;
    int e = 0;
    for (int k = 0; k < space.sites(); ++k) {
      if (kept[k])
        r = r * space.dim(k) + lv[k];
      else
        e = e * space.dim(k) + lv[k];
    }
    red_index[i] = r;
    env_index[i] = e;
  }
  DensityMatrix out = DensityMatrix::Zero(reduced.size(), reduced.size());
  for (int i = 0; i < space.size(); ++i)
    for (int j = 0; j < space.size(); ++j)
      if (env_index[i] == env_index[j]) out(red_index[i], red_index[j]) += rho(i, j);
  return out;
}

double expectation(const DensityMatrix& rho, const SparseOp& observable) {
  require_square(rho, static_cast<int>(observable.rows()));
  if (observable.rows() != observable.cols()) throw InvalidArgument("observable must be square");
  const SparseOp diff = observable - adjoint(observable);
  for (int k = 0; k < diff.outerSize(); ++k)
    for (SparseOp::InnerIterator it(diff, k); it; ++it)
      if (std::abs(it.value()) > 1e-12) throw InvalidArgument("observable is not Hermitian");
  Complex acc{0.0, 0.0};
  for (int r = 0; r < observable.outerSize(); ++r)
    for (SparseOp::InnerIterator it(observable, r); it; ++it) acc += it.value() * rho(it.col(), r);
  if (std::abs(acc.imag()) > 1e-9) throw NumericalError("expectation value has an imaginary residue");
  return acc.real();
}

double expectation(const DensityMatrix& rho, const DenseOp& observable) {
  require_square(rho, static_cast<int>(observable.rows()));
  if (hermiticity_error(observable) > 1e-12) throw InvalidArgument("observable is not Hermitian");
  const Complex acc = (rho.transpose().cwiseProduct(observable)).sum();
  if (std::abs(acc.imag()) > 1e-9) throw NumericalError("expectation value has an imaginary residue");
  return acc.real();
}

QubitSubspace project_to_qubits(const DensityMatrix& rho, std::span<const int> dims) {
  const TensorSpace space(std::vector<int>(dims.begin(), dims.end()));
  require_square(rho, space.size());
  const int k = space.sites();
  const int n = 1 << k;
  std::vector<int> idx(n);
  for (int b = 0; b < n; ++b) {
    std::vector<int> lv(k);
    for (int s = 0; s < k; ++s) lv[s] = (b >> (k - 1 - s)) & 1;
    idx[b] = space.index(lv);
  }
  QubitSubspace out;
  out.rho.resize(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) out.rho(a, b) = rho(idx[a], idx[b]);
  const double w = out.rho.trace().real();
  if (!(w > 0.0)) throw NumericalError("no weight in the qubit subspace");
  out.leakage = std::max(0.0, rho.trace().real() - w);
  out.rho /= w;
  return out;
}

SparseOp qubit_rotation(const Eigen::Matrix2cd& u, int site, const TensorSpace& space) {
  const int d = space.dim(site);
  std::vector<Eigen::Triplet<Complex>> t;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      if (u(r, c) != Complex{}) t.emplace_back(r, c, u(r, c));
  for (int n = 2; n < d; ++n) t.emplace_back(n, n, 1.0);
  SparseOp local(d, d);
  local.setFromTriplets(t.begin(), t.end());
  return embed(local, site, space);
}

DensityMatrix conjugate(const DensityMatrix& rho, const SparseOp& u) {
  require_square(rho, static_cast<int>(u.rows()));
  const DensityMatrix left = u * rho;
  return (u * left.adjoint()).adjoint();
}

DensityMatrix reset_site(const DensityMatrix& rho, int site, const TensorSpace& space) {
  require_square(rho, space.size());
  const int d = space.dim(site);
  DensityMatrix out = DensityMatrix::Zero(rho.rows(), rho.cols());
  for (int k = 0; k < d; ++k) {
    std::vector<Eigen::Triplet<Complex>> t{{0, k, 1.0}};
    SparseOp local(d, d);
    local.setFromTriplets(t.begin(), t.end());
    out += conjugate(rho, embed(local, site, space));
  }
  return out;
}

}  // namespace thermnet::dynamics
