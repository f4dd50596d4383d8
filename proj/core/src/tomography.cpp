#include "thermnet/tomography/tomography.hpp"

#include <cmath>

#include "thermnet/error.hpp"

namespace thermnet::tomography {
namespace {

constexpr Complex kI{0.0, 1.0};

int qubit_count(Eigen::Index dim) {
  if (dim == 2) return 1;
  if (dim == 4) return 2;
  throw InvalidArgument("tomography supports one or two qubits");
}

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXcd pauli_string(int index, int k) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
  for (int q = k - 1; q >= 0; --q) {
    int d = index;
    for (int s = 0; s < q; ++s) d /= 4;
    out = kron(out, Eigen::MatrixXcd(pauli_basis()[d % 4]));
  }
  return out;
}

Eigen::MatrixXd total_confusion(std::span<const ConfusionMatrix> confusion, int k) {
  if (static_cast<int>(confusion.size()) != k)
    throw InvalidArgument("need one confusion matrix per qubit");
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(1, 1);
  for (const auto& c : confusion) {
    c.validate();
    m = kron(m, Eigen::MatrixXd(c.m));
  }
  return m;
}

// Pre-rotation that maps the eigenbasis of axis (1 = X, 2 = Y, 3 = Z) onto Z.
Matrix2 basis_rotation(int axis) {
  const double r = 1.0 / std::sqrt(2.0);
  Matrix2 u;
  switch (axis) {
    case 1:
      u << r, r, -r, r;
      break;
    case 2:
      u << r, -kI * r, -kI * r, r;
      break;
    default:
      u = Matrix2::Identity();
  }
  return u;
}

bool all_identity(std::span<const ConfusionMatrix> confusion) {
  for (const auto& c : confusion)
    if (!c.is_identity()) return false;
  return true;
}

}  // namespace

const std::array<Matrix2, 4>& pauli_basis() {
  static const std::array<Matrix2, 4> basis = [] {
    std::array<Matrix2, 4> p;
    p[0] = Matrix2::Identity();
    p[1] << 0, 1, 1, 0;
    p[2] << 0, -kI, kI, 0;
    p[3] << 1, 0, 0, -1;
    return p;
  }();
  return basis;
}

ConfusionMatrix ConfusionMatrix::symmetric(double e) {
  ConfusionMatrix c;
  c.m << 1.0 - e, e, e, 1.0 - e;
  c.validate();
  return c;
}

void ConfusionMatrix::validate() const {
  for (int i = 0; i < 2; ++i) {
    if (std::abs(m.row(i).sum() - 1.0) > 1e-12) throw InvalidArgument("confusion matrix rows must sum to 1");
    for (int j = 0; j < 2; ++j)
      if (m(i, j) < 0.0 || m(i, j) > 1.0) throw InvalidArgument("confusion matrix entries must lie in [0, 1]");
  }
}

Eigen::VectorXd apply_confusion(const Eigen::VectorXd& probabilities,
                                std::span<const ConfusionMatrix> confusion) {
  if (confusion.empty() || all_identity(confusion)) return probabilities;
  const int k = qubit_count(probabilities.size());
  return total_confusion(confusion, k).transpose() * probabilities;
}

Eigen::VectorXd spam_correct(const Eigen::VectorXd& probabilities,
                             std::span<const ConfusionMatrix> confusion) {
  if (std::abs(probabilities.sum() - 1.0) > 1e-9) throw InvalidArgument("probabilities must sum to 1");
  if (confusion.empty() || all_identity(confusion)) return probabilities;
  const int k = qubit_count(probabilities.size());
  for (const auto& c : confusion)
    if (std::abs(c.m.determinant()) < 1e-12) throw InvalidArgument("confusion matrix is singular");
  const Eigen::MatrixXd mt = total_confusion(confusion, k).transpose();
  Eigen::VectorXd p = mt.partialPivLu().solve(probabilities);
  p /= p.sum();
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] < 0.0 && p[i] > -1e-6) p[i] = 0.0;
  p /= p.sum();
  return p;
}

Eigen::VectorXd pauli_expectations(const Eigen::MatrixXcd& rho) {
  const int k = qubit_count(rho.rows());
  const int n = 1 << (2 * k);
  Eigen::VectorXd e(n);
  for (int a = 0; a < n; ++a) e[a] = (rho * pauli_string(a, k)).trace().real();
  return e;
}

Eigen::MatrixXcd from_pauli_expectations(const Eigen::VectorXd& expectations) {
  const int k = expectations.size() == 4 ? 1 : expectations.size() == 16 ? 2 : 0;
  if (k == 0) throw InvalidArgument("expectation vector must have 4 or 16 entries");
  const int dim = 1 << k;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  for (int a = 0; a < expectations.size(); ++a) rho += expectations[a] * pauli_string(a, k);
  return rho / static_cast<double>(dim);
}

StateTomogram state_tomography(const Eigen::MatrixXcd& rho, const TomographyOptions& opts) {
  const int k = qubit_count(rho.rows());
  const int dim = 1 << k;
  const int n_strings = 1 << (2 * k);
  if (!opts.confusion.empty() && static_cast<int>(opts.confusion.size()) != k)
    throw InvalidArgument("need one confusion matrix per qubit");

  // Outcome distributions for every measurement setting (axes 1..3 per qubit).
  const int n_settings = k == 1 ? 3 : 9;
  std::vector<Eigen::VectorXd> outcomes(n_settings);
  for (int s = 0; s < n_settings; ++s) {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1, 1);
    int rest = s;
    std::vector<int> axes(k);
    for (int q = k - 1; q >= 0; --q) {
      axes[q] = rest % 3 + 1;
      rest /= 3;
    }
    for (int q = 0; q < k; ++q) u = kron(u, Eigen::MatrixXcd(basis_rotation(axes[q])));
    const Eigen::MatrixXcd rotated = u * rho * u.adjoint();
    Eigen::VectorXd p = rotated.diagonal().real();
    p = apply_confusion(p, opts.confusion);
    if (opts.spam_correction) p = spam_correct(p, opts.confusion);
    outcomes[s] = p;
  }

  Eigen::VectorXd e(n_strings);
  for (int a = 0; a < n_strings; ++a) {
    std::vector<int> digits(k);
    int rest = a;
    for (int q = k - 1; q >= 0; --q) {
      digits[q] = rest % 4;
      rest /= 4;
    }
    // Identity factors are read from the Z setting of that qubit.
    int setting = 0;
    for (int q = 0; q < k; ++q) setting = setting * 3 + ((digits[q] == 0 ? 3 : digits[q]) - 1);
    double acc = 0.0;
    for (int b = 0; b < dim; ++b) {
      double sign = 1.0;
      for (int q = 0; q < k; ++q)
        if (digits[q] != 0 && ((b >> (k - 1 - q)) & 1)) sign = -sign;
      acc += sign * outcomes[setting][b];
    }
    e[a] = acc;
  }

  StateTomogram out;
  Eigen::MatrixXcd r = from_pauli_expectations(e);
  r = 0.5 * (r + r.adjoint());
  r /= r.trace().real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
  out.raw_min_eigenvalue = es.eigenvalues().minCoeff();
  if (out.raw_min_eigenvalue < -1e-12) {
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      if (ev[i] < 0.0) {
        out.clipped += -ev[i];
        ev[i] = 0.0;
      }
    }
    r = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    r /= r.trace().real();
  }
  out.rho = r;
  return out;
}

double fidelity_state(const Eigen::MatrixXcd& rho, const Eigen::VectorXcd& target) {
  if (rho.rows() != target.size() || rho.cols() != target.size())
    throw InvalidArgument("state and target dimensions differ");
  if (std::abs(target.squaredNorm() - 1.0) > 1e-9) throw InvalidArgument("target state must be normalised");
  const Complex f = target.dot(rho * target);
  if (std::abs(f.imag()) > 1e-9) throw NumericalError("fidelity has an imaginary residue");
  return f.real();
}

Eigen::VectorXcd bell_psi_plus() {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
  psi[1] = psi[2] = 1.0 / std::sqrt(2.0);
  return psi;
}

const std::array<Matrix2, 4>& process_inputs() {
  static const std::array<Matrix2, 4> inputs = [] {
    const double r = 1.0 / std::sqrt(2.0);
    std::array<Matrix2, 4> u;
    u[0] = Matrix2::Identity();
    u[1] << 0, 1, 1, 0;
    u[2] << r, -r, r, r;             // Ry(pi/2): |0> -> |+>
    u[3] << r, kI * r, kI * r, r;    // Rx(-pi/2): |0> -> |+i>
    return u;
  }();
  return inputs;
}

Matrix4 chi_from_outputs(const std::array<Matrix2, 4>& out) {
  const Matrix2& e0 = out[0];
  const Matrix2& e1 = out[1];
  const Matrix2 r2 = out[2] + kI * out[3] - 0.5 * (1.0 + kI) * (e0 + e1);
  const Matrix2 r3 = out[2] - kI * out[3] - 0.5 * (1.0 - kI) * (e0 + e1);
  Matrix4 big;
  big << e0, r2, r3, e1;
  Matrix4 lambda;
  lambda << 1, 0, 0, 1,
            0, 1, 1, 0,
            0, 1, -1, 0,
            1, 0, 0, -1;
  lambda *= 0.5;
  Matrix4 chi = lambda * big * lambda;
  // The block construction yields chi for the operator basis (I, X, -iY, Z).
  const std::array<Complex, 4> c{1.0, 1.0, -kI, 1.0};
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) chi(m, n) *= c[m] * std::conj(c[n]);
  return chi;
}

ProcessTomogram process_tomography(const std::function<Matrix2(const Matrix2& prep)>& channel,
                                   const TomographyOptions& opts) {
  std::array<Matrix2, 4> outputs;
  ProcessTomogram out;
  for (int k = 0; k < 4; ++k) {
    const auto tomo = state_tomography(channel(process_inputs()[k]), opts);
    outputs[k] = tomo.rho;
    out.clipped += tomo.clipped;
  }
  out.chi = chi_from_outputs(outputs);
  out.chi = 0.5 * (out.chi + out.chi.adjoint()).eval();
  out.chi /= out.chi.trace().real();
  Matrix4 ideal = Matrix4::Zero();
  ideal(0, 0) = 1.0;
  out.fidelity = process_fidelity(out.chi, ideal);
  return out;
}

double process_fidelity(const Matrix4& chi, const Matrix4& chi_ideal) {
  const Complex f = (chi * chi_ideal).trace();
  if (std::abs(f.imag()) > 1e-9) throw NumericalError("process fidelity has an imaginary residue");
  return f.real();
}

Matrix4 chi_of_kraus(std::span<const Matrix2> kraus) {
  Matrix4 chi = Matrix4::Zero();
  for (const auto& k : kraus) {
    Eigen::Vector4cd a;
    for (int m = 0; m < 4; ++m) a[m] = (pauli_basis()[m] * k).trace() / 2.0;
    chi += a * a.adjoint();
  }
  return chi;
}

Matrix4 chi_of_unitary(const Matrix2& u) {
  const std::array<Matrix2, 1> k{u};
  return chi_of_kraus(k);
}

Matrix2 apply_chi(const Matrix4& chi, const Matrix2& rho) {
  Matrix2 out = Matrix2::Zero();
  const auto& p = pauli_basis();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) out += chi(m, n) * p[m] * rho * p[n].adjoint();
  return out;
}

double trace_preservation_error(const Matrix4& chi) {
  Matrix2 acc = Matrix2::Zero();
  const auto& p = pauli_basis();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) acc += chi(m, n) * p[n].adjoint() * p[m];
  return (acc - Matrix2::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace thermnet::tomography
