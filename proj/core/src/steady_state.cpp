#include "thermnet/dynamics/steady_state.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <sstream>

#include "thermnet/error.hpp"

namespace thermnet::dynamics {
namespace {

double residual_of(const Liouvillian& lv, const SectorState& state) {
  SectorState d;
  lv.apply(state, d);
  double r = 0.0;
  for (const auto& v : d) r = std::max(r, v.cwiseAbs().maxCoeff());
  return r;
}

DensityMatrix finish(const DensityMatrix& raw) {
  DensityMatrix rho = 0.5 * (raw + raw.adjoint());
  rho /= rho.trace().real();
  return rho;
}

}  // namespace

SteadyStateResult steady_state(const SparseOp& hamiltonian, std::span<const SparseOp> collapse_ops,
                               const std::vector<int>& charges) {
  if (collapse_ops.empty()) throw InvalidArgument("steady_state needs at least one dissipator");
  const Liouvillian lv(hamiltonian, collapse_ops, charges, {0});
  const Sector& s = lv.sectors().front();
  const auto m = static_cast<Eigen::Index>(s.rows.size());

  // Border the generator: the first diagonal row becomes the trace condition.
  const int pinned = s.diagonal.front();
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(static_cast<std::size_t>(s.generator.nonZeros()) + s.diagonal.size());
  for (int r = 0; r < s.generator.outerSize(); ++r) {
    if (r == pinned) continue;
    for (SuperOp::InnerIterator it(s.generator, r); it; ++it) t.emplace_back(r, it.col(), it.value());
  }
  for (const int p : s.diagonal) t.emplace_back(pinned, p, 1.0);
  Eigen::SparseMatrix<Complex> a(m, m);
  a.setFromTriplets(t.begin(), t.end());
  a.makeCompressed();

  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(m);
  b[pinned] = 1.0;

  Eigen::SparseLU<Eigen::SparseMatrix<Complex>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  bool singular = lu.info() != Eigen::Success;
  SteadyStateResult out;
  if (!singular) {
    SectorState state(lv.sectors().size());
    state.front() = lu.solve(b);
    for (std::size_t k = 1; k < state.size(); ++k)
      state[k] = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lv.sectors()[k].rows.size()));
    if (!state.front().allFinite()) {
      singular = true;
    } else {
      out.rho = finish(lv.unpack(state));
      out.residual = residual_of(lv, lv.pack(out.rho));
      out.method = "null-space";
      // A finite solution with a large residual means the bordered system was
      // numerically singular.
      double scale = 0.0;
      for (Eigen::Index k = 0; k < s.generator.nonZeros(); ++k)
        scale = std::max(scale, std::abs(s.generator.valuePtr()[k]));
      if (out.residual > 1e-8 * std::max(1.0, scale)) singular = true;
    }
  }
  if (singular) {
    const int n = lv.dim();
    const DensityMatrix mixed = DensityMatrix::Identity(n, n) / static_cast<double>(n);
    out = steady_state_by_evolution(hamiltonian, collapse_ops, mixed, {}, charges);
    out.degenerate = true;
  }
  require_valid(out.rho);
  return out;
}

SteadyStateResult steady_state_by_evolution(const SparseOp& hamiltonian,
                                            std::span<const SparseOp> collapse_ops,
                                            const DensityMatrix& rho0, const RelaxationOptions& opts,
                                            const std::vector<int>& charges) {
  require_valid(rho0);
  const auto orders = charges.empty() ? std::vector<int>{0} : Liouvillian::orders_present(rho0, charges);
  const Liouvillian lv(hamiltonian, collapse_ops, charges, orders);
  SectorState state = lv.pack(rho0);
  double t = 0.0;
  double res = residual_of(lv, state);
  while (res > opts.rate_tolerance) {
    if (t >= opts.max_time) {
      std::ostringstream os;
      os << "steady state not reached after " << t << " s (residual " << res << " 1/s)";
      throw NumericalError(os.str());
    }
    integrate(lv, state, opts.check_interval, opts.max_dt);
    const Complex tr = lv.trace(state);
    for (auto& v : state) v /= tr.real();
    t += opts.check_interval;
    res = residual_of(lv, state);
  }
  SteadyStateResult out;
  out.rho = finish(lv.unpack(state));
  out.residual = res;
  out.method = "evolution";
  require_valid(out.rho);
  return out;
}

}  // namespace thermnet::dynamics
