#include "thermnet/dynamics/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "thermnet/error.hpp"

namespace thermnet::dynamics {
namespace {

void axpy(SectorState& y, Complex a, const SectorState& x) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += a * x[k];
}

void rk4_step(const Liouvillian& lv, SectorState& y, double dt, SectorState& k1, SectorState& k2,
              SectorState& k3, SectorState& k4, SectorState& tmp) {
  lv.apply(y, k1);
  tmp = y;
  axpy(tmp, 0.5 * dt, k1);
  lv.apply(tmp, k2);
  tmp = y;
  axpy(tmp, 0.5 * dt, k2);
  lv.apply(tmp, k3);
  tmp = y;
  axpy(tmp, dt, k3);
  lv.apply(tmp, k4);
  for (std::size_t k = 0; k < y.size(); ++k)
    y[k] += (dt / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
}

}  // namespace

double stable_time_step(std::span<const double> detunings, double max_coupling,
                        double max_dissipation, double cap) {
  double rate = std::max(std::abs(max_coupling), std::abs(max_dissipation));
  for (const double d : detunings) rate = std::max(rate, std::abs(d));
  if (rate <= 0.0) return cap;
  return std::min(cap, 0.02 / rate);
}

double max_dissipation_rate(std::span<const SparseOp> collapse_ops) {
  double best = 0.0;
  for (const auto& l : collapse_ops) {
    // Largest diagonal element of L^dagger L is the fastest jump out of a state.
    const SparseOp ll = adjoint(l) * l;
    for (int k = 0; k < ll.outerSize(); ++k)
      for (SparseOp::InnerIterator it(ll, k); it; ++it)
        if (it.row() == it.col()) best = std::max(best, std::abs(it.value()));
  }
  return best;
}

long integrate(const Liouvillian& generator, SectorState& state, double duration, double max_dt) {
  if (!(duration >= 0.0)) throw InvalidArgument("duration must be non-negative");
  if (!(max_dt > 0.0)) throw InvalidArgument("time step must be positive");
  if (duration == 0.0) return 0;
  const long steps = std::max(1L, static_cast<long>(std::ceil(duration / max_dt - 1e-9)));
  const double dt = duration / static_cast<double>(steps);
  SectorState k1, k2, k3, k4, tmp;
  for (long s = 0; s < steps; ++s) rk4_step(generator, state, dt, k1, k2, k3, k4, tmp);
  return steps;
}

DensityMatrix evolve(const DensityMatrix& rho0, const SparseOp& hamiltonian,
                     std::span<const SparseOp> collapse_ops, double duration,
                     const EvolveOptions& opts, const Observer& observer,
                     const std::vector<int>& charges) {
  if (!(duration >= 0.0)) throw InvalidArgument("duration must be non-negative");
  if (!(opts.sample_interval >= 0.0)) throw InvalidArgument("sample_interval must be non-negative");
  require_valid(rho0, opts.tolerance);

  const auto orders = charges.empty() ? std::vector<int>{0} : Liouvillian::orders_present(rho0, charges);
  const Liouvillian lv(hamiltonian, collapse_ops, charges, orders);
  SectorState state = lv.pack(rho0);
  if (observer) observer(0.0, rho0);
  if (duration == 0.0) return rho0;

  const double interval = opts.sample_interval > 0.0 ? opts.sample_interval : duration;
  const long n_samples = static_cast<long>(std::ceil(duration / interval - 1e-9));
  DensityMatrix rho = rho0;
  double t_prev = 0.0;
  for (long k = 1; k <= n_samples; ++k) {
    const double t = k == n_samples ? duration : static_cast<double>(k) * interval;
    integrate(lv, state, t - t_prev, opts.max_dt);
    t_prev = t;

    const Complex tr = lv.trace(state);
    const double drift = std::abs(tr - 1.0);
    if (drift > opts.max_trace_drift) {
      std::ostringstream os;
      os << "trace drift " << drift << " at t = " << t << " s exceeds " << opts.max_trace_drift
         << "; reduce the time step";
      throw NumericalError(os.str());
    }
    for (auto& v : state) v /= tr.real();

    const bool last = k == n_samples;
    if (!observer && !last) continue;
    rho = lv.unpack(state);
    if (opts.validate_samples) {
      const auto report = check_density_matrix(rho, opts.tolerance);
      if (report.min_eigenvalue < opts.max_negativity || report.hermiticity_error > opts.tolerance.hermiticity) {
        std::ostringstream os;
        os << "state left the physical set at t = " << t << " s (min eigenvalue " << report.min_eigenvalue
           << ", hermiticity error " << report.hermiticity_error << "); reduce the time step";
        throw NumericalError(os.str());
      }
    }
    if (observer) observer(t, rho);
  }
  return rho;
}

Trajectory evolve_trajectory(const DensityMatrix& rho0, const SparseOp& hamiltonian,
                             std::span<const SparseOp> collapse_ops, double duration,
                             const EvolveOptions& opts, const std::vector<int>& charges) {
  Trajectory out;
  evolve(rho0, hamiltonian, collapse_ops, duration, opts,
         [&](double t, const DensityMatrix& rho) {
           out.times.push_back(t);
           out.states.push_back(rho);
         },
         charges);
  return out;
}

}  // namespace thermnet::dynamics
