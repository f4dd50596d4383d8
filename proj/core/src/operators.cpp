#include "thermnet/dynamics/operators.hpp"

#include <cmath>
#include <string>

#include "thermnet/error.hpp"

namespace thermnet::dynamics {
namespace {

void require_rate(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw InvalidArgument(std::string(what) + " must be finite and non-negative");
}

}  // namespace

void QubitParams::validate() const {
  if (levels < 2) throw InvalidArgument("qubit levels must be at least 2");
  require_rate(relaxation, "qubit relaxation");
  require_rate(occupancy, "qubit occupancy");
  require_rate(pure_dephasing, "qubit pure_dephasing");
  if (!std::isfinite(frequency) || !std::isfinite(anharmonicity))
    throw InvalidArgument("qubit frequency and anharmonicity must be finite");
}

void ModeParams::validate() const {
  if (fock_cutoff < 2) throw InvalidArgument("fock_cutoff must be at least 2");
  require_rate(relaxation, "mode relaxation");
  require_rate(occupancy, "mode occupancy");
  if (!std::isfinite(frequency)) throw InvalidArgument("mode frequency must be finite");
}

Bath merge_baths(std::span<const Bath> baths) {
  if (baths.empty()) throw InvalidArgument("merge_baths needs at least one bath");
  double kappa = 0.0;
  double weighted = 0.0;
  for (const auto& b : baths) {
    require_rate(b.kappa, "bath kappa");
    require_rate(b.occupancy, "bath occupancy");
    kappa += b.kappa;
    weighted += b.kappa * b.occupancy;
  }
  if (!(kappa > 0.0)) throw InvalidArgument("merged occupancy undefined: all bath rates are zero");
  return {kappa, weighted / kappa};
}

int fock_cutoff_for(double occupancy, double tail, int floor) {
  require_rate(occupancy, "occupancy");
  if (!(tail > 0.0 && tail < 1.0)) throw InvalidArgument("tail must lie in (0, 1)");
  if (occupancy == 0.0) return floor;
  const double ratio = occupancy / (occupancy + 1.0);
  const int n = static_cast<int>(std::ceil(std::log(tail) / std::log(ratio)));
  return std::max(n, floor);
}

double truncated_tail(double occupancy, int cutoff) {
  if (occupancy == 0.0) return 0.0;
  return std::pow(occupancy / (occupancy + 1.0), cutoff);
}

TensorSpace system_space(std::span<const QubitParams> qubits, const ModeParams& mode) {
  std::vector<int> dims;
  for (const auto& q : qubits) dims.push_back(q.levels);
  dims.push_back(mode.fock_cutoff);
  return TensorSpace(std::move(dims));
}

SparseOp build_hamiltonian(std::span<const QubitParams> qubits, const ModeParams& mode,
                           std::span<const double> couplings, double frame) {
  if (couplings.size() != qubits.size())
    throw InvalidArgument("need exactly one coupling per qubit");
  for (const auto& q : qubits) q.validate();
  mode.validate();

  const TensorSpace space = system_space(qubits, mode);
  const int mode_site = static_cast<int>(qubits.size());
  const SparseOp a = embed(lowering_op(mode.fock_cutoff), mode_site, space);
  const SparseOp ad = adjoint(a);

  SparseOp h = (mode.frequency - frame) * SparseOp(ad * a);
  for (std::size_t n = 0; n < qubits.size(); ++n) {
    const auto& q = qubits[n];
    const SparseOp s = embed(lowering_op(q.levels), static_cast<int>(n), space);
    const SparseOp sd = adjoint(s);
    h += (q.frequency - frame) * SparseOp(sd * s);
    h += (0.5 * q.anharmonicity) * SparseOp(sd * sd * s * s);
    if (couplings[n] != 0.0) h += couplings[n] * SparseOp(sd * a + s * ad);
  }
  h.prune(Complex{0.0, 0.0});
  return h;
}

std::vector<SparseOp> build_collapse_operators(std::span<const QubitParams> qubits,
                                               const ModeParams& mode) {
  for (const auto& q : qubits) q.validate();
  mode.validate();
  const TensorSpace space = system_space(qubits, mode);

  std::vector<SparseOp> ops;
  const auto add_thermal = [&](const SparseOp& lower, double kappa, double n) {
    if (kappa <= 0.0) return;
    ops.push_back(std::sqrt(kappa * (n + 1.0)) * lower);
    if (n > 0.0) ops.push_back(std::sqrt(kappa * n) * adjoint(lower));
  };

  for (std::size_t k = 0; k < qubits.size(); ++k) {
    const auto& q = qubits[k];
    const int site = static_cast<int>(k);
    add_thermal(embed(lowering_op(q.levels), site, space), q.relaxation, q.occupancy);
    if (q.pure_dephasing > 0.0)
      ops.push_back(std::sqrt(q.pure_dephasing / 2.0) * embed(number_op(q.levels), site, space));
  }
  add_thermal(embed(lowering_op(mode.fock_cutoff), static_cast<int>(qubits.size()), space),
              mode.relaxation, mode.occupancy);
  return ops;
}

OpenSystem build_open_system(std::span<const QubitParams> qubits, const ModeParams& mode,
                             std::span<const double> couplings, double frame) {
  return {system_space(qubits, mode), build_hamiltonian(qubits, mode, couplings, frame),
          build_collapse_operators(qubits, mode)};
}

}  // namespace thermnet::dynamics
