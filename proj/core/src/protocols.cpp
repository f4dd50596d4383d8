#include "thermnet/protocols/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "thermnet/dynamics/evolve.hpp"
#include "thermnet/dynamics/steady_state.hpp"
#include "thermnet/error.hpp"

namespace thermnet::protocols {
namespace {

using dynamics::SparseOp;
using dynamics::TensorSpace;
using units::ns;
using units::us;

constexpr Complex kI{0.0, 1.0};

constexpr ThermalRow kRows[] = {
    {0.83, {2.74 * us, 3.54 * us}, {0.13, 0.14}, {0.016, 0.017}, {0.48, 0.46}},
    {1.0, {2.80 * us, 3.48 * us}, {0.16, 0.16}, {0.026, 0.017}, {0.52, 0.50}},
    {2.0, {2.05 * us, 2.75 * us}, {0.26, 0.25}, {0.032, 0.027}, {0.92, 0.87}},
    {3.0, {1.37 * us, 1.83 * us}, {0.36, 0.36}, {0.040, 0.039}, {1.92, 1.65}},
    {4.0, {1.08 * us, 1.30 * us}, {0.52, 0.42}, {0.059, 0.061}, {5.64, 3.83}},
};

Eigen::Matrix2cd pauli_x() {
  Eigen::Matrix2cd x;
  x << 0, 1, 1, 0;
  return x;
}

Eigen::Matrix2cd half_pi_y() {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd u;
  u << r, -r, r, r;
  return u;
}

Eigen::Matrix2cd virtual_z(double phase) {
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  u(1, 1) = std::exp(-kI * phase);
  return u;
}

int product_of_levels(const SystemModel& m) {
  int p = 1;
  for (const auto& q : m.qubits) p *= q.levels;
  return p;
}

Eigen::VectorXd diagonal_of(const SparseOp& op) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(op.rows());
  for (int k = 0; k < op.outerSize(); ++k)
    for (SparseOp::InnerIterator it(op, k); it; ++it)
      if (it.row() == it.col()) d[it.row()] = it.value().real();
  return d;
}

double diagonal_expectation(const DensityMatrix& rho, const Eigen::VectorXd& diag) {
  return rho.diagonal().real().dot(diag);
}

dynamics::ModeParams mode_params(const SystemModel& m, DCoupler d, int cutoff) {
  const auto bath = m.mode_bath(d);
  return {m.mode_frequency, cutoff, bath.kappa, bath.occupancy};
}

int resolve_cutoff(const SystemModel& m, const RunOptions& opts, int automatic) {
  if (opts.fock_cutoff > 0) return opts.fock_cutoff;
  if (m.fock_cutoff > 0) return m.fock_cutoff;
  return automatic;
}

DensityMatrix apply_prep(const DensityMatrix& rho, const StatePrep& op, const TensorSpace& space) {
  switch (op.kind) {
    case PrepKind::ground_reset:
      return dynamics::reset_site(rho, op.qubit, space);
    case PrepKind::pi_pulse:
      return dynamics::conjugate(rho, dynamics::qubit_rotation(pauli_x(), op.qubit, space));
    case PrepKind::half_pi_pulse:
      return dynamics::conjugate(rho, dynamics::qubit_rotation(half_pi_y(), op.qubit, space));
    case PrepKind::unitary:
      if (!op.unitary.isUnitary(1e-12)) throw InvalidArgument("preparation matrix is not unitary");
      return dynamics::conjugate(rho, dynamics::qubit_rotation(op.unitary, op.qubit, space));
  }
  return rho;
}

// Fidelity to (|01> + |10>)/sqrt(2) after the best virtual Z on the second qubit.
double phase_free_bell_fidelity(const Eigen::MatrixXcd& rho4) {
  return 0.5 * (rho4(1, 1).real() + rho4(2, 2).real()) + std::abs(rho4(1, 2));
}

Eigen::MatrixXcd two_qubit_state(const DensityMatrix& rho, const TensorSpace& space, double* leakage) {
  const std::vector<int> keep{0, 1};
  const auto reduced = dynamics::partial_trace(rho, space, keep);
  const std::vector<int> dims{space.dim(0), space.dim(1)};
  const auto proj = dynamics::project_to_qubits(reduced, dims);
  if (leakage) *leakage = proj.leakage;
  return proj.rho;
}

}  // namespace

void SystemModel::validate() const {
  if (qubits.empty()) throw InvalidArgument("model needs at least one qubit");
  const auto n = qubits.size();
  if (couplings.size() != n || mode_occupancy_on.size() != n || mode_occupancy_off.size() != n)
    throw InvalidArgument("couplings and mode occupancies need one entry per qubit");
  for (const auto& q : qubits) q.validate();
  if (!(mode_frequency > 0.0)) throw InvalidArgument("mode_frequency must be positive");
  for (const double k : {intrinsic_kappa, dcoupler_kappa_on, dcoupler_kappa_off})
    if (!(k >= 0.0)) throw InvalidArgument("mode rates must be non-negative");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(mode_occupancy_on[i] >= 0.0) || !(mode_occupancy_off[i] >= 0.0))
      throw InvalidArgument("mode occupancies must be non-negative");
    if (!std::isfinite(couplings[i])) throw InvalidArgument("couplings must be finite");
  }
  if (fock_cutoff < 0 || fock_cutoff == 1) throw InvalidArgument("fock_cutoff must be 0 or at least 2");
}

dynamics::Bath SystemModel::mode_bath(DCoupler d, int probe) const {
  const auto p = static_cast<std::size_t>(probe);
  if (p >= mode_occupancy_on.size()) throw InvalidArgument("probe qubit index out of range");
  if (d == DCoupler::on) return {intrinsic_kappa + dcoupler_kappa_on, mode_occupancy_on[p]};
  return {intrinsic_kappa + dcoupler_kappa_off, mode_occupancy_off[p]};
}

SystemModel SystemModel::single(int qubit) const {
  const auto q = static_cast<std::size_t>(qubit);
  if (q >= qubits.size()) throw InvalidArgument("qubit index out of range");
  SystemModel m = *this;
  m.qubits = {qubits[q]};
  m.couplings = {couplings[q]};
  m.mode_occupancy_on = {mode_occupancy_on[q]};
  m.mode_occupancy_off = {mode_occupancy_off[q]};
  return m;
}

SystemModel SystemModel::lossless() const {
  SystemModel m = *this;
  for (auto& q : m.qubits) {
    q.relaxation = 0.0;
    q.occupancy = 0.0;
    q.pure_dephasing = 0.0;
  }
  m.intrinsic_kappa = m.dcoupler_kappa_on = m.dcoupler_kappa_off = 0.0;
  std::fill(m.mode_occupancy_on.begin(), m.mode_occupancy_on.end(), 0.0);
  std::fill(m.mode_occupancy_off.begin(), m.mode_occupancy_off.end(), 0.0);
  m.fock_cutoff = 3;
  return m;
}

std::span<const ThermalRow> reference_rows() { return kRows; }

const ThermalRow& reference_row(double t_hot) {
  for (const auto& r : kRows)
    if (std::abs(r.t_hot - t_hot) < 1e-9) return r;
  throw InvalidArgument("no calibrated row for T_hot = " + std::to_string(t_hot) + " K");
}

SystemModel reference_model(double t_hot, int qubit_levels) {
  const auto& row = reference_row(t_hot);
  SystemModel m;
  const double freqs[2] = {units::ghz(7.429), units::ghz(7.538)};
  for (int n = 0; n < 2; ++n) {
    dynamics::QubitParams q;
    q.frequency = freqs[n];
    q.anharmonicity = units::mhz(-204.0);
    q.levels = qubit_levels;
    q.relaxation = 1.0 / row.qubit_lifetime[n];
    q.occupancy = row.qubit_occupancy[n];
    m.qubits.push_back(q);
    m.mode_occupancy_on.push_back(row.mode_occupancy_on[n]);
    m.mode_occupancy_off.push_back(row.mode_occupancy_off[n]);
  }
  m.couplings = {units::mhz(5.0), units::mhz(5.0)};
  m.mode_frequency = units::ghz(7.48);
  m.intrinsic_kappa = 1.0 / (820.0 * ns);
  m.dcoupler_kappa_on = 1.0 / (9.6 * ns);
  m.dcoupler_kappa_off = 1.0 / (1.7 * units::ms);
  m.validate();
  return m;
}

void ScheduleSegment::validate(std::size_t n_qubits) const {
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw InvalidArgument("segment duration must be non-negative");
  if (couplings.size() != n_qubits) throw InvalidArgument("segment needs one coupling per qubit");
  if (!qubit_detunings.empty() && qubit_detunings.size() != n_qubits)
    throw InvalidArgument("segment detunings need one entry per qubit");
  for (const auto& op : initial_ops)
    if (op.qubit < 0 || static_cast<std::size_t>(op.qubit) >= n_qubits)
      throw InvalidArgument("preparation targets a missing qubit");
}

int schedule_fock_cutoff(const SystemModel& model, const PulseSchedule& schedule,
                         double initial_mode_occupancy) {
  double n = initial_mode_occupancy;
  double peak = n;
  int coupled = 0;
  std::vector<bool> seen(model.qubits.size(), false);
  for (const auto& seg : schedule) {
    const auto bath = model.mode_bath(seg.d_coupler);
    n = bath.occupancy + (n - bath.occupancy) * std::exp(-bath.kappa * seg.duration);
    peak = std::max(peak, n);
    for (std::size_t q = 0; q < seg.couplings.size() && q < seen.size(); ++q) {
      if (seg.couplings[q] != 0.0 && !seen[q]) {
        seen[q] = true;
        ++coupled;
      }
    }
  }
  return dynamics::fock_cutoff_for(peak + coupled);
}

TensorSpace model_space(const SystemModel& model, int fock_cutoff) {
  std::vector<int> dims;
  for (const auto& q : model.qubits) dims.push_back(q.levels);
  dims.push_back(fock_cutoff);
  return TensorSpace(std::move(dims));
}

ProtocolResult run_schedule(const SystemModel& model, const PulseSchedule& schedule,
                            const DensityMatrix& rho0, const RunOptions& opts) {
  model.validate();
  const auto nq = model.qubits.size();
  for (const auto& seg : schedule) seg.validate(nq);
  const int levels = product_of_levels(model);
  if (rho0.rows() % levels != 0 || rho0.rows() != rho0.cols())
    throw InvalidArgument("initial state does not match the model dimensions");
  const int cutoff = static_cast<int>(rho0.rows()) / levels;

  ProtocolResult out;
  out.space = model_space(model, cutoff);
  out.excited_population.assign(nq, {});
  const auto charges = out.space.charges();

  std::vector<Eigen::VectorXd> pe_diag;
  for (std::size_t q = 0; q < nq; ++q)
    pe_diag.push_back(diagonal_of(
        dynamics::embed(dynamics::excited_projector(model.qubits[q].levels), static_cast<int>(q), out.space)));
  const Eigen::VectorXd n_diag =
      diagonal_of(dynamics::embed(dynamics::number_op(cutoff), static_cast<int>(nq), out.space));

  double t0 = 0.0;
  bool first_sample = true;
  const auto record = [&](double t, const DensityMatrix& rho) {
    out.times.push_back(t);
    for (std::size_t q = 0; q < nq; ++q) out.excited_population[q].push_back(diagonal_expectation(rho, pe_diag[q]));
    out.mode_occupation.push_back(diagonal_expectation(rho, n_diag));
  };

  DensityMatrix rho = rho0;
  for (const auto& seg : schedule) {
    for (const auto& op : seg.initial_ops) rho = apply_prep(rho, op, out.space);

    std::vector<dynamics::QubitParams> qubits = model.qubits;
    std::vector<double> detunings(nq, 0.0);
    for (std::size_t q = 0; q < nq; ++q) {
      if (!seg.qubit_detunings.empty()) detunings[q] = seg.qubit_detunings[q];
      qubits[q].frequency = model.mode_frequency + detunings[q];
    }
    const auto mode = mode_params(model, seg.d_coupler, cutoff);
    const SparseOp h = dynamics::build_hamiltonian(qubits, mode, seg.couplings, model.mode_frequency);
    const auto ls = dynamics::build_collapse_operators(qubits, mode);

    double g_max = 0.0;
    for (const double g : seg.couplings) g_max = std::max(g_max, std::abs(g));
    dynamics::EvolveOptions eo;
    eo.max_dt = dynamics::stable_time_step(detunings, g_max, dynamics::max_dissipation_rate(ls), opts.max_dt);
    eo.sample_interval = opts.sample_interval;
    eo.validate_samples = opts.validate_samples;

    rho = dynamics::evolve(
        rho, h, ls, seg.duration, eo,
        [&](double t, const DensityMatrix& r) {
          if (t == 0.0 && !first_sample) return;
          first_sample = false;
          record(t0 + t, r);
        },
        charges);
    t0 += seg.duration;
  }
  if (first_sample) record(0.0, rho);
  out.final_state = rho;
  return out;
}

DensityMatrix qubit_thermal_state(const SystemModel& model, int n) {
  const auto& q = model.qubits.at(static_cast<std::size_t>(n));
  return dynamics::thermal_state(q.levels, q.occupancy);
}

DensityMatrix coupled_steady_state(const SystemModel& model, int n, DCoupler d, int fock_cutoff) {
  const SystemModel m = model.single(n);
  const auto bath = m.mode_bath(d);
  int cutoff = fock_cutoff > 0 ? fock_cutoff : m.fock_cutoff > 0 ? m.fock_cutoff : dynamics::fock_cutoff_for(bath.occupancy);
  std::vector<dynamics::QubitParams> qubits = m.qubits;
  qubits[0].frequency = m.mode_frequency;
  const dynamics::ModeParams mode{m.mode_frequency, cutoff, bath.kappa, bath.occupancy};
  const auto sys = dynamics::build_open_system(qubits, mode, m.couplings, m.mode_frequency);
  if (sys.collapse_ops.empty()) {
    const std::vector<int> ground(2, 0);
    return dynamics::basis_state(sys.space, ground);
  }
  return dynamics::steady_state(sys.hamiltonian, sys.collapse_ops, sys.space.charges()).rho;
}

DensityMatrix cooled_qubit_state(const SystemModel& model, int n) {
  const DensityMatrix joint = coupled_steady_state(model, n, DCoupler::on);
  const int levels = model.qubits.at(static_cast<std::size_t>(n)).levels;
  const TensorSpace space({levels, static_cast<int>(joint.rows()) / levels});
  const std::vector<int> keep{0};
  return dynamics::partial_trace(joint, space, keep);
}

DensityMatrix cooled_initial_state(const SystemModel& model, int fock_cutoff) {
  std::vector<DensityMatrix> factors;
  for (std::size_t q = 0; q < model.qubits.size(); ++q) factors.push_back(cooled_qubit_state(model, static_cast<int>(q)));
  factors.push_back(dynamics::thermal_state(fock_cutoff, model.mode_bath(DCoupler::on).occupancy));
  return dynamics::kron(factors);
}

ProtocolResult cooling_protocol(const SystemModel& model, double duration, const RunOptions& opts) {
  const SystemModel m = model.single(0);
  ScheduleSegment seg;
  seg.duration = duration;
  seg.couplings = {m.couplings[0]};
  seg.d_coupler = DCoupler::on;
  const PulseSchedule schedule{seg};
  const double n0 = m.mode_bath(DCoupler::on).occupancy;
  const int cutoff = resolve_cutoff(m, opts, schedule_fock_cutoff(m, schedule, n0));
  const DensityMatrix rho0 = dynamics::kron(qubit_thermal_state(m, 0), dynamics::thermal_state(cutoff, n0));
  return run_schedule(m, schedule, rho0, opts);
}

ProtocolResult rethermalization_protocol(const SystemModel& model, double duration, RethermVariant variant,
                                         const RunOptions& opts) {
  const SystemModel m = model.single(0);
  ScheduleSegment seg;
  seg.duration = duration;
  seg.couplings = {variant == RethermVariant::coupled ? m.couplings[0] : 0.0};
  seg.d_coupler = DCoupler::off;
  const PulseSchedule schedule{seg};
  const int cutoff = resolve_cutoff(m, opts, schedule_fock_cutoff(m, schedule, 0.0));
  const TensorSpace space = model_space(m, cutoff);
  const std::vector<int> ground(2, 0);
  return run_schedule(m, schedule, dynamics::basis_state(space, ground), opts);
}

ChevronResult rabi_chevron_scan(const SystemModel& model, std::span<const double> detunings, double duration,
                                double time_step, ChevronVariant variant, const RunOptions& opts) {
  if (!(time_step > 0.0) || !(duration > 0.0)) throw InvalidArgument("chevron needs positive duration and step");
  const SystemModel m = model.single(0);
  const bool cooled = variant == ChevronVariant::cooled;
  const double n0 = m.mode_bath(cooled ? DCoupler::on : DCoupler::off).occupancy;

  ScheduleSegment seg;
  seg.duration = duration;
  seg.couplings = {m.couplings[0]};
  seg.d_coupler = DCoupler::off;
  const int cutoff = resolve_cutoff(m, opts, schedule_fock_cutoff(m, {seg}, n0));
  const TensorSpace space = model_space(m, cutoff);
  DensityMatrix q0 = DensityMatrix::Zero(m.qubits[0].levels, m.qubits[0].levels);
  q0(cooled ? 1 : 0, cooled ? 1 : 0) = 1.0;
  const DensityMatrix rho0 = dynamics::kron(q0, dynamics::thermal_state(cutoff, n0));

  ChevronResult out;
  out.detunings.assign(detunings.begin(), detunings.end());
  RunOptions ro = opts;
  ro.sample_interval = time_step;
  for (std::size_t k = 0; k < detunings.size(); ++k) {
    seg.qubit_detunings = {detunings[k]};
    const auto r = run_schedule(m, {seg}, rho0, ro);
    if (k == 0) {
      out.times = r.times;
      out.excited.resize(static_cast<Eigen::Index>(detunings.size()), static_cast<Eigen::Index>(r.times.size()));
    }
    for (std::size_t t = 0; t < r.times.size(); ++t)
      out.excited(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = r.excited_population[0][t];
  }
  return out;
}

double ideal_transfer_time(const SystemModel& model) {
  if (model.couplings.size() < 2) throw InvalidArgument("transfer needs two qubits");
  const double g = std::hypot(model.couplings[0], model.couplings[1]);
  if (!(g > 0.0)) throw InvalidArgument("transfer needs non-zero couplings");
  return kPi / g;
}

double lossless_transfer_time(const SystemModel& model, double resolution) {
  const SystemModel m = model.lossless();
  const double guess = ideal_transfer_time(m);
  ScheduleSegment seg;
  seg.duration = 1.5 * guess;
  seg.couplings = {m.couplings[0], m.couplings[1]};
  seg.initial_ops = {{PrepKind::pi_pulse, 0, {}}};
  const TensorSpace space = model_space(m, m.fock_cutoff);
  const std::vector<int> ground(3, 0);
  RunOptions ro;
  ro.sample_interval = resolution;
  ro.validate_samples = false;
  const auto r = run_schedule(m, {seg}, dynamics::basis_state(space, ground), ro);
  const auto& pb = r.excited_population[1];
  std::size_t best = 0;
  for (std::size_t k = 1; k < pb.size(); ++k)
    if (pb[k] > pb[best]) best = k;
  if (best == 0 || best + 1 >= pb.size()) return r.times[best];
  // Parabolic refinement through the three samples around the peak.
  const double y0 = pb[best - 1];
  const double y1 = pb[best];
  const double y2 = pb[best + 1];
  const double denom = y0 - 2.0 * y1 + y2;
  const double shift = denom == 0.0 ? 0.0 : 0.5 * (y0 - y2) / denom;
  return r.times[best] + shift * (r.times[best + 1] - r.times[best]);
}

double calibrate_receiver_phase(const SystemModel& model, double time) {
  const SystemModel m = model.lossless();
  ScheduleSegment seg;
  seg.duration = time;
  seg.couplings = {m.couplings[0], m.couplings[1]};
  seg.initial_ops = {{PrepKind::half_pi_pulse, 0, {}}};
  const TensorSpace space = model_space(m, m.fock_cutoff);
  const std::vector<int> ground(3, 0);
  const auto r = run_schedule(m, {seg}, dynamics::basis_state(space, ground));
  const std::vector<int> keep{1};
  const auto rb = dynamics::partial_trace(r.final_state, space, keep);
  return std::arg(rb(1, 0));
}

TransferResult photon_transfer_protocol(const SystemModel& model, const Eigen::Matrix2cd& input,
                                        const TransferOptions& opts) {
  if (model.qubits.size() != 2) throw InvalidArgument("transfer needs a two-qubit model");
  TransferResult out;
  out.time = opts.time ? *opts.time : lossless_transfer_time(model);
  out.receiver_phase = opts.receiver_phase ? *opts.receiver_phase : calibrate_receiver_phase(model, out.time);

  ScheduleSegment seg;
  seg.duration = out.time;
  seg.couplings = {model.couplings[0], model.couplings[1]};
  seg.d_coupler = DCoupler::off;
  seg.initial_ops = {{PrepKind::unitary, 0, input}};
  const double n0 = model.mode_bath(DCoupler::on).occupancy;
  const int cutoff = resolve_cutoff(model, opts.run, schedule_fock_cutoff(model, {seg}, n0));
  const DensityMatrix rho0 = cooled_initial_state(model, cutoff);
  out.trajectory = run_schedule(model, {seg}, rho0, opts.run);

  const std::vector<int> keep{1};
  const auto rb = dynamics::partial_trace(out.trajectory.final_state, out.trajectory.space, keep);
  const std::vector<int> dims{model.qubits[1].levels};
  const auto proj = dynamics::project_to_qubits(rb, dims);
  const Eigen::Matrix2cd z = virtual_z(out.receiver_phase);
  out.receiver_state = z * proj.rho * z.adjoint();
  out.leakage = proj.leakage;
  return out;
}

TransferTomography transfer_process_tomography(const SystemModel& model, const tomography::TomographyOptions& tomo,
                                               const TransferOptions& opts) {
  TransferTomography out;
  TransferOptions fixed = opts;
  out.time = fixed.time ? *fixed.time : lossless_transfer_time(model);
  fixed.time = out.time;
  out.receiver_phase = fixed.receiver_phase ? *fixed.receiver_phase : calibrate_receiver_phase(model, out.time);
  fixed.receiver_phase = out.receiver_phase;

  int k = 0;
  out.process = tomography::process_tomography(
      [&](const Eigen::Matrix2cd& prep) {
        const auto r = photon_transfer_protocol(model, prep, fixed);
        out.outputs[static_cast<std::size_t>(k++)] = r.receiver_state;
        out.max_leakage = std::max(out.max_leakage, r.leakage);
        return Eigen::Matrix2cd(r.receiver_state);
      },
      tomo);
  return out;
}

BellTiming bell_timing_search(const SystemModel& model, double grid, double max_stage1, double max_stage2) {
  if (!(grid > 0.0)) throw InvalidArgument("grid step must be positive");
  if (model.qubits.size() != 2) throw InvalidArgument("Bell protocol needs a two-qubit model");
  const SystemModel m = model.lossless();
  const TensorSpace space = model_space(m, m.fock_cutoff);
  const auto charges = space.charges();
  std::vector<dynamics::QubitParams> qubits = m.qubits;
  for (auto& q : qubits) q.frequency = m.mode_frequency;
  const dynamics::ModeParams mode{m.mode_frequency, m.fock_cutoff, 0.0, 0.0};
  const std::vector<double> stage1_g{m.couplings[0], 0.0};
  const std::vector<double> stage2_g{0.0, m.couplings[1]};
  const SparseOp h1 = dynamics::build_hamiltonian(qubits, mode, stage1_g, m.mode_frequency);
  const SparseOp h2 = dynamics::build_hamiltonian(qubits, mode, stage2_g, m.mode_frequency);
  const std::vector<SparseOp> none;

  const std::vector<int> excited_a{1, 0, 0};
  DensityMatrix rho = dynamics::basis_state(space, excited_a);
  dynamics::EvolveOptions eo;
  eo.max_dt = dynamics::stable_time_step({}, m.couplings[0], 0.0);
  eo.validate_samples = false;

  BellTiming best;
  const int n1 = static_cast<int>(std::floor(max_stage1 / grid + 1e-9));
  for (int i = 1; i <= n1; ++i) {
    rho = dynamics::evolve(rho, h1, none, grid, eo, {}, charges);
    dynamics::EvolveOptions e2 = eo;
    e2.sample_interval = grid;
    dynamics::evolve(
        rho, h2, none, max_stage2, e2,
        [&](double t, const DensityMatrix& r) {
          if (t <= 0.0) return;
          const double f = phase_free_bell_fidelity(two_qubit_state(r, space, nullptr));
          if (f > best.fidelity + 1e-12) best = {i * grid, std::round(t / grid) * grid, f};
        },
        charges);
  }
  return best;
}

double calibrate_bell_phase(const SystemModel& model, const BellTiming& timing) {
  const SystemModel m = model.lossless();
  ScheduleSegment s1;
  s1.duration = timing.stage1;
  s1.couplings = {m.couplings[0], 0.0};
  s1.initial_ops = {{PrepKind::pi_pulse, 0, {}}};
  ScheduleSegment s2;
  s2.duration = timing.stage2;
  s2.couplings = {0.0, m.couplings[1]};
  const TensorSpace space = model_space(m, m.fock_cutoff);
  const std::vector<int> ground(3, 0);
  const auto r = run_schedule(m, {s1, s2}, dynamics::basis_state(space, ground));
  return std::arg(two_qubit_state(r.final_state, space, nullptr)(1, 2));
}

BellResult bell_protocol(const SystemModel& model, const BellOptions& opts) {
  if (model.qubits.size() != 2) throw InvalidArgument("Bell protocol needs a two-qubit model");
  BellResult out;
  out.timing = opts.timing ? *opts.timing : bell_timing_search(model);
  out.receiver_phase = opts.receiver_phase ? *opts.receiver_phase : calibrate_bell_phase(model, out.timing);

  ScheduleSegment s1;
  s1.duration = out.timing.stage1;
  s1.couplings = {model.couplings[0], 0.0};
  s1.initial_ops = {{PrepKind::pi_pulse, 0, {}}};
  ScheduleSegment s2;
  s2.duration = out.timing.stage2;
  s2.couplings = {0.0, model.couplings[1]};
  const PulseSchedule schedule{s1, s2};
  const double n0 = model.mode_bath(DCoupler::on).occupancy;
  const int cutoff = resolve_cutoff(model, opts.run, schedule_fock_cutoff(model, schedule, n0));
  out.trajectory = run_schedule(model, schedule, cooled_initial_state(model, cutoff), opts.run);

  Eigen::MatrixXcd rho = two_qubit_state(out.trajectory.final_state, out.trajectory.space, &out.leakage);
  Eigen::Matrix4cd z = Eigen::Matrix4cd::Identity();
  z(1, 1) = z(3, 3) = std::exp(-kI * out.receiver_phase);
  out.rho = z * rho * z.adjoint();
  out.fidelity = tomography::fidelity_state(out.rho, tomography::bell_psi_plus());
  return out;
}

ReadoutResetParams ReadoutResetParams::reference() {
  ReadoutResetParams p;
  p.coupling = kPi / (3.2 * ns);
  p.resonator_kappa = 1.0 / (60.0 * ns);
  return p;
}

namespace {

SystemModel readout_model(const dynamics::QubitParams& qubit, const ReadoutResetParams& p) {
  if (!(p.coupling >= 0.0) || !(p.resonator_kappa >= 0.0) || !(p.resonator_occupancy >= 0.0))
    throw InvalidArgument("readout resonator parameters must be non-negative");
  SystemModel m;
  m.qubits = {qubit};
  m.couplings = {p.coupling};
  m.mode_frequency = qubit.frequency > 0.0 ? qubit.frequency : units::ghz(7.0);
  m.intrinsic_kappa = p.resonator_kappa;
  m.mode_occupancy_on = {p.resonator_occupancy};
  m.mode_occupancy_off = {p.resonator_occupancy};
  m.fock_cutoff = p.resonator_cutoff;
  return m;
}

}  // namespace

ProtocolResult readout_reset_protocol(const dynamics::QubitParams& qubit, const ReadoutResetParams& p,
                                      double duration, const RunOptions& opts) {
  const SystemModel m = readout_model(qubit, p);
  ScheduleSegment seg;
  seg.duration = duration;
  seg.couplings = {p.coupling};
  const int cutoff = resolve_cutoff(m, opts, schedule_fock_cutoff(m, {seg}, p.resonator_occupancy));
  DensityMatrix q0 = DensityMatrix::Zero(qubit.levels, qubit.levels);
  q0(1, 1) = 1.0;
  return run_schedule(m, {seg}, dynamics::kron(q0, dynamics::thermal_state(cutoff, p.resonator_occupancy)), opts);
}

double readout_equilibrium_excitation(const dynamics::QubitParams& qubit, const ReadoutResetParams& p) {
  const SystemModel m = readout_model(qubit, p);
  const DensityMatrix joint = coupled_steady_state(m, 0, DCoupler::off);
  const TensorSpace space({qubit.levels, static_cast<int>(joint.rows()) / qubit.levels});
  const std::vector<int> keep{0};
  const auto rq = dynamics::partial_trace(joint, space, keep);
  return 1.0 - rq(0, 0).real();
}

double solve_resonator_occupancy(const dynamics::QubitParams& qubit, ReadoutResetParams p, double target) {
  if (!(target > 0.0 && target < 1.0)) throw InvalidArgument("target excitation must lie in (0, 1)");
  const auto pe_at = [&](double n) {
    p.resonator_occupancy = n;
    return readout_equilibrium_excitation(qubit, p);
  };
  double lo = 0.0;
  if (pe_at(lo) >= target) return 0.0;
  double hi = 0.1;
  while (pe_at(hi) < target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 100.0) throw NumericalError("target excitation not reachable by heating the resonator");
  }
  while (hi - lo > 1e-7 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (pe_at(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace thermnet::protocols
