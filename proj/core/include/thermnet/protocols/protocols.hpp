#pragma once

// Time-domain experiments as piecewise-constant control schedules over the
// qubit-mode couplings, the D-coupler state and the qubit detunings.

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "thermnet/dynamics/density_matrix.hpp"
#include "thermnet/dynamics/operators.hpp"
#include "thermnet/tomography/tomography.hpp"

namespace thermnet::protocols {

using dynamics::DensityMatrix;

enum class DCoupler { off, on };

/// Two qubits sharing one channel mode. Mode occupancies are effective-bath
/// values fitted with a given qubit as the probe, hence one entry per qubit.
struct SystemModel {
  std::vector<dynamics::QubitParams> qubits;
  std::vector<double> couplings;  // nominal g_n when a coupler is switched on
  double mode_frequency = 0.0;
  double intrinsic_kappa = 0.0;      // kappa_i
  double dcoupler_kappa_on = 0.0;    // kappa_D^max
  double dcoupler_kappa_off = 0.0;   // kappa_D^min
  std::vector<double> mode_occupancy_on;
  std::vector<double> mode_occupancy_off;
  /// Fock cutoff used by every run; 0 picks it from the occupancy rule.
  int fock_cutoff = 0;

  void validate() const;
  dynamics::Bath mode_bath(DCoupler d, int probe = 0) const;
  /// Copy restricted to one qubit (used as probe index 0 afterwards).
  SystemModel single(int qubit) const;
  /// All rates and occupancies zeroed; a small cutoff is enough.
  SystemModel lossless() const;
};

/// Thermodynamic row for one hot-plate temperature.
struct ThermalRow {
  double t_hot = 0.0;  // K
  double qubit_lifetime[2] = {0.0, 0.0};  // 1/kappa_n, s
  double qubit_occupancy[2] = {0.0, 0.0};
  double mode_occupancy_on[2] = {0.0, 0.0};
  double mode_occupancy_off[2] = {0.0, 0.0};
};

/// The five calibrated rows (0.83, 1, 2, 3, 4 K).
std::span<const ThermalRow> reference_rows();
const ThermalRow& reference_row(double t_hot);

/// Device model at `t_hot` with `qubit_levels` levels per transmon.
SystemModel reference_model(double t_hot, int qubit_levels = 5);

enum class PrepKind { ground_reset, pi_pulse, half_pi_pulse, unitary };

struct StatePrep {
  PrepKind kind = PrepKind::pi_pulse;
  int qubit = 0;
  Eigen::Matrix2cd unitary = Eigen::Matrix2cd::Identity();
};

struct ScheduleSegment {
  double duration = 0.0;
  std::vector<double> couplings;        // one per qubit
  DCoupler d_coupler = DCoupler::off;
  std::vector<double> qubit_detunings;  // from the mode, rad/s; empty means resonant
  std::vector<StatePrep> initial_ops;

  void validate(std::size_t n_qubits) const;
};

using PulseSchedule = std::vector<ScheduleSegment>;

struct RunOptions {
  double sample_interval = 0.0;
  bool validate_samples = true;
  double max_dt = 0.05e-9;
  /// Overrides both the model and the automatic cutoff when positive.
  int fock_cutoff = 0;
};

struct ProtocolResult {
  std::vector<double> times;
  std::vector<std::vector<double>> excited_population;  // [qubit][sample]
  std::vector<double> mode_occupation;
  DensityMatrix final_state;
  dynamics::TensorSpace space;
};

/// Occupancy rule applied to the largest photon number the mode can reach:
/// relaxation toward each segment's bath plus one excitation per coupled qubit.
int schedule_fock_cutoff(const SystemModel& model, const PulseSchedule& schedule,
                         double initial_mode_occupancy);

dynamics::TensorSpace model_space(const SystemModel& model, int fock_cutoff);

/// Applies each segment's preparations, then evolves it. The state is carried
/// across segment boundaries unchanged.
ProtocolResult run_schedule(const SystemModel& model, const PulseSchedule& schedule,
                            const DensityMatrix& rho0, const RunOptions& opts = {});

/// Qubit `n` alone in its own bath (truncated geometric populations).
DensityMatrix qubit_thermal_state(const SystemModel& model, int n);
/// Reduced qubit state of qubit `n` coupled resonantly to the D-on cooled mode.
DensityMatrix cooled_qubit_state(const SystemModel& model, int n);
/// Joint steady state of qubit `n` and the mode (resonant, g_n on).
DensityMatrix coupled_steady_state(const SystemModel& model, int n, DCoupler d, int fock_cutoff = 0);
/// Product of cooled qubit states and the D-on thermal mode.
DensityMatrix cooled_initial_state(const SystemModel& model, int fock_cutoff);

ProtocolResult cooling_protocol(const SystemModel& model, double duration, const RunOptions& opts = {});

enum class RethermVariant { qubit_alone, coupled };
ProtocolResult rethermalization_protocol(const SystemModel& model, double duration,
                                         RethermVariant variant, const RunOptions& opts = {});

enum class ChevronVariant { cooled, warm };
struct ChevronResult {
  std::vector<double> detunings;
  std::vector<double> times;
  Eigen::MatrixXd excited;  // rows: detuning, cols: time
};
ChevronResult rabi_chevron_scan(const SystemModel& model, std::span<const double> detunings,
                                double duration, double time_step, ChevronVariant variant,
                                const RunOptions& opts = {});

/// pi / (sqrt(2) g) for equal couplings.
double ideal_transfer_time(const SystemModel& model);
/// Time of the first maximum of the receiver excitation in the lossless model.
double lossless_transfer_time(const SystemModel& model, double resolution = 0.01e-9);

struct TransferOptions {
  std::optional<double> time;            // default: lossless optimum
  std::optional<double> receiver_phase;  // default: calibrated on the lossless model
  RunOptions run;
};

struct TransferResult {
  ProtocolResult trajectory;
  Eigen::Matrix2cd receiver_state;  // virtual-Z corrected, qubit subspace
  double leakage = 0.0;
  double time = 0.0;
  double receiver_phase = 0.0;
};

/// Phase of the receiver coherence after a lossless transfer of |+>.
double calibrate_receiver_phase(const SystemModel& model, double time);

TransferResult photon_transfer_protocol(const SystemModel& model, const Eigen::Matrix2cd& input,
                                        const TransferOptions& opts = {});

struct TransferTomography {
  tomography::ProcessTomogram process;
  std::array<Eigen::Matrix2cd, 4> outputs;
  double time = 0.0;
  double receiver_phase = 0.0;
  double max_leakage = 0.0;
};

TransferTomography transfer_process_tomography(const SystemModel& model,
                                               const tomography::TomographyOptions& tomo = {},
                                               const TransferOptions& opts = {});

struct BellTiming {
  double stage1 = 0.0;  // g_A only
  double stage2 = 0.0;  // g_B only
  double fidelity = 0.0;
};

/// Grid search over both stage durations on the lossless model.
BellTiming bell_timing_search(const SystemModel& model, double grid = 1e-9, double max_stage1 = 60e-9,
                              double max_stage2 = 120e-9);

struct BellOptions {
  std::optional<BellTiming> timing;
  std::optional<double> receiver_phase;
  RunOptions run;
};

struct BellResult {
  ProtocolResult trajectory;
  Eigen::Matrix4cd rho;  // two-qubit subspace, virtual-Z corrected
  double leakage = 0.0;
  double fidelity = 0.0;
  BellTiming timing;
  double receiver_phase = 0.0;
};

/// Phase of the |01><10| coherence after the lossless sequence.
double calibrate_bell_phase(const SystemModel& model, const BellTiming& timing);

BellResult bell_protocol(const SystemModel& model, const BellOptions& opts = {});

struct ReadoutResetParams {
  double coupling = 0.0;            // g_rr
  double resonator_kappa = 0.0;
  double resonator_occupancy = 0.0;
  int resonator_cutoff = 0;         // 0: occupancy rule

  /// Swap period 3.2 ns and 60 ns resonator lifetime, zero-temperature bath.
  static ReadoutResetParams reference();
};

ProtocolResult readout_reset_protocol(const dynamics::QubitParams& qubit, const ReadoutResetParams& p,
                                      double duration, const RunOptions& opts = {});

double readout_equilibrium_excitation(const dynamics::QubitParams& qubit, const ReadoutResetParams& p);

/// Resonator bath occupancy that yields `target` equilibrium excitation.
double solve_resonator_occupancy(const dynamics::QubitParams& qubit, ReadoutResetParams p, double target);

}  // namespace thermnet::protocols
