#pragma once

// Lumped/distributed model of the Alice CPW -> cable -> Bob CPW + D-coupler
// chain. All frequencies are angular (rad/s); impedances in ohm.

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "thermnet/units.hpp"

namespace thermnet::circuit {

/// Uniform TEM line section described by per-length L and C.
struct LineSegment {
  double inductance_per_length = 0.0;  // H/m
  double capacitance_per_length = 0.0;  // F/m
  double length = 0.0;                  // m

  void validate() const;
  double characteristic_impedance() const;
  double phase_velocity() const;
  double wave_number(double omega) const;
};

/// Capacitor + SQUID band-pass element tying the cable to the cold load.
/// `parasitic_resistance` may be +inf (no leak path); `load_resistance` may
/// be 0 for the lossless limit.
struct DCouplerParams {
  double series_capacitance = 0.0;     // C_D
  double parasitic_capacitance = 0.0;  // C_p
  double zero_flux_inductance = 0.0;   // L_D0
  double parasitic_resistance = 0.0;   // R_1
  double load_resistance = 0.0;        // R_D

  void validate() const;
};

/// Flux through the D-coupler SQUID in units of the flux quantum.
class FluxBias {
 public:
  /// Throws InvalidFlux unless cos(pi * phi_ratio) > 0 (1e-12 guards phi = 1/2).
  explicit FluxBias(double phi_ratio);

  double phi_ratio() const { return phi_ratio_; }
  /// L_D(phi) / L_D0 = 1 / cos(pi * phi).
  double inductance_scale() const;

 private:
  double phi_ratio_;
};

struct CircuitNetwork {
  LineSegment alice_stub;  // lambda/4 CPW, shorted end is the input port
  LineSegment cable;
  LineSegment bob_stub;    // lambda/4 CPW shunting the D-coupler node
  DCouplerParams dcoupler;

  void validate() const;

  /// Device values of the two-node network (NbTi cable, 2.8 mm CPWs).
  static CircuitNetwork reference();
};

struct ModeSolution {
  int mode_index = 0;
  double omega_m = 0.0;
  double quality_factor = 0.0;
  double kappa = 0.0;  // omega_m / quality_factor
  double freq_shift_vs_off = 0.0;
};

struct ModeSearchOptions {
  /// Bracketing grid step = ideal FSR / grid_fraction.
  double grid_fraction = 50.0;
  double root_tolerance = units::mhz(1e-3);    // 1 kHz
  double derivative_step = units::mhz(1e-2);   // 10 kHz
  /// When set, freq_shift_vs_off is filled against this flux.
  std::optional<FluxBias> off_point;
};

inline constexpr Complex kOpenCircuit{std::numeric_limits<double>::infinity(), 0.0};

bool is_open(Complex z);

/// Input impedance of `seg` terminated by `load` (kOpenCircuit for an open end).
Complex segment_impedance(const LineSegment& seg, Complex load, double omega);

Complex dcoupler_impedance(const DCouplerParams& p, const FluxBias& flux, double omega);

/// Looking into Alice's shorted stub end: Z_D || Bob stub -> cable -> Alice stub.
Complex input_impedance(const CircuitNetwork& net, const FluxBias& flux, double omega);

/// Same network evaluated from Bob's port: Alice stub -> cable -> (|| Z_D) -> Bob stub.
Complex input_impedance_from_bob(const CircuitNetwork& net, const FluxBias& flux, double omega);

/// Angular free spectral range of the bare cable shorted at both ends.
double ideal_free_spectral_range(const CircuitNetwork& net);

/// Positive-slope zero crossings of Im[z(omega)] on a uniform grid aligned to
/// multiples of `step`, refined by bisection to `tolerance`.
std::vector<double> reactance_zeros(const std::function<Complex(double)>& z,
                                    double lo, double hi, double step, double tolerance);

/// Series resonances seen from Alice's port inside [lo, hi] with Re[Z_in] > 0.
std::vector<ModeSolution> find_modes(const CircuitNetwork& net, const FluxBias& flux,
                                     double lo, double hi, const ModeSearchOptions& opts = {});

/// The mode nearest `target_omega` (searched within one FSR either side).
std::optional<ModeSolution> track_mode(const CircuitNetwork& net, const FluxBias& flux,
                                       double target_omega, const ModeSearchOptions& opts = {});

struct FluxExtremum {
  FluxBias flux;
  ModeSolution mode;
};

/// Flux in [lo, hi] minimising (off point) or maximising (on point) the
/// dissipation of the mode nearest `target_omega`. A coarse sweep with
/// `coarse_step` brackets the extremum, golden-section refines to `flux_tol`.
FluxExtremum find_off_point(const CircuitNetwork& net, double target_omega,
                            double lo = -0.499, double hi = -0.3, double coarse_step = 0.002,
                            double flux_tol = 1e-7);
FluxExtremum find_on_point(const CircuitNetwork& net, double target_omega,
                           double lo = -0.45, double hi = -0.05, double coarse_step = 0.005,
                           double flux_tol = 1e-6);

struct KappaSweepPoint {
  double phi_ratio = 0.0;
  ModeSolution mode;
};

/// kappa_D and frequency shift of the tracked mode at each flux value.
/// Frequency shifts are referenced to `off_point`.
std::vector<KappaSweepPoint> kappa_sweep(const CircuitNetwork& net, double target_omega,
                                         std::span<const double> phi_ratios,
                                         const FluxBias& off_point);

}  // namespace thermnet::circuit
