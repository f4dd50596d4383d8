#include "thermnet/circuit/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thermnet/error.hpp"

namespace thermnet::circuit {
namespace {

constexpr double kPoleEps = 1e-12;
constexpr Complex kI{0.0, 1.0};

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw InvalidArgument(std::string(what) + " must be positive");
}

// Admittance of a parallel combination; an infinite admittance is a short.
Complex parallel(Complex a, Complex b) {
  if (a == Complex{} || b == Complex{}) return {};
  if (is_open(a)) return b;
  if (is_open(b)) return a;
  return 1.0 / (1.0 / a + 1.0 / b);
}

double golden_section(const std::function<double(double)>& f, double a, double b, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (std::abs(b - a) > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

int count_zeros_below(const std::function<Complex(double)>& z, double omega, double step) {
  int count = 0;
  double prev = z(step).imag();
  for (long k = 2; k * step <= omega; ++k) {
    const double cur = z(static_cast<double>(k) * step).imag();
    if (prev < 0.0 && cur >= 0.0) ++count;
    prev = cur;
  }
  return count;
}

}  // namespace

void LineSegment::validate() const {
  require_positive(inductance_per_length, "inductance_per_length");
  require_positive(capacitance_per_length, "capacitance_per_length");
  require_positive(length, "length");
}

double LineSegment::characteristic_impedance() const {
  return std::sqrt(inductance_per_length / capacitance_per_length);
}

double LineSegment::phase_velocity() const {
  return 1.0 / std::sqrt(inductance_per_length * capacitance_per_length);
}

double LineSegment::wave_number(double omega) const {
  return omega * std::sqrt(inductance_per_length * capacitance_per_length);
}

void DCouplerParams::validate() const {
  require_positive(series_capacitance, "series_capacitance");
  require_positive(parasitic_capacitance, "parasitic_capacitance");
  require_positive(zero_flux_inductance, "zero_flux_inductance");
  require_positive(parasitic_resistance, "parasitic_resistance");
  if (!(load_resistance >= 0.0)) throw InvalidArgument("load_resistance must be non-negative");
  if (!(parasitic_capacitance < series_capacitance))
    throw InvalidArgument("parasitic_capacitance must be smaller than series_capacitance");
}

FluxBias::FluxBias(double phi_ratio) : phi_ratio_(phi_ratio) {
  if (!std::isfinite(phi_ratio) || !(std::cos(kPi * phi_ratio) > 1e-12))
    throw InvalidFlux("flux bias " + std::to_string(phi_ratio) +
                      " gives a non-positive SQUID inductance");
}

double FluxBias::inductance_scale() const { return 1.0 / std::cos(kPi * phi_ratio_); }

void CircuitNetwork::validate() const {
  alice_stub.validate();
  cable.validate();
  bob_stub.validate();
  dcoupler.validate();
}

CircuitNetwork CircuitNetwork::reference() {
  const LineSegment cpw{402e-9, 173e-12, 2.8e-3};
  return CircuitNetwork{
      .alice_stub = cpw,
      .cable = {240.5e-9, 96.2e-12, 1.0},
      .bob_stub = cpw,
      .dcoupler = {38.5e-15, 17e-15, 3.8e-9, 2300.0, 50.0},
  };
}

bool is_open(Complex z) { return std::isinf(z.real()) || std::isinf(z.imag()); }

Complex segment_impedance(const LineSegment& seg, Complex load, double omega) {
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
  const double z0 = seg.characteristic_impedance();
  const double bl = seg.wave_number(omega) * seg.length;
  const double c = std::cos(bl);
  const double s = std::sin(bl);
  if (is_open(load)) {
    // Z0 / (i tan bl)
    if (std::abs(s) < kPoleEps) return kOpenCircuit;
    return z0 * c / (kI * s);
  }
  if (std::abs(c) < kPoleEps) {
    // Quarter-wave limit: Z0^2 / Z_L.
    if (load == Complex{}) return kOpenCircuit;
    return z0 * z0 / load;
  }
  // Multiplying through by cos(bl) keeps the expression finite near tan poles.
  const Complex den = z0 * c + kI * load * s;
  if (den == Complex{}) return kOpenCircuit;
  return z0 * (load * c + kI * z0 * s) / den;
}

Complex dcoupler_impedance(const DCouplerParams& p, const FluxBias& flux, double omega) {
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
  const double ld = p.zero_flux_inductance * flux.inductance_scale();
  // (i w C_D + 1/R_1)^-1
  const Complex y_series = kI * omega * p.series_capacitance +
                           (std::isinf(p.parasitic_resistance) ? 0.0 : 1.0 / p.parasitic_resistance);
  // (1/(i w L_D) + i w C_p)^-1, open at the plasma resonance
  const Complex y_squid = 1.0 / (kI * omega * ld) + kI * omega * p.parasitic_capacitance;
  if (y_squid == Complex{}) return kOpenCircuit;
  return 1.0 / y_series + 1.0 / y_squid + p.load_resistance;
}

Complex input_impedance(const CircuitNetwork& net, const FluxBias& flux, double omega) {
  const Complex z_d = dcoupler_impedance(net.dcoupler, flux, omega);
  const Complex z_bob_stub = segment_impedance(net.bob_stub, Complex{}, omega);
  const Complex z_b = parallel(z_d, z_bob_stub);
  const Complex z_a = segment_impedance(net.cable, z_b, omega);
  return segment_impedance(net.alice_stub, z_a, omega);
}

Complex input_impedance_from_bob(const CircuitNetwork& net, const FluxBias& flux, double omega) {
  const Complex z_alice_stub = segment_impedance(net.alice_stub, Complex{}, omega);
  const Complex z_cable = segment_impedance(net.cable, z_alice_stub, omega);
  const Complex z_d = dcoupler_impedance(net.dcoupler, flux, omega);
  return segment_impedance(net.bob_stub, parallel(z_d, z_cable), omega);
}

double ideal_free_spectral_range(const CircuitNetwork& net) {
  return kPi * net.cable.phase_velocity() / net.cable.length;
}

std::vector<double> reactance_zeros(const std::function<Complex(double)>& z, double lo,
                                    double hi, double step, double tolerance) {
  if (!(step > 0.0) || !(hi > lo) || !(lo > 0.0))
    throw InvalidArgument("reactance_zeros: need 0 < lo < hi and step > 0");
  std::vector<double> roots;
  long k = static_cast<long>(std::ceil(lo / step));
  double w_prev = static_cast<double>(k) * step;
  double x_prev = z(w_prev).imag();
  for (++k;; ++k) {
    const double w = static_cast<double>(k) * step;
    if (w > hi) break;
    const double x = z(w).imag();
    if (x_prev < 0.0 && x >= 0.0) {
      double a = w_prev;
      double b = w;
      while (b - a > tolerance) {
        const double m = 0.5 * (a + b);
        if (z(m).imag() < 0.0)
          a = m;
        else
          b = m;
      }
      roots.push_back(0.5 * (a + b));
    }
    w_prev = w;
    x_prev = x;
  }
  return roots;
}

std::vector<ModeSolution> find_modes(const CircuitNetwork& net, const FluxBias& flux, double lo,
                                     double hi, const ModeSearchOptions& opts) {
  const double step = ideal_free_spectral_range(net) / opts.grid_fraction;
  const auto zin = [&](double w) { return input_impedance(net, flux, w); };
  const auto roots = reactance_zeros(zin, lo, hi, step, opts.root_tolerance);

  std::vector<ModeSolution> out;
  int below = roots.empty() ? 0 : count_zeros_below(zin, roots.front(), step);
  for (const double w : roots) {
    ++below;
    const double re = zin(w).real();
    if (!(re > 0.0)) continue;
    const double h = opts.derivative_step;
    const double dx = (zin(w + h).imag() - zin(w - h).imag()) / (2.0 * h);
    ModeSolution m;
    m.mode_index = below;
    m.omega_m = w;
    m.quality_factor = w / re * 0.5 * dx;
    if (!(m.quality_factor > 0.0)) continue;
    m.kappa = m.omega_m / m.quality_factor;
    out.push_back(m);
  }

  if (opts.off_point) {
    ModeSearchOptions ref = opts;
    ref.off_point.reset();
    const auto off_modes = find_modes(net, *opts.off_point, std::max(lo - step * opts.grid_fraction, step),
                                      hi + step * opts.grid_fraction, ref);
    for (auto& m : out) {
      const auto it = std::find_if(off_modes.begin(), off_modes.end(),
                                   [&](const ModeSolution& o) { return o.mode_index == m.mode_index; });
      m.freq_shift_vs_off = it == off_modes.end() ? 0.0 : m.omega_m - it->omega_m;
    }
  }
  return out;
}

std::optional<ModeSolution> track_mode(const CircuitNetwork& net, const FluxBias& flux,
                                       double target_omega, const ModeSearchOptions& opts) {
  const double fsr = ideal_free_spectral_range(net);
  const auto modes = find_modes(net, flux, std::max(target_omega - fsr, fsr / opts.grid_fraction),
                                target_omega + fsr, opts);
  if (modes.empty()) return std::nullopt;
  return *std::min_element(modes.begin(), modes.end(), [&](const auto& a, const auto& b) {
    return std::abs(a.omega_m - target_omega) < std::abs(b.omega_m - target_omega);
  });
}

namespace {

FluxExtremum find_extremum(const CircuitNetwork& net, double target_omega, double lo, double hi,
                           double coarse_step, double flux_tol, bool minimise) {
  // Sign flips kappa so that golden_section always minimises.
  const double sign = minimise ? 1.0 : -1.0;
  const auto objective = [&](double phi) {
    const auto m = track_mode(net, FluxBias(phi), target_omega);
    return m ? sign * m->kappa : std::numeric_limits<double>::infinity();
  };
  double best_phi = lo;
  double best = std::numeric_limits<double>::infinity();
  for (double phi = lo; phi <= hi + 1e-12; phi += coarse_step) {
    const double v = objective(phi);
    if (v < best) {
      best = v;
      best_phi = phi;
    }
  }
  const double a = std::max(lo, best_phi - coarse_step);
  const double b = std::min(hi, best_phi + coarse_step);
  const double phi = golden_section(objective, a, b, flux_tol);
  FluxBias flux(phi);
  const auto mode = track_mode(net, flux, target_omega);
  if (!mode) throw NumericalError("no mode found near the target frequency");
  return {flux, *mode};
}

}  // namespace

FluxExtremum find_off_point(const CircuitNetwork& net, double target_omega, double lo, double hi,
                            double coarse_step, double flux_tol) {
  return find_extremum(net, target_omega, lo, hi, coarse_step, flux_tol, true);
}

FluxExtremum find_on_point(const CircuitNetwork& net, double target_omega, double lo, double hi,
                           double coarse_step, double flux_tol) {
  return find_extremum(net, target_omega, lo, hi, coarse_step, flux_tol, false);
}

std::vector<KappaSweepPoint> kappa_sweep(const CircuitNetwork& net, double target_omega,
                                         std::span<const double> phi_ratios,
                                         const FluxBias& off_point) {
  const auto reference = track_mode(net, off_point, target_omega);
  if (!reference) throw NumericalError("no mode found near the target frequency at the off point");
  std::vector<KappaSweepPoint> out;
  out.reserve(phi_ratios.size());
  for (const double phi : phi_ratios) {
    // Track by index so the shift refers to the same standing mode.
    auto m = track_mode(net, FluxBias(phi), reference->omega_m);
    if (!m) continue;
    if (m->mode_index != reference->mode_index) continue;
    m->freq_shift_vs_off = m->omega_m - reference->omega_m;
    out.push_back({phi, *m});
  }
  return out;
}

}  // namespace thermnet::circuit
