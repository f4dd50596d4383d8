#pragma once

namespace thermnet::analysis {

/// Mean photon number 1 / (exp(hbar w / k_B T) - 1) for angular frequency `omega`.
double bose_einstein(double omega, double temperature);

/// Inverse of bose_einstein: hbar w / (k_B ln(1 + 1/N)).
double effective_temperature(double omega, double occupancy);

struct ThermalPoint {
  double frequency = 0.0;  // rad/s
  double temperature = 0.0;
  double occupancy = 0.0;

  static ThermalPoint from_temperature(double omega, double temperature);
  static ThermalPoint from_occupancy(double omega, double occupancy);
};

}  // namespace thermnet::analysis
