#include "thermnet/analysis/thermal.hpp"

#include <cmath>

#include "thermnet/error.hpp"
#include "thermnet/units.hpp"

namespace thermnet::analysis {

double bose_einstein(double omega, double temperature) {
  if (!(omega > 0.0)) throw InvalidArgument("frequency must be positive");
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  const double x = kHbar * omega / (kBoltzmann * temperature);
  if (x > 30.0) return std::exp(-x);
  return 1.0 / std::expm1(x);
}

double effective_temperature(double omega, double occupancy) {
  if (!(omega > 0.0)) throw InvalidArgument("frequency must be positive");
  if (!(occupancy > 0.0)) throw InvalidArgument("effective temperature undefined for zero occupancy");
  return kHbar * omega / (kBoltzmann * std::log1p(1.0 / occupancy));
}

ThermalPoint ThermalPoint::from_temperature(double omega, double temperature) {
  return {omega, temperature, bose_einstein(omega, temperature)};
}

ThermalPoint ThermalPoint::from_occupancy(double omega, double occupancy) {
  return {omega, effective_temperature(omega, occupancy), occupancy};
}

}  // namespace thermnet::analysis
