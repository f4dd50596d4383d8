#pragma once

#include <complex>
#include <numbers>

namespace thermnet {

using Complex = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// CODATA 2018 exact / recommended values, SI units.
inline constexpr double kHbar = 1.054571817e-34;
inline constexpr double kBoltzmann = 1.380649e-23;
inline constexpr double kFluxQuantum = 2.067833848e-15;

namespace units {

inline constexpr double ns = 1e-9;
inline constexpr double us = 1e-6;
inline constexpr double ms = 1e-3;

constexpr double ghz(double f) { return kTwoPi * f * 1e9; }
constexpr double mhz(double f) { return kTwoPi * f * 1e6; }
constexpr double to_ghz(double omega) { return omega / kTwoPi * 1e-9; }
constexpr double to_mhz(double omega) { return omega / kTwoPi * 1e-6; }

}  // namespace units
}  // namespace thermnet
