#pragma once

#include <span>

namespace thermnet::analysis {

/// Parameters of A exp(-rate t) [cos(omega t + phase)] + offset, referenced
/// to t = 0 of the caller's time axis.
struct FitResult {
  double amplitude = 0.0;
  double rate = 0.0;
  double offset = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  /// sqrt(sum of squared residuals).
  double residual_norm = 0.0;
  int evaluations = 0;

  double time_constant() const { return 1.0 / rate; }
};

/// Least-squares A exp(-t / tau) + C. Seeded from a log-linear fit and a
/// variable-projection scan over the rate, refined by Levenberg-Marquardt.
FitResult fit_exponential(std::span<const double> times, std::span<const double> values);

/// Least-squares A exp(-rate t) cos(omega t + phase) + C with omega seeded
/// from the periodogram peak.
FitResult fit_damped_sine(std::span<const double> times, std::span<const double> values);

}  // namespace thermnet::analysis
