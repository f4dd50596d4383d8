#include "thermnet/analysis/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <unsupported/Eigen/NonLinearOptimization>
#include <vector>

#include "thermnet/error.hpp"
#include "thermnet/units.hpp"

namespace thermnet::analysis {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Times are shifted to start at zero and divided by the span so every
// parameter is O(1) for the optimiser.
struct Scaled {
  VectorXd t;
  VectorXd y;
  double t0 = 0.0;
  double span = 1.0;
};

Scaled prepare(std::span<const double> times, std::span<const double> values, std::size_t min_samples) {
  if (times.size() != values.size()) throw InvalidArgument("times and values differ in length");
  if (times.size() < min_samples)
    throw InvalidArgument("need at least " + std::to_string(min_samples) + " samples");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw InvalidArgument("times must be strictly increasing");
  for (const double v : values)
    if (!std::isfinite(v)) throw InvalidArgument("values must be finite");
  Scaled s;
  s.t0 = times.front();
  s.span = times.back() - times.front();
  const auto n = static_cast<Eigen::Index>(times.size());
  s.t.resize(n);
  s.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.t[i] = (times[static_cast<std::size_t>(i)] - s.t0) / s.span;
    s.y[i] = values[static_cast<std::size_t>(i)];
  }
  return s;
}

struct ExpFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = VectorXd;
  using ValueType = VectorXd;
  using JacobianType = MatrixXd;

  const Scaled* s;
  int inputs() const { return 3; }
  int values() const { return static_cast<int>(s->t.size()); }

  // x = (A, k, C)
  int operator()(const VectorXd& x, VectorXd& f) const {
    f = (x[0] * (-x[1] * s->t.array()).exp() + x[2]).matrix() - s->y;
    return 0;
  }
  int df(const VectorXd& x, MatrixXd& j) const {
    const Eigen::ArrayXd e = (-x[1] * s->t.array()).exp();
    j.resize(s->t.size(), 3);
    j.col(0) = e.matrix();
    j.col(1) = (-x[0] * s->t.array() * e).matrix();
    j.col(2).setOnes();
    return 0;
  }
};

struct SineFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = VectorXd;
  using ValueType = VectorXd;
  using JacobianType = MatrixXd;

  const Scaled* s;
  int inputs() const { return 5; }
  int values() const { return static_cast<int>(s->t.size()); }

  // x = (A, k, w, phi, C)
  int operator()(const VectorXd& x, VectorXd& f) const {
    const Eigen::ArrayXd& t = s->t.array();
    f = (x[0] * (-x[1] * t).exp() * (x[2] * t + x[3]).cos() + x[4]).matrix() - s->y;
    return 0;
  }
  int df(const VectorXd& x, MatrixXd& j) const {
    const Eigen::ArrayXd& t = s->t.array();
    const Eigen::ArrayXd e = (-x[1] * t).exp();
    const Eigen::ArrayXd c = (x[2] * t + x[3]).cos();
    const Eigen::ArrayXd sn = (x[2] * t + x[3]).sin();
    j.resize(s->t.size(), 5);
    j.col(0) = (e * c).matrix();
    j.col(1) = (-x[0] * t * e * c).matrix();
    j.col(2) = (-x[0] * t * e * sn).matrix();
    j.col(3) = (-x[0] * e * sn).matrix();
    j.col(4).setOnes();
    return 0;
  }
};

template <typename Functor>
int minimise(Functor& f, VectorXd& x) {
  Eigen::LevenbergMarquardt<Functor> lm(f);
  lm.parameters.ftol = 1e-15;
  lm.parameters.xtol = 1e-15;
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(x);
  using S = Eigen::LevenbergMarquardtSpace::Status;
  if (status == S::ImproperInputParameters || status == S::TooManyFunctionEvaluation || !x.allFinite()) {
    VectorXd r;
    f(x, r);
    std::ostringstream os;
    os << "fit did not converge (status " << static_cast<int>(status) << ", residual norm " << r.norm() << ")";
    throw NumericalError(os.str());
  }
  return static_cast<int>(lm.nfev);
}

// Best (A, C) for a fixed rate; returns the residual norm.
double project_exponential(const Scaled& s, double k, double& a, double& c) {
  MatrixXd m(s.t.size(), 2);
  m.col(0) = (-k * s.t.array()).exp().matrix();
  m.col(1).setOnes();
  const VectorXd p = m.colPivHouseholderQr().solve(s.y);
  a = p[0];
  c = p[1];
  return (m * p - s.y).norm();
}

double project_sine(const Scaled& s, double k, double w, VectorXd& p) {
  MatrixXd m(s.t.size(), 3);
  const Eigen::ArrayXd e = (-k * s.t.array()).exp();
  m.col(0) = (e * (w * s.t.array()).cos()).matrix();
  m.col(1) = (e * (w * s.t.array()).sin()).matrix();
  m.col(2).setOnes();
  p = m.colPivHouseholderQr().solve(s.y);
  return (m * p - s.y).norm();
}

}  // namespace

FitResult fit_exponential(std::span<const double> times, std::span<const double> values) {
  const Scaled s = prepare(times, values, 5);
  const auto n = s.y.size();
  FitResult out;
  const double range = s.y.maxCoeff() - s.y.minCoeff();
  if (range <= 1e-12 * std::max(1.0, s.y.cwiseAbs().maxCoeff())) {
    out.offset = s.y.mean();
    out.residual_norm = (s.y.array() - out.offset).matrix().norm();
    return out;
  }

  std::vector<VectorXd> seeds;
  // Log-linear seed with the tail mean as the offset estimate.
  {
    const auto tail = std::max<Eigen::Index>(1, n / 10);
    const double c0 = s.y.tail(tail).mean();
    const Eigen::ArrayXd d = s.y.array() - c0;
    const double dmax = d.abs().maxCoeff();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(d[i]) <= 0.05 * dmax) continue;
      const double lx = s.t[i];
      const double ly = std::log(std::abs(d[i]));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++m;
    }
    const double den = m * sxx - sx * sx;
    if (m >= 2 && den > 0.0) {
      const double slope = (m * sxy - sx * sy) / den;
      const double icpt = (sy - slope * sx) / m;
      if (slope < 0.0) {
        const double sign = d[0] >= 0.0 ? 1.0 : -1.0;
        VectorXd x(3);
        x << sign * std::exp(icpt), -slope, c0;
        seeds.push_back(x);
      }
    }
  }
  // Variable-projection scan over the rate.
  {
    double best = std::numeric_limits<double>::infinity();
    VectorXd bx(3);
    for (int i = 0; i <= 240; ++i) {
      const double k = std::pow(10.0, -2.0 + 4.0 * i / 240.0);
      double a = 0, c = 0;
      const double r = project_exponential(s, k, a, c);
      if (r < best) {
        best = r;
        bx << a, k, c;
      }
    }
    seeds.push_back(bx);
  }

  double best_norm = std::numeric_limits<double>::infinity();
  VectorXd best_x;
  int evals = 0;
  ExpFunctor f{&s};
  for (VectorXd x : seeds) {
    try {
      evals += minimise(f, x);
    } catch (const NumericalError&) {
      continue;
    }
    VectorXd r;
    f(x, r);
    if (r.norm() < best_norm) {
      best_norm = r.norm();
      best_x = x;
    }
  }
  if (best_x.size() == 0) throw NumericalError("exponential fit did not converge from any seed");
  if (!(best_x[1] > 0.0)) throw NumericalError("exponential fit returned a non-decaying rate");

  out.rate = best_x[1] / s.span;
  out.amplitude = best_x[0] * std::exp(out.rate * s.t0);
  out.offset = best_x[2];
  out.residual_norm = best_norm;
  out.evaluations = evals;
  return out;
}

FitResult fit_damped_sine(std::span<const double> times, std::span<const double> values) {
  const Scaled s = prepare(times, values, 10);
  const auto n = s.y.size();
  const Eigen::ArrayXd d = s.y.array() - s.y.mean();

  // Periodogram on an oversampled grid between 1.5 periods per span and the
  // mean-spacing Nyquist limit (scaled units: span = 1).
  const double f_lo = 1.5;
  const double f_hi = 0.5 * static_cast<double>(n - 1);
  if (!(f_hi > f_lo)) throw InvalidArgument("too few samples for 1.5 oscillation periods");
  const int n_grid = static_cast<int>(10 * (f_hi - f_lo)) + 2;
  std::vector<double> power(static_cast<std::size_t>(n_grid));
  double peak = 0.0;
  int peak_at = 0;
  for (int i = 0; i < n_grid; ++i) {
    const double f = f_lo + (f_hi - f_lo) * i / (n_grid - 1);
    const double w = kTwoPi * f;
    const double re = (d * (w * s.t.array()).cos()).sum();
    const double im = (d * (w * s.t.array()).sin()).sum();
    power[static_cast<std::size_t>(i)] = re * re + im * im;
    if (power[static_cast<std::size_t>(i)] > peak) {
      peak = power[static_cast<std::size_t>(i)];
      peak_at = i;
    }
  }
  std::vector<double> sorted = power;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (!(peak > 10.0 * median) || peak == 0.0) throw NumericalError("no spectral peak above the noise floor");
  const double w0 = kTwoPi * (f_lo + (f_hi - f_lo) * peak_at / (n_grid - 1));

  // Choose the decay seed by projecting out amplitude, phase and offset.
  double best = std::numeric_limits<double>::infinity();
  VectorXd x(5);
  for (int i = 0; i <= 100; ++i) {
    const double k = i == 0 ? 0.0 : std::pow(10.0, -2.0 + 3.5 * i / 100.0);
    VectorXd p;
    const double r = project_sine(s, k, w0, p);
    if (r < best) {
      best = r;
      x << std::hypot(p[0], p[1]), k, w0, std::atan2(-p[1], p[0]), p[2];
    }
  }

  SineFunctor f{&s};
  FitResult out;
  out.evaluations = minimise(f, x);
  VectorXd r;
  f(x, r);
  if (x[0] < 0.0) {
    x[0] = -x[0];
    x[3] += kPi;
  }
  if (x[2] < 0.0) {
    x[2] = -x[2];
    x[3] = -x[3];
  }
  out.rate = x[1] / s.span;
  out.omega = x[2] / s.span;
  out.amplitude = x[0] * std::exp(out.rate * s.t0);
  out.phase = std::remainder(x[3] - out.omega * s.t0, kTwoPi);
  out.offset = x[4];
  out.residual_norm = r.norm();
  return out;
}

}  // namespace thermnet::analysis
