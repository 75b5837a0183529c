#pragma once

// Thin wrappers around Boost.Math quadrature that turn a poor error estimate
// into an exception instead of a silently inaccurate number.

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace riskbai {

/// Raised when an integral cannot be evaluated to the requested accuracy.
class quadrature_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative accuracy required of every ground-truth integral.
inline constexpr double kQuadratureRelTol = 1e-8;

namespace detail {

inline void check_quadrature(const char* what, double value, double error, double l1,
                             double rel_tol) {
  const double scale = std::max({std::abs(value), l1, 1e-300});
  if (!std::isfinite(value) || !(error <= rel_tol * scale)) {
    std::ostringstream msg;
    msg << what << ": quadrature did not converge (value " << value << ", error estimate "
        << error << ", requested relative " << rel_tol << ")";
    throw quadrature_error(msg.str());
  }
}

}  // namespace detail

/// Integrates f over the finite interval [a, b] with tanh-sinh quadrature.
/// Integrable endpoint singularities (e.g. s^{-1/a} at s = 0) are fine.
template <class F>
double integrate_tanh_sinh(F&& f, double a, double b, double rel_tol = kQuadratureRelTol) {
  if (a == b) return 0.0;
  // integrate() is non-const in Boost 1.74 (it grows its abscissa tables
  // lazily), so each thread keeps its own integrator.
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(f, a, b, rel_tol * 1e-2, &error, &l1);
  detail::check_quadrature("tanh_sinh", value, error, l1, rel_tol);
  return value;
}

/// Adaptive Gauss-Kronrod (61 point) over a finite [a, b].
template <class F>
double integrate_kronrod(F&& f, double a, double b, double rel_tol = kQuadratureRelTol) {
  if (a == b) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 20, rel_tol * 1e-2, &error, &l1);
  detail::check_quadrature("gauss_kronrod", value, error, l1, rel_tol);
  return value;
}

/// Integrates f over [a, inf) with exp-sinh quadrature, which copes with
/// power-law tails far better than a mapped Gauss-Kronrod rule.
template <class F>
double integrate_half_line(F&& f, double a, double rel_tol = kQuadratureRelTol) {
  thread_local boost::math::quadrature::exp_sinh<double> integrator;
  double error = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(
      [&](double t) { return f(a + t); }, 0.0, std::numeric_limits<double>::infinity(),
      rel_tol * 1e-2, &error, &l1);
  detail::check_quadrature("exp_sinh", value, error, l1, rel_tol);
  return value;
}

}  // namespace riskbai
