#pragma once

#include <functional>
#include <string>

namespace ridgelab::quad {

using Integrand = std::function<double(double)>;

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
};

/// Adaptive Gauss-Kronrod (61-point rule) on [a, b]. Throws
/// ErrorKind::Numerical with `context` on non-convergence.
Result integrate(const Integrand& f, double a, double b, double rel_tol, double abs_tol,
                 const std::string& context);

/// Adaptive integration with extrapolation (QAGS) for integrable endpoint
/// singularities.
Result integrate_singular(const Integrand& f, double a, double b, double rel_tol,
                          double abs_tol, const std::string& context);

/// Integral of f(t) sin(omega t) over [a, inf) (GSL QAWF, cycle extrapolation).
Result fourier_sine_half_line(const Integrand& f, double omega, double a, double abs_tol,
                              const std::string& context);

/// Integral of f(t) cos(omega t) over [a, b] (GSL QAWO).
Result fourier_cosine(const Integrand& f, double omega, double a, double b, double abs_tol,
                      const std::string& context);

}  // namespace ridgelab::quad
