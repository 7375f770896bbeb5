#include "ridgelab/quadrature.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>

#include "ridgelab/errors.hpp"

namespace ridgelab::quad {
namespace {

constexpr std::size_t kLimit = 4000;

struct ErrorHandlerOff {
  ErrorHandlerOff() { gsl_set_error_handler_off(); }
};

void ensure_handler_off() { static ErrorHandlerOff once; }

double trampoline(double x, void* params) { return (*static_cast<const Integrand*>(params))(x); }

struct WorkspaceDeleter {
  void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};
struct QawoDeleter {
  void operator()(gsl_integration_qawo_table* t) const { gsl_integration_qawo_table_free(t); }
};

using Workspace = std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter>;
using QawoTable = std::unique_ptr<gsl_integration_qawo_table, QawoDeleter>;

Workspace make_workspace() { return Workspace(gsl_integration_workspace_alloc(kLimit)); }

void check(int status, const Result& r, const std::string& context) {
  if (status != GSL_SUCCESS || !std::isfinite(r.value)) {
    fail(ErrorKind::Numerical, context + ": quadrature did not converge (" + gsl_strerror(status) +
                                   ", estimate " + std::to_string(r.value) + ")");
  }
}

}  // namespace

Result integrate(const Integrand& f, double a, double b, double rel_tol, double abs_tol,
                 const std::string& context) {
  ensure_handler_off();
  Result r;
  if (a == b) return r;
  auto ws = make_workspace();
  gsl_function fn{&trampoline, const_cast<Integrand*>(&f)};
  const int status = gsl_integration_qag(&fn, a, b, abs_tol, rel_tol, kLimit, GSL_INTEG_GAUSS61,
                                         ws.get(), &r.value, &r.abs_error);
  check(status, r, context);
  return r;
}

Result integrate_singular(const Integrand& f, double a, double b, double rel_tol,
                          double abs_tol, const std::string& context) {
  ensure_handler_off();
  Result r;
  if (a == b) return r;
  auto ws = make_workspace();
  gsl_function fn{&trampoline, const_cast<Integrand*>(&f)};
  const int status =
      gsl_integration_qags(&fn, a, b, abs_tol, rel_tol, kLimit, ws.get(), &r.value, &r.abs_error);
  check(status, r, context);
  return r;
}

Result fourier_sine_half_line(const Integrand& f, double omega, double a, double abs_tol,
                              const std::string& context) {
  ensure_handler_off();
  Result r;
  auto ws = make_workspace();
  auto cycle = make_workspace();
  QawoTable table(gsl_integration_qawo_table_alloc(omega, 1.0, GSL_INTEG_SINE, 50));
  gsl_function fn{&trampoline, const_cast<Integrand*>(&f)};
  const int status = gsl_integration_qawf(&fn, a, abs_tol, kLimit, ws.get(), cycle.get(),
                                          table.get(), &r.value, &r.abs_error);
  check(status, r, context);
  return r;
}

Result fourier_cosine(const Integrand& f, double omega, double a, double b, double abs_tol,
                      const std::string& context) {
  ensure_handler_off();
  Result r;
  if (a == b) return r;
  auto ws = make_workspace();
  QawoTable table(gsl_integration_qawo_table_alloc(omega, b - a, GSL_INTEG_COSINE, 50));
  gsl_function fn{&trampoline, const_cast<Integrand*>(&f)};
  const int status = gsl_integration_qawo(&fn, a, abs_tol, 1e-10, kLimit, ws.get(), table.get(),
                                          &r.value, &r.abs_error);
  check(status, r, context);
  return r;
}

}  // namespace ridgelab::quad
