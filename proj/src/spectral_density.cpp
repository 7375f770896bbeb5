#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_bessel.h>
#include <gsl/gsl_sf_gamma.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "ridgelab/errors.hpp"
#include "ridgelab/quadrature.hpp"
#include "ridgelab/spectral_noise.hpp"

namespace ridgelab {

namespace {

constexpr double kTableLo = 1e-6;
constexpr double kTableHi = 1e6;
constexpr int kKnotsPerDecade = 24;

/// (H/gamma) Gamma(1+gamma) sin(pi gamma/2) / pi: p(lambda) ~ c * lambda^-(1+gamma).
double linnik_tail_constant(double gamma, double H) {
  return (H / gamma) * std::tgamma(1.0 + gamma) * std::sin(std::numbers::pi * gamma / 2.0) /
         std::numbers::pi;
}

/// Rough magnitude of p used only to set absolute tolerances.
double linnik_magnitude(double gamma, double H, double lambda) {
  const double high = linnik_tail_constant(gamma, H) * std::pow(lambda, -1.0 - gamma);
  double low;
  if (H < 1.0) {
    low = std::tgamma(1.0 - H) * std::sin(std::numbers::pi * H / 2.0) / std::numbers::pi *
          std::pow(lambda, H - 1.0);
  } else if (H > 1.0) {
    low = std::tgamma(1.0 / gamma) * std::tgamma((H - 1.0) / gamma) /
          (gamma * std::tgamma(H / gamma) * std::numbers::pi);
  } else {
    low = (1.0 + std::max(0.0, -std::log(lambda))) / std::numbers::pi;
  }
  return std::min(low, high);
}

double linnik_bessel(double H, double lambda) {
  // (1/pi) * integral_0^inf cos(lambda t) (1+t^2)^(-H/2) dt, Basset's integral.
  const double nu = (H - 1.0) / 2.0;
  gsl_sf_result k;
  if (gsl_sf_bessel_lnKnu_e(std::abs(nu), lambda, &k) != GSL_SUCCESS) {
    fail(ErrorKind::Numerical, "Bessel K evaluation failed at lambda=" + std::to_string(lambda));
  }
  const double log_p = 0.5 * std::log(std::numbers::pi) + nu * std::log(lambda) + k.val -
                       std::lgamma(nu + 0.5) - nu * std::numbers::ln2 - std::log(std::numbers::pi);
  return std::exp(log_p);
}

struct SplineDeleter {
  void operator()(gsl_spline* s) const { gsl_spline_free(s); }
};

}  // namespace

namespace detail {

double linnik_density_direct(double gamma, double H, double lambda) {
  require(lambda > 0.0, ErrorKind::Domain, "Linnik density evaluated at lambda <= 0");
  if (gamma == 2.0) return linnik_bessel(H, lambda);

  // p = (1/(pi lambda)) * integral_0^inf sin(lambda t) * (-C'(t)) dt after one
  // integration by parts. Below t = 1/lambda the sine has not completed a
  // cycle, so that part is integrated directly (in log t past t = 1); the
  // oscillatory remainder goes to QAWF.
  const quad::Integrand minus_dc = [gamma, H](double t) {
    if (t <= 0.0) return 0.0;
    const double tg = std::pow(t, gamma);
    return H * tg / t * std::pow(1.0 + tg, -H / gamma - 1.0);
  };
  const quad::Integrand head = [&](double t) { return std::sin(lambda * t) * minus_dc(t); };
  const quad::Integrand head_log = [&](double u) {
    const double t = std::exp(u);
    return head(t) * t;
  };
  const std::string context = "Linnik density at lambda=" + std::to_string(lambda);
  const double split = 1.0 / lambda;
  const double expected = std::numbers::pi * lambda * linnik_magnitude(gamma, H, lambda);

  double near = quad::integrate_singular(head, 0.0, std::min(1.0, split), 1e-12,
                                         1e-14 * expected, context)
                    .value;
  for (double u = 0.0; u < std::log(split); u += 2.0) {
    near += quad::integrate(head_log, u, std::min(u + 2.0, std::log(split)), 1e-12,
                            1e-14 * expected, context)
                .value;
  }
  double far = 0.0;
  for (double rel : {1e-12, 1e-10, 1e-8}) {
    try {
      far = quad::fourier_sine_half_line(minus_dc, lambda, split, rel * expected, context).value;
      break;
    } catch (const Error&) {
      if (rel == 1e-8) throw;
    }
  }
  const double p = (near + far) / (std::numbers::pi * lambda);
  require(p > 0.0, ErrorKind::Numerical, context + ": non-positive value");
  return p;
}

}  // namespace detail

struct SpectralDensity::Model {
  DensityKind kind;
  // Linnik with gamma < 2: log-log cubic spline of the unit-scale density.
  std::vector<double> log_lambda, log_p;
  std::shared_ptr<gsl_spline> spline;
  double lo_slope = 0.0, hi_slope = 0.0;
  double variance = 1.0;  // before the amplitude factor

  double linnik_unit(double lambda) const {
    const auto& lk = std::get<Linnik>(kind);
    if (lk.gamma == 2.0) return linnik_bessel(lk.H, lambda);
    const double u = std::log(lambda);
    if (u <= log_lambda.front()) return std::exp(log_p.front() + lo_slope * (u - log_lambda.front()));
    if (u >= log_lambda.back()) return std::exp(log_p.back() + hi_slope * (u - log_lambda.back()));
    return std::exp(gsl_spline_eval(spline.get(), u, nullptr));
  }

  double eval(double lambda) const {
    lambda = std::abs(lambda);
    if (const auto* lk = std::get_if<Linnik>(&kind)) {
      if (lambda == 0.0) {
        if (lk->H < 1.0 || (lk->H == 1.0)) return std::numeric_limits<double>::infinity();
        return lk->scale * linnik_unit(1e-12);
      }
      return lk->scale * linnik_unit(lambda);
    }
    const auto& tab = std::get<Tabulated>(kind);
    const auto& x = tab.lambda_knots;
    if (lambda < x.front() || lambda > x.back()) return 0.0;
    const auto it = std::upper_bound(x.begin(), x.end(), lambda);
    if (it == x.end()) return tab.values.back();
    const std::size_t j = static_cast<std::size_t>(it - x.begin());
    if (j == 0) return tab.values.front();
    const double f = (lambda - x[j - 1]) / (x[j] - x[j - 1]);
    return std::exp((1.0 - f) * std::log(tab.values[j - 1]) + f * std::log(tab.values[j]));
  }
};

namespace {

std::shared_ptr<const SpectralDensity::Model> build_linnik(double gamma, double H);

}  // namespace

SpectralDensity SpectralDensity::linnik(double gamma, double H, double scale) {
  require(gamma > 0.0 && gamma <= 2.0, ErrorKind::Domain, "Linnik gamma must lie in (0, 2]");
  require(H > 0.0, ErrorKind::Domain, "Linnik H must be positive");
  require(scale > 0.0, ErrorKind::Domain, "Linnik scale must be positive");

  static std::mutex mutex;
  static std::map<std::pair<double, double>, std::shared_ptr<const Model>> cache;
  std::shared_ptr<const Model> unit;
  {
    std::scoped_lock lock(mutex);
    auto& slot = cache[{gamma, H}];
    if (!slot) slot = build_linnik(gamma, H);
    unit = slot;
  }
  auto model = std::make_shared<Model>(*unit);
  model->kind = Linnik{gamma, H, scale};
  model->variance = scale;
  return SpectralDensity(std::move(model), 1.0, std::nullopt);
}

namespace {

std::shared_ptr<const SpectralDensity::Model> build_linnik(double gamma, double H) {
  auto model = std::make_shared<SpectralDensity::Model>();
  model->kind = Linnik{gamma, H, 1.0};
  if (gamma == 2.0) return model;

  const int decades = static_cast<int>(std::lround(std::log10(kTableHi / kTableLo)));
  const std::size_t n = static_cast<std::size_t>(decades * kKnotsPerDecade + 1);
  model->log_lambda.resize(n);
  model->log_p.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lambda =
        kTableLo * std::pow(10.0, static_cast<double>(i) / static_cast<double>(kKnotsPerDecade));
    model->log_lambda[i] = std::log(lambda);
    model->log_p[i] = std::log(detail::linnik_density_direct(gamma, H, lambda));
  }
  std::shared_ptr<gsl_spline> spline(gsl_spline_alloc(gsl_interp_cspline, n), SplineDeleter{});
  gsl_spline_init(spline.get(), model->log_lambda.data(), model->log_p.data(), n);
  model->spline = std::move(spline);

  model->lo_slope = (model->log_p[1] - model->log_p[0]) / (model->log_lambda[1] - model->log_lambda[0]);
  model->hi_slope = (model->log_p[n - 1] - model->log_p[n - 2]) /
                    (model->log_lambda[n - 1] - model->log_lambda[n - 2]);
  return model;
}

}  // namespace

SpectralDensity SpectralDensity::tabulated(std::vector<double> lambda_knots,
                                           std::vector<double> values) {
  require(lambda_knots.size() >= 2 && lambda_knots.size() == values.size(), ErrorKind::Domain,
          "tabulated density needs at least two knots and one value per knot");
  require(lambda_knots.front() >= 0.0, ErrorKind::Domain, "tabulated knots must be nonnegative");
  for (std::size_t i = 1; i < lambda_knots.size(); ++i) {
    require(lambda_knots[i] > lambda_knots[i - 1], ErrorKind::Domain,
            "tabulated knots must be strictly ascending");
  }
  for (double v : values) {
    require(v > 0.0 && std::isfinite(v), ErrorKind::Domain, "tabulated values must be positive");
  }

  auto model = std::make_shared<Model>();
  model->kind = Tabulated{std::move(lambda_knots), std::move(values)};
  const auto& tab = std::get<Tabulated>(model->kind);
  double half = 0.0;
  for (std::size_t j = 1; j < tab.lambda_knots.size(); ++j) {
    const double width = tab.lambda_knots[j] - tab.lambda_knots[j - 1];
    const double a = tab.values[j - 1];
    const double b = tab.values[j];
    half += std::abs(b - a) < 1e-14 * a ? 0.5 * (a + b) * width : (b - a) * width / std::log(b / a);
  }
  model->variance = 2.0 * half;
  return SpectralDensity(std::move(model), 1.0, std::nullopt);
}

SpectralDensity SpectralDensity::with_c1_bound(double c1) const {
  require(c1 > 0.0, ErrorKind::Domain, "C1 bound must be positive");
  return SpectralDensity(model_, factor_, c1);
}

SpectralDensity SpectralDensity::scaled(double factor) const {
  require(factor >= 0.0 && std::isfinite(factor), ErrorKind::Domain,
          "density scaling factor must be nonnegative");
  std::optional<double> c1;
  if (c1_ && factor > 0.0) c1 = *c1_ * factor;
  return SpectralDensity(model_, factor_ * factor, c1);
}

double SpectralDensity::operator()(double lambda) const {
  if (factor_ == 0.0) return 0.0;
  return factor_ * model_->eval(lambda);
}

double SpectralDensity::variance() const { return factor_ * model_->variance; }

double SpectralDensity::covariance(double t) const {
  if (factor_ == 0.0) return 0.0;
  if (const auto* lk = std::get_if<Linnik>(&model_->kind)) {
    return factor_ * lk->scale * std::pow(1.0 + std::pow(std::abs(t), lk->gamma), -lk->H / lk->gamma);
  }
  if (t == 0.0) return variance();
  // 2 * integral over the knot span of cos(lambda t) p(lambda), one QAWO call
  // per log-linear segment.
  const auto& tab = std::get<Tabulated>(model_->kind);
  double total = 0.0;
  for (std::size_t j = 1; j < tab.lambda_knots.size(); ++j) {
    const double a = tab.lambda_knots[j - 1];
    const double b = tab.lambda_knots[j];
    const quad::Integrand f = [this](double x) { return model_->eval(x); };
    const double tol = 1e-13 * std::max(tab.values[j - 1], tab.values[j]) * (b - a);
    total += quad::fourier_cosine(f, std::abs(t), a, b, tol,
                                  "tabulated covariance segment " + std::to_string(j))
                 .value;
  }
  return 2.0 * factor_ * total;
}

const DensityKind& SpectralDensity::kind() const { return model_->kind; }

double SpectralDensity::tail_gamma() const {
  if (const auto* lk = std::get_if<Linnik>(&model_->kind)) {
    // Exponential tails satisfy the power envelope for every gamma < 2.
    return lk->gamma < 2.0 ? lk->gamma : 1.9;
  }
  return 1.0;
}

std::optional<double> SpectralDensity::long_memory() const {
  if (const auto* lk = std::get_if<Linnik>(&model_->kind)) return lk->H;
  return std::nullopt;
}

double SpectralDensity::tail_mass(double lambda) const {
  require(lambda > 0.0, ErrorKind::Domain, "tail_mass needs lambda > 0");
  if (factor_ == 0.0) return 0.0;
  if (const auto* lk = std::get_if<Linnik>(&model_->kind)) {
    double beyond = 0.0;
    double hi = kTableHi;
    if (lk->gamma < 2.0) {
      // Power-law extrapolation past the table, exact for the spline's tail.
      const double slope = model_->hi_slope;
      const double at = std::max(lambda, kTableHi);
      beyond = -(*this)(at) * at / (slope + 1.0);
      if (lambda >= kTableHi) return beyond;
    } else {
      hi = std::max(kTableHi, lambda * 1e3);
    }
    const quad::Integrand f = [this](double u) {
      const double x = std::exp(u);
      return (*this)(x) * x;
    };
    const double scale = variance();
    double total = beyond;
    for (double u = std::log(lambda); u < std::log(hi); u += 2.0) {
      total += quad::integrate(f, u, std::min(u + 2.0, std::log(hi)), 1e-10, 1e-16 * scale,
                               "Linnik tail mass")
                   .value;
    }
    return total;
  }
  const auto& tab = std::get<Tabulated>(model_->kind);
  double total = 0.0;
  for (std::size_t j = 1; j < tab.lambda_knots.size(); ++j) {
    const double a = std::max(lambda, tab.lambda_knots[j - 1]);
    const double b = tab.lambda_knots[j];
    if (b <= a) continue;
    const double pa = model_->eval(a);
    const double pb = tab.values[j];
    total += std::abs(pb - pa) < 1e-14 * pa ? 0.5 * (pa + pb) * (b - a)
                                            : (pb - pa) * (b - a) / std::log(pb / pa);
  }
  return factor_ * total;
}

double SpectralDensity::estimate_c1() const {
  const double g = tail_gamma();
  double sup = 0.0;
  for (double lambda : log_grid(kTableLo, kTableHi * 10.0, 7 * 40 + 1)) {
    sup = std::max(sup, (*this)(lambda)*std::pow(lambda, 1.0 + g));
  }
  return 1.01 * sup;
}

namespace {

double log_linear_integral(double a, double b, double pa, double pb) {
  if (std::abs(pb - pa) < 1e-14 * std::max(pa, pb)) return 0.5 * (pa + pb) * (b - a);
  return (pb - pa) * (b - a) / std::log(pb / pa);
}

}  // namespace

double SpectralDensity::mass(double a, double b) const {
  require(a >= 0.0 && b >= a, ErrorKind::Domain, "mass needs 0 <= a <= b");
  if (factor_ == 0.0 || a == b) return 0.0;

  if (std::holds_alternative<Tabulated>(model_->kind)) {
    const auto& tab = std::get<Tabulated>(model_->kind);
    double total = 0.0;
    for (std::size_t j = 1; j < tab.lambda_knots.size(); ++j) {
      const double lo = std::max(a, tab.lambda_knots[j - 1]);
      const double hi = std::min(b, tab.lambda_knots[j]);
      if (hi <= lo) continue;
      total += log_linear_integral(lo, hi, model_->eval(lo), model_->eval(hi));
    }
    return factor_ * total;
  }

  double total = 0.0;
  if (a < kTableLo) {
    // p ~ p(x0) (x/x0)^slope below the table, integrated exactly from 0.
    const double x0 = std::min(b, kTableLo);
    const double slope =
        std::log((*this)(x0) / (*this)(0.5 * x0)) / std::numbers::ln2;
    require(slope > -1.0, ErrorKind::Numerical, "density is not integrable at the origin");
    const double head = (*this)(x0) * x0 / (slope + 1.0);
    double below_a = 0.0;
    if (a > 0.0) below_a = (*this)(x0) * x0 * std::pow(a / x0, slope + 1.0) / (slope + 1.0);
    total += head - below_a;
    a = x0;
    if (a >= b) return total;
  }
  const std::string context =
      "cell mass on [" + std::to_string(a) + ", " + std::to_string(b) + "]";
  const double tol = 1e-16 * variance();
  if (b <= 2.0 * a) {
    const quad::Integrand f = [this](double x) { return (*this)(x); };
    return total + quad::integrate(f, a, b, 1e-10, tol, context).value;
  }
  const quad::Integrand f = [this](double u) {
    const double x = std::exp(u);
    return (*this)(x) * x;
  };
  const double ua = std::log(a);
  const double ub = std::log(b);
  for (double u = ua; u < ub; u += 2.0) {
    total += quad::integrate(f, u, std::min(u + 2.0, ub), 1e-10, tol, context).value;
  }
  return total;
}

}  // namespace ridgelab
