#include "ridgelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ridgelab/errors.hpp"

namespace ridgelab {

Alternative parse_alternative(const std::string& name) {
  if (name == "less") return Alternative::Less;
  if (name == "greater") return Alternative::Greater;
  if (name == "two_sided" || name == "two-sided") return Alternative::TwoSided;
  fail(ErrorKind::Configuration, "unknown alternative '" + name + "'");
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                Alternative alternative) {
  require(x.size() == y.size(), ErrorKind::Dimension, "wilcoxon: samples differ in length");
  std::vector<double> d;
  d.reserve(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double v = x[k] - y[k];
    require(std::isfinite(v), ErrorKind::Domain, "wilcoxon: non-finite difference");
    if (v != 0.0) d.push_back(v);
  }
  const std::size_t n = d.size();
  require(n >= 10, ErrorKind::InsufficientData,
          "wilcoxon: " + std::to_string(n) + " nonzero differences, need at least 10");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(d[a]) < std::abs(d[b]); });

  double w_plus = 0.0;
  double tie_term = 0.0;
  for (std::size_t lo = 0; lo < n;) {
    std::size_t hi = lo + 1;
    while (hi < n && std::abs(d[order[hi]]) == std::abs(d[order[lo]])) ++hi;
    const double rank = 0.5 * static_cast<double>(lo + 1 + hi);
    for (std::size_t q = lo; q < hi; ++q) {
      if (d[order[q]] > 0.0) w_plus += rank;
    }
    const double t = static_cast<double>(hi - lo);
    tie_term += t * t * t - t;
    lo = hi;
  }

  const double nd = static_cast<double>(n);
  const double mean = nd * (nd + 1.0) / 4.0;
  const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
  const double sd = std::sqrt(var);
  const double diff = w_plus - mean;

  TestResult r;
  r.statistic = w_plus;
  switch (alternative) {
    case Alternative::Greater:
      r.p_value = normal_sf((diff - 0.5) / sd);
      break;
    case Alternative::Less:
      r.p_value = normal_sf((-diff - 0.5) / sd);
      break;
    case Alternative::TwoSided: {
      const double z = std::max(0.0, std::abs(diff) - 0.5) / sd;
      r.p_value = std::min(1.0, 2.0 * normal_sf(z));
      break;
    }
  }
  return r;
}

namespace {

/// P(K > x) for the Kolmogorov distribution.
double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.3) {
    // Small-argument form; the alternating series converges too slowly here.
    const double c = std::sqrt(2.0 * M_PI) / x;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double a = (2 * k - 1) * M_PI / (2.0 * x);
      cdf += std::exp(-0.5 * a * a);
    }
    return std::clamp(1.0 - c * cdf, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

}  // namespace

TestResult ks_test_exp1(std::span<const double> sample) {
  require(!sample.empty(), ErrorKind::InsufficientData, "ks test: empty sample");
  std::vector<double> v(sample.begin(), sample.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double dmax = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double cdf = v[k] > 0.0 ? -std::expm1(-v[k]) : 0.0;
    dmax = std::max({dmax, static_cast<double>(k + 1) / n - cdf, cdf - static_cast<double>(k) / n});
  }
  const double rn = std::sqrt(n);
  TestResult r;
  r.statistic = dmax;
  r.p_value = kolmogorov_sf((rn + 0.12 + 0.11 / rn) * dmax);
  return r;
}

}  // namespace ridgelab
