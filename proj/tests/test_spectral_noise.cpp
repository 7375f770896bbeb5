#include <doctest.h>

#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_expint.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ridgelab/errors.hpp"
#include "ridgelab/parallel.hpp"
#include "ridgelab/spectral_noise.hpp"

using namespace ridgelab;
using cd = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

// (1/pi) * integral_0^inf cos(x t) / (1 + t) dt = (-Ci(x) cos x - si(x) sin x) / pi.
double linnik_11(double x) {
  const double si = gsl_sf_Si(x) - kPi / 2.0;
  return (-gsl_sf_Ci(x) * std::cos(x) - si * std::sin(x)) / kPi;
}

// (1/pi) * integral_0^inf cos(x t) C(t) dt by GSL QAWF with the cosine weight.
double linnik_cosine_qawf(double gamma, double H, double x) {
  struct P { double g, h; } params{gamma, H};
  gsl_function f{[](double t, void* v) {
                   auto* p = static_cast<P*>(v);
                   return std::pow(1.0 + std::pow(t, p->g), -p->h / p->g);
                 },
                 &params};
  auto* ws = gsl_integration_workspace_alloc(2000);
  auto* cyc = gsl_integration_workspace_alloc(2000);
  auto* tab = gsl_integration_qawo_table_alloc(x, 1.0, GSL_INTEG_COSINE, 50);
  double r = 0, e = 0;
  gsl_integration_qawf(&f, 0.0, 1e-13, 2000, ws, cyc, tab, &r, &e);
  gsl_integration_qawo_table_free(tab);
  gsl_integration_workspace_free(cyc);
  gsl_integration_workspace_free(ws);
  return r / kPi;
}

WaveletSpec morse_at(double b1, double b2, double hz) {
  WaveletSpec w{Morse{b1, b2}};
  w.peak_target_hz = hz;
  return unit_peak(w);
}

// Kolmogorov-Smirnov distance of a sample to Exp(1).
double ks_exp1(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = 1.0 - std::exp(-x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace

TEST_CASE("Linnik covariance") {
  CHECK(SpectralDensity::linnik(1, 1, 1).covariance(0.0) == 1.0);
  CHECK(SpectralDensity::linnik(1, 1, 1).covariance(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(SpectralDensity::linnik(2, 2, 1).covariance(3.0) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(SpectralDensity::linnik(0.7, 1.3, 2.5).variance() == 2.5);
  CHECK_THROWS_AS(SpectralDensity::linnik(2.5, 1, 1), Error);
  CHECK_THROWS_AS(SpectralDensity::linnik(1, 0, 1), Error);
}

TEST_CASE("Linnik density matches the Ci/Si closed form for gamma = H = 1") {
  const auto d = SpectralDensity::linnik(1, 1, 1);
  for (double x : log_grid(1e-5, 1e5, 41)) {
    CHECK(d(x) == doctest::Approx(linnik_11(x)).epsilon(2e-6));
    CHECK(d(-x) == d(x));
  }
  // Off-knot points exercise the interpolation.
  for (double x : {3.3e-4, 0.0123, 0.77, 4.2, 91.0, 7.7e3}) {
    CHECK(d(x) == doctest::Approx(linnik_11(x)).epsilon(2e-6));
  }
}

TEST_CASE("Linnik densities match a cosine-transform oracle") {
  for (auto [g, H] : {std::pair{2.0, 2.0}, {2.0, 0.6}, {1.5, 0.8}, {0.5, 2.0}, {1.0, 3.0}}) {
    const auto d = SpectralDensity::linnik(g, H, 1);
    for (double x : {0.05, 0.3, 1.0, 2.7, 8.0}) {
      CHECK(d(x) == doctest::Approx(linnik_cosine_qawf(g, H, x)).epsilon(1e-5));
    }
  }
}

TEST_CASE("Linnik density asymptotes") {
  const double H = 0.6;
  const auto d = SpectralDensity::linnik(1.0, H, 1);
  const double c0 = std::tgamma(1 - H) * std::sin(kPi * H / 2) / kPi;
  CHECK(d(1e-6) / (c0 * std::pow(1e-6, H - 1)) == doctest::Approx(1.0).epsilon(1e-2));
  const double cinf = H * std::tgamma(2.0) * std::sin(kPi / 2) / kPi;
  CHECK(d(1e5) / (cinf * std::pow(1e5, -2.0)) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(d.estimate_c1() >= cinf);
}

TEST_CASE("density integrates to half the variance") {
  for (auto [g, H] : {std::pair{1.0, 2.0}, {1.0, 0.5}, {0.8, 1.0}, {2.0, 1.5}}) {
    const auto d = SpectralDensity::linnik(g, H, 1.7);
    const double total = d.mass(0.0, 1e3) + d.tail_mass(1e3);
    CHECK(2.0 * total == doctest::Approx(1.7).epsilon(1e-6));
  }
}

TEST_CASE("tabulated density") {
  const auto d = SpectralDensity::tabulated({0.0, 1.0, 3.0}, {2.0, 2.0, 0.5});
  CHECK(d(0.5) == 2.0);
  CHECK(d(2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d(3.5) == 0.0);
  CHECK(d(-2.0) == d(2.0));
  const double half = 2.0 + 1.5 * 2.0 / std::log(4.0);
  CHECK(d.variance() == doctest::Approx(2.0 * half).epsilon(1e-14));
  CHECK(d.covariance(0.0) == doctest::Approx(d.variance()));

  // Constant density: C(t) = 2 c sin(L t) / t.
  const auto flat = SpectralDensity::tabulated({0.0, 4.0}, {0.25, 0.25});
  for (double t : {0.3, 1.0, 2.5, 10.0}) {
    CHECK(flat.covariance(t) == doctest::Approx(0.5 * std::sin(4.0 * t) / t).epsilon(1e-9));
  }
  CHECK_THROWS_AS(SpectralDensity::tabulated({1.0, 0.5}, {1.0, 1.0}), Error);
  CHECK_THROWS_AS(SpectralDensity::tabulated({0.0, 1.0}, {1.0, 0.0}), Error);
}

TEST_CASE("density grid") {
  SUBCASE("short-range Linnik keeps 99.9% of the variance") {
    const auto d = SpectralDensity::linnik(1, 2, 1);
    // Each tail holds ~(2/pi)/lambda, so lambda_max = 2000 leaves ~6e-4 in total.
    const auto g = density_grid(d, 2000.0, 8000);
    double total = 0;
    for (double m : g.masses) total += 2 * m;
    CHECK(total >= 0.999);
    CHECK(total <= 1.0 + 1e-12);
    CHECK(g.truncation_deficit == doctest::Approx(0.5 - total / 2).epsilon(1e-9));
    CHECK(g.edges.front() == 0.0);
    CHECK(g.edges.back() == 2000.0);
    CHECK(g.edges[1] == doctest::Approx(1e-8));
    for (std::size_t j = 1; j < g.edges.size(); ++j) {
      CHECK(g.edges[j] > g.edges[j - 1]);
      if (j < g.first_uniform) CHECK(g.edges[j + 1] / g.edges[j] <= 1.05 + 1e-12);
    }
  }
  SUBCASE("constant tabulated density gives mass c * width") {
    const auto d = SpectralDensity::tabulated({0.0, 10.0}, {0.3, 0.3});
    const auto g = density_grid(d, 10.0, 16);
    for (std::size_t j = 0; j < g.size(); ++j) {
      CHECK(g.masses[j] == doctest::Approx(0.3 * (g.edges[j + 1] - g.edges[j])).epsilon(1e-12));
    }
    CHECK(std::abs(g.truncation_deficit) < 1e-12);
  }
  SUBCASE("long memory mass is finite near the origin") {
    const double H = 0.5;
    const auto d = SpectralDensity::linnik(1, H, 1);
    const auto g = density_grid(d, 100.0, 64);
    for (double m : g.masses) CHECK(std::isfinite(m));
    const double c0 = std::tgamma(1 - H) * std::sin(kPi * H / 2) / kPi;
    // integral_0^a c0 lambda^(H-1) = c0 a^H / H.
    CHECK(g.masses[0] == doctest::Approx(c0 * std::pow(1e-8, H) / H).epsilon(1e-3));
  }
  CHECK_THROWS_AS(density_grid(SpectralDensity::linnik(1, 1, 1), 10.0, 4), Error);
  CHECK_THROWS_AS(density_grid(SpectralDensity::linnik(1, 1, 1), 0.0, 16), Error);
}

TEST_CASE("path synthesis") {
  const auto d = SpectralDensity::linnik(1, 2, 1);
  SUBCASE("deterministic") {
    const auto a = synthesize_path(d, 1000, 50.0, 7);
    const auto b = synthesize_path(d, 1000, 50.0, 7);
    const auto c = synthesize_path(d, 1000, 50.0, 8);
    CHECK(a.samples == b.samples);
    CHECK(a.samples != c.samples);
    CHECK(a.seed == 7);
  }
  SUBCASE("sample variance") {
    const std::size_t n = 1 << 16;
    const double fs = 100.0;
    const auto p = synthesize_path(d, n, fs, 11);
    double mean = 0;
    for (double v : p.samples) mean += v;
    mean /= n;
    double var = 0;
    for (double v : p.samples) var += (v - mean) * (v - mean);
    var /= n;
    // Var(sample variance) ~ (2/n) * sum_k (1 - |k|/n) rho(k)^2.
    double rho2 = 1.0;
    for (std::size_t k = 1; k < n; ++k) {
      const double r = d.covariance(static_cast<double>(k) / fs);
      rho2 += 2.0 * (1.0 - static_cast<double>(k) / n) * r * r;
    }
    const double expected = 1.0 - 2.0 * p.truncation_deficit;
    CHECK(std::abs(var - expected) < 3.0 * std::sqrt(2.0 * rho2 / n));
    CHECK(p.truncation_deficit >= 0.0);
    CHECK(p.truncation_deficit < 1e-3);
  }
  SUBCASE("single cell is one random cosine") {
    DensityGrid g;
    const double m = 0.2, lambda = 3.0;
    g.edges = {2.9, 3.1};
    g.masses = {m};
    g.freqs = {lambda};
    g.first_uniform = 1;
    const double fs = 20.0;
    const auto x = synthesize_from_grid(g, 64, fs, 5);
    for (std::size_t k = 1; k + 1 < x.size(); ++k) {
      CHECK(x[k + 1] + x[k - 1] == doctest::Approx(2 * std::cos(lambda / fs) * x[k]).epsilon(1e-9));
    }
    std::vector<double> sq(20000);
    for (std::size_t s = 0; s < sq.size(); ++s) {
      const auto y = synthesize_from_grid(g, 1, fs, s);
      sq[s] = y[0] * y[0];
    }
    // Phi(0)^2 = 4 m Re(Z)^2: mean 2m, standard deviation 2 sqrt(2) m.
    const double mean = pairwise_mean(sq);
    CHECK(std::abs(mean - 2 * m) < 4.0 * 2.0 * std::sqrt(2.0) * m / std::sqrt(20000.0));
  }
  SUBCASE("zero noise") {
    const auto p = synthesize_path(d.scaled(0.0), 32, 10.0, 1);
    for (double v : p.samples) CHECK(v == 0.0);
  }
}

TEST_CASE("spectral moment") {
  SUBCASE("constant density closed form") {
    const double c = 0.7, L = 3.0;
    const auto d = SpectralDensity::tabulated({0.0, L}, {c, c});
    const WaveletSpec w{Morse{1, 1}};
    const double want = c * (0.25 - std::exp(-2 * L) * (L * L / 2 + L / 2 + 0.25));
    CHECK(spectral_moment(d, w, 1.0) == doctest::Approx(want).epsilon(1e-8));
  }
  SUBCASE("positivity and dW channel") {
    const auto d = SpectralDensity::linnik(1, 0.7, 1);
    const auto w = morse_at(2, 2, 5.0);
    for (double s : {0.1, 1.0, 10.0}) {
      CHECK(spectral_moment(d, w, s) > 0.0);
      CHECK(spectral_moment(d, w, s, MomentChannel::dW) > 0.0);
    }
  }
  CHECK(mean_abs_W(SpectralDensity::tabulated({0.0, 1.0}, {1.0, 1.0}), WaveletSpec{}, 1.0) > 0.0);
  CHECK_THROWS_AS(spectral_moment(SpectralDensity::linnik(1, 1, 1), WaveletSpec{}, 0.0), Error);
}

TEST_CASE("mean |W| formula") {
  // moment = 1 and moment = 4 via a constant density tuned to the closed form.
  const double L = 3.0;
  const double unit = 0.25 - std::exp(-2 * L) * (L * L / 2 + L / 2 + 0.25);
  const auto d1 = SpectralDensity::tabulated({0.0, L}, {1.0 / unit, 1.0 / unit});
  CHECK(mean_abs_W(d1, WaveletSpec{}, 1.0) == doctest::Approx(std::sqrt(kPi) / 2).epsilon(1e-8));
  CHECK(mean_abs_W(d1.scaled(4.0), WaveletSpec{}, 1.0) == doctest::Approx(std::sqrt(kPi)).epsilon(1e-8));
}

TEST_CASE("single-column simulator statistics") {
  const auto d = SpectralDensity::linnik(1, 0.8, 1);
  const auto w = morse_at(3, 2, 4.0);
  const std::vector<double> scales = log_grid(0.5, 2.0, 9);
  ColumnSimulator sim(d, w, scales);
  const std::size_t trials = 10000;
  std::vector<ColumnSimulator::Column> cols(trials);
  parallel_for(trials, 4, [&](std::size_t k) { cols[k] = sim.draw(trial_seed(0xA5A5000000000000ULL, k), 0.3); });

  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double moment = spectral_moment(d, w, scales[i]);
    CHECK(sim.discretized_moment(i) == doctest::Approx(moment).epsilon(1e-3));
    std::vector<double> sq(trials), ab(trials), normalized(trials);
    for (std::size_t k = 0; k < trials; ++k) {
      sq[k] = std::norm(cols[k].W[i]);
      ab[k] = std::abs(cols[k].W[i]);
      normalized[k] = sq[k] / moment;
    }
    CHECK(pairwise_mean(sq) == doctest::Approx(moment).epsilon(0.05));
    // |W| is Rayleigh: sd = sqrt(moment (1 - pi/4)).
    const double se = std::sqrt(moment * (1 - kPi / 4) / trials);
    CHECK(std::abs(pairwise_mean(ab) - mean_abs_W(d, w, scales[i])) < 3 * se);
    CHECK(ks_exp1(normalized) < 1.628 / std::sqrt(static_cast<double>(trials)));
  }

  // Circular symmetry: pseudo-covariance vanishes.
  for (std::size_t i = 0; i < scales.size(); i += 4) {
    for (std::size_t j = i; j < scales.size(); j += 4) {
      cd pseudo{};
      for (const auto& c : cols) pseudo += c.W[i] * c.W[j];
      pseudo /= static_cast<double>(trials);
      const double s1 = std::sqrt(spectral_moment(d, w, scales[i]));
      const double s2 = std::sqrt(spectral_moment(d, w, scales[j]));
      CHECK(std::abs(pseudo) < 4.0 / std::sqrt(static_cast<double>(trials)) * s1 * s2);
    }
  }

  // Increments |W(s1) - W(s2)|^2 / d^2 ~ Exp(1).
  const double dist = increment_distance(d, w, scales[2], scales[5]);
  std::vector<double> inc(trials);
  for (std::size_t k = 0; k < trials; ++k) inc[k] = std::norm(cols[k].W[2] - cols[k].W[5]) / (dist * dist);
  CHECK(ks_exp1(inc) < 1.628 / std::sqrt(static_cast<double>(trials)));
}

TEST_CASE("scalogram variance and covariance identities") {
  const auto d = SpectralDensity::linnik(1.5, 1.2, 1);
  const auto w = morse_at(2, 1, 3.0);
  const std::vector<double> scales = {0.8, 1.0, 1.3};
  ColumnSimulator sim(d, w, scales);
  const std::size_t trials = 100000;
  std::vector<double> s0(trials), s1(trials), s2(trials);
  parallel_for(trials, 4, [&](std::size_t k) {
    const auto c = sim.draw(trial_seed(0x5A5A000000000000ULL, k)).W;
    s0[k] = std::norm(c[0]);
    s1[k] = std::norm(c[1]);
    s2[k] = std::norm(c[2]);
  });
  const double m1 = pairwise_mean(s1);
  std::vector<double> dev(trials);
  for (std::size_t k = 0; k < trials; ++k) dev[k] = (s1[k] - m1) * (s1[k] - m1);
  const double ratio = pairwise_mean(dev) / (m1 * m1);
  CHECK(ratio >= 0.9);
  CHECK(ratio <= 1.1);

  for (auto [a, b] : {std::pair{&s0, 0.8}, {&s2, 1.3}}) {
    const cd K = cross_moment(d, w, 1.0, b);
    const double er1r2 = 0.5 * K.real();
    const double er1i2 = -0.5 * K.imag();
    const double want = 4 * er1r2 * er1r2 + 4 * er1i2 * er1i2;
    CHECK(want >= 0.0);
    const double ma = pairwise_mean(*a);
    std::vector<double> prod(trials);
    for (std::size_t k = 0; k < trials; ++k) prod[k] = (s1[k] - m1) * ((*a)[k] - ma);
    const double cov = pairwise_mean(prod);
    for (std::size_t k = 0; k < trials; ++k) prod[k] = (prod[k] - cov) * (prod[k] - cov);
    const double se = std::sqrt(pairwise_mean(prod) / trials);
    CHECK(std::abs(cov - want) < 5 * se);
  }
}

TEST_CASE("awt column edge cases") {
  const auto w = morse_at(2, 1, 3.0);
  const std::vector<double> scales = {0.5, 1.0};
  const auto zero = awt_column(SpectralDensity::linnik(1, 1, 1).scaled(0.0), w, 0.0, scales, 3);
  for (const auto& z : zero) CHECK(z == cd{});
  const auto a = awt_column(SpectralDensity::linnik(1, 1, 1), w, 0.0, scales, 3);
  const auto b = awt_column(SpectralDensity::linnik(1, 1, 1), w, 0.0, scales, 3);
  CHECK(a == b);
  const std::vector<double> bad = {1.0, 0.5};
  CHECK_THROWS_AS(awt_column(SpectralDensity::linnik(1, 1, 1), w, 0.0, bad, 3), Error);
}
