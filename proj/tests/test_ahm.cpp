#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "ridgelab/ahm.hpp"
#include "ridgelab/errors.hpp"
#include "ridgelab/random.hpp"

using namespace ridgelab;

namespace {

AhmSignal tones(std::vector<double> hz, double t1 = 1.0, double fs = 100.0) {
  AhmSignal s;
  for (double h : hz) s.components.push_back({ConstAmplitude{1.0}, Tone{h}});
  s.t1 = t1;
  s.fs = fs;
  return s;
}

}  // namespace

TEST_CASE("sampling") {
  const auto one = sample_signal(tones({10}));
  REQUIRE(one.size() == 100);
  CHECK(one[0] == 1.0);
  for (std::size_t k = 0; k < one.size(); ++k) {
    CHECK(one[k] == doctest::Approx(std::cos(0.2 * std::numbers::pi * k)).epsilon(1e-12));
    if (k + 10 < one.size()) CHECK(one[k] == doctest::Approx(one[k + 10]).epsilon(1e-12));
  }
  CHECK(sample_signal(tones({5, 20}))[0] == 2.0);

  // Endpoint-inclusive on t0, exclusive on t1.
  AhmSignal w = tones({3}, 60.0, 100.0);
  CHECK(w.n_samples() == 6000);
  w.t0 = 0.5;
  w.t1 = 0.75;
  CHECK(w.n_samples() == 25);
  CHECK(w.time(0) == 0.5);
}

TEST_CASE("sampling is linear in components") {
  AhmSignal a;
  a.t1 = 5.0;
  a.fs = 50.0;
  a.components = {{LinearAmplitude{1.0, 0.1}, LinearChirp{2.0, 0.5}},
                  {ConstAmplitude{0.7}, Tone{9.0}}};
  const auto sum = sample_signal(a);
  const auto c0 = sample_component(a, 0);
  const auto c1 = sample_component(a, 1);
  for (std::size_t k = 0; k < sum.size(); ++k) CHECK(sum[k] == c0[k] + c1[k]);
}

TEST_CASE("model violations") {
  AhmSignal s = tones({10});
  s.components[0].amp = LinearAmplitude{0.5, -1.0};  // crosses zero at t = 0.5
  CHECK_THROWS_AS(sample_signal(s), Error);
  try {
    sample_signal(s);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ModelViolation);
  }
  s = tones({10});
  s.components[0].phase = LinearChirp{1.0, -4.0};
  CHECK_THROWS_AS(sample_signal(s), Error);
  s = tones({10});
  s.components[0].amp = SampledAmplitude{{1.0, 2.0}};
  CHECK_THROWS_AS(sample_signal(s), Error);
}

TEST_CASE("condition estimates") {
  CHECK(check_conditions(tones({10})).epsilon == 0.0);
  CHECK(check_conditions(tones({10})).delta == 1.0);
  CHECK(check_conditions(tones({10, 30})).delta == doctest::Approx(0.5));
  CHECK(check_conditions(tones({10, 30})).epsilon == 0.0);
  const double d = check_conditions(tones({7, 11, 40})).delta;
  CHECK(d == doctest::Approx(4.0 / 18.0));

  AhmSignal chirp;
  chirp.t1 = 60.0;
  chirp.fs = 100.0;
  chirp.components = {{ConstAmplitude{1.0}, LinearChirp{10.0, 1.0}}};
  // Dense scan of |phi''| / phi' over the window.
  double eps = 0;
  for (int i = 0; i <= 60000; ++i) eps = std::max(eps, 1.0 / (10.0 + i * 1e-3));
  CHECK(check_conditions(chirp).epsilon == doctest::Approx(eps).epsilon(1e-12));
  CHECK(eps == doctest::Approx(0.1));

  CHECK_THROWS_AS(check_conditions(tones({30, 10})), Error);
}

TEST_CASE("sampled components use spline derivatives") {
  AhmSignal s;
  s.t1 = 4.0;
  s.fs = 200.0;
  const std::size_t n = s.n_samples();
  std::vector<double> amp(n), phase(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = s.time(k);
    amp[k] = 2.0 + std::sin(t);
    phase[k] = 5.0 * t + 0.25 * t * t;
  }
  s.components = {{SampledAmplitude{amp}, SampledPhase{phase}}};
  const auto tr = component_track(s, 0);
  for (std::size_t k = 20; k + 20 < n; ++k) {
    const double t = s.time(k);
    CHECK(tr.dA[k] == doctest::Approx(std::cos(t)).epsilon(1e-5));
    CHECK(tr.dphi[k] == doctest::Approx(5.0 + 0.5 * t).epsilon(1e-8));
    CHECK(tr.d2phi[k] == doctest::Approx(0.5).epsilon(1e-4));
  }
  const auto f = sample_signal(s);
  CHECK(f[3] == doctest::Approx(amp[3] * std::cos(2 * std::numbers::pi * phase[3])).epsilon(1e-12));
}

TEST_CASE("snr and mixing") {
  const std::vector<double> f = {1.0, 0.0};
  const std::vector<double> loud = {std::sqrt(10.0), 0.0};
  CHECK(snr_db(f, loud) == doctest::Approx(-10.0).epsilon(1e-12));
  CHECK(snr_db(f, f) == 0.0);
  const std::vector<double> zero = {0.0, 0.0};
  CHECK_THROWS_AS(snr_db(f, zero), Error);

  Rng rng(3);
  std::vector<double> x(500), phi(500);
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = std::cos(0.1 * k);
    phi[k] = rng.normal();
  }
  CHECK(mix(x, phi, 0.0) == x);
  const std::vector<double> nothing(500, 0.0);
  const auto scaled = mix(nothing, phi, 2.5);
  for (std::size_t k = 0; k < phi.size(); ++k) CHECK(scaled[k] == 2.5 * phi[k]);

  const auto y = mix(x, phi, 0.37);
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double ulp = std::numeric_limits<double>::epsilon() * (std::abs(x[k]) + std::abs(0.37 * phi[k]));
    CHECK(std::abs((y[k] - x[k]) - 0.37 * phi[k]) <= ulp);
  }

  for (double target : {-9.0, 0.0, 12.5}) {
    const double g = gain_for_snr(x, phi, target);
    std::vector<double> gp(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) gp[k] = g * phi[k];
    CHECK(std::abs(snr_db(x, gp) - target) < 0.01);
  }
}
