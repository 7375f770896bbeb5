#include "ridgelab/ahm.hpp"

#include <gsl/gsl_spline.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "ridgelab/errors.hpp"
#include "ridgelab/parallel.hpp"

namespace ridgelab {
namespace {

struct SplineFit {
  std::vector<double> value, d1, d2;
};

SplineFit fit_samples(const AhmSignal& sig, const std::vector<double>& y, const char* what) {
  const std::size_t n = sig.n_samples();
  require(y.size() == n, ErrorKind::Dimension,
          std::string(what) + " has " + std::to_string(y.size()) + " samples, window has " +
              std::to_string(n));
  SplineFit fit{y, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (n < 3) return fit;
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = sig.time(k);
  std::unique_ptr<gsl_spline, decltype(&gsl_spline_free)> spline(
      gsl_spline_alloc(gsl_interp_cspline, n), &gsl_spline_free);
  gsl_spline_init(spline.get(), t.data(), y.data(), n);
  for (std::size_t k = 0; k < n; ++k) {
    fit.d1[k] = gsl_spline_eval_deriv(spline.get(), t[k], nullptr);
    fit.d2[k] = gsl_spline_eval_deriv2(spline.get(), t[k], nullptr);
  }
  return fit;
}

}  // namespace

std::size_t AhmSignal::n_samples() const {
  const double n = std::round((t1 - t0) * fs);
  return n > 0.0 ? static_cast<std::size_t>(n) : 0;
}

ComponentTrack component_track(const AhmSignal& sig, std::size_t m) {
  require(m < sig.components.size(), ErrorKind::Index, "component index out of range");
  require(sig.fs > 0.0, ErrorKind::Precondition, "sampling rate must be positive");
  const std::size_t n = sig.n_samples();
  require(n >= 1, ErrorKind::Precondition, "signal window holds no samples");
  const auto& c = sig.components[m];

  ComponentTrack tr;
  tr.A.resize(n);
  tr.dA.resize(n);
  tr.phi.resize(n);
  tr.dphi.resize(n);
  tr.d2phi.resize(n);

  if (const auto* a = std::get_if<ConstAmplitude>(&c.amp)) {
    std::fill(tr.A.begin(), tr.A.end(), a->a);
  } else if (const auto* a = std::get_if<LinearAmplitude>(&c.amp)) {
    for (std::size_t k = 0; k < n; ++k) {
      tr.A[k] = a->a0 + a->a1 * sig.time(k);
      tr.dA[k] = a->a1;
    }
  } else {
    auto fit = fit_samples(sig, std::get<SampledAmplitude>(c.amp).samples, "sampled amplitude");
    tr.A = std::move(fit.value);
    tr.dA = std::move(fit.d1);
  }

  if (const auto* p = std::get_if<Tone>(&c.phase)) {
    for (std::size_t k = 0; k < n; ++k) {
      tr.phi[k] = p->hz * sig.time(k);
      tr.dphi[k] = p->hz;
    }
  } else if (const auto* p = std::get_if<LinearChirp>(&c.phase)) {
    for (std::size_t k = 0; k < n; ++k) {
      const double t = sig.time(k);
      tr.phi[k] = p->xi0 * t + 0.5 * p->rate * t * t;
      tr.dphi[k] = p->xi0 + p->rate * t;
      tr.d2phi[k] = p->rate;
    }
  } else {
    auto fit = fit_samples(sig, std::get<SampledPhase>(c.phase).cycles, "sampled phase");
    tr.phi = std::move(fit.value);
    tr.dphi = std::move(fit.d1);
    tr.d2phi = std::move(fit.d2);
  }

  for (std::size_t k = 0; k < n; ++k) {
    if (!(tr.A[k] > 0.0)) {
      fail(ErrorKind::ModelViolation, "component " + std::to_string(m) +
                                          " has non-positive amplitude at t=" +
                                          std::to_string(sig.time(k)));
    }
    if (!(tr.dphi[k] > 0.0)) {
      fail(ErrorKind::ModelViolation, "component " + std::to_string(m) +
                                          " has non-positive instantaneous frequency at t=" +
                                          std::to_string(sig.time(k)));
    }
  }
  return tr;
}

std::vector<double> sample_component(const AhmSignal& sig, std::size_t m) {
  const auto tr = component_track(sig, m);
  std::vector<double> out(tr.A.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    // Reduce the phase to [0, 1) cycles before scaling so long windows keep
    // full precision in the cosine argument.
    const double frac = tr.phi[k] - std::floor(tr.phi[k]);
    out[k] = tr.A[k] * std::cos(2.0 * std::numbers::pi * frac);
  }
  return out;
}

std::vector<double> sample_signal(const AhmSignal& sig) {
  require(sig.n_samples() >= 1, ErrorKind::Precondition, "signal window holds no samples");
  std::vector<double> f(sig.n_samples(), 0.0);
  for (std::size_t m = 0; m < sig.components.size(); ++m) {
    const auto part = sample_component(sig, m);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] += part[k];
  }
  return f;
}

ConditionEstimate check_conditions(const AhmSignal& sig) {
  require(!sig.components.empty(), ErrorKind::Precondition, "signal has no components");
  std::vector<ComponentTrack> tracks;
  for (std::size_t m = 0; m < sig.components.size(); ++m) tracks.push_back(component_track(sig, m));

  ConditionEstimate est;
  for (const auto& tr : tracks) {
    for (std::size_t k = 0; k < tr.A.size(); ++k) {
      est.epsilon = std::max({est.epsilon, std::abs(tr.dA[k]) / tr.dphi[k],
                              std::abs(tr.d2phi[k]) / tr.dphi[k]});
    }
  }
  if (tracks.size() == 1) return est;
  est.delta = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m + 1 < tracks.size(); ++m) {
    for (std::size_t k = 0; k < tracks[m].dphi.size(); ++k) {
      const double lo = tracks[m].dphi[k];
      const double hi = tracks[m + 1].dphi[k];
      if (!(hi > lo)) {
        fail(ErrorKind::ModelViolation,
             "components " + std::to_string(m) + " and " + std::to_string(m + 1) +
                 " are not ordered by instantaneous frequency at t=" + std::to_string(sig.time(k)));
      }
      est.delta = std::min(est.delta, (hi - lo) / (hi + lo));
    }
  }
  return est;
}

namespace {

double energy(std::span<const double> x) {
  std::vector<double> sq(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) sq[k] = x[k] * x[k];
  return pairwise_sum(sq);
}

}  // namespace

double snr_db(std::span<const double> f, std::span<const double> noise) {
  require(f.size() == noise.size() && !f.empty(), ErrorKind::Dimension,
          "snr_db needs equal, nonzero lengths");
  const double en = energy(noise);
  require(en > 0.0, ErrorKind::Numerical, "snr_db: noise is identically zero");
  return 10.0 * std::log10(energy(f) / en);
}

std::vector<double> mix(std::span<const double> f, std::span<const double> noise, double gain) {
  require(f.size() == noise.size(), ErrorKind::Dimension, "mix needs equal lengths");
  std::vector<double> y(f.size());
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = f[k] + gain * noise[k];
  return y;
}

double gain_for_snr(std::span<const double> f, std::span<const double> noise, double target_db) {
  require(f.size() == noise.size() && !f.empty(), ErrorKind::Dimension,
          "gain_for_snr needs equal, nonzero lengths");
  const double en = energy(noise);
  require(en > 0.0, ErrorKind::Numerical, "gain_for_snr: noise is identically zero");
  return std::sqrt(energy(f) / en) / std::pow(10.0, target_db / 20.0);
}

}  // namespace ridgelab
