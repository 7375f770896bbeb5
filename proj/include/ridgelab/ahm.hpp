#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace ridgelab {

struct ConstAmplitude {
  double a = 1.0;
};
/// A(t) = a0 + a1 * t.
struct LinearAmplitude {
  double a0 = 1.0;
  double a1 = 0.0;
};
/// One value per sample time; derivatives come from a cubic spline.
struct SampledAmplitude {
  std::vector<double> samples;
};
using Amplitude = std::variant<ConstAmplitude, LinearAmplitude, SampledAmplitude>;

/// Phases are in cycles: the component is A(t) cos(2 pi phi(t)).
struct Tone {
  double hz = 1.0;
};
/// phi(t) = xi0 * t + rate * t^2 / 2, so phi'(t) = xi0 + rate * t.
struct LinearChirp {
  double xi0 = 1.0;
  double rate = 0.0;
};
struct SampledPhase {
  std::vector<double> cycles;
};
using Phase = std::variant<Tone, LinearChirp, SampledPhase>;

struct AhmComponent {
  Amplitude amp;
  Phase phase;
};

/// Adaptive harmonic signal on [t0, t1) sampled at fs; components are listed
/// by ascending instantaneous frequency.
struct AhmSignal {
  std::vector<AhmComponent> components;
  double t0 = 0.0;
  double t1 = 1.0;
  double fs = 1.0;

  /// round((t1 - t0) * fs)
  std::size_t n_samples() const;
  double time(std::size_t k) const { return t0 + static_cast<double>(k) / fs; }
};

/// A, A', phi (cycles), phi' (Hz) and phi'' (Hz/s) of one component at
/// every sample time.
struct ComponentTrack {
  std::vector<double> A, dA, phi, dphi, d2phi;
};

ComponentTrack component_track(const AhmSignal& sig, std::size_t m);

std::vector<double> sample_component(const AhmSignal& sig, std::size_t m);

/// f(t_k) = sum_m A_m(t_k) cos(2 pi phi_m(t_k)). Throws ModelViolation if any
/// amplitude or instantaneous frequency is not positive.
std::vector<double> sample_signal(const AhmSignal& sig);

struct ConditionEstimate {
  double epsilon = 0.0;  // max of |A'|/phi' and |phi''|/phi'
  double delta = 1.0;    // min of (phi'_{m+1} - phi'_m) / (phi'_{m+1} + phi'_m)
};

ConditionEstimate check_conditions(const AhmSignal& sig);

/// 10 log10(||f||^2 / ||noise||^2).
double snr_db(std::span<const double> f, std::span<const double> noise);

/// Y = f + gain * noise.
std::vector<double> mix(std::span<const double> f, std::span<const double> noise, double gain);

/// Gain that puts snr_db(f, gain * noise) at `target_db`.
double gain_for_snr(std::span<const double> f, std::span<const double> noise, double target_db);

}  // namespace ridgelab
