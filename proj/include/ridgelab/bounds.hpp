#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ridgelab/awt.hpp"
#include "ridgelab/spectral_noise.hpp"
#include "ridgelab/wavelet.hpp"

namespace ridgelab {

/// Clean-signal transform at one time, on the scales of a grid.
struct CleanColumn {
  std::vector<double> scales;
  std::vector<std::complex<double>> W;
  std::vector<std::complex<double>> dW;  // dW_f/ds
  std::vector<double> d2S;               // d2S_f/ds2

  std::size_t size() const { return scales.size(); }
  double magnitude(std::size_t i) const { return std::abs(W[i]); }
};

/// Extracts column t_index. The field needs the dW channel and the
/// scalogram the d2S channel.
CleanColumn clean_column(const AwtField& field, const ScalogramField& S, std::size_t t_index);

struct BoundContext {
  WaveletSpec wavelet;
  SpectralDensity density;
  CleanColumn clean;
  std::size_t mc_trials = 10000;
  std::uint64_t base_seed = 0;
  /// Replace Monte Carlo E[max] terms with the Dudley bound.
  bool analytic_mu = false;
  unsigned threads = 1;
  ColumnOptions column_options{};
};

/// Closed scale interval.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double s) const;
};

/// Grid bins of `scales` lying in I, with a relative tolerance of 1e-9.
std::vector<std::size_t> bins_in(const std::vector<double>& scales, Interval I);

struct BoundReport {
  double delta = 0.0;
  double mu = 0.0;
  double mu_stderr = 0.0;
  double sigma = 0.0;
  std::optional<double> lower_bound;
  bool applicable = false;
  std::string method;  // "mc" or "dudley"
};

/// Gap between the clean peak in I and the best clean value outside I but
/// on the grid (empty max = 0). Throws Precondition when the peak lies
/// outside I.
double delta_I(const BoundContext& ctx, Interval I);

struct MuSigma {
  double mu = 0.0;
  double mu_stderr = 0.0;
  double sigma = 0.0;
  std::string method;
};
MuSigma mu_sigma_I(const BoundContext& ctx, Interval I);

BoundReport interval_lower_bound(const BoundContext& ctx, Interval I);

/// Same bound restricted to band B: the peak is taken inside B and the
/// maxima run over B minus I_m.
BoundReport band_lower_bound(const BoundContext& ctx, Interval band, Interval I_m);

/// Nearest sign changes of d2S below and above the scale s_fm, interpolated
/// linearly in s. Throws Band when one side has none.
Interval inflection_interval(const std::vector<double>& scales, const std::vector<double>& d2S,
                             double s_fm);

struct DeviationBoundInputs {
  Interval band;
  double s_fm = 0.0;
  Interval inflection;
  double L = 0.0;
  std::array<double, 4> mu{};
  std::array<double, 4> mu_stderr{};
  std::array<double, 4> sigma{};
  std::vector<double> epsilons;
};

/// Evaluates every quantity the deviation bound needs for band B on the
/// clean column. Throws Precondition unless B lies inside the inflection
/// interval around the clean peak.
DeviationBoundInputs deviation_inputs(const BoundContext& ctx, Interval band,
                                      std::vector<double> epsilons);

struct EpsilonBound {
  double epsilon = 0.0;
  bool admissible = false;
  double raw = 0.0;    // prefactor times the four-exponential sum
  double bound = 1.0;  // min(raw, 1)
};

struct DeviationReport {
  BoundReport interior;  // prefactor ingredients on B° vs the endpoints
  double epsilon_lo = 0.0;
  double epsilon_hi = 0.0;
  std::vector<EpsilonBound> ladder;  // admissible entries only
  std::string diagnostic;
};

/// Four-exponential sum without the prefactor, for one epsilon.
double deviation_sum(const DeviationBoundInputs& in, double epsilon);

DeviationReport deviation_upper_bound(const DeviationBoundInputs& in, const BoundContext& ctx);

struct DudleyConstants {
  double H_minus = 0.0;
  double T = 1.0;
  bool T_found = true;
  double C2 = 1.0;
  double Dcal = 2.0;
  double gamma = 1.0;
  double C1 = 0.0;
  double psi_sup = 0.0;
  double psi_lip = 0.0;
  double variance = 0.0;
  double sup_bound = 0.0;
};

/// Default H- for a density: 0.9 min(H, 1), or 1 for non-Linnik densities.
double default_h_minus(const SpectralDensity& d);

/// Throws Configuration when the density has no C1 bound.
DudleyConstants dudley_constants(const SpectralDensity& d, const WaveletSpec& w,
                                 std::optional<double> H_minus = std::nullopt);

struct HolderPair {
  double s1 = 0.0;
  double s2 = 0.0;
  double distance = 0.0;
  double bound = 0.0;
  bool violated = false;
};

struct HolderReport {
  std::vector<HolderPair> pairs;
  std::size_t violations = 0;
};

HolderReport holder_check(const SpectralDensity& d, const WaveletSpec& w, const DudleyConstants& c,
                          const std::vector<std::pair<double, double>>& pairs);

/// Monte Carlo P(s_Y(t) in I) with W_Y = W_f + W_Phi on the clean column's
/// scales, s_Y the grid argmax.
struct Proportion {
  std::size_t hits = 0;
  std::size_t trials = 0;
  double p_hat() const { return trials ? double(hits) / double(trials) : 0.0; }
  double standard_error() const;
};
Proportion empirical_interval_probability(const BoundContext& ctx, Interval I, std::size_t trials,
                                          std::uint64_t seed);

/// Conditional frequency of |s_{Y,m} - s_fm| > eps given s_{Y,m} in the
/// band interior, per epsilon. hits counts exceedances, trials counts the
/// conditioning event.
std::vector<Proportion> empirical_exceedance(const BoundContext& ctx, Interval band, double s_fm,
                                             const std::vector<double>& epsilons,
                                             std::size_t trials, std::uint64_t seed);

}  // namespace ridgelab
