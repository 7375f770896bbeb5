#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "ridgelab/random.hpp"
#include "ridgelab/wavelet.hpp"

namespace ridgelab {

/// Generalized Linnik covariance C(t) = scale * (1 + |t|^gamma)^(-H/gamma).
struct Linnik {
  double gamma = 1.0;
  double H = 1.0;
  double scale = 1.0;
};

/// Knot table; log-linear interpolation in between, zero outside the span.
struct Tabulated {
  std::vector<double> lambda_knots;
  std::vector<double> values;
};

using DensityKind = std::variant<Linnik, Tabulated>;

/// Spectral density p of a real stationary Gaussian process, with the
/// convention Cov(Phi(t), Phi(0)) = integral over R of e^{i t lambda} p(lambda).
///
/// Linnik densities have no closed form for gamma < 2: p is tabulated once on
/// a log grid (24 knots per decade over [1e-6, 1e6]) by an oscillatory
/// half-line Fourier integral and interpolated with a cubic spline in log-log
/// coordinates. gamma = 2 uses the Bessel-K closed form.
class SpectralDensity {
 public:
  static SpectralDensity linnik(double gamma, double H, double scale = 1.0);
  static SpectralDensity tabulated(std::vector<double> lambda_knots, std::vector<double> values);

  SpectralDensity with_c1_bound(double c1) const;
  /// Density times `factor` (noise gain squared); factor 0 gives zero noise.
  SpectralDensity scaled(double factor) const;

  double operator()(double lambda) const;
  double variance() const;
  double covariance(double t) const;

  const DensityKind& kind() const;
  double amplitude_factor() const { return factor_; }
  std::optional<double> c1_bound() const { return c1_; }
  /// The gamma of the tail envelope C1 * lambda^-(1+gamma) (gamma < 2).
  double tail_gamma() const;
  /// Long-memory parameter H (Linnik only).
  std::optional<double> long_memory() const;
  /// Mass of p on (lambda, inf), estimated from the tail envelope when it
  /// is beyond the table.
  double tail_mass(double lambda) const;
  /// sup over the tabulation grid of p(lambda) * lambda^(1+tail_gamma), plus
  /// 1% headroom.
  double estimate_c1() const;
  bool is_zero() const { return factor_ == 0.0; }

  /// Integral of p over [a, b], 0 <= a <= b. Log-linear segments are
  /// integrated in closed form, Linnik cells by adaptive quadrature, and a
  /// cell touching the origin by the power-law asymptote below 1e-6.
  double mass(double a, double b) const;

  /// Identity of the underlying table (equal for copies and rescalings).
  const void* model_id() const { return model_.get(); }

  struct Model;

 private:
  SpectralDensity(std::shared_ptr<const Model> model, double factor, std::optional<double> c1)
      : model_(std::move(model)), factor_(factor), c1_(c1) {}

  std::shared_ptr<const Model> model_;
  double factor_ = 1.0;
  std::optional<double> c1_;
};

namespace detail {
/// Direct (untabulated) evaluation of the unit-scale Linnik density; exposed
/// for tests.
double linnik_density_direct(double gamma, double H, double lambda);
}  // namespace detail

/// Partition of (0, lambda_max] into cells with exact masses.
struct DensityGrid {
  std::vector<double> edges;   // size cells + 1, edges[0] == 0
  std::vector<double> masses;  // integral of p over each cell
  std::vector<double> freqs;   // representative angular frequency per cell
  double truncation_deficit = 0.0;  // Var/2 - sum(masses)
  std::size_t first_uniform = 0;    // index of the first equal-width cell
  double uniform_width = 0.0;

  std::size_t size() const { return masses.size(); }
};

/// Uniform cells of width lambda_max / n_cells; the first one is refined
/// geometrically (ratio <= 1.05) down to 1e-8 so long-memory singularities at
/// the origin are integrated exactly.
DensityGrid density_grid(const SpectralDensity& d, double lambda_max, std::size_t n_cells);

/// Geometric cells of ratio `ratio` covering [lambda_lo, lambda_hi] (used by
/// the single-column simulator).
DensityGrid log_density_grid(const SpectralDensity& d, double lambda_lo, double lambda_hi,
                             double ratio);

struct NoisePath {
  std::vector<double> samples;
  double fs = 1.0;
  std::uint64_t seed = 0;
  double truncation_deficit = 0.0;
  SpectralDensity density;
};

/// Phi(t_k) = sum_j 2 Re(e^{i t_k lambda_j} sqrt(mass_j) Z_j), t_k = k / fs,
/// over the cells of density_grid(d, ~pi*fs, ~n/2).
NoisePath synthesize_path(const SpectralDensity& d, std::size_t n, double fs, std::uint64_t seed);

/// Same sum over an explicit cell set.
std::vector<double> synthesize_from_grid(const DensityGrid& grid, std::size_t n, double fs,
                                         std::uint64_t seed);

enum class MomentChannel { W, dW };

/// E|W_Phi(t,s)|^2 (channel W) or E|dW_Phi/ds|^2 (channel dW) by adaptive
/// quadrature, relative tolerance 1e-8.
double spectral_moment(const SpectralDensity& d, const WaveletSpec& w, double s,
                       MomentChannel channel = MomentChannel::W);

/// E|W_Phi(t,s)| = sqrt(pi)/2 * sqrt(spectral_moment).
double mean_abs_W(const SpectralDensity& d, const WaveletSpec& w, double s);

/// E[W_Phi(t,s1) conj(W_Phi(t,s2))].
std::complex<double> cross_moment(const SpectralDensity& d, const WaveletSpec& w, double s1,
                                  double s2);

/// Canonical distance d(s1,s2) = sqrt(E|W_Phi(0,s1) - W_Phi(0,s2)|^2).
double increment_distance(const SpectralDensity& d, const WaveletSpec& w, double s1, double s2);

struct ColumnOptions {
  double cell_ratio = 1.01;
  /// Frequencies where |psi_hat(s lambda)|^2 < threshold * peak^2 for every
  /// scale are not simulated.
  double threshold = 1e-12;
  bool first_derivative = false;
  bool second_derivative = false;
};

/// Single-time AWT column sampler W_Phi(t, scales) driven by one shared set
/// of cell variables Z_j, so cross-scale covariances are those of the field.
class ColumnSimulator {
 public:
  ColumnSimulator(const SpectralDensity& d, const WaveletSpec& w, std::vector<double> scales,
                  ColumnOptions options = {});

  struct Column {
    std::vector<std::complex<double>> W;
    std::vector<std::complex<double>> dW;
    std::vector<std::complex<double>> d2W;
  };

  Column draw(std::uint64_t seed, double t = 0.0) const;

  const std::vector<double>& scales() const { return scales_; }
  const DensityGrid& cells() const { return cells_; }
  /// Variance of the simulated W at scale index i (sum of |kernel|^2).
  double discretized_moment(std::size_t i) const;

 private:
  struct Kernel {
    std::vector<double> re, im;  // [scale][cell]
  };
  void accumulate(const Kernel& k, std::span<const double> zr, std::span<const double> zi,
                  std::vector<std::complex<double>>& out) const;

  std::vector<double> scales_;
  DensityGrid cells_;
  ColumnOptions options_;
  Kernel w_, dw_, d2w_;
  double leak_ = 0.0;
};

std::vector<std::complex<double>> awt_column(const SpectralDensity& d, const WaveletSpec& w,
                                             double t, std::span<const double> scales,
                                             std::uint64_t seed);

}  // namespace ridgelab
