#include "ridgelab/spectral_noise.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <mutex>
#include <numbers>
#include <tuple>

#include "ridgelab/errors.hpp"
#include "ridgelab/fft.hpp"
#include "ridgelab/parallel.hpp"
#include "ridgelab/quadrature.hpp"

namespace ridgelab {

using cd = std::complex<double>;

namespace {

constexpr double kLambdaMin = 1e-8;
constexpr double kRefineRatio = 1.05;
constexpr double kTailFraction = 1e-6;

void finish_grid(const SpectralDensity& d, DensityGrid& g) {
  const std::size_t n = g.edges.size() - 1;
  g.masses.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    try {
      g.masses[j] = d.mass(g.edges[j], g.edges[j + 1]);
    } catch (const Error& e) {
      fail(e.kind(), "cell " + std::to_string(j) + ": " + e.what());
    }
  }
  g.truncation_deficit = 0.5 * d.variance() - pairwise_sum(g.masses);
}

}  // namespace

DensityGrid density_grid(const SpectralDensity& d, double lambda_max, std::size_t n_cells) {
  require(n_cells >= 8, ErrorKind::Precondition, "density_grid needs at least 8 cells");
  require(lambda_max > 0.0 && std::isfinite(lambda_max), ErrorKind::Precondition,
          "density_grid needs lambda_max > 0");

  DensityGrid g;
  const double width = lambda_max / static_cast<double>(n_cells);
  g.uniform_width = width;
  g.edges.push_back(0.0);
  if (width > kRefineRatio * kLambdaMin) {
    const auto n_geo =
        static_cast<std::size_t>(std::ceil(std::log(width / kLambdaMin) / std::log(kRefineRatio)));
    const double ratio = std::pow(width / kLambdaMin, 1.0 / static_cast<double>(n_geo));
    g.edges.push_back(kLambdaMin);
    g.freqs.push_back(0.5 * kLambdaMin);
    for (std::size_t k = 1; k <= n_geo; ++k) {
      const double lo = g.edges.back();
      const double hi = k == n_geo ? width : kLambdaMin * std::pow(ratio, static_cast<double>(k));
      g.edges.push_back(hi);
      g.freqs.push_back(std::sqrt(lo * hi));
    }
    g.first_uniform = g.freqs.size();
  } else {
    g.edges.push_back(width);
    g.freqs.push_back(0.5 * width);
    g.first_uniform = 0;
  }
  for (std::size_t j = 1; j < n_cells; ++j) {
    g.edges.push_back(static_cast<double>(j + 1) * width);
    g.freqs.push_back((static_cast<double>(j) + 0.5) * width);
  }
  g.edges.back() = lambda_max;
  finish_grid(d, g);
  return g;
}

DensityGrid log_density_grid(const SpectralDensity& d, double lambda_lo, double lambda_hi,
                             double ratio) {
  require(lambda_lo > 0.0 && lambda_hi > lambda_lo && ratio > 1.0, ErrorKind::Precondition,
          "log_density_grid needs 0 < lo < hi and ratio > 1");
  const auto n = static_cast<std::size_t>(
      std::max(1.0, std::ceil(std::log(lambda_hi / lambda_lo) / std::log(ratio))));
  const double r = std::pow(lambda_hi / lambda_lo, 1.0 / static_cast<double>(n));
  DensityGrid g;
  g.edges.resize(n + 1);
  g.freqs.resize(n);
  for (std::size_t k = 0; k <= n; ++k) g.edges[k] = lambda_lo * std::pow(r, static_cast<double>(k));
  g.edges.back() = lambda_hi;
  for (std::size_t k = 0; k < n; ++k) g.freqs[k] = std::sqrt(g.edges[k] * g.edges[k + 1]);
  g.first_uniform = n;
  finish_grid(d, g);
  return g;
}

std::vector<double> synthesize_from_grid(const DensityGrid& grid, std::size_t n, double fs,
                                         std::uint64_t seed) {
  require(n >= 1, ErrorKind::Precondition, "path length must be positive");
  require(fs > 0.0, ErrorKind::Precondition, "sampling rate must be positive");
  Rng rng(seed);
  std::vector<cd> amp(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) amp[j] = std::sqrt(grid.masses[j]) * rng.circular_normal();

  std::vector<double> out(n, 0.0);
  const double bin = 2.0 * std::numbers::pi * fs / static_cast<double>(n);
  const bool aligned = grid.uniform_width > 0.0 && grid.first_uniform < grid.size() &&
                       std::abs(grid.uniform_width - bin) <= 1e-12 * bin;

  std::size_t direct_end = aligned ? grid.first_uniform : grid.size();
  for (std::size_t j = 0; j < direct_end; ++j) {
    if (amp[j] == cd{}) continue;
    const cd step = std::polar(1.0, grid.freqs[j] / fs);
    cd rot = amp[j];
    for (std::size_t k = 0; k < n; ++k) {
      out[k] += 2.0 * rot.real();
      rot *= step;
      // Renormalize occasionally to stop magnitude drift in long paths.
      if ((k & 1023) == 1023) rot = amp[j] * std::polar(1.0, grid.freqs[j] * static_cast<double>(k + 1) / fs);
    }
  }
  if (!aligned) return out;

  // Uniform cells sit at (m + 1/2) * bin; fold them onto DFT bin m mod n and
  // apply the common half-bin phase afterwards.
  std::vector<cd> bins(n), time(n);
  for (std::size_t j = grid.first_uniform; j < grid.size(); ++j) {
    const auto m = static_cast<std::size_t>(std::llround(grid.freqs[j] / bin - 0.5));
    bins[m % n] += amp[j];
  }
  fft::backward(bins, time);
  for (std::size_t k = 0; k < n; ++k) {
    const cd half = std::polar(1.0, std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
    out[k] += 2.0 * (half * time[k]).real();
  }
  return out;
}

namespace {

struct GridKey {
  const void* model;
  double factor;
  double lambda_max;
  std::size_t n_cells;
  bool operator==(const GridKey&) const = default;
};

/// Monte Carlo sweeps synthesize many paths with the same density and
/// length; the cell masses are the expensive part, so keep the last few.
const DensityGrid& cached_grid(const SpectralDensity& d, double lambda_max, std::size_t n_cells) {
  struct Entry {
    GridKey key;
    SpectralDensity density;  // keeps the model alive so the key stays unique
    std::shared_ptr<const DensityGrid> grid;
  };
  static std::mutex mutex;
  static std::list<Entry> entries;
  const GridKey key{d.model_id(), d.amplitude_factor(), lambda_max, n_cells};
  {
    std::scoped_lock lock(mutex);
    for (auto it = entries.begin(); it != entries.end(); ++it) {
      if (it->key == key) {
        entries.splice(entries.begin(), entries, it);
        return *entries.front().grid;
      }
    }
  }
  auto grid = std::make_shared<const DensityGrid>(density_grid(d, lambda_max, n_cells));
  std::scoped_lock lock(mutex);
  entries.push_front(Entry{key, d, grid});
  if (entries.size() > 8) entries.pop_back();
  return *grid;
}

}  // namespace

NoisePath synthesize_path(const SpectralDensity& d, std::size_t n, double fs, std::uint64_t seed) {
  require(n >= 2, ErrorKind::Precondition, "synthesize_path needs n >= 2");
  require(fs > 0.0, ErrorKind::Precondition, "sampling rate must be positive");
  NoisePath path{std::vector<double>(n, 0.0), fs, seed, 0.0, d};
  if (d.is_zero()) return path;

  // Cells extend past Nyquist until the tail mass is negligible (those cells
  // alias exactly as sampling the continuous process would), capped at 4n.
  const double bin = 2.0 * std::numbers::pi * fs / static_cast<double>(n);
  const std::size_t min_cells = std::max<std::size_t>(8, n / 2);
  const std::size_t max_cells = std::max<std::size_t>(min_cells, 4 * n);
  std::size_t cells = min_cells;
  const double target = kTailFraction * d.variance();
  while (cells < max_cells && d.tail_mass(static_cast<double>(cells) * bin) > target) {
    cells = std::min(max_cells, 2 * cells);
  }
  const DensityGrid& grid = cached_grid(d, static_cast<double>(cells) * bin, cells);
  path.samples = synthesize_from_grid(grid, n, fs, seed);
  path.truncation_deficit = grid.truncation_deficit;
  return path;
}

namespace {

/// Integral over (0, inf) of f(lambda), done in u = ln(lambda) on 2-wide
/// chunks after a coarse scan has located where the integrand lives.
double integrate_half_line(const std::function<double(double)>& f, double center,
                           const std::string& context) {
  const quad::Integrand g = [&f](double u) {
    const double x = std::exp(u);
    return f(x) * x;
  };
  const double u0 = std::log(center);
  constexpr int kHalfWidth = 400;
  constexpr double kStep = 0.25;
  std::vector<double> samples(2 * kHalfWidth + 1);
  double gmax = 0.0;
  for (int k = -kHalfWidth; k <= kHalfWidth; ++k) {
    const double v = std::abs(g(u0 + kStep * k));
    samples[static_cast<std::size_t>(k + kHalfWidth)] = v;
    if (std::isfinite(v)) gmax = std::max(gmax, v);
  }
  if (gmax == 0.0) return 0.0;
  int lo = 0;
  int hi = 2 * kHalfWidth;
  while (lo < 2 * kHalfWidth && samples[static_cast<std::size_t>(lo)] < 1e-18 * gmax) ++lo;
  while (hi > 0 && samples[static_cast<std::size_t>(hi)] < 1e-18 * gmax) --hi;
  lo = std::max(0, lo - 2);
  hi = std::min(2 * kHalfWidth, hi + 2);
  const double ua = u0 + kStep * (lo - kHalfWidth);
  const double ub = u0 + kStep * (hi - kHalfWidth);
  double rough = 0.0;
  for (int k = lo; k <= hi; ++k) rough += samples[static_cast<std::size_t>(k)] * kStep;

  std::vector<double> parts;
  for (double u = ua; u < ub; u += 2.0) {
    parts.push_back(quad::integrate(g, u, std::min(u + 2.0, ub), 1e-10, 1e-12 * rough, context).value);
  }
  return pairwise_sum(parts);
}

}  // namespace

double spectral_moment(const SpectralDensity& d, const WaveletSpec& w, double s,
                       MomentChannel channel) {
  require(s > 0.0, ErrorKind::Precondition, "spectral_moment needs s > 0");
  if (d.is_zero()) return 0.0;
  const double center = peak_angular_frequency(w) / s;
  if (channel == MomentChannel::W) {
    return integrate_half_line(
        [&](double x) { return std::norm(eval_psi_hat(w, s * x)) * d(x); }, center,
        "spectral moment (W) at s=" + std::to_string(s));
  }
  return integrate_half_line(
      [&](double x) { return x * x * std::norm(eval_dpsi_hat(w, s * x)) * d(x); }, center,
      "spectral moment (dW) at s=" + std::to_string(s));
}

double mean_abs_W(const SpectralDensity& d, const WaveletSpec& w, double s) {
  return 0.5 * std::sqrt(std::numbers::pi) * std::sqrt(spectral_moment(d, w, s));
}

cd cross_moment(const SpectralDensity& d, const WaveletSpec& w, double s1, double s2) {
  require(s1 > 0.0 && s2 > 0.0, ErrorKind::Precondition, "cross_moment needs positive scales");
  if (d.is_zero()) return {};
  const double center = peak_angular_frequency(w) / std::sqrt(s1 * s2);
  const std::string context = "cross moment at s1=" + std::to_string(s1) + ", s2=" + std::to_string(s2);
  const auto term = [&](double x) { return std::conj(eval_psi_hat(w, s1 * x)) * eval_psi_hat(w, s2 * x) * d(x); };
  const double re = integrate_half_line([&](double x) { return term(x).real(); }, center, context);
  const double im = integrate_half_line([&](double x) { return term(x).imag(); }, center, context);
  return {re, im};
}

double increment_distance(const SpectralDensity& d, const WaveletSpec& w, double s1, double s2) {
  require(s1 > 0.0 && s2 > 0.0, ErrorKind::Precondition, "increment_distance needs positive scales");
  if (d.is_zero() || s1 == s2) return 0.0;
  const double center = peak_angular_frequency(w) / std::sqrt(s1 * s2);
  const double v = integrate_half_line(
      [&](double x) { return std::norm(eval_psi_hat(w, s1 * x) - eval_psi_hat(w, s2 * x)) * d(x); },
      center, "increment distance");
  return std::sqrt(std::max(0.0, v));
}

namespace {

/// [x_lo, x_hi] outside which |psi_hat(x)|^2 < threshold * peak^2.
std::pair<double, double> significant_band(const WaveletSpec& w, double threshold) {
  const double peak = peak_angular_frequency(w);
  const double level = threshold * std::norm(eval_psi_hat(w, peak));
  double lo = peak;
  while (lo > 1e-12 * peak && std::norm(eval_psi_hat(w, lo)) >= level) lo /= 1.02;
  double hi = peak;
  while (hi < 1e12 * peak && std::norm(eval_psi_hat(w, hi)) >= level) hi *= 1.02;
  return {lo, hi};
}

}  // namespace

ColumnSimulator::ColumnSimulator(const SpectralDensity& d, const WaveletSpec& w,
                                 std::vector<double> scales, ColumnOptions options)
    : scales_(std::move(scales)), options_(options), leak_(w.negative_leak) {
  require(!scales_.empty(), ErrorKind::Precondition, "column needs at least one scale");
  for (std::size_t i = 0; i < scales_.size(); ++i) {
    require(scales_[i] > 0.0, ErrorKind::Precondition, "scales must be positive");
    if (i > 0) require(scales_[i] > scales_[i - 1], ErrorKind::Precondition, "scales must ascend");
  }
  const bool derivs = options_.first_derivative || options_.second_derivative;
  const auto [x_lo, x_hi] = significant_band(w, derivs ? 1e-4 * options_.threshold : options_.threshold);
  cells_ = log_density_grid(d, x_lo / scales_.back(), x_hi / scales_.front(), options_.cell_ratio);

  const std::size_t m = cells_.size();
  const std::size_t ns = scales_.size();
  auto alloc = [&](Kernel& k) {
    k.re.assign(ns * m, 0.0);
    k.im.assign(ns * m, 0.0);
  };
  alloc(w_);
  if (options_.first_derivative) alloc(dw_);
  if (options_.second_derivative) alloc(d2w_);
  for (std::size_t i = 0; i < ns; ++i) {
    const double s = scales_[i];
    for (std::size_t j = 0; j < m; ++j) {
      const double lambda = cells_.freqs[j];
      const double root = std::sqrt(cells_.masses[j]);
      const std::size_t idx = i * m + j;
      if (root == 0.0) continue;
      const PsiDerivatives p = eval_psi_all(w, s * lambda);
      const cd k0 = std::conj(p.value) * root;
      w_.re[idx] = k0.real();
      w_.im[idx] = k0.imag();
      if (options_.first_derivative) {
        const cd k1 = std::conj(p.d1) * (lambda * root);
        dw_.re[idx] = k1.real();
        dw_.im[idx] = k1.imag();
      }
      if (options_.second_derivative) {
        const cd k2 = std::conj(p.d2) * (lambda * lambda * root);
        d2w_.re[idx] = k2.real();
        d2w_.im[idx] = k2.imag();
      }
    }
  }
}

void ColumnSimulator::accumulate(const Kernel& k, std::span<const double> zr,
                                 std::span<const double> zi, std::vector<cd>& out) const {
  const std::size_t m = cells_.size();
  out.resize(scales_.size());
  for (std::size_t i = 0; i < scales_.size(); ++i) {
    const double* kr = k.re.data() + i * m;
    const double* ki = k.im.data() + i * m;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      re += kr[j] * zr[j] - ki[j] * zi[j];
      im += kr[j] * zi[j] + ki[j] * zr[j];
    }
    out[i] = {re, im};
  }
}

ColumnSimulator::Column ColumnSimulator::draw(std::uint64_t seed, double t) const {
  const std::size_t m = cells_.size();
  std::vector<double> zr(m), zi(m);
  Rng rng(seed);
  for (std::size_t j = 0; j < m; ++j) {
    cd z = rng.circular_normal();
    if (t != 0.0 || leak_ != 0.0) {
      const cd phase = std::polar(1.0, t * cells_.freqs[j]);
      // A leaking wavelet also sees the mirrored negative-frequency atom.
      z = phase * z + leak_ * std::conj(phase * z);
    }
    zr[j] = z.real();
    zi[j] = z.imag();
  }
  Column c;
  accumulate(w_, zr, zi, c.W);
  if (options_.first_derivative) accumulate(dw_, zr, zi, c.dW);
  if (options_.second_derivative) accumulate(d2w_, zr, zi, c.d2W);
  return c;
}

double ColumnSimulator::discretized_moment(std::size_t i) const {
  require(i < scales_.size(), ErrorKind::Index, "scale index out of range");
  const std::size_t m = cells_.size();
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    total += w_.re[i * m + j] * w_.re[i * m + j] + w_.im[i * m + j] * w_.im[i * m + j];
  }
  return total * (1.0 + leak_ * leak_);
}

std::vector<cd> awt_column(const SpectralDensity& d, const WaveletSpec& w, double t,
                           std::span<const double> scales, std::uint64_t seed) {
  ColumnSimulator sim(d, w, std::vector<double>(scales.begin(), scales.end()));
  return sim.draw(seed, t).W;
}

}  // namespace ridgelab
