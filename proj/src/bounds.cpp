#include "ridgelab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "ridgelab/errors.hpp"
#include "ridgelab/parallel.hpp"
#include "ridgelab/random.hpp"

namespace ridgelab {

using cd = std::complex<double>;

namespace {

constexpr std::uint64_t kMuSeedMix = 0x9E3779B97F4A7C15ULL;

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Runs `trials` column draws on `scales` and reduces each draw to
/// `n_stats` numbers with stat(column, out). Returns the mean and standard
/// error of each.
template <typename Stat>
std::vector<Estimate> monte_carlo(const BoundContext& ctx, const std::vector<double>& scales,
                                  bool derivative, std::size_t trials, std::uint64_t base,
                                  std::size_t n_stats, Stat stat) {
  std::vector<Estimate> out(n_stats);
  if (ctx.density.is_zero() || scales.empty()) {
    // Noise-free: every draw is the zero column.
    ColumnSimulator::Column zero;
    zero.W.assign(scales.size(), cd{});
    zero.dW.assign(scales.size(), cd{});
    std::vector<double> v(n_stats, 0.0);
    stat(zero, v);
    for (std::size_t q = 0; q < n_stats; ++q) out[q].mean = v[q];
    return out;
  }
  ColumnOptions opts = ctx.column_options;
  opts.first_derivative = derivative;
  const ColumnSimulator sim(ctx.density, ctx.wavelet, scales, opts);
  std::vector<double> values(trials * n_stats);
  parallel_for(trials, ctx.threads, [&](std::size_t k) {
    const auto col = sim.draw(trial_seed(base, k));
    std::vector<double> v(n_stats, 0.0);
    stat(col, v);
    std::copy(v.begin(), v.end(), values.begin() + static_cast<std::ptrdiff_t>(k * n_stats));
  });
  std::vector<double> column(trials);
  for (std::size_t q = 0; q < n_stats; ++q) {
    for (std::size_t k = 0; k < trials; ++k) column[k] = values[k * n_stats + q];
    const double mean = pairwise_mean(column);
    for (double& c : column) c = (c - mean) * (c - mean);
    const double var = trials > 1 ? pairwise_sum(column) / static_cast<double>(trials - 1) : 0.0;
    out[q] = {mean, std::sqrt(var / static_cast<double>(trials))};
  }
  return out;
}

std::vector<double> pick(const std::vector<double>& scales, const std::vector<std::size_t>& idx) {
  std::vector<double> out(idx.size());
  for (std::size_t q = 0; q < idx.size(); ++q) out[q] = scales[idx[q]];
  return out;
}

/// Peak bin of the clean column and the bins the maxima run over.
struct Split {
  std::size_t peak = 0;
  std::vector<std::size_t> rest;
  bool zero = false;
};

Split split_for(const CleanColumn& c, const std::vector<std::size_t>& domain, Interval I) {
  require(c.size() > 0 && c.W.size() == c.size(), ErrorKind::Dimension, "clean column is empty");
  require(!domain.empty(), ErrorKind::Band, "no grid scale inside the region");
  Split sp;
  sp.peak = domain.front();
  for (std::size_t i : domain) {
    if (c.magnitude(i) > c.magnitude(sp.peak)) sp.peak = i;
  }
  sp.zero = c.magnitude(sp.peak) == 0.0;
  if (!sp.zero) {
    require(I.contains(c.scales[sp.peak]), ErrorKind::Precondition,
            "clean ridge scale " + std::to_string(c.scales[sp.peak]) + " lies outside the interval");
  }
  const auto inside = bins_in(c.scales, I);
  for (std::size_t i : domain) {
    if (!std::binary_search(inside.begin(), inside.end(), i)) sp.rest.push_back(i);
  }
  return sp;
}

std::vector<std::size_t> all_bins(const CleanColumn& c) {
  std::vector<std::size_t> v(c.size());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

double split_delta(const CleanColumn& c, const Split& sp) {
  if (sp.zero) return 0.0;
  double outside = 0.0;
  for (std::size_t i : sp.rest) outside = std::max(outside, c.magnitude(i));
  return c.magnitude(sp.peak) - outside;
}

MuSigma split_mu_sigma(const BoundContext& ctx, const Split& sp) {
  const auto& d = ctx.density;
  const auto& w = ctx.wavelet;
  const double s_f = ctx.clean.scales[sp.peak];
  MuSigma r;
  r.sigma = std::sqrt(spectral_moment(d, w, s_f));
  double worst = 0.0;
  for (std::size_t i : sp.rest) worst = std::max(worst, std::sqrt(spectral_moment(d, w, ctx.clean.scales[i])));
  r.sigma += worst;
  r.mu = mean_abs_W(d, w, s_f);
  if (ctx.analytic_mu) {
    r.method = "dudley";
    if (!sp.rest.empty()) r.mu += dudley_constants(d, w).sup_bound;
    return r;
  }
  r.method = "mc";
  require(ctx.mc_trials >= 100, ErrorKind::InsufficientTrials,
          "Monte Carlo needs at least 100 trials, got " + std::to_string(ctx.mc_trials));
  if (sp.rest.empty()) return r;
  const auto est = monte_carlo(ctx, pick(ctx.clean.scales, sp.rest), false, ctx.mc_trials,
                               ctx.base_seed ^ kMuSeedMix, 1,
                               [](const ColumnSimulator::Column& col, std::vector<double>& v) {
                                 for (const cd& z : col.W) v[0] = std::max(v[0], std::abs(z));
                               });
  r.mu += est[0].mean;
  r.mu_stderr = est[0].stderr_;
  return r;
}

BoundReport report_from(double delta, const MuSigma& ms) {
  BoundReport rep;
  rep.delta = delta;
  rep.mu = ms.mu;
  rep.mu_stderr = ms.mu_stderr;
  rep.sigma = ms.sigma;
  rep.method = ms.method;
  rep.applicable = delta > ms.mu;
  if (rep.applicable) {
    const double gap = delta - ms.mu;
    rep.lower_bound = ms.sigma > 0.0 ? 1.0 - std::exp(-(gap * gap) / (ms.sigma * ms.sigma)) : 1.0;
  }
  return rep;
}

std::size_t argmax_abs(std::span<const cd> f, std::span<const cd> noise,
                       const std::vector<std::size_t>& bins) {
  std::size_t best = bins.front();
  double best_v = -1.0;
  for (std::size_t q = 0; q < bins.size(); ++q) {
    const double v = std::abs(f[bins[q]] + noise[q]);
    if (v > best_v) {
      best_v = v;
      best = bins[q];
    }
  }
  return best;
}

}  // namespace

bool Interval::contains(double s) const {
  constexpr double kTol = 1e-9;
  return s >= lo * (1.0 - kTol) && s <= hi * (1.0 + kTol);
}

std::vector<std::size_t> bins_in(const std::vector<double>& scales, Interval I) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (I.contains(scales[i])) out.push_back(i);
  }
  return out;
}

CleanColumn clean_column(const AwtField& field, const ScalogramField& S, std::size_t t_index) {
  require(field.dW.has_value(), ErrorKind::MissingChannel, "clean column needs the dW channel");
  require(S.d2S.has_value(), ErrorKind::MissingChannel, "clean column needs the d2S channel");
  CleanColumn c;
  c.scales = field.grid.scales();
  c.W = column(field.W, t_index);
  c.dW = column(*field.dW, t_index);
  c.d2S = column(*S.d2S, t_index);
  return c;
}

double delta_I(const BoundContext& ctx, Interval I) {
  return split_delta(ctx.clean, split_for(ctx.clean, all_bins(ctx.clean), I));
}

MuSigma mu_sigma_I(const BoundContext& ctx, Interval I) {
  return split_mu_sigma(ctx, split_for(ctx.clean, all_bins(ctx.clean), I));
}

BoundReport interval_lower_bound(const BoundContext& ctx, Interval I) {
  const Split sp = split_for(ctx.clean, all_bins(ctx.clean), I);
  return report_from(split_delta(ctx.clean, sp), split_mu_sigma(ctx, sp));
}

BoundReport band_lower_bound(const BoundContext& ctx, Interval band, Interval I_m) {
  require(I_m.lo >= band.lo * (1 - 1e-12) && I_m.hi <= band.hi * (1 + 1e-12), ErrorKind::Precondition,
          "interval must lie inside the band");
  const Split sp = split_for(ctx.clean, bins_in(ctx.clean.scales, band), I_m);
  return report_from(split_delta(ctx.clean, sp), split_mu_sigma(ctx, sp));
}

Interval inflection_interval(const std::vector<double>& scales, const std::vector<double>& d2S,
                             double s_fm) {
  require(scales.size() == d2S.size() && scales.size() >= 2, ErrorKind::Dimension,
          "inflection search needs matching scale and d2S columns");
  auto crossing = [&](std::size_t i) {
    const double a = d2S[i], b = d2S[i + 1];
    const double f = a / (a - b);
    return scales[i] + f * (scales[i + 1] - scales[i]);
  };
  // First bin at or above s_fm.
  const auto at = static_cast<std::size_t>(
      std::lower_bound(scales.begin(), scales.end(), s_fm * (1 - 1e-12)) - scales.begin());
  Interval out{0.0, 0.0};
  bool lo_found = false, hi_found = false;
  for (std::size_t i = std::min(at, scales.size() - 1); i-- > 0;) {
    if ((d2S[i] < 0.0) != (d2S[i + 1] < 0.0)) {
      out.lo = crossing(i);
      lo_found = true;
      break;
    }
  }
  for (std::size_t i = at; i + 1 < scales.size(); ++i) {
    if ((d2S[i] < 0.0) != (d2S[i + 1] < 0.0)) {
      out.hi = crossing(i);
      hi_found = true;
      break;
    }
  }
  require(lo_found, ErrorKind::Band, "no inflection point below the ridge scale on the grid");
  require(hi_found, ErrorKind::Band, "no inflection point above the ridge scale on the grid");
  return out;
}

DeviationBoundInputs deviation_inputs(const BoundContext& ctx, Interval band,
                                      std::vector<double> epsilons) {
  const auto& c = ctx.clean;
  require(c.dW.size() == c.size() && c.d2S.size() == c.size(), ErrorKind::MissingChannel,
          "deviation bound needs dW and d2S on the clean column");
  const auto bins = bins_in(c.scales, band);
  require(bins.size() >= 3, ErrorKind::Band, "band must hold at least three grid scales");

  DeviationBoundInputs in;
  in.band = {c.scales[bins.front()], c.scales[bins.back()]};
  in.epsilons = std::move(epsilons);
  std::size_t peak = bins.front();
  for (std::size_t i : bins) {
    if (c.magnitude(i) > c.magnitude(peak)) peak = i;
  }
  in.s_fm = c.scales[peak];
  in.inflection = inflection_interval(c.scales, c.d2S, in.s_fm);
  require(in.inflection.lo < in.band.lo && in.band.hi < in.inflection.hi, ErrorKind::Precondition,
          "band [" + std::to_string(in.band.lo) + ", " + std::to_string(in.band.hi) +
              "] is not inside the inflection interval (" + std::to_string(in.inflection.lo) +
              ", " + std::to_string(in.inflection.hi) + ")");

  in.L = INFINITY;
  std::array<double, 4> sig2{};
  for (std::size_t i : bins) {
    in.L = std::min(in.L, std::abs(c.d2S[i]));
    const double m0 = spectral_moment(ctx.density, ctx.wavelet, c.scales[i], MomentChannel::W);
    const double m1 = spectral_moment(ctx.density, ctx.wavelet, c.scales[i], MomentChannel::dW);
    sig2[0] = std::max(sig2[0], std::norm(c.dW[i]) * m0);
    sig2[1] = std::max(sig2[1], std::norm(c.W[i]) * m1);
    sig2[2] = std::max(sig2[2], m0);
    sig2[3] = std::max(sig2[3], m1);
  }
  for (std::size_t k = 0; k < 4; ++k) in.sigma[k] = std::sqrt(sig2[k]);
  require(in.L > 0.0, ErrorKind::Numerical, "d2S vanishes inside the band");

  require(ctx.mc_trials >= 100, ErrorKind::InsufficientTrials,
          "Monte Carlo needs at least 100 trials, got " + std::to_string(ctx.mc_trials));
  const auto est = monte_carlo(
      ctx, pick(c.scales, bins), true, ctx.mc_trials, ctx.base_seed ^ kMuSeedMix, 4,
      [&](const ColumnSimulator::Column& col, std::vector<double>& v) {
        for (std::size_t q = 0; q < bins.size(); ++q) {
          const std::size_t i = bins[q];
          v[0] = std::max(v[0], std::abs(c.dW[i] * col.W[q]));
          v[1] = std::max(v[1], std::abs(c.W[i] * col.dW[q]));
          v[2] = std::max(v[2], std::abs(col.W[q]));
          v[3] = std::max(v[3], std::abs(col.dW[q]));
        }
      });
  for (std::size_t k = 0; k < 4; ++k) {
    in.mu[k] = est[k].mean;
    in.mu_stderr[k] = est[k].stderr_;
  }
  return in;
}

double deviation_sum(const DeviationBoundInputs& in, double epsilon) {
  double total = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const double gap = epsilon / 6.0 - in.mu[k] / in.L;
    const double s2 = in.sigma[k] * in.sigma[k];
    total += s2 > 0.0 ? std::exp(-(in.L * in.L / s2) * gap * gap) : 0.0;
  }
  for (std::size_t k = 2; k < 4; ++k) {
    const double gap = std::sqrt(epsilon / 6.0) - in.mu[k] / std::sqrt(in.L);
    const double s2 = in.sigma[k] * in.sigma[k];
    total += s2 > 0.0 ? std::exp(-(in.L / s2) * gap * gap) : 0.0;
  }
  return total;
}

DeviationReport deviation_upper_bound(const DeviationBoundInputs& in, const BoundContext& ctx) {
  DeviationReport rep;
  const auto& c = ctx.clean;
  const auto bins = bins_in(c.scales, in.band);
  require(bins.size() >= 3, ErrorKind::Band, "band must hold at least three grid scales");

  // Interior of B against its two endpoint bins.
  Split sp;
  sp.peak = bins.front();
  for (std::size_t i : bins) {
    if (c.magnitude(i) > c.magnitude(sp.peak)) sp.peak = i;
  }
  sp.zero = c.magnitude(sp.peak) == 0.0;
  sp.rest = {bins.front(), bins.back()};
  require(sp.peak != bins.front() && sp.peak != bins.back(), ErrorKind::Precondition,
          "clean ridge sits on a band endpoint");
  rep.interior = report_from(split_delta(c, sp), split_mu_sigma(ctx, sp));

  rep.epsilon_lo = 6.0 / in.L *
                   std::max({in.mu[0], in.mu[1], in.mu[2] * in.mu[2], in.mu[3] * in.mu[3]});
  rep.epsilon_hi = std::min(in.s_fm - in.band.lo, in.band.hi - in.s_fm);
  if (!rep.interior.applicable) {
    rep.diagnostic = "prefactor inapplicable: delta <= mu on the band interior";
    return rep;
  }
  const double prefactor = *rep.interior.lower_bound;
  for (double eps : in.epsilons) {
    if (!(eps > rep.epsilon_lo && eps < rep.epsilon_hi)) continue;
    EpsilonBound e;
    e.epsilon = eps;
    e.admissible = true;
    e.raw = deviation_sum(in, eps) / prefactor;
    e.bound = std::min(e.raw, 1.0);
    rep.ladder.push_back(e);
  }
  if (rep.ladder.empty()) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "no admissible epsilon: window is (%.6g, %.6g)", rep.epsilon_lo,
                  rep.epsilon_hi);
    rep.diagnostic = buf;
  }
  return rep;
}

double default_h_minus(const SpectralDensity& d) {
  const auto H = d.long_memory();
  return H ? 0.9 * std::min(*H, 1.0) : 1.0;
}

namespace {

double golden_max(const std::function<double(double)>& f, double a, double b) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 60 && b - a > 1e-10 * (1 + std::abs(a)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    }
  }
  return std::max(f1, f2);
}

}  // namespace

DudleyConstants dudley_constants(const SpectralDensity& d, const WaveletSpec& w,
                                 std::optional<double> H_minus) {
  const auto c1 = d.c1_bound();
  require(c1.has_value(), ErrorKind::Configuration,
          "Dudley constants need a C1 tail bound on the spectral density");
  DudleyConstants k;
  k.C1 = *c1;
  k.gamma = d.tail_gamma();
  const auto H = d.long_memory();
  const double h_cap = H ? std::min(*H, 1.0) : 1.0;
  k.H_minus = H_minus.value_or(default_h_minus(d));
  require(k.H_minus > 0.0 && k.H_minus <= h_cap, ErrorKind::Configuration,
          "H_minus must lie in (0, min(H, 1)]");

  k.psi_sup = peak_magnitude(w);
  k.psi_lip = lipschitz_estimate(w, log_grid(1e-6, 1e6, 4801));
  k.variance = d.variance();
  const double g = k.gamma;
  const double inner = k.C1 * (1.0 / g + 2.0 / (2.0 - g)) * std::pow(2.0 * k.psi_sup, 2.0 - g) *
                           std::pow(k.psi_lip, g) +
                       2.0 * k.psi_sup * k.psi_sup * k.variance;
  k.C2 = std::max(1.0, std::sqrt(inner));

  // sup_s E|W(0,s)|^2: coarse log scan, then golden section around the best.
  auto moment_at = [&](double u) { return spectral_moment(d, w, std::exp(u)); };
  const double u_lo = std::log(1e-6), u_hi = std::log(1e6);
  const int n_scan = 97;
  std::vector<double> scan(n_scan);
  for (int i = 0; i < n_scan; ++i) scan[i] = moment_at(u_lo + (u_hi - u_lo) * i / (n_scan - 1));
  const int best = static_cast<int>(std::max_element(scan.begin(), scan.end()) - scan.begin());
  const double step = (u_hi - u_lo) / (n_scan - 1);
  const double a = u_lo + step * std::max(0, best - 1);
  const double b = u_lo + step * std::min(n_scan - 1, best + 1);
  const double sup_moment = std::max(scan[best], golden_max(moment_at, a, b));
  k.Dcal = std::max(2.0, std::sqrt(sup_moment));

  // T: smallest s in [1, 1e6] beyond which E|W(0,s)|^2 <= s^-H- on the scan.
  auto fails = [&](double s) { return spectral_moment(d, w, s) > std::pow(s, -k.H_minus); };
  const int per_decade = 10;
  const int n_t = 6 * per_decade;
  int last_fail = -1;
  for (int i = n_t; i >= 0; --i) {
    if (fails(std::pow(10.0, double(i) / per_decade))) {
      last_fail = i;
      break;
    }
  }
  if (last_fail < 0) {
    k.T = 1.0;
  } else if (last_fail == n_t) {
    k.T = 1e6;
    k.T_found = false;
  } else {
    double lo = double(last_fail) / per_decade, hi = double(last_fail + 1) / per_decade;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (fails(std::pow(10.0, mid)) ? lo : hi) = mid;
    }
    k.T = std::pow(10.0, hi);
  }

  const double D = k.Dcal;
  k.sup_bound = 4.0 * (std::sqrt(std::log(D)) * D * D * D / ((D - 1) * (D - 1)) *
                           std::sqrt(1.0 / g + 1.0 / k.H_minus) +
                       (std::sqrt(std::log(k.C2) / g) + std::sqrt(std::log(k.T))) * D * D / (D - 1));
  return k;
}

HolderReport holder_check(const SpectralDensity& d, const WaveletSpec& w, const DudleyConstants& c,
                          const std::vector<std::pair<double, double>>& pairs) {
  HolderReport rep;
  for (auto [s1, s2] : pairs) {
    require(s1 > 0.0 && s2 > 0.0, ErrorKind::Domain, "scales must be positive");
    require(std::abs(s1 - s2) <= 1.0, ErrorKind::Precondition, "Hoelder pairs need |s1 - s2| <= 1");
    HolderPair p{s1, s2, 0.0, c.C2 * std::pow(std::abs(s1 - s2), c.gamma / 2.0), false};
    p.distance = s1 == s2 ? 0.0 : increment_distance(d, w, s1, s2);
    p.violated = p.distance > p.bound;
    rep.violations += p.violated;
    rep.pairs.push_back(p);
  }
  return rep;
}

double Proportion::standard_error() const {
  if (trials == 0) return 0.0;
  const double p = p_hat();
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

Proportion empirical_interval_probability(const BoundContext& ctx, Interval I, std::size_t trials,
                                          std::uint64_t seed) {
  const auto& c = ctx.clean;
  const auto bins = all_bins(c);
  std::vector<char> hit(trials, 0);
  if (ctx.density.is_zero()) {
    const std::vector<cd> none(c.size());
    std::fill(hit.begin(), hit.end(), I.contains(c.scales[argmax_abs(c.W, none, bins)]));
  } else {
    const ColumnSimulator sim(ctx.density, ctx.wavelet, c.scales, ctx.column_options);
    parallel_for(trials, ctx.threads, [&](std::size_t k) {
      const auto col = sim.draw(trial_seed(seed, k));
      hit[k] = I.contains(c.scales[argmax_abs(c.W, col.W, bins)]);
    });
  }
  Proportion p;
  p.trials = trials;
  p.hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  return p;
}

std::vector<Proportion> empirical_exceedance(const BoundContext& ctx, Interval band, double s_fm,
                                             const std::vector<double>& epsilons,
                                             std::size_t trials, std::uint64_t seed) {
  const auto& c = ctx.clean;
  const auto bins = bins_in(c.scales, band);
  require(bins.size() >= 3, ErrorKind::Band, "band must hold at least three grid scales");
  std::vector<std::size_t> pick_idx(trials);
  auto draw_all = [&](auto&& noise_of) {
    parallel_for(trials, ctx.threads, [&](std::size_t k) {
      const auto z = noise_of(k);
      pick_idx[k] = argmax_abs(c.W, z, bins);
    });
  };
  if (ctx.density.is_zero()) {
    draw_all([&](std::size_t) { return std::vector<cd>(bins.size()); });
  } else {
    const ColumnSimulator sim(ctx.density, ctx.wavelet, pick(c.scales, bins), ctx.column_options);
    draw_all([&](std::size_t k) { return sim.draw(trial_seed(seed, k)).W; });
  }
  std::vector<Proportion> out(epsilons.size());
  for (std::size_t k = 0; k < trials; ++k) {
    const std::size_t i = pick_idx[k];
    if (i == bins.front() || i == bins.back()) continue;
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
      ++out[e].trials;
      out[e].hits += std::abs(c.scales[i] - s_fm) > epsilons[e];
    }
  }
  return out;
}

}  // namespace ridgelab
