#include "ridgelab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "ridgelab/csv.hpp"
#include "ridgelab/errors.hpp"
#include "ridgelab/parallel.hpp"
#include "ridgelab/random.hpp"

namespace ridgelab {

using nlohmann::json;
using cd = std::complex<double>;

namespace {

constexpr std::uint64_t kHolderPairsSeed = 0x5bd1e9955bd1e995ULL;

std::string out_path(const ExperimentConfig& c, const std::string& name) {
  return (std::filesystem::path(c.output_dir) / name).string();
}

void prepare_output(const ExperimentConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  require(!ec, ErrorKind::Input, "cannot create output directory " + c.output_dir);
  auto out = csv::open_output(out_path(c, "resolved_config.json"));
  out << to_json(c).dump(2) << '\n';
}

void write_json(const std::string& path, const json& j) {
  auto out = csv::open_output(path);
  out << j.dump(2) << '\n';
}

TimeScaleGrid make_grid(const ExperimentConfig& c, double t0, double fs, std::size_t n) {
  return TimeScaleGrid::from_range(t0, fs, n, c.grid.s_min, c.grid.s_max, c.grid.voices);
}

std::size_t time_index(const ExperimentConfig& c, std::optional<double> t, std::size_t n) {
  if (!t) return n / 2;
  const double k = std::round((*t - c.signal.t0) * c.signal.fs);
  require(k >= 0.0 && k < static_cast<double>(n), ErrorKind::Configuration,
          "column time lies outside the signal window");
  return static_cast<std::size_t>(k);
}

double mean_square(const std::vector<double>& f) {
  std::vector<double> sq(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) sq[k] = f[k] * f[k];
  return pairwise_mean(sq);
}

/// Noise density seen by single-column experiments: the config density
/// times gain^2, the gain fixed or solved from the signal power.
SpectralDensity column_noise(const ExperimentConfig& c, const SpectralDensity& d,
                             const std::vector<double>& f, double snr) {
  if (c.noise_gain) return d.scaled(*c.noise_gain * *c.noise_gain);
  const double power = mean_square(f);
  require(power > 0.0, ErrorKind::Configuration, "an SNR target needs a nonzero signal");
  return d.scaled(power / (d.variance() * std::pow(10.0, snr / 10.0)));
}

std::string u64(std::uint64_t v) { return std::to_string(v); }

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return v;
}

double mean_of(const std::vector<double>& v) { return pairwise_mean(v); }

double variance_of(const std::vector<double>& v, double mean) {
  std::vector<double> d(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) d[k] = (v[k] - mean) * (v[k] - mean);
  return v.size() > 1 ? pairwise_sum(d) / static_cast<double>(v.size() - 1) : 0.0;
}

}  // namespace

const ValidationCheck& ValidationReport::check(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  fail(ErrorKind::Index, "no validation check named " + name);
}

ValidationReport cmd_validate(const ExperimentConfig& c, unsigned threads) {
  const std::size_t N = c.trials_or(10000);
  require(N >= 1000, ErrorKind::InsufficientTrials,
          "validate: the Kolmogorov-Smirnov checks need at least 1000 columns, got " +
              std::to_string(N));
  prepare_output(c);
  const auto d = c.density.build();
  const auto& w = c.wavelet;

  const auto scales = log_spaced(c.grid.s_min, c.grid.s_max, 5);
  const std::size_t p = scales.size();
  const std::size_t M = 10 * N;
  std::vector<cd> W(M * p);
  {
    const ColumnSimulator sim(d, w, scales);
    parallel_for(M, threads, [&](std::size_t k) {
      const auto col = sim.draw(trial_seed(c.base_seed, k));
      std::copy(col.W.begin(), col.W.end(), W.begin() + static_cast<std::ptrdiff_t>(k * p));
    });
  }
  std::vector<double> m(p);
  for (std::size_t i = 0; i < p; ++i) m[i] = spectral_moment(d, w, scales[i]);
  auto at = [&](std::size_t k, std::size_t i) { return W[k * p + i]; };

  ValidationReport report;

  {
    ValidationCheck chk{"exp1_law", true, json::array()};
    auto run = [&](const std::string& label, auto&& value, double norm) {
      std::vector<double> x(N);
      for (std::size_t k = 0; k < N; ++k) x[k] = value(k) / norm;
      const auto ks = ks_test_exp1(x);
      const double mean = mean_of(x);
      const bool ok = ks.p_value >= 0.01 && mean >= 0.97 && mean <= 1.03;
      chk.pass = chk.pass && ok;
      chk.stats.push_back(
          {{"case", label}, {"ks_statistic", ks.statistic}, {"p_value", ks.p_value}, {"mean", mean}, {"pass", ok}});
    };
    for (std::size_t i = 0; i < p; ++i) {
      run("s=" + csv::number(scales[i]), [&](std::size_t k) { return std::norm(at(k, i)); }, m[i]);
    }
    const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {1, 2}, {2, 4}};
    for (auto [i, j] : pairs) {
      const double dist = increment_distance(d, w, scales[i], scales[j]);
      run("s1=" + csv::number(scales[i]) + ",s2=" + csv::number(scales[j]),
          [&](std::size_t k) { return std::norm(at(k, i) - at(k, j)); }, dist * dist);
    }
    report.checks.push_back(std::move(chk));
  }

  {
    ValidationCheck chk{"variance_identity", true, json::array()};
    for (std::size_t i = 0; i < p; ++i) {
      std::vector<double> s(M);
      for (std::size_t k = 0; k < M; ++k) s[k] = std::norm(at(k, i));
      const double mean = mean_of(s);
      const double ratio = variance_of(s, mean) / (mean * mean);
      const bool ok = ratio >= 0.9 && ratio <= 1.1;
      chk.pass = chk.pass && ok;
      chk.stats.push_back({{"scale", scales[i]}, {"samples", M}, {"ratio", ratio}, {"pass", ok}});
    }
    report.checks.push_back(std::move(chk));
  }

  {
    ValidationCheck chk{"circular_symmetry", true, json::array()};
    const double limit = 4.0 / std::sqrt(static_cast<double>(N));
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i; j < p; ++j) {
        std::vector<double> re(N), im(N);
        for (std::size_t k = 0; k < N; ++k) {
          const cd z = at(k, i) * at(k, j);
          re[k] = z.real();
          im[k] = z.imag();
        }
        const double pseudo = std::abs(cd(mean_of(re), mean_of(im)));
        const double bound = limit * std::sqrt(m[i] * m[j]);
        const bool ok = pseudo < bound;
        chk.pass = chk.pass && ok;
        chk.stats.push_back({{"s1", scales[i]}, {"s2", scales[j]}, {"pseudo_covariance", pseudo},
                             {"bound", bound}, {"pass", ok}});
      }
    }
    report.checks.push_back(std::move(chk));
  }

  {
    ValidationCheck chk{"scalogram_covariance", true, json::array()};
    const std::pair<std::size_t, std::size_t> pairs[] = {{0, 1}, {1, 2}, {2, 3}};
    for (auto [i, j] : pairs) {
      std::vector<double> a(M), b(M);
      for (std::size_t k = 0; k < M; ++k) {
        a[k] = std::norm(at(k, i));
        b[k] = std::norm(at(k, j));
      }
      const double ma = mean_of(a), mb = mean_of(b);
      std::vector<double> prod(M);
      for (std::size_t k = 0; k < M; ++k) prod[k] = (a[k] - ma) * (b[k] - mb);
      const double cov = mean_of(prod);
      const double se = std::sqrt(variance_of(prod, cov) / static_cast<double>(M));
      const double theory = std::norm(cross_moment(d, w, scales[i], scales[j]));
      const bool ok = theory >= 0.0 && std::abs(cov - theory) <= 5.0 * se;
      chk.pass = chk.pass && ok;
      chk.stats.push_back({{"s1", scales[i]}, {"s2", scales[j]}, {"empirical", cov}, {"stderr", se},
                           {"quadrature", theory}, {"pass", ok}});
    }
    report.checks.push_back(std::move(chk));
  }

  {
    ValidationCheck chk{"holder", true, json::object()};
    const auto consts = dudley_constants(d, w, c.density.H_minus);
    Rng rng(c.base_seed ^ kHolderPairsSeed);
    std::vector<std::pair<double, double>> pairs;
    while (pairs.size() < 100) {
      const double s1 = c.grid.s_min + (c.grid.s_max - c.grid.s_min) * rng.uniform();
      const double s2 = s1 + (2.0 * rng.uniform() - 1.0);
      if (s2 > 0.0) pairs.emplace_back(s1, s2);
    }
    const auto h = holder_check(d, w, consts, pairs);
    chk.pass = h.violations == 0;
    chk.stats = {{"pairs", h.pairs.size()}, {"violations", h.violations}, {"C2", consts.C2},
                 {"gamma", consts.gamma}};
    report.checks.push_back(std::move(chk));
  }

  {
    ValidationCheck chk{"boundary_decay", true, json::object()};
    const double omega = center_frequency(w);
    const double lo = omega / (5.0 * 0.5 * c.signal.fs);
    const double hi = 50.0 * omega * (c.signal.t1 - c.signal.t0);
    const auto sc = log_spaced(lo, hi, 41);
    const ColumnSimulator sim(d, w, sc);
    std::vector<double> energy(sc.size() * N);
    parallel_for(N, threads, [&](std::size_t k) {
      const auto col = sim.draw(trial_seed(c.base_seed ^ kHolderPairsSeed, k));
      for (std::size_t i = 0; i < sc.size(); ++i) energy[i * N + k] = std::norm(col.W[i]);
    });
    std::vector<double> profile(sc.size());
    for (std::size_t i = 0; i < sc.size(); ++i) {
      profile[i] = pairwise_mean(std::span<const double>(energy).subspan(i * N, N));
    }
    const double peak = *std::max_element(profile.begin(), profile.end());
    const double first = profile.front() / peak;
    const double last = profile.back() / peak;
    chk.pass = first < 0.1 && last < 0.1;
    chk.stats = {{"s_lo", lo}, {"s_hi", hi}, {"edge_ratio_lo", first}, {"edge_ratio_hi", last}};
    report.checks.push_back(std::move(chk));
  }

  report.pass = std::all_of(report.checks.begin(), report.checks.end(),
                            [](const ValidationCheck& k) { return k.pass; });
  json out = {{"pass", report.pass}, {"columns", N}, {"checks", json::array()}};
  for (const auto& k : report.checks) {
    out["checks"].push_back({{"name", k.name}, {"pass", k.pass}, {"stats", k.stats}});
  }
  write_json(out_path(c, "validation.json"), out);
  return report;
}

std::vector<TrialRecord> run_trials(const ExperimentConfig& c, unsigned threads) {
  const auto f = sample_signal(c.signal);
  const std::size_t n = f.size();
  const double fs = c.signal.fs;
  const auto grid = make_grid(c, c.signal.t0, fs, n);
  const auto clean = ridge_argmax(scalogram(awt_forward(f, fs, c.wavelet, grid)));
  const auto region = valid_region(grid, c.wavelet);
  require(region.size() > 0, ErrorKind::Configuration,
          "the signal window is too short for the largest scale: no valid region");
  const double omega = center_frequency(c.wavelet);
  const auto density = c.density.build();

  std::vector<TrialRecord> out(c.trials_or(200));
  parallel_for(out.size(), threads, [&](std::size_t k) {
    const auto start = std::chrono::steady_clock::now();
    TrialRecord& r = out[k];
    r.trial_index = k;
    r.seed = trial_seed(c.base_seed, k);
    auto noise = synthesize_path(density, n, fs, r.seed).samples;
    if (c.noise_gain) {
      r.gain = *c.noise_gain;
      const auto scaled = mix(std::vector<double>(n, 0.0), noise, r.gain);
      r.snr_db = r.gain > 0.0 ? snr_db(f, scaled) : std::numeric_limits<double>::infinity();
    } else {
      r.snr_db = c.snr_targets[k % c.snr_targets.size()];
      r.gain = gain_for_snr(f, noise, r.snr_db);
    }
    const auto y = mix(f, noise, r.gain);
    const auto S = scalogram(awt_forward(y, fs, c.wavelet, grid));
    const auto arg = ridge_argmax(S);
    const auto dev = deviation_metrics(arg, clean, omega, region);
    r.delta = dev.delta;
    r.delta_tilde = dev.delta_tilde;
    r.delta_dp = deviation_metrics(ridge_penalized_dp(S, c.lambda), clean, omega, region).delta;
    for (std::size_t t = region.begin; t < region.end; ++t) r.ties += arg.tie_count[t] > 1;
    r.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  });
  return out;
}

double quantile(std::vector<double> v, double p) {
  require(!v.empty(), ErrorKind::InsufficientData, "quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

BoxSummary box_summary(double snr, std::vector<double> values) {
  BoxSummary b;
  b.snr_db = snr;
  b.n = values.size();
  b.median = quantile(values, 0.5);
  b.q1 = quantile(values, 0.25);
  b.q3 = quantile(values, 0.75);
  const double fence = 1.5 * (b.q3 - b.q1);
  b.whisker_lo = b.q1;
  b.whisker_hi = b.q3;
  for (double v : values) {
    if (v >= b.q1 - fence) b.whisker_lo = std::min(b.whisker_lo, v);
    if (v <= b.q3 + fence) b.whisker_hi = std::max(b.whisker_hi, v);
  }
  return b;
}

SweepResult cmd_snr_sweep(const ExperimentConfig& c, unsigned threads) {
  prepare_output(c);
  SweepResult res;
  res.trials = run_trials(c, threads);

  // A fixed gain gives a different realized SNR per trial; those are binned
  // to the nearest whole dB.
  std::map<double, std::vector<double>> by_snr, by_snr_tilde;
  for (const auto& r : res.trials) {
    const double key = c.noise_gain ? std::round(r.snr_db) : r.snr_db;
    by_snr[key].push_back(r.delta);
    by_snr_tilde[key].push_back(r.delta_tilde);
  }
  for (const auto& [snr, v] : by_snr) res.bins.push_back(box_summary(snr, v));

  csv::Writer scatter(out_path(c, "snr_scatter.csv"));
  scatter.header({"snr_db", "delta", "delta_tilde"});
  for (const auto& r : res.trials) scatter.row(std::vector<double>{r.snr_db, r.delta, r.delta_tilde});

  csv::Writer box(out_path(c, "snr_box.csv"));
  box.header({"metric", "snr_db", "n", "median", "q1", "q3", "whisker_lo", "whisker_hi"});
  auto emit = [&](const std::string& metric, const BoxSummary& b) {
    box.row({metric, csv::number(b.snr_db), std::to_string(b.n), csv::number(b.median),
             csv::number(b.q1), csv::number(b.q3), csv::number(b.whisker_lo),
             csv::number(b.whisker_hi)});
  };
  for (const auto& b : res.bins) emit("delta", b);
  for (const auto& [snr, v] : by_snr_tilde) emit("delta_tilde", box_summary(snr, v));

  csv::Writer trials(out_path(c, "trials.csv"));
  trials.header({"trial_index", "seed", "snr_db", "gain", "delta", "delta_tilde", "delta_dp", "ties"});
  for (const auto& r : res.trials) {
    trials.row({std::to_string(r.trial_index), u64(r.seed), csv::number(r.snr_db),
                csv::number(r.gain), csv::number(r.delta), csv::number(r.delta_tilde),
                csv::number(r.delta_dp), std::to_string(r.ties)});
  }

  csv::Writer timing(out_path(c, "timing.csv"));
  timing.header({"trial_index", "runtime_ms"});
  for (const auto& r : res.trials) {
    timing.row({std::to_string(r.trial_index), csv::number(r.runtime_ms)});
  }
  return res;
}

CompareResult cmd_ridge_compare(const ExperimentConfig& c, unsigned threads) {
  require(c.trials_or(200) >= 30, ErrorKind::InsufficientTrials,
          "ridge-compare needs at least 30 trials");
  prepare_output(c);
  CompareResult res;
  res.trials = run_trials(c, threads);
  std::vector<double> argmax, dp;
  for (const auto& r : res.trials) {
    argmax.push_back(r.delta);
    dp.push_back(r.delta_dp);
  }
  res.median_argmax = quantile(argmax, 0.5);
  res.median_dp = quantile(dp, 0.5);

  csv::Writer out(out_path(c, "ridge_compare.csv"));
  out.header({"trial_index", "seed", "snr_db", "delta_argmax", "delta_dp"});
  for (const auto& r : res.trials) {
    out.row({std::to_string(r.trial_index), u64(r.seed), csv::number(r.snr_db),
             csv::number(r.delta), csv::number(r.delta_dp)});
  }

  res.wilcoxon = wilcoxon_signed_rank(dp, argmax, Alternative::Less);
  write_json(out_path(c, "ridge_compare.json"),
             {{"lambda", c.lambda},
              {"trials", res.trials.size()},
              {"alternative", "delta_dp < delta_argmax"},
              {"statistic", res.wilcoxon.statistic},
              {"p_value", res.wilcoxon.p_value},
              {"median_delta_argmax", res.median_argmax},
              {"median_delta_dp", res.median_dp}});
  return res;
}

namespace {

json report_entry(const std::string& quantity, double value, const std::string& method,
                  bool applicable, std::optional<double> se = std::nullopt) {
  json j = {{"quantity", quantity}, {"value", value}, {"method", method}, {"applicable", applicable}};
  if (se) j["stderr"] = *se;
  return j;
}

}  // namespace

BoundsResult cmd_bounds(const ExperimentConfig& c, unsigned threads) {
  const auto& bc = c.bounds;
  require(bc.interval || bc.interval_bins || bc.band || bc.band_fraction, ErrorKind::Configuration,
          "bounds needs an interval (interval or interval_bins) or a band (band or band_fraction)");
  prepare_output(c);
  const auto f = sample_signal(c.signal);
  const std::size_t n = f.size();
  const auto grid = make_grid(c, c.signal.t0, c.signal.fs, n);
  const Channels ch{.dW = true, .d2W = true};
  const auto field = awt_forward(f, c.signal.fs, c.wavelet, grid, ch);
  const std::size_t t_index = time_index(c, bc.t, n);
  const double snr = bc.snr_db.value_or(c.snr_targets.empty() ? 0.0 : c.snr_targets.front());

  BoundContext ctx{.wavelet = c.wavelet,
                   .density = column_noise(c, c.density.build(), f, snr),
                   .clean = clean_column(field, scalogram(field, ch), t_index)};
  ctx.mc_trials = bc.mc_trials;
  ctx.base_seed = c.base_seed;
  ctx.analytic_mu = bc.analytic_mu;
  ctx.threads = threads;
  const std::size_t trials = c.trials_or(200);
  const auto& scales = ctx.clean.scales;

  BoundsResult res;
  json reports = json::array();
  json ladder = json::array();
  std::string diagnostic;

  std::size_t peak = 0;
  for (std::size_t i = 1; i < ctx.clean.size(); ++i) {
    if (ctx.clean.magnitude(i) > ctx.clean.magnitude(peak)) peak = i;
  }

  if (bc.interval || bc.interval_bins) {
    if (bc.interval) {
      res.interval = *bc.interval;
    } else {
      const std::size_t k = *bc.interval_bins;
      res.interval = {scales[peak > k ? peak - k : 0], scales[std::min(peak + k, scales.size() - 1)]};
    }
    const auto r = interval_lower_bound(ctx, res.interval);
    res.interval_report = r;
    reports.push_back(report_entry("delta_I", r.delta, "quadrature", r.applicable));
    reports.push_back(report_entry("mu_I", r.mu, r.method, r.applicable,
                                   r.method == "mc" ? std::optional(r.mu_stderr) : std::nullopt));
    reports.push_back(report_entry("sigma_I", r.sigma, "quadrature", r.applicable));
    if (r.lower_bound) {
      reports.push_back(report_entry("lower_bound", *r.lower_bound, r.method, r.applicable));
    }
    const auto p = empirical_interval_probability(ctx, res.interval, trials,
                                                  trial_seed(c.base_seed, 0x1ULL << 62));
    res.interval_empirical = p;
    reports.push_back(
        report_entry("empirical_probability", p.p_hat(), "mc", r.applicable, p.standard_error()));
  }

  if (bc.band || bc.band_fraction) {
    Interval band;
    if (bc.band) {
      band = *bc.band;
    } else {
      const double s_fm = scales[peak];
      const auto infl = inflection_interval(scales, ctx.clean.d2S, s_fm);
      const double q = *bc.band_fraction;
      band = {s_fm - q * (s_fm - infl.lo), s_fm + q * (infl.hi - s_fm)};
    }
    std::vector<double> eps = bc.epsilons;
    if (eps.empty()) {
      const double span = band.hi - band.lo;
      for (double e = bc.epsilon_step; e < span; e += bc.epsilon_step) eps.push_back(e);
    }
    const auto in = deviation_inputs(ctx, band, eps);
    res.deviation_inputs = in;
    const auto rep = deviation_upper_bound(in, ctx);
    res.deviation = rep;
    diagnostic = rep.diagnostic;
    reports.push_back(report_entry("epsilon_lo", rep.epsilon_lo, "mc", rep.interior.applicable));
    reports.push_back(report_entry("epsilon_hi", rep.epsilon_hi, "quadrature", rep.interior.applicable));
    std::vector<double> admissible;
    for (const auto& e : rep.ladder) admissible.push_back(e.epsilon);
    if (!admissible.empty()) {
      res.exceedance = empirical_exceedance(ctx, band, in.s_fm, admissible, trials,
                                            trial_seed(c.base_seed, 0x1ULL << 61));
    }
    csv::Writer out(out_path(c, "epsilon_ladder.csv"));
    out.header({"epsilon", "bound", "empirical", "se"});
    for (std::size_t k = 0; k < rep.ladder.size(); ++k) {
      const auto& e = rep.ladder[k];
      const auto& p = res.exceedance[k];
      out.row(std::vector<double>{e.epsilon, e.bound, p.p_hat(), p.standard_error()});
      ladder.push_back({{"epsilon", e.epsilon}, {"raw", e.raw}, {"bound", e.bound},
                        {"empirical", p.p_hat()}, {"stderr", p.standard_error()},
                        {"conditioning_trials", p.trials}});
      json entry = report_entry("upper_bound", e.bound, "mc", true);
      entry["epsilon"] = e.epsilon;
      reports.push_back(entry);
    }
    res.report["band"] = {band.lo, band.hi};
    res.report["s_fm"] = in.s_fm;
    res.report["inflection"] = {in.inflection.lo, in.inflection.hi};
  }

  res.report["t_index"] = t_index;
  res.report["snr_db"] = c.noise_gain ? json(nullptr) : json(snr);
  res.report["noise_variance"] = ctx.density.variance();
  res.report["reports"] = reports;
  res.report["ladder"] = ladder;
  res.report["diagnostic"] = diagnostic;
  if (res.interval_report) res.report["interval"] = {res.interval.lo, res.interval.hi};
  write_json(out_path(c, "bounds.json"), res.report);
  return res;
}

HistogramResult cmd_histogram_d2(const ExperimentConfig& c, unsigned threads) {
  const std::size_t N = c.trials_or(1000);
  require(N >= 1000, ErrorKind::InsufficientTrials,
          "histogram-d2 needs at least 1000 trials, got " + std::to_string(N));
  prepare_output(c);
  const auto f = sample_signal(c.signal);
  const std::size_t n = f.size();
  const auto grid = make_grid(c, c.signal.t0, c.signal.fs, n);
  const auto field = awt_forward(f, c.signal.fs, c.wavelet, grid, {.dW = true, .d2W = true});
  const std::size_t t = time_index(c, c.histogram.t, n);
  const auto W = column(field.W, t);
  const auto dW = column(*field.dW, t);
  const auto d2W = column(*field.d2W, t);
  const auto scales = grid.scales();
  const std::size_t p = scales.size();
  const auto noise = column_noise(
      c, c.density.build(), f, c.snr_targets.empty() ? 0.0 : c.snr_targets.front());

  std::optional<ColumnSimulator> sim;
  if (!noise.is_zero()) {
    ColumnOptions opt;
    opt.first_derivative = true;
    opt.second_derivative = true;
    sim.emplace(noise, c.wavelet, scales, opt);
  }

  HistogramResult res;
  res.values.resize(N);
  parallel_for(N, threads, [&](std::size_t k) {
    std::vector<cd> w = W, dw = dW, d2w = d2W;
    if (sim) {
      const auto col = sim->draw(trial_seed(c.base_seed, k));
      for (std::size_t i = 0; i < p; ++i) {
        w[i] += col.W[i];
        dw[i] += col.dW[i];
        d2w[i] += col.d2W[i];
      }
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < p; ++i) {
      if (std::norm(w[i]) > std::norm(w[best])) best = i;
    }
    require(std::norm(w[best]) > 0.0, ErrorKind::ZeroField,
            "histogram-d2: the scalogram column is identically zero");
    res.values[k] = 2.0 * std::norm(dw[best]) + 2.0 * (std::conj(w[best]) * d2w[best]).real();
  });

  const auto [lo_it, hi_it] = std::minmax_element(res.values.begin(), res.values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::size_t bins = c.histogram.bins;
  if (bins == 0) {
    const double iqr = quantile(res.values, 0.75) - quantile(res.values, 0.25);
    const double width = 2.0 * iqr / std::cbrt(static_cast<double>(N));
    bins = width > 0.0 ? static_cast<std::size_t>(std::ceil((hi - lo) / width))
                       : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(N))));
    bins = std::clamp<std::size_t>(bins, 1, 200);
  }
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t b = 0; b <= bins; ++b) {
    res.edges.push_back(lo + span * static_cast<double>(b) / static_cast<double>(bins));
  }
  res.counts.assign(bins, 0);
  std::size_t near_zero = 0;
  for (double v : res.values) {
    const auto b = std::min(bins - 1, static_cast<std::size_t>((v - lo) / span * static_cast<double>(bins)));
    ++res.counts[b];
    near_zero += std::abs(v) <= c.histogram.tol;
  }
  res.near_zero_fraction = static_cast<double>(near_zero) / static_cast<double>(N);

  csv::Writer values(out_path(c, "d2_values.csv"));
  values.header({"trial_index", "seed", "d2S"});
  for (std::size_t k = 0; k < N; ++k) {
    values.row({std::to_string(k), u64(trial_seed(c.base_seed, k)), csv::number(res.values[k])});
  }
  csv::Writer hist(out_path(c, "d2_histogram.csv"));
  hist.header({"bin_lo", "bin_hi", "count"});
  for (std::size_t b = 0; b < bins; ++b) {
    hist.row({csv::number(res.edges[b]), csv::number(res.edges[b + 1]), std::to_string(res.counts[b])});
  }
  write_json(out_path(c, "d2_summary.json"), {{"trials", N},
                                              {"t_index", t},
                                              {"tol", c.histogram.tol},
                                              {"near_zero_fraction", res.near_zero_fraction},
                                              {"min", lo},
                                              {"max", hi},
                                              {"bins", bins}});
  return res;
}

Series read_series_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Input, "cannot read input " + path);
  Series s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorKind::Input,
            path + ":" + std::to_string(line_no) + ": expected `t,x`");
    const std::string a = line.substr(0, comma);
    const std::string b = line.substr(comma + 1, line.find(',', comma + 1) - comma - 1);
    char* end_a = nullptr;
    char* end_b = nullptr;
    const double t = std::strtod(a.c_str(), &end_a);
    const double x = std::strtod(b.c_str(), &end_b);
    const bool numeric = end_a != a.c_str() && *end_a == '\0' && end_b != b.c_str() && *end_b == '\0';
    if (!numeric && s.t.empty() && line_no == 1) continue;  // header
    require(numeric && std::isfinite(t) && std::isfinite(x), ErrorKind::Input,
            path + ":" + std::to_string(line_no) + ": not a numeric `t,x` row");
    s.t.push_back(t);
    s.x.push_back(x);
  }
  require(!s.t.empty(), ErrorKind::Input, path + " holds no samples");
  require(s.t.size() >= 2, ErrorKind::Input, path + " needs at least two samples");
  const double dt = (s.t.back() - s.t.front()) / static_cast<double>(s.t.size() - 1);
  require(dt > 0.0, ErrorKind::Input, path + ": times must increase");
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    const double expected = s.t.front() + static_cast<double>(k) * dt;
    require(std::abs(s.t[k] - expected) <= 1e-4 * dt, ErrorKind::Input,
            path + ": non-uniform sampling at row " + std::to_string(k + 1));
  }
  s.fs = 1.0 / dt;
  return s;
}

void write_heatmap_svg(const std::string& path, const ScalogramField& S, const RidgeTrack* ridge) {
  const std::size_t p = S.S.rows, n = S.S.cols;
  require(p > 0 && n > 0, ErrorKind::Dimension, "heatmap of an empty field");
  const std::size_t cols = std::min<std::size_t>(n, 300);
  const std::size_t rows = std::min<std::size_t>(p, 160);
  constexpr double kCell = 2.0;
  double top = 0.0;
  for (double v : S.S.data) top = std::max(top, v);

  auto out = csv::open_output(path);
  const double width = kCell * static_cast<double>(cols);
  const double height = kCell * static_cast<double>(rows);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" shape-rendering=\"crispEdges\">\n";
  out << "<title>scalogram, 10 log10(S / max S) from -60 dB (black) to 0 dB (white); rows run "
         "from the smallest scale (top) to the largest</title>\n";
  // One rect per run of equal gray levels along a row.
  std::vector<int> level(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t i0 = r * p / rows, i1 = std::max(i0 + 1, (r + 1) * p / rows);
    for (std::size_t q = 0; q < cols; ++q) {
      const std::size_t k0 = q * n / cols, k1 = std::max(k0 + 1, (q + 1) * n / cols);
      double v = 0.0;
      for (std::size_t i = i0; i < i1; ++i) {
        for (std::size_t k = k0; k < k1; ++k) v = std::max(v, S.S(i, k));
      }
      const double db = top > 0.0 && v > 0.0 ? 10.0 * std::log10(v / top) : -60.0;
      level[q] = static_cast<int>(std::lround(255.0 * (std::clamp(db, -60.0, 0.0) + 60.0) / 60.0));
    }
    for (std::size_t q = 0; q < cols;) {
      std::size_t end = q + 1;
      while (end < cols && level[end] == level[q]) ++end;
      char fill[8];
      std::snprintf(fill, sizeof fill, "#%02x%02x%02x", level[q], level[q], level[q]);
      out << "<rect x=\"" << kCell * static_cast<double>(q) << "\" y=\"" << kCell * static_cast<double>(r)
          << "\" width=\"" << kCell * static_cast<double>(end - q) << "\" height=\"" << kCell
          << "\" fill=\"" << fill << "\"/>\n";
      q = end;
    }
  }
  if (ridge && ridge->size() == n) {
    out << "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1\" points=\"";
    for (std::size_t q = 0; q < cols; ++q) {
      const std::size_t k = std::min(n - 1, (2 * q + 1) * n / (2 * cols));
      const double x = kCell * (static_cast<double>(q) + 0.5);
      const double y = height * (static_cast<double>(ridge->scale_index[k]) + 0.5) / static_cast<double>(p);
      out << (q ? " " : "") << x << ',' << y;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

TransformResult cmd_transform(const ExperimentConfig& c, unsigned threads) {
  require(!c.input.empty(), ErrorKind::Configuration, "transform needs an input CSV (`input` or --input)");
  const auto series = read_series_csv(c.input);
  prepare_output(c);
  const auto grid = make_grid(c, series.t.front(), series.fs, series.x.size());
  TransformResult res;
  res.field = awt_forward(series.x, series.fs, c.wavelet, grid, {}, threads);
  res.scalogram = scalogram(res.field);
  res.ridge = ridge_argmax(res.scalogram);
  write_binary(out_path(c, "awt.bin"), grid, res.field.W);
  write_binary(out_path(c, "scalogram.bin"), grid, res.scalogram.S);
  write_ridge_csv(out_path(c, "ridge.csv"), res.ridge);
  if (c.svg) write_heatmap_svg(out_path(c, "heatmap.svg"), res.scalogram, &res.ridge);
  return res;
}

}  // namespace ridgelab
