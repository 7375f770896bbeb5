// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ridgelab/experiments.hpp"
#include "ridgelab/parallel.hpp"
#include "ridgelab/random.hpp"

using namespace ridgelab;
using cd = std::complex<double>;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

WaveletSpec morse80() {
  WaveletSpec w{Morse{3, 2}};
  w.peak_target_hz = 80.0;
  return unit_peak(w);
}

SpectralDensity linnik_c1(double gamma, double H, double scale = 1.0) {
  const auto d = SpectralDensity::linnik(gamma, H, scale);
  return d.with_c1_bound(d.estimate_c1());
}

ExperimentConfig demo(const std::string& name, const std::string& out) {
  auto c = load_config(std::string(RIDGELAB_SOURCE_DIR) + "/configs/" + name);
  c.output_dir = (fs::temp_directory_path() / "ridgelab_acceptance" / out).string();
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<double> kScales{2.0, 4.0, 8.0, 16.0, 32.0};

std::vector<ColumnSimulator::Column> draw_columns(const SpectralDensity& d, const WaveletSpec& w,
                                                  const std::vector<double>& scales, std::size_t n,
                                                  std::uint64_t base) {
  const ColumnSimulator sim(d, w, scales);
  std::vector<ColumnSimulator::Column> cols(n);
  for (std::size_t k = 0; k < n; ++k) cols[k] = sim.draw(trial_seed(base, k));
  return cols;
}

Outcome exp1_law() {
  Stopwatch clock;
  const auto d = linnik_c1(1, 0.5);
  const auto w = morse80();
  const std::pair<double, double> pairs[] = {{2.0, 4.0}, {4.0, 8.0}, {8.0, 32.0}};
  bool ok = true;
  std::string detail;
  for (auto [s1, s2] : pairs) {
    const auto cols = draw_columns(d, w, {s1, s2}, 10000, 0xA100000000000000ULL);
    const double d2 = std::pow(increment_distance(d, w, s1, s2), 2);
    std::vector<double> x;
    for (const auto& c : cols) x.push_back(std::norm(c.W[0] - c.W[1]) / d2);
    const auto ks = ks_test_exp1(x);
    const double mean = pairwise_mean(x);
    ok = ok && ks.p_value >= 0.01 && mean >= 0.97 && mean <= 1.03;
    detail += fmt("(%g,%g): p=%.3f mean=%.4f; ", s1, s2, ks.p_value, mean);
  }
  const double t = clock.seconds();
  return {ok && t < 60.0, detail + fmt("%.1f s", t)};
}

Outcome variance_identity() {
  Stopwatch clock;
  const auto cols = draw_columns(linnik_c1(1, 0.5), morse80(), kScales, 100000, 0xA200000000000000ULL);
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < kScales.size(); ++i) {
    std::vector<double> s;
    for (const auto& c : cols) s.push_back(std::norm(c.W[i]));
    const double mean = pairwise_mean(s);
    std::vector<double> dev;
    for (double v : s) dev.push_back((v - mean) * (v - mean));
    const double ratio = pairwise_sum(dev) / (s.size() - 1.0) / (mean * mean);
    ok = ok && ratio >= 0.9 && ratio <= 1.1;
    detail += fmt("s=%g: %.4f; ", kScales[i], ratio);
  }
  const double t = clock.seconds();
  return {ok && t < 60.0, detail + fmt("%.1f s", t)};
}

Outcome circular_symmetry() {
  const auto d = linnik_c1(1, 0.5);
  const auto w = morse80();
  const std::size_t N = 10000;
  const auto cols = draw_columns(d, w, kScales, N, 0xA300000000000000ULL);
  double worst = 0.0;
  for (std::size_t i = 0; i < kScales.size(); ++i) {
    for (std::size_t j = i; j < kScales.size(); ++j) {
      std::vector<double> re, im;
      for (const auto& c : cols) {
        const cd z = c.W[i] * c.W[j];
        re.push_back(z.real());
        im.push_back(z.imag());
      }
      const double pseudo = std::abs(cd(pairwise_mean(re), pairwise_mean(im)));
      const double sigma12 =
          std::sqrt(spectral_moment(d, w, kScales[i]) * spectral_moment(d, w, kScales[j]));
      worst = std::max(worst, pseudo / (4.0 / std::sqrt(double(N)) * sigma12));
    }
  }
  return {worst < 1.0, fmt("max |pseudo-cov| / (4 sigma1 sigma2 / sqrt N) = %.3f over 15 pairs", worst)};
}

Outcome ridge_if_link() {
  const double fs = 100.0;
  const std::size_t n = 1000;
  AhmSignal sig;
  sig.components = {{ConstAmplitude{1.0}, Tone{10.0}}};
  sig.t1 = n / fs;
  sig.fs = fs;
  const auto w = morse80();
  const auto grid = TimeScaleGrid::from_range(0.0, fs, n, 2.0, 32.0, 64);
  const auto ridge = ridge_argmax(scalogram(awt_forward(sample_signal(sig), fs, w, grid)));
  const auto region = valid_region(grid, w);
  double worst = 0.0;
  for (std::size_t k = region.begin; k < region.end; ++k) {
    worst = std::max(worst, std::abs(std::log2(ridge.scale_value[k] / 8.0)) * 64.0);
  }
  return {region.size() > 0 && worst <= 1.0 + 1e-9,
          fmt("max offset %.3g bins over %zu valid samples", worst, region.size())};
}

Outcome dp_correctness() {
  Rng rng(0xA500000000000000ULL);
  const double lambdas[] = {0.0, 0.05, 0.3, 1.0, 5.0};
  std::size_t mismatches = 0, argmax_mismatches = 0;
  for (int g = 0; g < 50; ++g) {
    const std::size_t p = 1 + static_cast<std::size_t>(rng.uniform() * 6);
    const std::size_t n = std::max<std::size_t>(1, 12 / p);
    ScalogramField S;
    S.grid = TimeScaleGrid{0.0, 1.0, n, 1.0, 1.1, p};
    S.S = Matrix<double>(p, n);
    for (auto& v : S.S.data) v = rng.uniform();
    const double lambda = lambdas[g % 5];
    const auto score = log_normalized(S.S);
    const auto dp = penalized_path(score, lambda);

    // Exhaustive search over all p^n paths.
    double best = -INFINITY;
    std::vector<std::size_t> path(n, 0);
    for (;;) {
      best = std::max(best, path_objective(score, path, lambda));
      std::size_t k = 0;
      while (k < n && ++path[k] == p) path[k++] = 0;
      if (k == n) break;
    }
    mismatches += path_objective(score, dp, lambda) != best;
    argmax_mismatches += ridge_penalized_dp(S, 0.0).scale_index != ridge_argmax(S).scale_index;
  }
  return {mismatches == 0 && argmax_mismatches == 0,
          fmt("%zu objective mismatches, %zu lambda=0 vs argmax mismatches over 50 grids", mismatches,
              argmax_mismatches)};
}

SweepResult sweep_threads1;

Outcome snr_trend() {
  Stopwatch clock;
  auto c = demo("snr_sweep.json", "sweep_t1");
  sweep_threads1 = cmd_snr_sweep(c, 1);
  const auto& bins = sweep_threads1.bins;
  const double low = bins.front().median, high = bins.back().median;
  const double t = clock.seconds();
  return {sweep_threads1.trials.size() == 200 && bins.front().snr_db <= -15 &&
              bins.back().snr_db >= 10 && low >= 3.0 * high && t < 600.0,
          fmt("median delta %.4g at %g dB vs %.4g at %g dB (ratio %.1f), %.1f s", low,
              bins.front().snr_db, high, bins.back().snr_db, low / high, t)};
}

Outcome interval_bound() {
  Stopwatch clock;
  const auto r = cmd_bounds(demo("bounds_interval.json", "interval"), 1);
  const auto& b = *r.interval_report;
  const auto& p = *r.interval_empirical;
  const double t = clock.seconds();
  const bool ok = b.applicable && b.lower_bound && p.trials == 500 &&
                  p.p_hat() + 3.0 * p.standard_error() >= *b.lower_bound && t < 300.0;
  return {ok, fmt("applicable=%d, bound %.4f, empirical %.4f (se %.4f), %.1f s", b.applicable,
                  b.lower_bound.value_or(NAN), p.p_hat(), p.standard_error(), t)};
}

Outcome deviation_bound() {
  Stopwatch clock;
  const auto r = cmd_bounds(demo("bounds_deviation.json", "deviation"), 1);
  const auto& ladder = r.deviation->ladder;
  std::size_t violations = 0;
  double worst = -INFINITY;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    const auto& e = r.exceedance[k];
    const double lhs = e.p_hat() - 3.0 * e.standard_error();
    worst = std::max(worst, lhs - ladder[k].bound);
    violations += lhs > ladder[k].bound;
  }
  const double t = clock.seconds();
  return {!ladder.empty() && violations == 0 && t < 900.0,
          fmt("%zu admissible epsilons in (%.3f, %.3f), %zu violations, max(emp - 3se - bound) = %.3g, "
              "%zu conditioning trials, %.1f s",
              ladder.size(), r.deviation->epsilon_lo, r.deviation->epsilon_hi, violations, worst,
              ladder.empty() ? std::size_t{0} : r.exceedance.front().trials, t)};
}

Outcome dudley_bound() {
  const auto w = morse80();
  const auto d = linnik_c1(1, 0.5);
  const auto k = dudley_constants(d, w);
  const auto grid = TimeScaleGrid::from_range(0.0, 100.0, 2, 2.0, 32.0, 32).scales();
  const ColumnSimulator sim(d, w, grid);
  std::vector<double> maxima(10000);
  for (std::size_t t = 0; t < maxima.size(); ++t) {
    for (const cd& z : sim.draw(trial_seed(0xA900000000000000ULL, t)).W) {
      maxima[t] = std::max(maxima[t], std::abs(z));
    }
  }
  const double mc = pairwise_mean(maxima);

  std::vector<double> bounds, unit;
  for (double H : {0.9, 0.5, 0.2}) {
    bounds.push_back(dudley_constants(linnik_c1(1, H, 0.01), w).sup_bound);
    unit.push_back(dudley_constants(linnik_c1(1, H), w).sup_bound);
  }
  const bool monotone = bounds[0] <= bounds[1] && bounds[1] <= bounds[2];
  return {mc <= k.sup_bound && monotone,
          fmt("E max %.4g <= sup_bound %.4g; H=0.9,0.5,0.2 at variance 0.01: %.4g, %.4g, %.4g "
              "(unit variance: %.4g, %.4g, %.4g)",
              mc, k.sup_bound, bounds[0], bounds[1], bounds[2], unit[0], unit[1], unit[2])};
}

Outcome holder() {
  const auto w = morse80();
  std::string detail;
  std::size_t total = 0;
  for (auto [g, H] : {std::pair{1.0, 0.5}, std::pair{1.5, 2.0}}) {
    const auto d = linnik_c1(g, H);
    const auto k = dudley_constants(d, w);
    Rng rng(0xAA00000000000000ULL);
    std::vector<std::pair<double, double>> pairs;
    while (pairs.size() < 100) {
      const double s1 = 0.5 * std::exp(rng.uniform() * std::log(100.0));
      const double s2 = s1 + (2.0 * rng.uniform() - 1.0);
      if (s2 > 0.0) pairs.emplace_back(s1, s2);
    }
    const auto rep = holder_check(d, w, k, pairs);
    total += rep.violations;
    detail += fmt("Linnik(%g,%g): %zu/100 violations; ", g, H, rep.violations);
  }
  return {total == 0, detail};
}

Outcome wilcoxon_compare() {
  const auto c = demo("ridge_compare.json", "compare");
  const auto r = cmd_ridge_compare(c, 1);
  return {r.trials.size() == 200 && c.lambda == 0.1 && r.wilcoxon.p_value < 0.05,
          fmt("%g dB, lambda %g: median delta argmax %.4g, penalized %.4g, p = %.3g",
              c.snr_targets.front(), c.lambda, r.median_argmax, r.median_dp, r.wilcoxon.p_value)};
}

Outcome derivative_channels() {
  const double fs = 100.0;
  const std::size_t n = 1000;
  AhmSignal sig;
  sig.components = {{ConstAmplitude{1.0}, Tone{10.0}}};
  sig.t1 = n / fs;
  sig.fs = fs;
  const auto w = morse80();
  const auto grid = TimeScaleGrid::from_range(0.0, fs, n, 2.0, 32.0, 64);
  const auto S = scalogram(awt_forward(sample_signal(sig), fs, w, grid, {.dW = true}), {.dW = true});
  const auto region = valid_region(grid, w);
  double worst = 0.0;
  for (std::size_t k = region.begin; k < region.end; ++k) {
    const auto s = column(S.S, k);
    const auto ds = column(*S.dS, k);
    double top = 0.0;
    for (double v : ds) top = std::max(top, std::abs(v));
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      const double h1 = grid.scale(i + 1) - grid.scale(i);
      const double h0 = grid.scale(i) - grid.scale(i - 1);
      const double fd = (s[i + 1] * h0 * h0 - s[i - 1] * h1 * h1 + s[i] * (h1 * h1 - h0 * h0)) /
                        (h0 * h1 * (h0 + h1));
      worst = std::max(worst, std::abs(fd - ds[i]) / top);
    }
  }
  return {worst < 1e-3, fmt("max |dS - finite difference| / column max = %.3g", worst)};
}

Outcome determinism() {
  auto c = demo("snr_sweep.json", "sweep_t8");
  cmd_snr_sweep(c, 8);
  const auto a = fs::temp_directory_path() / "ridgelab_acceptance" / "sweep_t1";
  const auto b = fs::path(c.output_dir);
  std::size_t same = 0;
  for (const char* f : {"snr_scatter.csv", "snr_box.csv", "trials.csv"}) {
    same += slurp(a / f) == slurp(b / f) && !slurp(a / f).empty();
  }
  return {same == 3, fmt("%zu/3 primary CSVs byte-identical between 1 and 8 threads", same)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"exponential law of normalized increments", exp1_law},
      {"variance identity Var(S) = (E S)^2", variance_identity},
      {"circular symmetry (pseudo-covariance)", circular_symmetry},
      {"ridge at omega/IF for a clean tone", ridge_if_link},
      {"penalized ridge DP equals exhaustive search", dp_correctness},
      {"ridge deviation falls with SNR", snr_trend},
      {"interval probability lower bound", interval_bound},
      {"ridge deviation upper bound", deviation_bound},
      {"Dudley bound on E max |W|", dudley_bound},
      {"Hoelder continuity of the canonical distance", holder},
      {"penalized ridge beats argmax (Wilcoxon)", wilcoxon_compare},
      {"analytic dS/ds against finite differences", derivative_channels},
      {"snr-sweep determinism across thread counts", determinism},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failed, index);
  return failed == 0 ? 0 : 1;
}
