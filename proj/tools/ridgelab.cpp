#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "ridgelab/errors.hpp"
#include "ridgelab/experiments.hpp"

using namespace ridgelab;

namespace {

struct Flags {
  std::string config;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::string> out;
  std::optional<std::string> input;
  unsigned threads = 1;
  bool full = false;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--trials", f.trials, "number of trials / Monte Carlo columns");
  cmd->add_option("--seed", f.seed, "base seed (overrides RIDGELAB_SEED and the config)");
  cmd->add_option("--lambda", f.lambda, "ridge smoothness penalty");
  cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--full", f.full, "use the full-length signal window (full_t1)");
}

int run(const std::string& name, const Flags& f) {
  auto cfg = load_config(f.config);
  apply_overrides(cfg, {f.trials, f.seed, f.lambda, f.out, f.input, f.full},
                  std::getenv("RIDGELAB_SEED"));

  if (name == "validate") {
    const auto r = cmd_validate(cfg, f.threads);
    for (const auto& c : r.checks) std::printf("%-22s %s\n", c.name.c_str(), c.pass ? "pass" : "FAIL");
    std::printf("validation %s, report in %s/validation.json\n", r.pass ? "passed" : "FAILED",
                cfg.output_dir.c_str());
    return r.pass ? 0 : 1;
  }
  if (name == "snr-sweep") {
    const auto r = cmd_snr_sweep(cfg, f.threads);
    std::printf("%zu trials\n", r.trials.size());
    for (const auto& b : r.bins) {
      std::printf("snr %7.2f dB  n=%-4zu median delta %.6g  [q1 %.6g, q3 %.6g]\n", b.snr_db, b.n,
                  b.median, b.q1, b.q3);
    }
    return 0;
  }
  if (name == "ridge-compare") {
    const auto r = cmd_ridge_compare(cfg, f.threads);
    std::printf("median delta: argmax %.6g, penalized %.6g\n", r.median_argmax, r.median_dp);
    std::printf("wilcoxon W+ = %.1f, one-sided p = %.3g\n", r.wilcoxon.statistic, r.wilcoxon.p_value);
    return 0;
  }
  if (name == "bounds") {
    const auto r = cmd_bounds(cfg, f.threads);
    if (r.interval_report) {
      const auto& b = *r.interval_report;
      std::printf("interval [%.6g, %.6g]: delta %.6g, mu %.6g, sigma %.6g, %s", r.interval.lo,
                  r.interval.hi, b.delta, b.mu, b.sigma, b.applicable ? "applicable" : "not applicable");
      if (b.lower_bound) std::printf(", lower bound %.6g", *b.lower_bound);
      if (r.interval_empirical) {
        std::printf(", empirical %.4g (se %.2g)", r.interval_empirical->p_hat(),
                    r.interval_empirical->standard_error());
      }
      std::printf("\n");
    }
    if (r.deviation) {
      const auto& d = *r.deviation;
      std::printf("epsilon window (%.6g, %.6g), %zu admissible\n", d.epsilon_lo, d.epsilon_hi,
                  d.ladder.size());
      for (std::size_t k = 0; k < d.ladder.size(); ++k) {
        std::printf("  eps %.4g  bound %.4g  empirical %.4g (se %.2g)\n", d.ladder[k].epsilon,
                    d.ladder[k].bound, r.exceedance[k].p_hat(), r.exceedance[k].standard_error());
      }
      if (!d.diagnostic.empty()) std::printf("%s\n", d.diagnostic.c_str());
    }
    return 0;
  }
  if (name == "histogram-d2") {
    const auto r = cmd_histogram_d2(cfg, f.threads);
    std::printf("%zu values, %zu bins, fraction within tol of 0: %.6g\n", r.values.size(),
                r.counts.size(), r.near_zero_fraction);
    return 0;
  }
  const auto r = cmd_transform(cfg, f.threads);
  std::printf("transform: %zu scales x %zu samples written to %s\n", r.field.grid.n_scale,
              r.field.grid.n_time, cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ridgelab: wavelet ridge experiments under stationary Gaussian noise"};
  app.require_subcommand(1);
  Flags flags;
  const char* names[] = {"validate", "snr-sweep", "ridge-compare", "bounds", "histogram-d2", "transform"};
  const char* help[] = {"noise-field statistical checks",
                        "ridge deviation versus SNR",
                        "argmax versus penalized ridge, Wilcoxon test",
                        "interval and deviation bounds with Monte Carlo checks",
                        "histogram of d2S/ds2 at the noisy ridge",
                        "transform a `t,x` CSV and draw a heatmap"};
  for (int i = 0; i < 6; ++i) {
    auto* cmd = app.add_subcommand(names[i], help[i]);
    add_common(cmd, flags);
    if (std::string(names[i]) == "transform") cmd->add_option("--input", flags.input, "input CSV `t,x`");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return run(app.get_subcommands().front()->get_name(), flags);
  } catch (const Error& e) {
    std::fprintf(stderr, "ridgelab: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ridgelab: %s\n", e.what());
    return 1;
  }
}
