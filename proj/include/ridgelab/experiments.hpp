#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ridgelab/ahm.hpp"
#include "ridgelab/awt.hpp"
#include "ridgelab/bounds.hpp"
#include "ridgelab/ridge.hpp"
#include "ridgelab/spectral_noise.hpp"
#include "ridgelab/stats.hpp"
#include "ridgelab/wavelet.hpp"

namespace ridgelab {

struct DensityConfig {
  std::string kind = "linnik";  // "linnik" or "tabulated"
  double gamma = 1.0;
  double H = 2.0;
  double scale = 1.0;
  std::vector<double> knots;
  std::vector<double> values;
  /// Tail constant C1; estimated from the density when absent.
  std::optional<double> c1;
  std::optional<double> H_minus;

  SpectralDensity build() const;
};

struct GridConfig {
  double s_min = 2.0;
  double s_max = 32.0;
  int voices = 32;
};

struct BoundsConfig {
  /// Column time in seconds; the window midpoint when absent.
  std::optional<double> t;
  std::optional<double> snr_db;
  std::optional<Interval> interval;
  /// Interval as +/- this many bins around the clean ridge bin.
  std::optional<std::size_t> interval_bins;
  std::optional<Interval> band;
  /// Band edges placed this fraction of the way from the clean ridge to
  /// each inflection point (used when `band` is absent).
  std::optional<double> band_fraction;
  std::vector<double> epsilons;
  double epsilon_step = 0.02;
  std::size_t mc_trials = 10000;
  bool analytic_mu = false;
};

struct HistogramConfig {
  std::optional<double> t;
  double tol = 1e-8;
  std::size_t bins = 0;  // 0 = Freedman-Diaconis
};

struct ExperimentConfig {
  AhmSignal signal;
  double full_t1 = 60.0;
  WaveletSpec wavelet;
  DensityConfig density;
  GridConfig grid;
  /// Unset means the command default: 10^4 for validate, 200 otherwise.
  std::optional<std::size_t> trials;
  std::uint64_t base_seed = 0;
  std::vector<double> snr_targets{-15.0, -10.0, -5.0, 0.0, 5.0, 10.0};
  /// Fixed noise multiplier; overrides snr_targets when set.
  std::optional<double> noise_gain;
  double lambda = 0.1;
  BandSpec bands;
  std::string output_dir = "ridgelab_out";
  std::string input;  // transform: CSV `t,x`
  bool svg = true;
  BoundsConfig bounds;
  HistogramConfig histogram;

  std::size_t trials_or(std::size_t fallback) const { return trials.value_or(fallback); }
};

/// Throws Configuration on unknown keys, wrong types or invalid sub-specs.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
/// Every field, defaults included.
nlohmann::json to_json(const ExperimentConfig& c);

struct Overrides {
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::string> out;
  std::optional<std::string> input;
  bool full = false;
};

/// Seed precedence: overrides.seed, then env_seed (RIDGELAB_SEED), then the
/// config value. env_seed may be null.
void apply_overrides(ExperimentConfig& c, const Overrides& o, const char* env_seed);

/// Process exit status for a failure of this kind.
int exit_code(ErrorKind kind);

struct ValidationCheck {
  std::string name;
  bool pass = false;
  nlohmann::json stats;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool pass = false;
  const ValidationCheck& check(const std::string& name) const;
};

/// Noise-field checks on the config's density and wavelet. Writes
/// validation.json.
ValidationReport cmd_validate(const ExperimentConfig& c, unsigned threads = 1);

struct TrialRecord {
  std::size_t trial_index = 0;
  std::uint64_t seed = 0;
  double snr_db = 0.0;
  double gain = 0.0;
  double delta = 0.0;
  double delta_tilde = 0.0;
  double delta_dp = 0.0;
  std::size_t ties = 0;  // valid-region columns with a tied argmax
  double runtime_ms = 0.0;
};

/// One trial: noise path, gain, Y, transform, argmax and penalized ridges,
/// deviations from the clean ridge over the valid region.
std::vector<TrialRecord> run_trials(const ExperimentConfig& c, unsigned threads = 1);

struct BoxSummary {
  double snr_db = 0.0;
  std::size_t n = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_lo = 0.0;
  double whisker_hi = 0.0;
};

/// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> v, double p);
BoxSummary box_summary(double snr_db, std::vector<double> values);

struct SweepResult {
  std::vector<TrialRecord> trials;
  /// One per distinct SNR target, ascending (whole-dB bins under noise_gain).
  std::vector<BoxSummary> bins;
};

/// Writes snr_scatter.csv, snr_box.csv, trials.csv and timing.csv.
SweepResult cmd_snr_sweep(const ExperimentConfig& c, unsigned threads = 1);

struct CompareResult {
  std::vector<TrialRecord> trials;
  TestResult wilcoxon;
  double median_argmax = 0.0;
  double median_dp = 0.0;
};

/// One-sided Wilcoxon of delta_dp against delta (alternative: penalized
/// ridge closer). Writes ridge_compare.csv and ridge_compare.json.
CompareResult cmd_ridge_compare(const ExperimentConfig& c, unsigned threads = 1);

struct BoundsResult {
  Interval interval;
  std::optional<BoundReport> interval_report;
  std::optional<Proportion> interval_empirical;
  std::optional<DeviationBoundInputs> deviation_inputs;
  std::optional<DeviationReport> deviation;
  std::vector<Proportion> exceedance;  // parallel to deviation->ladder
  nlohmann::json report;
};

/// Writes bounds.json and epsilon_ladder.csv.
BoundsResult cmd_bounds(const ExperimentConfig& c, unsigned threads = 1);

struct HistogramResult {
  std::vector<double> values;
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  double near_zero_fraction = 0.0;
};

/// Writes d2_values.csv, d2_histogram.csv and d2_summary.json.
HistogramResult cmd_histogram_d2(const ExperimentConfig& c, unsigned threads = 1);

struct TransformResult {
  AwtField field;
  ScalogramField scalogram;
  RidgeTrack ridge;
};

/// Reads `t,x` (optional header), checks uniform sampling, writes awt.bin,
/// scalogram.bin, ridge.csv and heatmap.svg.
TransformResult cmd_transform(const ExperimentConfig& c, unsigned threads = 1);

struct Series {
  std::vector<double> t;
  std::vector<double> x;
  double fs = 0.0;
};
/// Throws Input when the file is missing, empty, malformed or not uniformly
/// sampled.
Series read_series_csv(const std::string& path);

/// Unstyled grayscale heatmap of 10 log10 S with an optional ridge polyline.
void write_heatmap_svg(const std::string& path, const ScalogramField& S, const RidgeTrack* ridge);

}  // namespace ridgelab
