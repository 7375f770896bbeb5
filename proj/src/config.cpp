#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "ridgelab/errors.hpp"
#include "ridgelab/experiments.hpp"

namespace ridgelab {

using nlohmann::json;

namespace {

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::Configuration, where + " must be a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    require(ok.count(key) > 0, ErrorKind::Configuration, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Configuration, where + "." + key + ": " + e.what());
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out, const std::string& where) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

template <typename T>
void maybe(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (j.contains(key) && !j.at(key).is_null()) out = get<T>(j, key, where);
}

std::optional<Interval> interval_of(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  const auto v = get<std::vector<double>>(j, key, where);
  require(v.size() == 2 && v[0] > 0.0 && v[0] < v[1], ErrorKind::Configuration,
          where + "." + key + " must be [lo, hi] with 0 < lo < hi");
  return Interval{v[0], v[1]};
}

WaveletSpec parse_wavelet(const json& j) {
  const std::string where = "wavelet";
  only_keys(j, {"family", "beta1", "beta2", "alpha", "beta", "gamma_re", "gamma_im", "peak_hz",
                "norm_const", "negative_leak"},
            where);
  WaveletSpec w;
  std::string family = "morse";
  maybe(j, "family", family, where);
  if (family == "morse") {
    Morse m{3.0, 2.0};
    maybe(j, "beta1", m.beta1, where);
    maybe(j, "beta2", m.beta2, where);
    require(m.beta1 > 0.0 && m.beta2 > 0.0, ErrorKind::Configuration,
            "wavelet: beta1 and beta2 must be positive");
    w.family = m;
  } else if (family == "klauder") {
    Klauder k;
    maybe(j, "alpha", k.alpha, where);
    maybe(j, "beta", k.beta, where);
    maybe(j, "gamma_re", k.gamma_re, where);
    maybe(j, "gamma_im", k.gamma_im, where);
    require(k.alpha > 0.0 && k.gamma_re > 0.0, ErrorKind::Configuration,
            "wavelet: alpha and gamma_re must be positive");
    w.family = k;
  } else {
    fail(ErrorKind::Configuration, "wavelet.family must be 'morse' or 'klauder', got '" + family + "'");
  }
  std::optional<double> peak = 80.0;
  if (j.contains("peak_hz")) {
    peak.reset();
    maybe(j, "peak_hz", peak, where);
  }
  require(!peak || *peak > 0.0, ErrorKind::Configuration, "wavelet.peak_hz must be positive");
  w.peak_target_hz = peak;
  maybe(j, "negative_leak", w.negative_leak, where);
  if (j.contains("norm_const")) {
    w.norm_const = get<double>(j, "norm_const", where);
    require(w.norm_const > 0.0, ErrorKind::Configuration, "wavelet.norm_const must be positive");
  } else {
    const double leak = w.negative_leak;
    w = unit_peak(w);
    w.negative_leak = leak;
  }
  return w;
}

json wavelet_json(const WaveletSpec& w) {
  json j;
  if (const auto* m = std::get_if<Morse>(&w.family)) {
    j = {{"family", "morse"}, {"beta1", m->beta1}, {"beta2", m->beta2}};
  } else {
    const auto& k = std::get<Klauder>(w.family);
    j = {{"family", "klauder"}, {"alpha", k.alpha}, {"beta", k.beta}, {"gamma_re", k.gamma_re},
         {"gamma_im", k.gamma_im}};
  }
  j["peak_hz"] = w.peak_target_hz ? json(*w.peak_target_hz) : json(nullptr);
  j["norm_const"] = w.norm_const;
  j["negative_leak"] = w.negative_leak;
  return j;
}

DensityConfig parse_density(const json& j) {
  const std::string where = "density";
  only_keys(j, {"kind", "gamma", "H", "scale", "knots", "values", "c1", "H_minus"}, where);
  DensityConfig d;
  maybe(j, "kind", d.kind, where);
  maybe(j, "gamma", d.gamma, where);
  maybe(j, "H", d.H, where);
  maybe(j, "scale", d.scale, where);
  maybe(j, "knots", d.knots, where);
  maybe(j, "values", d.values, where);
  maybe(j, "c1", d.c1, where);
  maybe(j, "H_minus", d.H_minus, where);
  require(d.kind == "linnik" || d.kind == "tabulated", ErrorKind::Configuration,
          "density.kind must be 'linnik' or 'tabulated'");
  return d;
}

json density_json(const DensityConfig& d) {
  json j = {{"kind", d.kind}};
  if (d.kind == "linnik") {
    j["gamma"] = d.gamma;
    j["H"] = d.H;
    j["scale"] = d.scale;
  } else {
    j["knots"] = d.knots;
    j["values"] = d.values;
  }
  j["c1"] = d.c1 ? json(*d.c1) : json(nullptr);
  j["H_minus"] = d.H_minus ? json(*d.H_minus) : json(nullptr);
  return j;
}

AhmComponent parse_component(const json& j, std::size_t index) {
  const std::string where = "signal.components[" + std::to_string(index) + "]";
  only_keys(j, {"amp", "phase"}, where);
  AhmComponent c{ConstAmplitude{1.0}, Tone{1.0}};
  if (j.contains("amp")) {
    const auto& a = j.at("amp");
    only_keys(a, {"const", "linear", "samples"}, where + ".amp");
    require(a.size() == 1, ErrorKind::Configuration, where + ".amp needs exactly one form");
    if (a.contains("const")) {
      c.amp = ConstAmplitude{get<double>(a, "const", where)};
    } else if (a.contains("linear")) {
      const auto v = get<std::vector<double>>(a, "linear", where);
      require(v.size() == 2, ErrorKind::Configuration, where + ".amp.linear must be [a0, a1]");
      c.amp = LinearAmplitude{v[0], v[1]};
    } else {
      c.amp = SampledAmplitude{get<std::vector<double>>(a, "samples", where)};
    }
  }
  require(j.contains("phase"), ErrorKind::Configuration, where + " needs a phase");
  const auto& p = j.at("phase");
  only_keys(p, {"tone_hz", "chirp", "cycles"}, where + ".phase");
  require(p.size() == 1, ErrorKind::Configuration, where + ".phase needs exactly one form");
  if (p.contains("tone_hz")) {
    c.phase = Tone{get<double>(p, "tone_hz", where)};
  } else if (p.contains("chirp")) {
    const auto& ch = p.at("chirp");
    only_keys(ch, {"xi0", "rate"}, where + ".phase.chirp");
    LinearChirp lc;
    maybe(ch, "xi0", lc.xi0, where);
    maybe(ch, "rate", lc.rate, where);
    c.phase = lc;
  } else {
    c.phase = SampledPhase{get<std::vector<double>>(p, "cycles", where)};
  }
  return c;
}

json component_json(const AhmComponent& c) {
  json amp, phase;
  if (const auto* a = std::get_if<ConstAmplitude>(&c.amp)) {
    amp = {{"const", a->a}};
  } else if (const auto* l = std::get_if<LinearAmplitude>(&c.amp)) {
    amp = {{"linear", {l->a0, l->a1}}};
  } else {
    amp = {{"samples", std::get<SampledAmplitude>(c.amp).samples}};
  }
  if (const auto* t = std::get_if<Tone>(&c.phase)) {
    phase = {{"tone_hz", t->hz}};
  } else if (const auto* ch = std::get_if<LinearChirp>(&c.phase)) {
    phase = {{"chirp", {{"xi0", ch->xi0}, {"rate", ch->rate}}}};
  } else {
    phase = {{"cycles", std::get<SampledPhase>(c.phase).cycles}};
  }
  return {{"amp", amp}, {"phase", phase}};
}

BandSpec parse_bands(const json& j) {
  require(j.is_array(), ErrorKind::Configuration, "bands must be an array");
  BandSpec spec;
  for (std::size_t m = 0; m < j.size(); ++m) {
    const std::string where = "bands[" + std::to_string(m) + "]";
    const auto& b = j[m];
    only_keys(b, {"times", "lower", "upper"}, where);
    ScaleBand band;
    if (b.at("lower").is_number()) {
      band = ScaleBand::constant(get<double>(b, "lower", where), get<double>(b, "upper", where));
    } else {
      band.times = get<std::vector<double>>(b, "times", where);
      band.lower = get<std::vector<double>>(b, "lower", where);
      band.upper = get<std::vector<double>>(b, "upper", where);
      require(!band.times.empty() && band.times.size() == band.lower.size() &&
                  band.times.size() == band.upper.size(),
              ErrorKind::Configuration, where + ": times, lower and upper must match in length");
    }
    spec.bands.push_back(std::move(band));
  }
  return spec;
}

json bands_json(const BandSpec& spec) {
  json arr = json::array();
  for (const auto& b : spec.bands) {
    arr.push_back({{"times", b.times}, {"lower", b.lower}, {"upper", b.upper}});
  }
  return arr;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json interval_json(const std::optional<Interval>& I) {
  return I ? json({I->lo, I->hi}) : json(nullptr);
}

}  // namespace

SpectralDensity DensityConfig::build() const {
  auto d = kind == "linnik" ? SpectralDensity::linnik(gamma, H, scale)
                            : SpectralDensity::tabulated(knots, values);
  return d.with_c1_bound(c1 ? *c1 : d.estimate_c1());
}

ExperimentConfig parse_config(const json& j) {
  only_keys(j, {"signal", "full_t1", "wavelet", "density", "grid", "trials", "base_seed",
                "snr_targets", "noise_gain", "lambda", "bands", "output_dir", "input", "svg",
                "bounds", "histogram"},
            "config");
  ExperimentConfig c;
  const std::string top = "config";

  c.signal.components = {{ConstAmplitude{1.0}, Tone{10.0}}};
  c.signal.t0 = 0.0;
  c.signal.t1 = 10.0;
  c.signal.fs = 100.0;
  if (j.contains("signal")) {
    const auto& s = j.at("signal");
    only_keys(s, {"components", "t0", "t1", "fs"}, "signal");
    if (s.contains("components")) {
      const auto& comps = s.at("components");
      require(comps.is_array(), ErrorKind::Configuration, "signal.components must be an array");
      c.signal.components.clear();
      for (std::size_t m = 0; m < comps.size(); ++m) {
        c.signal.components.push_back(parse_component(comps[m], m));
      }
    }
    maybe(s, "t0", c.signal.t0, "signal");
    maybe(s, "t1", c.signal.t1, "signal");
    maybe(s, "fs", c.signal.fs, "signal");
  }
  require(c.signal.fs > 0.0 && c.signal.t1 > c.signal.t0, ErrorKind::Configuration,
          "signal needs fs > 0 and t1 > t0");
  require(c.signal.n_samples() >= 2, ErrorKind::Configuration, "signal window has fewer than 2 samples");
  maybe(j, "full_t1", c.full_t1, top);

  if (j.contains("wavelet")) {
    c.wavelet = parse_wavelet(j.at("wavelet"));
  } else {
    c.wavelet = parse_wavelet(json::object());
  }
  if (j.contains("density")) c.density = parse_density(j.at("density"));

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    only_keys(g, {"s_min", "s_max", "voices"}, "grid");
    maybe(g, "s_min", c.grid.s_min, "grid");
    maybe(g, "s_max", c.grid.s_max, "grid");
    maybe(g, "voices", c.grid.voices, "grid");
  }
  require(c.grid.s_min > 0.0 && c.grid.s_max > c.grid.s_min && c.grid.voices >= 1,
          ErrorKind::Configuration, "grid needs 0 < s_min < s_max and voices >= 1");

  if (j.contains("trials") && !j.at("trials").is_null()) {
    const auto t = get<long long>(j, "trials", top);
    require(t >= 1, ErrorKind::Configuration, "trials must be at least 1");
    c.trials = static_cast<std::size_t>(t);
  }
  maybe(j, "base_seed", c.base_seed, top);
  maybe(j, "snr_targets", c.snr_targets, top);
  maybe(j, "noise_gain", c.noise_gain, top);
  require(!c.noise_gain || *c.noise_gain >= 0.0, ErrorKind::Configuration,
          "noise_gain must be nonnegative");
  require(c.noise_gain || !c.snr_targets.empty(), ErrorKind::Configuration,
          "snr_targets must be nonempty");
  maybe(j, "lambda", c.lambda, top);
  require(c.lambda >= 0.0, ErrorKind::Configuration, "lambda must be nonnegative");
  if (j.contains("bands")) c.bands = parse_bands(j.at("bands"));
  maybe(j, "output_dir", c.output_dir, top);
  maybe(j, "input", c.input, top);
  maybe(j, "svg", c.svg, top);

  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    const std::string where = "bounds";
    only_keys(b, {"t", "snr_db", "interval", "interval_bins", "band", "band_fraction", "epsilons",
                  "epsilon_step", "mc_trials", "analytic_mu"},
              where);
    maybe(b, "t", c.bounds.t, where);
    maybe(b, "snr_db", c.bounds.snr_db, where);
    c.bounds.interval = interval_of(b, "interval", where);
    maybe(b, "interval_bins", c.bounds.interval_bins, where);
    c.bounds.band = interval_of(b, "band", where);
    maybe(b, "band_fraction", c.bounds.band_fraction, where);
    maybe(b, "epsilons", c.bounds.epsilons, where);
    maybe(b, "epsilon_step", c.bounds.epsilon_step, where);
    maybe(b, "mc_trials", c.bounds.mc_trials, where);
    maybe(b, "analytic_mu", c.bounds.analytic_mu, where);
    require(!c.bounds.band_fraction ||
                (*c.bounds.band_fraction > 0.0 && *c.bounds.band_fraction < 1.0),
            ErrorKind::Configuration, "bounds.band_fraction must lie in (0, 1)");
    require(c.bounds.epsilon_step > 0.0, ErrorKind::Configuration,
            "bounds.epsilon_step must be positive");
  }
  if (j.contains("histogram")) {
    const auto& h = j.at("histogram");
    only_keys(h, {"t", "tol", "bins"}, "histogram");
    maybe(h, "t", c.histogram.t, "histogram");
    maybe(h, "tol", c.histogram.tol, "histogram");
    maybe(h, "bins", c.histogram.bins, "histogram");
  }

  // Sub-spec checks owned by the modules.
  try {
    (void)sample_signal(c.signal);
    for (const auto& band : c.bands.bands) {
      require(band.lower.size() == band.upper.size(), ErrorKind::Band, "band tables differ in length");
    }
    if (!c.bands.bands.empty()) {
      c.bands.validate(TimeScaleGrid::from_range(c.signal.t0, c.signal.fs, c.signal.n_samples(),
                                                 c.grid.s_min, c.grid.s_max, c.grid.voices));
    }
    (void)center_frequency(c.wavelet);
  } catch (const Error& e) {
    fail(ErrorKind::Configuration, e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Configuration, "cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Configuration, path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json comps = json::array();
  for (const auto& comp : c.signal.components) comps.push_back(component_json(comp));
  json j;
  j["signal"] = {{"components", comps}, {"t0", c.signal.t0}, {"t1", c.signal.t1}, {"fs", c.signal.fs}};
  j["full_t1"] = c.full_t1;
  j["wavelet"] = wavelet_json(c.wavelet);
  j["density"] = density_json(c.density);
  j["grid"] = {{"s_min", c.grid.s_min}, {"s_max", c.grid.s_max}, {"voices", c.grid.voices}};
  j["trials"] = c.trials ? json(*c.trials) : json(nullptr);
  j["base_seed"] = c.base_seed;
  j["snr_targets"] = c.snr_targets;
  j["noise_gain"] = optional_json(c.noise_gain);
  j["lambda"] = c.lambda;
  j["bands"] = bands_json(c.bands);
  j["output_dir"] = c.output_dir;
  j["input"] = c.input;
  j["svg"] = c.svg;
  const auto& b = c.bounds;
  j["bounds"] = {{"t", optional_json(b.t)},
                 {"snr_db", optional_json(b.snr_db)},
                 {"interval", interval_json(b.interval)},
                 {"interval_bins", b.interval_bins ? json(*b.interval_bins) : json(nullptr)},
                 {"band", interval_json(b.band)},
                 {"band_fraction", optional_json(b.band_fraction)},
                 {"epsilons", b.epsilons},
                 {"epsilon_step", b.epsilon_step},
                 {"mc_trials", b.mc_trials},
                 {"analytic_mu", b.analytic_mu}};
  j["histogram"] = {{"t", optional_json(c.histogram.t)},
                    {"tol", c.histogram.tol},
                    {"bins", c.histogram.bins}};
  return j;
}

void apply_overrides(ExperimentConfig& c, const Overrides& o, const char* env_seed) {
  if (o.trials) {
    require(*o.trials >= 1, ErrorKind::Configuration, "--trials must be at least 1");
    c.trials = *o.trials;
  }
  if (o.seed) {
    c.base_seed = *o.seed;
  } else if (env_seed && *env_seed) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env_seed, &end, 0);
    require(end && *end == '\0', ErrorKind::Configuration,
            std::string("RIDGELAB_SEED is not an integer: '") + env_seed + "'");
    c.base_seed = v;
  }
  if (o.lambda) {
    require(*o.lambda >= 0.0, ErrorKind::Configuration, "--lambda must be nonnegative");
    c.lambda = *o.lambda;
  }
  if (o.out) c.output_dir = *o.out;
  if (o.input) c.input = *o.input;
  if (o.full) c.signal.t1 = c.signal.t0 + c.full_t1;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Configuration:
    case ErrorKind::InsufficientTrials:
      return 2;
    default:
      return 1;
  }
}

}  // namespace ridgelab
