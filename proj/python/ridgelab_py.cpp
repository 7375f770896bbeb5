#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <vector>

#include "ridgelab/ahm.hpp"
#include "ridgelab/awt.hpp"
#include "ridgelab/experiments.hpp"
#include "ridgelab/ridge.hpp"
#include "ridgelab/spectral_noise.hpp"
#include "ridgelab/wavelet.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace ridgelab;

namespace {

using cd = std::complex<double>;
using Real = py::array_t<double, py::array::c_style | py::array::forcecast>;

WaveletSpec morse(double beta1, double beta2, std::optional<double> peak_hz) {
  WaveletSpec w{Morse{beta1, beta2}};
  w.peak_target_hz = peak_hz;
  return unit_peak(w);
}

SpectralDensity linnik(double gamma, double H, double scale) {
  const auto d = SpectralDensity::linnik(gamma, H, scale);
  return d.with_c1_bound(d.estimate_c1());
}

template <typename T>
py::array_t<T> to_array(const Matrix<T>& m) {
  py::array_t<T> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

Matrix<double> from_array(const Real& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array (scales x times)");
  Matrix<double> m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

ExperimentConfig to_config(const py::object& config) {
  const std::string text = py::isinstance<py::str>(config)
                               ? config.cast<std::string>()
                               : py::module_::import("json").attr("dumps")(config).cast<std::string>();
  try {
    return parse_config(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Configuration, e.what());
  }
}

py::dict trial_dict(const TrialRecord& t) {
  return py::dict("trial_index"_a = t.trial_index, "seed"_a = t.seed, "snr_db"_a = t.snr_db,
                  "gain"_a = t.gain, "delta"_a = t.delta, "delta_tilde"_a = t.delta_tilde,
                  "delta_dp"_a = t.delta_dp, "ties"_a = t.ties);
}

py::list trial_list(const std::vector<TrialRecord>& trials) {
  py::list out;
  for (const auto& t : trials) out.append(trial_dict(t));
  return out;
}

py::object run(const std::string& command, const py::object& config, unsigned threads) {
  const auto c = to_config(config);
  if (command == "validate") {
    const auto r = cmd_validate(c, threads);
    py::list checks;
    for (const auto& k : r.checks) {
      checks.append(py::dict("name"_a = k.name, "pass"_a = k.pass, "stats"_a = to_python(k.stats)));
    }
    return py::dict("pass"_a = r.pass, "checks"_a = checks);
  }
  if (command == "snr-sweep") {
    const auto r = cmd_snr_sweep(c, threads);
    py::list bins;
    for (const auto& b : r.bins) {
      bins.append(py::dict("snr_db"_a = b.snr_db, "n"_a = b.n, "median"_a = b.median, "q1"_a = b.q1,
                           "q3"_a = b.q3));
    }
    return py::dict("trials"_a = trial_list(r.trials), "bins"_a = bins);
  }
  if (command == "ridge-compare") {
    const auto r = cmd_ridge_compare(c, threads);
    return py::dict("trials"_a = trial_list(r.trials), "statistic"_a = r.wilcoxon.statistic,
                    "p_value"_a = r.wilcoxon.p_value, "median_argmax"_a = r.median_argmax,
                    "median_dp"_a = r.median_dp);
  }
  if (command == "bounds") return to_python(cmd_bounds(c, threads).report);
  if (command == "histogram-d2") {
    const auto r = cmd_histogram_d2(c, threads);
    return py::dict("values"_a = r.values, "edges"_a = r.edges, "counts"_a = r.counts,
                    "near_zero_fraction"_a = r.near_zero_fraction);
  }
  if (command == "transform") {
    const auto r = cmd_transform(c, threads);
    return py::dict("scales"_a = r.field.grid.scales(), "W"_a = to_array(r.field.W),
                    "ridge_scale"_a = r.ridge.scale_value);
  }
  throw py::value_error("unknown command '" + command + "'");
}

}  // namespace

PYBIND11_MODULE(ridgelab, m) {
  m.doc() = "Wavelet ridges of signals in stationary Gaussian noise";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def(
      "psi_hat",
      [](py::array_t<double> lambdas, double beta1, double beta2, std::optional<double> peak_hz) {
        const auto w = morse(beta1, beta2, peak_hz);
        return py::vectorize([&w](double l) { return eval_psi_hat(w, l); })(lambdas);
      },
      "lambdas"_a, "beta1"_a = 3.0, "beta2"_a = 2.0, "peak_hz"_a = py::none(),
      "Unit-peak generalized Morse wavelet in the frequency domain.");

  m.def(
      "linnik_density",
      [](py::array_t<double> lambdas, double gamma, double H, double scale) {
        const auto d = linnik(gamma, H, scale);
        return py::vectorize([&d](double l) { return d(l); })(lambdas);
      },
      "lambdas"_a, "gamma"_a, "H"_a, "scale"_a = 1.0);

  m.def(
      "spectral_moment",
      [](double s, double gamma, double H, double scale, double beta1, double beta2,
         std::optional<double> peak_hz) {
        return spectral_moment(linnik(gamma, H, scale), morse(beta1, beta2, peak_hz), s);
      },
      "s"_a, "gamma"_a, "H"_a, "scale"_a = 1.0, "beta1"_a = 3.0, "beta2"_a = 2.0,
      "peak_hz"_a = 80.0, "E|W(t, s)|^2 of Linnik noise.");

  m.def(
      "synthesize_path",
      [](std::size_t n, double fs, std::uint64_t seed, double gamma, double H, double scale) {
        const auto p = synthesize_path(linnik(gamma, H, scale), n, fs, seed);
        return py::array_t<double>(p.samples.size(), p.samples.data());
      },
      "n"_a, "fs"_a, "seed"_a, "gamma"_a = 1.0, "H"_a = 0.5, "scale"_a = 1.0,
      "Sampled Linnik noise path; the same seed gives the same samples.");

  m.def(
      "awt",
      [](const Real& x, double fs, double s_min, double s_max, int voices, double beta1, double beta2,
         std::optional<double> peak_hz, unsigned threads) {
        const auto grid = TimeScaleGrid::from_range(0.0, fs, x.size(), s_min, s_max, voices);
        const std::span<const double> samples(x.data(), x.size());
        const auto f = awt_forward(samples, fs, morse(beta1, beta2, peak_hz), grid, {}, threads);
        return py::make_tuple(grid.scales(), to_array(f.W));
      },
      "x"_a, "fs"_a, "s_min"_a = 2.0, "s_max"_a = 32.0, "voices"_a = 32, "beta1"_a = 3.0,
      "beta2"_a = 2.0, "peak_hz"_a = 80.0, "threads"_a = 1u,
      "Analytic wavelet transform; returns (scales, W) with W shaped (scales, times).");

  m.def(
      "ridge",
      [](const Real& S, double lambda) {
        ScalogramField f;
        f.S = from_array(S);
        f.grid = TimeScaleGrid{0.0, 1.0, f.S.cols, 1.0, 2.0, f.S.rows};
        const auto r = lambda > 0.0 ? ridge_penalized_dp(f, lambda) : ridge_argmax(f);
        return r.scale_index;
      },
      "S"_a, "lambda_"_a = 0.0,
      "Ridge scale index per column: argmax for lambda_ = 0, penalized path otherwise.");

  m.def("run", &run, "command"_a, "config"_a, "threads"_a = 1u,
        "Run an experiment command on a config (dict or JSON text) and return its results.");
}
