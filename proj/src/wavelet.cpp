#include "ridgelab/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ridgelab/errors.hpp"
#include "ridgelab/fft.hpp"

namespace ridgelab {
namespace {

using cd = std::complex<double>;

// log psi_hat of the undilated family and its first three derivatives
// (including log a).
struct LogDerivs {
  cd g0, g1, g2, g3;
};

LogDerivs log_derivs(const WaveletSpec& w, double x) {
  const double log_a = std::log(w.norm_const);
  const double lx = std::log(x);
  return std::visit(
      [&](const auto& f) -> LogDerivs {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Morse>) {
          const double b1 = f.beta1, b2 = f.beta2;
          const double xb = std::pow(x, b2);
          return {cd(log_a + b1 * lx - xb),
                  cd(b1 / x - b2 * xb / x),
                  cd(-b1 / (x * x) - b2 * (b2 - 1.0) * xb / (x * x)),
                  cd(2.0 * b1 / (x * x * x) - b2 * (b2 - 1.0) * (b2 - 2.0) * xb / (x * x * x))};
        } else {
          const cd c(f.alpha, f.beta);
          const cd gamma(f.gamma_re, f.gamma_im);
          return {log_a + c * lx - gamma * x, c / x - gamma, -c / (x * x), 2.0 * c / (x * x * x)};
        }
      },
      w.family);
}

double log_magnitude_base(const WaveletSpec& w, double x) { return log_derivs(w, x).g0.real(); }

cd exp_complex(cd z) { return std::polar(std::exp(z.real()), z.imag()); }

// Derivatives of order 0..3 of the undilated psi_hat at x > 0.
struct BaseValues {
  cd v0, v1, v2, v3;
};

BaseValues base_values(const WaveletSpec& w, double x, int max_order) {
  const LogDerivs g = log_derivs(w, x);
  BaseValues out{exp_complex(g.g0), {}, {}, {}};
  if (out.v0 == cd(0.0) || max_order == 0) return out;
  out.v1 = g.g1 * out.v0;
  if (max_order >= 2) out.v2 = (g.g2 + g.g1 * g.g1) * out.v0;
  if (max_order >= 3) out.v3 = (g.g3 + 3.0 * g.g1 * g.g2 + g.g1 * g.g1 * g.g1) * out.v0;
  return out;
}

void require_positive(double lambda) {
  require(lambda > 0.0, ErrorKind::Domain, "psi_hat derivatives need lambda > 0");
}

}  // namespace

double base_peak(const WaveletSpec& w) {
  return std::visit(
      [](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Morse>) {
          return std::pow(f.beta1 / f.beta2, 1.0 / f.beta2);
        } else {
          return f.alpha / f.gamma_re;
        }
      },
      w.family);
}

double dilation(const WaveletSpec& w) {
  if (!w.peak_target_hz) return 1.0;
  require(*w.peak_target_hz > 0.0, ErrorKind::InvalidWavelet, "peak target must be positive");
  return base_peak(w) / (2.0 * std::numbers::pi * *w.peak_target_hz);
}

double peak_angular_frequency(const WaveletSpec& w) { return base_peak(w) / dilation(w); }

double peak_magnitude(const WaveletSpec& w) {
  return std::exp(log_magnitude_base(w, base_peak(w)));
}

WaveletSpec unit_peak(WaveletSpec w) {
  w.norm_const = 1.0;
  w.norm_const = std::exp(-log_magnitude_base(w, base_peak(w)));
  return w;
}

cd eval_psi_hat(const WaveletSpec& w, double lambda) {
  if (lambda == 0.0) return {};
  if (lambda < 0.0) {
    if (w.negative_leak == 0.0) return {};
    return w.negative_leak * eval_psi_hat(w, -lambda);
  }
  return base_values(w, dilation(w) * lambda, 0).v0;
}

cd eval_dpsi_hat(const WaveletSpec& w, double lambda) {
  require_positive(lambda);
  const double k = dilation(w);
  return k * base_values(w, k * lambda, 1).v1;
}

cd eval_d2psi_hat(const WaveletSpec& w, double lambda) {
  require_positive(lambda);
  const double k = dilation(w);
  return k * k * base_values(w, k * lambda, 2).v2;
}

cd eval_d3psi_hat(const WaveletSpec& w, double lambda) {
  require_positive(lambda);
  const double k = dilation(w);
  return k * k * k * base_values(w, k * lambda, 3).v3;
}

PsiDerivatives eval_psi_all(const WaveletSpec& w, double lambda) {
  if (lambda <= 0.0) return {eval_psi_hat(w, lambda), {}, {}};
  const double k = dilation(w);
  const BaseValues b = base_values(w, k * lambda, 2);
  return {b.v0, k * b.v1, k * k * b.v2};
}

bool is_unimodal(const WaveletSpec& w) {
  const std::vector<double> grid = log_grid(1e-4, 1e4, 4096);
  int changes = 0;
  int last_sign = 0;
  double prev = log_magnitude_base(w, grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = log_magnitude_base(w, grid[i]);
    const double diff = cur - prev;
    prev = cur;
    if (!std::isfinite(diff) || diff == 0.0) continue;
    const int sign = diff > 0.0 ? 1 : -1;
    if (last_sign != 0 && sign != last_sign) ++changes;
    last_sign = sign;
  }
  return changes == 1;
}

double center_frequency(const WaveletSpec& w) {
  require(is_unimodal(w), ErrorKind::InvalidWavelet, "|psi_hat| is not unimodal: " + describe(w));
  if (w.peak_target_hz) return *w.peak_target_hz;
  return base_peak(w) / (2.0 * std::numbers::pi);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  require(lo > 0.0 && hi > lo && n >= 2, ErrorKind::Domain, "invalid log grid");
  std::vector<double> g(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
  g.back() = hi;
  return g;
}

std::vector<double> admissibility_grid() { return log_grid(1e-6, 1e6, 12 * 40 + 1); }

AdmissibilityReport verify_admissibility(const WaveletSpec& w, std::span<const double> grid) {
  require(grid.size() >= 3, ErrorKind::Domain, "admissibility grid too small");
  AdmissibilityReport report;

  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Morse>) {
          if (!(f.beta1 >= 1.0)) report.failures.push_back("Morse requires beta1 >= 1");
          if (!(f.beta2 > 0.0)) report.failures.push_back("Morse requires beta2 > 0");
        } else {
          if (!(f.alpha >= 1.0)) report.failures.push_back("Klauder requires alpha >= 1");
          if (!(f.gamma_re > 0.0)) report.failures.push_back("Klauder requires Re(gamma) > 0");
        }
      },
      w.family);
  if (w.negative_leak != 0.0) report.failures.push_back("psi_hat does not vanish on lambda <= 0");
  if (!is_unimodal(w)) report.failures.push_back("|psi_hat| is not unimodal");

  struct Condition {
    const char* name;
    int order;
    int power;
    bool above_one;
  };
  static constexpr Condition kConditions[] = {
      {"D0_1", 0, 1, true}, {"D0_2", 0, 2, true}, {"D1_0", 1, 0, false},
      {"D1_1", 1, 1, false}, {"D1_2", 1, 2, false}, {"D2_2", 2, 2, false},
      {"D2_3", 2, 3, false}, {"D3_3", 3, 3, false},
  };

  auto value = [&](const Condition& c, double lambda) {
    cd d;
    switch (c.order) {
      case 0: d = eval_psi_hat(w, lambda); break;
      case 1: d = eval_dpsi_hat(w, lambda); break;
      case 2: d = eval_d2psi_hat(w, lambda); break;
      default: d = eval_d3psi_hat(w, lambda); break;
    }
    return std::pow(lambda, c.power) * std::abs(d);
  };
  // Index of the grid point closest to `target` in log distance.
  auto nearest = [&](double target) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (std::abs(std::log(grid[i] / target)) < std::abs(std::log(grid[best] / target))) best = i;
    }
    return best;
  };
  auto growing = [](double edge, double inner, double decades) {
    if (!(edge > 0.0)) return false;
    if (!(inner > 0.0)) return true;
    return std::log10(edge / inner) / decades > 1e-3;
  };

  const std::size_t last = grid.size() - 1;
  const std::size_t upper_inner = nearest(grid[last] / 10.0);
  const std::size_t lower_inner = nearest(grid[0] * 10.0);

  for (const Condition& c : kConditions) {
    SupEstimate est{c.name, 0.0, false};
    for (double lambda : grid) {
      if (c.above_one && lambda <= 1.0) continue;
      const double v = value(c, lambda);
      if (!std::isfinite(v)) {
        est.sup = INFINITY;
        break;
      }
      est.sup = std::max(est.sup, v);
    }
    const double up_decades = std::log10(grid[last] / grid[upper_inner]);
    est.growing_at_edge = growing(value(c, grid[last]), value(c, grid[upper_inner]), up_decades);
    if (!c.above_one) {
      const double low_decades = std::log10(grid[lower_inner] / grid[0]);
      est.growing_at_edge =
          est.growing_at_edge || growing(value(c, grid[0]), value(c, grid[lower_inner]), low_decades);
    }
    if (!std::isfinite(est.sup) || est.growing_at_edge) {
      report.failures.push_back(std::string(c.name) + " sup not finite on the scan grid");
    }
    report.sups.push_back(est);
  }
  report.pass = report.failures.empty();
  return report;
}

double lipschitz_estimate(const WaveletSpec& w, std::span<const double> grid) {
  double lip = 0.0;
  for (double lambda : grid) lip = std::max(lip, std::abs(eval_dpsi_hat(w, lambda)));
  return lip;
}

double effective_support(const WaveletSpec& w) {
  // Sample the undilated psi_hat up to where it is negligible, zero-pad and
  // invert; psi_dilated(t) = psi_base(t / kappa) / kappa.
  const double peak = base_peak(w);
  const double log_peak = log_magnitude_base(w, peak);
  double x_max = peak;
  while (log_magnitude_base(w, x_max) - log_peak > std::log(1e-12) || x_max < 4.0 * peak) {
    x_max *= 1.25;
  }
  constexpr std::size_t n = std::size_t{1} << 18;
  const double dx = x_max / static_cast<double>(n / 8);
  std::vector<cd> spectrum(n);
  for (std::size_t j = 1; j < n / 8; ++j) {
    spectrum[j] = base_values(w, dx * static_cast<double>(j), 0).v0;
  }
  std::vector<cd> psi(n);
  fft::backward(spectrum, psi);

  const double dt = 2.0 * std::numbers::pi / (dx * static_cast<double>(n));
  std::vector<std::pair<double, double>> by_radius(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = (k < n / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n)) * dt;
    const double e = std::norm(psi[k]);
    by_radius[k] = {std::abs(t), e};
    total += e;
  }
  std::sort(by_radius.begin(), by_radius.end());
  double acc = 0.0;
  double radius = by_radius.back().first;
  for (const auto& [r, e] : by_radius) {
    acc += e;
    if (acc >= 0.99 * total) {
      radius = r;
      break;
    }
  }
  return radius * dilation(w);
}

std::string describe(const WaveletSpec& w) {
  std::ostringstream os;
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Morse>) {
          os << "morse(beta1=" << f.beta1 << ", beta2=" << f.beta2 << ")";
        } else {
          os << "klauder(alpha=" << f.alpha << ", beta=" << f.beta << ", gamma=" << f.gamma_re
             << (f.gamma_im < 0 ? "-" : "+") << std::abs(f.gamma_im) << "i)";
        }
      },
      w.family);
  if (w.peak_target_hz) os << " peak " << *w.peak_target_hz << " Hz";
  return os.str();
}

}  // namespace ridgelab
