#pragma once

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace ridgelab {

/// Generalized Morse: a * lambda^beta1 * exp(-lambda^beta2) on lambda > 0.
struct Morse {
  double beta1 = 1.0;
  double beta2 = 1.0;
};

/// Klauder: a * lambda^alpha * exp(-gamma*lambda) * exp(i*beta*log(lambda)),
/// gamma complex with positive real part. |psi_hat| only sees alpha and
/// Re(gamma).
struct Klauder {
  double alpha = 1.0;
  double beta = 0.0;
  double gamma_re = 1.0;
  double gamma_im = 0.0;
};

using WaveletFamily = std::variant<Morse, Klauder>;

/// Analytic mother wavelet, described in the frequency domain.
///
/// When `peak_target_hz` is set the base wavelet is dilated,
/// psi_hat(lambda) = base(kappa * lambda) with kappa = lambda*_base / (2 pi P),
/// so that |psi_hat| peaks at angular frequency 2 pi P.
struct WaveletSpec {
  WaveletFamily family = Morse{};
  std::optional<double> peak_target_hz;
  double norm_const = 1.0;
  /// Fault injection only: psi_hat(-x) = negative_leak * psi_hat(x) for x > 0.
  /// Any nonzero value makes the wavelet non-analytic.
  double negative_leak = 0.0;
};

/// Morse/Klauder spec with norm_const chosen so that max |psi_hat| = 1.
WaveletSpec unit_peak(WaveletSpec w);

/// Argmax of |psi_hat| for the undilated family (closed form).
double base_peak(const WaveletSpec& w);
/// Argument scaling kappa (1 when no peak target).
double dilation(const WaveletSpec& w);
/// Argmax of |psi_hat| after dilation, in rad/s.
double peak_angular_frequency(const WaveletSpec& w);
/// max |psi_hat| (sup norm).
double peak_magnitude(const WaveletSpec& w);

std::complex<double> eval_psi_hat(const WaveletSpec& w, double lambda);
/// Closed-form first derivative; lambda must be positive.
std::complex<double> eval_dpsi_hat(const WaveletSpec& w, double lambda);
std::complex<double> eval_d2psi_hat(const WaveletSpec& w, double lambda);
std::complex<double> eval_d3psi_hat(const WaveletSpec& w, double lambda);

/// psi_hat together with its first two derivatives at one point; used by the
/// transform, which needs all of them per DFT bin.
struct PsiDerivatives {
  std::complex<double> value;
  std::complex<double> d1;
  std::complex<double> d2;
};
PsiDerivatives eval_psi_all(const WaveletSpec& w, double lambda);

/// Sign-change count of successive differences of |psi_hat| (undilated) on a
/// 4096-point log grid over [1e-4, 1e4]; unimodal iff exactly one.
bool is_unimodal(const WaveletSpec& w);

/// Center frequency in Hz: argmax |psi_hat| / (2 pi). Throws InvalidWavelet
/// when |psi_hat| is not unimodal.
double center_frequency(const WaveletSpec& w);

struct SupEstimate {
  std::string condition;  // e.g. "D1_2"
  double sup = 0.0;
  bool growing_at_edge = false;
};

struct AdmissibilityReport {
  std::vector<SupEstimate> sups;
  std::vector<std::string> failures;
  bool pass = false;
};

/// Log-spaced grid helper, endpoints included.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Default scan grid: 1e-6 .. 1e6, 40 points per decade.
std::vector<double> admissibility_grid();

/// Numerical sup estimates for the decay/regularity conditions D0_1 .. D3_3.
/// A condition fails when the scanned function is still growing by more than
/// 1e-3 decades per decade at the grid edge it is taken towards.
AdmissibilityReport verify_admissibility(const WaveletSpec& w, std::span<const double> grid);

/// max |D psi_hat| over the scan grid (dilation included).
double lipschitz_estimate(const WaveletSpec& w, std::span<const double> grid);

/// Radius (seconds, unit scale) containing 99% of the time-domain energy
/// |psi(t)|^2 of the dilated wavelet.
double effective_support(const WaveletSpec& w);

std::string describe(const WaveletSpec& w);

}  // namespace ridgelab
