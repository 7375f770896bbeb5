#include "ridgelab/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "ridgelab/errors.hpp"

namespace ridgelab::fft {
namespace {

enum class Kind { RealForward, Forward, Backward };

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan plan_for(Kind kind, std::size_t n) {
  static std::map<std::tuple<Kind, std::size_t>, fftw_plan> cache;
  std::scoped_lock lock(plan_mutex());
  const auto key = std::make_tuple(kind, n);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const int size = static_cast<int>(n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan = nullptr;
  if (kind == Kind::RealForward) {
    std::vector<double> in(n);
    std::vector<std::complex<double>> out(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(size, in.data(), reinterpret_cast<fftw_complex*>(out.data()), flags);
  } else {
    std::vector<std::complex<double>> in(n);
    std::vector<std::complex<double>> out(n);
    plan = fftw_plan_dft_1d(size, reinterpret_cast<fftw_complex*>(in.data()),
                            reinterpret_cast<fftw_complex*>(out.data()),
                            kind == Kind::Forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
  }
  require(plan != nullptr, ErrorKind::Numerical, "FFTW could not create a plan");
  cache.emplace(key, plan);
  return plan;
}

void complex_transform(Kind kind, std::span<const std::complex<double>> in,
                       std::span<std::complex<double>> out) {
  require(in.size() == out.size() && !in.empty(), ErrorKind::Dimension, "fft size mismatch");
  require(in.data() != out.data(), ErrorKind::Dimension, "fft wrappers are out-of-place only");
  fftw_plan plan = plan_for(kind, in.size());
  // FFTW does not modify the input of an out-of-place c2c transform.
  auto* src = const_cast<std::complex<double>*>(in.data());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(src),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace

void forward_real(std::span<const double> in, std::span<std::complex<double>> out) {
  require(!in.empty() && out.size() == in.size() / 2 + 1, ErrorKind::Dimension,
          "real fft output must have n/2+1 bins");
  fftw_plan plan = plan_for(Kind::RealForward, in.size());
  // r2c plans may scribble over the input for some sizes; work on a copy.
  std::vector<double> scratch(in.begin(), in.end());
  fftw_execute_dft_r2c(plan, scratch.data(), reinterpret_cast<fftw_complex*>(out.data()));
}

void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
  complex_transform(Kind::Forward, in, out);
}

void backward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) {
  complex_transform(Kind::Backward, in, out);
}

}  // namespace ridgelab::fft
