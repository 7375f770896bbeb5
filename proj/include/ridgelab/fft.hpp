#pragma once

#include <complex>
#include <span>

namespace ridgelab::fft {

// Thin FFTW wrappers. Plans are created once per (size, direction) under a
// lock and executed with the thread-safe new-array interface.

/// Unnormalized forward DFT of a real sequence; `out` has n/2 + 1 bins.
void forward_real(std::span<const double> in, std::span<std::complex<double>> out);

/// Unnormalized DFT, exponent sign -1 (forward) or +1 (backward).
void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);
void backward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out);

}  // namespace ridgelab::fft
