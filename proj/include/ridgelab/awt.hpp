#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ridgelab/errors.hpp"
#include "ridgelab/wavelet.hpp"

namespace ridgelab {

/// Time samples t_k = t0 + k / fs and log-spaced scales s_i = s_min * ratio^i.
struct TimeScaleGrid {
  double t0 = 0.0;
  double fs = 1.0;
  std::size_t n_time = 0;
  double s_min = 1.0;
  double ratio = 1.0;
  std::size_t n_scale = 0;

  double time(std::size_t k) const { return t0 + static_cast<double>(k) / fs; }
  double scale(std::size_t i) const;
  std::vector<double> scales() const;
  double s_max() const { return scale(n_scale - 1); }
  /// Throws Precondition unless n_time >= 2, n_scale >= 2, s_min > 0, ratio > 1.
  void validate() const;

  /// Scales from s_min up to the first grid point >= s_max with `voices`
  /// scales per octave.
  static TimeScaleGrid from_range(double t0, double fs, std::size_t n_time, double s_min,
                                  double s_max, int voices = 64);
};

/// Row-major [rows x cols] matrix; rows are scales, columns are times.
template <typename T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
  Matrix(std::size_t r, std::size_t c, T fill) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t i, std::size_t k) { return data[i * cols + k]; }
  const T& operator()(std::size_t i, std::size_t k) const { return data[i * cols + k]; }
  std::span<T> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const T> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
};

/// Scale profile at one time index (copy).
template <typename T>
std::vector<T> column(const Matrix<T>& m, std::size_t t_index) {
  require(t_index < m.cols, ErrorKind::Index,
          "time index " + std::to_string(t_index) + " out of range (" + std::to_string(m.cols) +
              " samples)");
  std::vector<T> out(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) out[i] = m(i, t_index);
  return out;
}

struct Channels {
  bool dW = false;
  bool d2W = false;
};

struct AwtField {
  TimeScaleGrid grid;
  Matrix<std::complex<double>> W;
  std::optional<Matrix<std::complex<double>>> dW;
  std::optional<Matrix<std::complex<double>>> d2W;
};

struct ScalogramField {
  TimeScaleGrid grid;
  Matrix<double> S;
  std::optional<Matrix<double>> dS;
  std::optional<Matrix<double>> d2S;
};

/// W(., s) = inverse DFT of X(omega_j) conj(psi_hat(s omega_j)) over the
/// positive DFT frequencies (the Nyquist bin of an even-length input gets
/// half weight), omega_j = 2 pi j fs / n. The optional channels use the
/// multipliers omega conj(D psi_hat(s omega)) and omega^2 conj(D^2 psi_hat).
/// Rows are computed independently, so `threads` never changes the output.
AwtField awt_forward(std::span<const double> x, double fs, const WaveletSpec& w,
                     const TimeScaleGrid& grid, Channels channels = {}, unsigned threads = 1);

/// S = |W|^2, dS/ds = 2 Re(conj(W) dW), d2S/ds2 = 2|dW|^2 + 2 Re(conj(W) d2W).
/// Requesting a channel the field lacks throws MissingChannel.
ScalogramField scalogram(const AwtField& field, Channels channels = {});

/// Half-open time-index range unaffected by circular wraparound: a margin of
/// ceil(s_max * effective_support * fs) samples is dropped at each end.
struct ValidRegion {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end > begin ? end - begin : 0; }
  bool contains(std::size_t k) const { return k >= begin && k < end; }
};

ValidRegion valid_region(const TimeScaleGrid& grid, const WaveletSpec& w);

/// Compact binary container: "RGLB1", u32 kind (0 real, 1 complex), u64
/// n_scale, u64 n_time, f64 t0, fs, s_min, ratio, then row-major
/// little-endian doubles (complex entries as re, im).
void write_binary(const std::string& path, const TimeScaleGrid& grid, const Matrix<double>& m);
void write_binary(const std::string& path, const TimeScaleGrid& grid,
                  const Matrix<std::complex<double>>& m);

struct BinaryField {
  TimeScaleGrid grid;
  bool is_complex = false;
  Matrix<double> real;
  Matrix<std::complex<double>> complex;
};
BinaryField read_binary(const std::string& path);

/// Long-format CSV: `t,s,re,im` for complex fields, `t,s,S` for real ones.
void write_csv(const std::string& path, const TimeScaleGrid& grid, const Matrix<double>& m);
void write_csv(const std::string& path, const TimeScaleGrid& grid,
               const Matrix<std::complex<double>>& m);

}  // namespace ridgelab
