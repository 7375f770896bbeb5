#include "ridgelab/awt.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>

#include "ridgelab/csv.hpp"
#include "ridgelab/fft.hpp"
#include "ridgelab/parallel.hpp"

namespace ridgelab {

using cd = std::complex<double>;

double TimeScaleGrid::scale(std::size_t i) const {
  return s_min * std::pow(ratio, static_cast<double>(i));
}

std::vector<double> TimeScaleGrid::scales() const {
  std::vector<double> s(n_scale);
  for (std::size_t i = 0; i < n_scale; ++i) s[i] = scale(i);
  return s;
}

void TimeScaleGrid::validate() const {
  require(n_time >= 2, ErrorKind::Precondition, "grid needs at least two time samples");
  require(n_scale >= 2, ErrorKind::Precondition, "grid needs at least two scales");
  require(s_min > 0.0, ErrorKind::Precondition, "smallest scale must be positive");
  require(ratio > 1.0, ErrorKind::Precondition, "scale ratio must exceed 1");
  require(fs > 0.0, ErrorKind::Precondition, "sampling rate must be positive");
}

TimeScaleGrid TimeScaleGrid::from_range(double t0, double fs, std::size_t n_time, double s_min,
                                        double s_max, int voices) {
  require(s_min > 0.0 && s_max > s_min, ErrorKind::Precondition, "need 0 < s_min < s_max");
  require(voices >= 1, ErrorKind::Precondition, "need at least one voice per octave");
  TimeScaleGrid g;
  g.t0 = t0;
  g.fs = fs;
  g.n_time = n_time;
  g.s_min = s_min;
  g.ratio = std::exp2(1.0 / voices);
  const double steps = std::log2(s_max / s_min) * voices;
  g.n_scale = static_cast<std::size_t>(std::ceil(steps - 1e-9)) + 1;
  g.validate();
  return g;
}

AwtField awt_forward(std::span<const double> x, double fs, const WaveletSpec& w,
                     const TimeScaleGrid& grid, Channels channels, unsigned threads) {
  grid.validate();
  require(x.size() == grid.n_time, ErrorKind::Dimension,
          "signal has " + std::to_string(x.size()) + " samples, grid expects " +
              std::to_string(grid.n_time));
  require(fs == grid.fs, ErrorKind::Dimension, "sampling rate differs from the grid's");

  const std::size_t n = x.size();
  const std::size_t half = n / 2;
  std::vector<cd> X(half + 1);
  fft::forward_real(x, X);
  if (n % 2 == 0) X[half] *= 0.5;

  AwtField field;
  field.grid = grid;
  field.W = Matrix<cd>(grid.n_scale, n);
  if (channels.dW) field.dW.emplace(grid.n_scale, n);
  if (channels.d2W) field.d2W.emplace(grid.n_scale, n);

  const double bin = 2.0 * std::numbers::pi * fs / static_cast<double>(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  parallel_for(grid.n_scale, threads, [&](std::size_t i) {
    const double s = grid.scale(i);
    std::vector<cd> spec0(n), spec1, spec2, out(n);
    if (channels.dW) spec1.assign(n, cd{});
    if (channels.d2W) spec2.assign(n, cd{});
    for (std::size_t j = 1; j <= half; ++j) {
      const double omega = bin * static_cast<double>(j);
      if (channels.dW || channels.d2W) {
        const PsiDerivatives p = eval_psi_all(w, s * omega);
        spec0[j] = X[j] * std::conj(p.value);
        if (channels.dW) spec1[j] = X[j] * omega * std::conj(p.d1);
        if (channels.d2W) spec2[j] = X[j] * omega * omega * std::conj(p.d2);
      } else {
        spec0[j] = X[j] * std::conj(eval_psi_hat(w, s * omega));
      }
    }
    auto emit = [&](const std::vector<cd>& spec, Matrix<cd>& dst) {
      fft::backward(spec, out);
      auto row = dst.row(i);
      for (std::size_t k = 0; k < n; ++k) row[k] = out[k] * inv_n;
    };
    emit(spec0, field.W);
    if (channels.dW) emit(spec1, *field.dW);
    if (channels.d2W) emit(spec2, *field.d2W);
  });
  return field;
}

ScalogramField scalogram(const AwtField& field, Channels channels) {
  require(!channels.dW || field.dW.has_value(), ErrorKind::MissingChannel,
          "dS/ds needs the dW channel");
  require(!channels.d2W || (field.dW.has_value() && field.d2W.has_value()),
          ErrorKind::MissingChannel, "d2S/ds2 needs the dW and d2W channels");
  ScalogramField out;
  out.grid = field.grid;
  const std::size_t rows = field.W.rows;
  const std::size_t cols = field.W.cols;
  out.S = Matrix<double>(rows, cols);
  for (std::size_t q = 0; q < field.W.data.size(); ++q) out.S.data[q] = std::norm(field.W.data[q]);
  if (channels.dW) {
    out.dS.emplace(rows, cols);
    for (std::size_t q = 0; q < field.W.data.size(); ++q) {
      out.dS->data[q] = 2.0 * (std::conj(field.W.data[q]) * field.dW->data[q]).real();
    }
  }
  if (channels.d2W) {
    out.d2S.emplace(rows, cols);
    for (std::size_t q = 0; q < field.W.data.size(); ++q) {
      out.d2S->data[q] = 2.0 * std::norm(field.dW->data[q]) +
                         2.0 * (std::conj(field.W.data[q]) * field.d2W->data[q]).real();
    }
  }
  return out;
}

ValidRegion valid_region(const TimeScaleGrid& grid, const WaveletSpec& w) {
  const double margin_f = std::ceil(grid.s_max() * effective_support(w) * grid.fs);
  ValidRegion r;
  if (!(margin_f < static_cast<double>(grid.n_time))) return r;
  const auto margin = static_cast<std::size_t>(margin_f);
  if (2 * margin >= grid.n_time) return r;
  r.begin = margin;
  r.end = grid.n_time - margin;
  return r;
}

namespace {

constexpr char kMagic[5] = {'R', 'G', 'L', 'B', '1'};

template <typename T>
void put(std::ofstream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "container writer assumes little-endian");
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof value);
  require(in.good(), ErrorKind::Input, path + ": truncated field container");
  return value;
}

void write_header(std::ofstream& out, const TimeScaleGrid& grid, std::uint32_t kind) {
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kind);
  put<std::uint64_t>(out, grid.n_scale);
  put<std::uint64_t>(out, grid.n_time);
  put(out, grid.t0);
  put(out, grid.fs);
  put(out, grid.s_min);
  put(out, grid.ratio);
}

template <typename T>
void check_shape(const TimeScaleGrid& grid, const Matrix<T>& m) {
  require(m.rows == grid.n_scale && m.cols == grid.n_time, ErrorKind::Dimension,
          "matrix shape does not match the grid");
}

}  // namespace

void write_binary(const std::string& path, const TimeScaleGrid& grid, const Matrix<double>& m) {
  check_shape(grid, m);
  auto out = csv::open_output(path);
  write_header(out, grid, 0);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
}

void write_binary(const std::string& path, const TimeScaleGrid& grid, const Matrix<cd>& m) {
  check_shape(grid, m);
  auto out = csv::open_output(path);
  write_header(out, grid, 1);
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(cd)));
}

BinaryField read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Input, "cannot open " + path);
  char magic[5];
  in.read(magic, sizeof magic);
  require(in.good() && std::memcmp(magic, kMagic, sizeof magic) == 0, ErrorKind::Input,
          path + ": not an RGLB1 container");
  BinaryField f;
  const auto kind = get<std::uint32_t>(in, path);
  require(kind <= 1, ErrorKind::Input, path + ": unknown field kind");
  f.is_complex = kind == 1;
  f.grid.n_scale = get<std::uint64_t>(in, path);
  f.grid.n_time = get<std::uint64_t>(in, path);
  f.grid.t0 = get<double>(in, path);
  f.grid.fs = get<double>(in, path);
  f.grid.s_min = get<double>(in, path);
  f.grid.ratio = get<double>(in, path);
  const std::size_t count = f.grid.n_scale * f.grid.n_time;
  if (f.is_complex) {
    f.complex = Matrix<cd>(f.grid.n_scale, f.grid.n_time);
    in.read(reinterpret_cast<char*>(f.complex.data.data()),
            static_cast<std::streamsize>(count * sizeof(cd)));
  } else {
    f.real = Matrix<double>(f.grid.n_scale, f.grid.n_time);
    in.read(reinterpret_cast<char*>(f.real.data.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  }
  require(in.good(), ErrorKind::Input, path + ": truncated field container");
  return f;
}

void write_csv(const std::string& path, const TimeScaleGrid& grid, const Matrix<double>& m) {
  check_shape(grid, m);
  csv::Writer out(path);
  out.header({"t", "s", "S"});
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t k = 0; k < m.cols; ++k) out.row({grid.time(k), grid.scale(i), m(i, k)});
  }
}

void write_csv(const std::string& path, const TimeScaleGrid& grid, const Matrix<cd>& m) {
  check_shape(grid, m);
  csv::Writer out(path);
  out.header({"t", "s", "re", "im"});
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t k = 0; k < m.cols; ++k) {
      out.row({grid.time(k), grid.scale(i), m(i, k).real(), m(i, k).imag()});
    }
  }
}

}  // namespace ridgelab
