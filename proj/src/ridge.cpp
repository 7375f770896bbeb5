#include "ridgelab/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ridgelab/csv.hpp"
#include "ridgelab/errors.hpp"
#include "ridgelab/parallel.hpp"

namespace ridgelab {

ScaleBand ScaleBand::constant(double lower, double upper) { return {{0.0}, {lower}, {upper}}; }

namespace {

double interp(const std::vector<double>& x, const std::vector<double>& y, double t) {
  require(!x.empty() && x.size() == y.size(), ErrorKind::Band, "band table is empty or ragged");
  if (t <= x.front()) return y.front();
  if (t >= x.back()) return y.back();
  const auto it = std::upper_bound(x.begin(), x.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - x.begin());
  const double f = (t - x[j - 1]) / (x[j] - x[j - 1]);
  return (1.0 - f) * y[j - 1] + f * y[j];
}

void fill_values(RidgeTrack& r) {
  r.scale_value.resize(r.scale_index.size());
  for (std::size_t k = 0; k < r.scale_index.size(); ++k) r.scale_value[k] = r.grid.scale(r.scale_index[k]);
}

void check_matrix(const Matrix<double>& S, const TimeScaleGrid& grid) {
  require(S.rows == grid.n_scale && S.cols == grid.n_time && S.rows > 0, ErrorKind::Dimension,
          "scalogram shape does not match its grid");
}

/// Smallest index of the maximum over [lo, hi] in column k, plus the number
/// of bins equal to it.
std::pair<std::size_t, std::uint32_t> column_argmax(const Matrix<double>& S, std::size_t k,
                                                    std::size_t lo, std::size_t hi) {
  std::size_t best = lo;
  std::uint32_t ties = 1;
  for (std::size_t i = lo + 1; i <= hi; ++i) {
    const double v = S(i, k);
    if (v > S(best, k)) {
      best = i;
      ties = 1;
    } else if (v == S(best, k)) {
      ++ties;
    }
  }
  return {best, ties};
}

}  // namespace

double ScaleBand::lower_at(double t) const { return interp(times, lower, t); }
double ScaleBand::upper_at(double t) const { return interp(times, upper, t); }

void BandSpec::validate(const TimeScaleGrid& grid) const {
  require(!bands.empty(), ErrorKind::Band, "no bands given");
  for (std::size_t k = 0; k < grid.n_time; ++k) {
    const double t = grid.time(k);
    for (std::size_t m = 0; m < bands.size(); ++m) {
      const double lo = bands[m].lower_at(t);
      const double hi = bands[m].upper_at(t);
      require(lo > 0.0 && lo < hi, ErrorKind::Band,
              "band " + std::to_string(m) + " is empty or non-positive at t=" + std::to_string(t));
      if (m + 1 < bands.size()) {
        require(bands[m + 1].upper_at(t) <= lo, ErrorKind::Band,
                "bands " + std::to_string(m) + " and " + std::to_string(m + 1) +
                    " overlap at t=" + std::to_string(t));
      }
    }
  }
}

std::vector<RidgePoint> ridge_points(const ScalogramField& S, double floor_rel) {
  require(S.dS.has_value() && S.d2S.has_value(), ErrorKind::MissingChannel,
          "ridge points need the dS/ds and d2S/ds2 channels");
  const auto& d1 = *S.dS;
  const auto& d2 = *S.d2S;
  if (S.S.data.empty()) return {};
  const double floor = floor_rel * *std::max_element(S.S.data.begin(), S.S.data.end());
  std::vector<RidgePoint> out;
  for (std::size_t k = 0; k < d1.cols; ++k) {
    for (std::size_t i = 0; i + 1 < d1.rows; ++i) {
      const double a = d1(i, k);
      const double b = d1(i + 1, k);
      if (!(a > 0.0 && b <= 0.0)) continue;
      const double f = a / (a - b);
      const double curvature = (1.0 - f) * d2(i, k) + f * d2(i + 1, k);
      if (!(curvature < 0.0)) continue;
      if (std::max(S.S(i, k), S.S(i + 1, k)) <= floor) continue;
      const double s = S.grid.scale(i) * std::pow(S.grid.ratio, f);
      out.push_back({k, i, s});
    }
  }
  return out;
}

RidgeTrack ridge_argmax(const Matrix<double>& S, const TimeScaleGrid& grid) {
  check_matrix(S, grid);
  RidgeTrack r;
  r.grid = grid;
  r.kind = RidgeKind::Argmax;
  r.scale_index.resize(S.cols);
  r.tie_count.resize(S.cols);
  for (std::size_t k = 0; k < S.cols; ++k) {
    const auto [best, ties] = column_argmax(S, k, 0, S.rows - 1);
    r.scale_index[k] = best;
    r.tie_count[k] = ties;
  }
  fill_values(r);
  return r;
}

RidgeTrack ridge_argmax(const ScalogramField& S) { return ridge_argmax(S.S, S.grid); }

RidgeTrack ridge_band_argmax(const ScalogramField& S, const BandSpec& bands, std::size_t m) {
  check_matrix(S.S, S.grid);
  require(m < bands.bands.size(), ErrorKind::Band, "band index out of range");
  const auto& band = bands.bands[m];
  const auto& g = S.grid;
  const double log_r = std::log(g.ratio);
  const double last = static_cast<double>(g.n_scale - 1);
  constexpr double kTol = 1e-9;

  RidgeTrack r;
  r.grid = g;
  r.kind = RidgeKind::Band;
  r.band = m;
  r.scale_index.resize(g.n_time);
  r.tie_count.resize(g.n_time);
  for (std::size_t k = 0; k < g.n_time; ++k) {
    const double t = g.time(k);
    const double lo_pos = std::log(band.lower_at(t) / g.s_min) / log_r;
    const double hi_pos = std::log(band.upper_at(t) / g.s_min) / log_r;
    if (lo_pos < -kTol || hi_pos > last + kTol || !(lo_pos <= hi_pos)) {
      fail(ErrorKind::Band, "band " + std::to_string(m) + " leaves the scale grid at t=" +
                                std::to_string(t));
    }
    const double lo_idx = std::max(0.0, std::ceil(lo_pos - kTol));
    const double hi_idx = std::min(last, std::floor(hi_pos + kTol));
    if (lo_idx > hi_idx) {
      fail(ErrorKind::Band, "band " + std::to_string(m) + " contains no grid scale at t=" +
                                std::to_string(t));
    }
    const auto [best, ties] = column_argmax(S.S, k, static_cast<std::size_t>(lo_idx),
                                            static_cast<std::size_t>(hi_idx));
    r.scale_index[k] = best;
    r.tie_count[k] = ties;
  }
  fill_values(r);
  return r;
}

Matrix<double> log_normalized(const Matrix<double>& R) {
  double total = 0.0;
  for (double v : R.data) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::Domain,
            "scalogram entries must be finite and nonnegative");
    total += v;
  }
  require(total > 0.0, ErrorKind::Precondition, "scalogram is identically zero");
  Matrix<double> out(R.rows, R.cols);
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t q = 0; q < R.data.size(); ++q) {
    if (R.data[q] > 0.0) {
      out.data[q] = std::log(R.data[q] / total);
      smallest = std::min(smallest, out.data[q]);
    }
  }
  const double sentinel = std::min(std::log(std::numeric_limits<double>::epsilon()), smallest - 1.0);
  for (std::size_t q = 0; q < R.data.size(); ++q) {
    if (R.data[q] == 0.0) out.data[q] = sentinel;
  }
  return out;
}

std::vector<std::size_t> penalized_path(const Matrix<double>& score, double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorKind::Precondition,
          "penalty must be finite and nonnegative");
  const std::size_t p = score.rows;
  const std::size_t n = score.cols;
  require(p > 0 && n > 0, ErrorKind::Dimension, "empty score matrix");

  std::vector<std::size_t> path(n);
  if (lambda == 0.0) {
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < p; ++i) {
        if (score(i, k) > score(best, k)) best = i;
      }
      path[k] = best;
    }
    return path;
  }

  // back[k * p + i]: predecessor of state i at column k.
  std::vector<std::uint32_t> back(n * p, 0);
  std::vector<double> prev(p), cur(p);
  for (std::size_t i = 0; i < p; ++i) prev[i] = score(i, 0);
  for (std::size_t k = 1; k < n; ++k) {
    const double top = *std::max_element(prev.begin(), prev.end());
    for (std::size_t i = 0; i < p; ++i) {
      // A predecessor further than d bins away costs more than staying put
      // can ever lose, so only a window around i needs scanning.
      const double slack = top - prev[i];
      const auto reach = static_cast<std::size_t>(std::floor(std::sqrt(slack / lambda))) + 1;
      const std::size_t lo = i > reach ? i - reach : 0;
      const std::size_t hi = std::min(p - 1, i + reach);
      std::size_t best = lo;
      double best_v = prev[lo] - lambda * static_cast<double>((i - lo) * (i - lo));
      for (std::size_t j = lo + 1; j <= hi; ++j) {
        const double dj = static_cast<double>(j > i ? j - i : i - j);
        const double v = prev[j] - lambda * dj * dj;
        if (v > best_v) {
          best_v = v;
          best = j;
        }
      }
      cur[i] = best_v + score(i, k);
      back[k * p + i] = static_cast<std::uint32_t>(best);
    }
    std::swap(prev, cur);
  }
  std::size_t state = 0;
  for (std::size_t i = 1; i < p; ++i) {
    if (prev[i] > prev[state]) state = i;
  }
  for (std::size_t k = n; k-- > 0;) {
    path[k] = state;
    state = back[k * p + state];
  }
  return path;
}

double path_objective(const Matrix<double>& score, const std::vector<std::size_t>& path,
                      double lambda) {
  require(path.size() == score.cols, ErrorKind::Dimension, "path length differs from score width");
  double total = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    total += score(path[k], k);
    if (k > 0) {
      const double d = static_cast<double>(path[k]) - static_cast<double>(path[k - 1]);
      total -= lambda * d * d;
    }
  }
  return total;
}

RidgeTrack ridge_penalized_dp(const ScalogramField& S, double lambda) {
  check_matrix(S.S, S.grid);
  RidgeTrack r;
  r.grid = S.grid;
  r.kind = RidgeKind::Penalized;
  r.lambda = lambda;
  r.scale_index = penalized_path(log_normalized(S.S), lambda);
  r.tie_count.assign(r.scale_index.size(), 1);
  fill_values(r);
  return r;
}

Deviation deviation_metrics(const std::vector<double>& a, const std::vector<double>& b,
                            double omega_psi, ValidRegion region) {
  require(a.size() == b.size() && !a.empty(), ErrorKind::Dimension,
          "ridge tracks must have equal, nonzero lengths");
  if (region.size() == 0) region = {0, a.size()};
  require(region.end <= a.size(), ErrorKind::Dimension, "valid region exceeds the track");
  std::vector<double> ds(region.size()), df(region.size());
  for (std::size_t k = region.begin; k < region.end; ++k) {
    require(a[k] > 0.0 && b[k] > 0.0, ErrorKind::Domain, "ridge scale values must be positive");
    ds[k - region.begin] = std::abs(a[k] - b[k]);
    df[k - region.begin] = std::abs(omega_psi / a[k] - omega_psi / b[k]);
  }
  return {pairwise_mean(ds), pairwise_mean(df)};
}

Deviation deviation_metrics(const RidgeTrack& a, const RidgeTrack& b, double omega_psi,
                            ValidRegion region) {
  return deviation_metrics(a.scale_value, b.scale_value, omega_psi, region);
}

void write_ridge_csv(const std::string& path, const RidgeTrack& track) {
  csv::Writer out(path);
  out.header({"t", "s_index", "s_value", "tie_count"});
  for (std::size_t k = 0; k < track.size(); ++k) {
    out.row({csv::number(track.grid.time(k)), std::to_string(track.scale_index[k]),
             csv::number(track.scale_value[k]), std::to_string(track.tie_count[k])});
  }
}

}  // namespace ridgelab
