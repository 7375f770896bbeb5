#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "ridgelab/ahm.hpp"
#include "ridgelab/random.hpp"
#include "ridgelab/ridge.hpp"
#include "ridgelab/stats.hpp"

using namespace ridgelab;

namespace {

WaveletSpec morse_at(double b1, double b2, double hz) {
  WaveletSpec w{Morse{b1, b2}};
  w.peak_target_hz = hz;
  return unit_peak(w);
}

Matrix<double> random_matrix(std::size_t p, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix<double> m(p, n);
  for (double& v : m.data) v = rng.normal();
  return m;
}

/// Exhaustive search over all p^n paths; on equal objectives the
/// lexicographically smallest path wins.
std::vector<std::size_t> brute_force(const Matrix<double>& score, double lambda) {
  const std::size_t p = score.rows, n = score.cols;
  std::vector<std::size_t> path(n, 0), best;
  double best_v = -INFINITY;
  while (true) {
    const double v = path_objective(score, path, lambda);
    if (v > best_v) {
      best_v = v;
      best = path;
    }
    std::size_t k = n;
    while (k > 0 && path[k - 1] == p - 1) path[--k] = 0;
    if (k == 0) break;
    ++path[k - 1];
  }
  return best;
}

double total_jump(const std::vector<std::size_t>& c) {
  double s = 0;
  for (std::size_t k = 1; k < c.size(); ++k) {
    const double d = double(c[k]) - double(c[k - 1]);
    s += d * d;
  }
  return s;
}

ScalogramField field_from(const Matrix<double>& m) {
  ScalogramField f;
  f.grid.t0 = 0;
  f.grid.fs = 1;
  f.grid.n_time = m.cols;
  f.grid.n_scale = m.rows;
  f.grid.s_min = 1;
  f.grid.ratio = std::exp2(1.0 / 8);
  f.S = m;
  return f;
}

/// Exact null distribution of W+ for ranks r (possibly non-integer after
/// tie averaging; doubled ranks are integers).
std::map<long, double> exact_null(const std::vector<double>& ranks) {
  std::map<long, double> dist{{0, 1.0}};
  for (double r : ranks) {
    const long twice = std::lround(2 * r);
    std::map<long, double> next;
    for (auto [w, pr] : dist) {
      next[w] += 0.5 * pr;
      next[w + twice] += 0.5 * pr;
    }
    dist = std::move(next);
  }
  return dist;
}

}  // namespace

TEST_CASE("dp matches exhaustive search on small grids") {
  const std::pair<std::size_t, std::size_t> shapes[] = {{3, 4}, {2, 6}, {4, 3}, {6, 2}, {12, 1}, {1, 12}};
  std::uint64_t seed = 100;
  for (auto [p, n] : shapes) {
    for (double lambda : {0.0, 0.01, 0.1, 0.5, 2.0, 50.0}) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto m = random_matrix(p, n, ++seed);
        const auto dp = penalized_path(m, lambda);
        const auto bf = brute_force(m, lambda);
        CHECK(path_objective(m, dp, lambda) == path_objective(m, bf, lambda));
        CHECK(dp == bf);
      }
    }
  }
}

TEST_CASE("dp on the 3x4 example") {
  const auto m = random_matrix(3, 4, 81);
  const auto f = field_from([&] {
    Matrix<double> s(3, 4);
    for (std::size_t q = 0; q < s.data.size(); ++q) s.data[q] = std::exp(m.data[q]);
    return s;
  }());
  const auto track = ridge_penalized_dp(f, 0.1);
  CHECK(track.scale_index == brute_force(log_normalized(f.S), 0.1));
  CHECK(track.kind == RidgeKind::Penalized);
  CHECK(track.lambda == 0.1);
  for (std::size_t k = 0; k < 4; ++k) CHECK(track.scale_value[k] == f.grid.scale(track.scale_index[k]));
}

TEST_CASE("zero penalty reduces to argmax") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Matrix<double> s = random_matrix(40, 60, seed);
    for (double& v : s.data) v = v * v;
    s.data[seed] = 0.0;
    const auto f = field_from(s);
    CHECK(ridge_penalized_dp(f, 0.0).scale_index == ridge_argmax(f).scale_index);
  }
}

TEST_CASE("smoothing is monotone in the penalty") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = random_matrix(30, 80, 500 + seed);
    double prev = INFINITY;
    for (double lambda : {0.0, 0.001, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 100.0}) {
      const double j = total_jump(penalized_path(m, lambda));
      CHECK(j <= prev);
      prev = j;
    }
  }
}

TEST_CASE("large penalty gives the best constant path") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t p = 7, n = 9;
    const auto m = random_matrix(p, n, 900 + seed);
    const auto [lo, hi] = std::minmax_element(m.data.begin(), m.data.end());
    const double lambda = double(p * p) * (*hi - *lo) * double(n);
    const auto path = penalized_path(m, lambda);
    std::size_t best = 0;
    double best_sum = -INFINITY;
    for (std::size_t i = 0; i < p; ++i) {
      double s = 0;
      for (std::size_t k = 0; k < n; ++k) s += m(i, k);
      if (s > best_sum) {
        best_sum = s;
        best = i;
      }
    }
    for (std::size_t c : path) CHECK(c == best);
  }
}

TEST_CASE("log normalization") {
  Matrix<double> s(2, 2);
  s.data = {1.0, 3.0, 0.0, 4.0};
  const auto r = log_normalized(s);
  CHECK(r.data[0] == doctest::Approx(std::log(0.125)));
  CHECK(r.data[3] == doctest::Approx(std::log(0.5)));
  CHECK(r.data[2] < r.data[0]);
  CHECK(r.data[2] <= std::log(std::numeric_limits<double>::epsilon()));
  Matrix<double> z(2, 2);
  CHECK_THROWS_AS(log_normalized(z), Error);
  CHECK_THROWS_AS(penalized_path(s, -1.0), Error);
}

TEST_CASE("argmax ties and constants") {
  Matrix<double> s(5, 3, 2.0);
  auto f = field_from(s);
  auto r = ridge_argmax(f);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(r.scale_index[k] == 0);
    CHECK(r.tie_count[k] == 5);
  }
  f.S(1, 1) = 7.0;
  f.S(3, 1) = 7.0;
  r = ridge_argmax(f);
  CHECK(r.scale_index[1] == 1);
  CHECK(r.tie_count[1] == 2);
  CHECK(ridge_penalized_dp(f, 0.0).scale_index[1] == 1);
}

TEST_CASE("band argmax") {
  const auto m = random_matrix(32, 50, 77);
  auto f = field_from(m);
  for (double& v : f.S.data) v = v * v;
  const auto& g = f.grid;

  BandSpec full{{ScaleBand::constant(g.scale(0), g.s_max())}};
  CHECK(ridge_band_argmax(f, full, 0).scale_index == ridge_argmax(f).scale_index);

  BandSpec one{{ScaleBand::constant(g.scale(9), g.scale(9))}};
  for (std::size_t i : ridge_band_argmax(f, one, 0).scale_index) CHECK(i == 9);

  // Two moving bands, upper component on smaller scales.
  ScaleBand hi_band{{0.0, 49.0}, {g.scale(2), g.scale(10)}, {g.scale(8), g.scale(15)}};
  ScaleBand lo_band{{0.0, 49.0}, {g.scale(12), g.scale(18)}, {g.scale(25), g.scale(31)}};
  BandSpec two{{lo_band, hi_band}};
  two.validate(g);
  for (std::size_t m_idx = 0; m_idx < 2; ++m_idx) {
    const auto r = ridge_band_argmax(f, two, m_idx);
    CHECK(r.band == m_idx);
    for (std::size_t k = 0; k < g.n_time; ++k) {
      const double t = g.time(k);
      CHECK(r.scale_value[k] >= two.bands[m_idx].lower_at(t) * (1 - 1e-9));
      CHECK(r.scale_value[k] <= two.bands[m_idx].upper_at(t) * (1 + 1e-9));
      // Oracle: scan the column for bins inside the band.
      double best = -1;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < g.n_scale; ++i) {
        const double s = g.scale(i);
        if (s < two.bands[m_idx].lower_at(t) * (1 - 1e-12) || s > two.bands[m_idx].upper_at(t) * (1 + 1e-12)) continue;
        if (f.S(i, k) > best) {
          best = f.S(i, k);
          arg = i;
        }
      }
      CHECK(r.scale_index[k] == arg);
    }
  }

  BandSpec outside{{ScaleBand::constant(g.scale(0) / 2, g.scale(3))}};
  CHECK_THROWS_AS(ridge_band_argmax(f, outside, 0), Error);
  BandSpec between{{ScaleBand::constant(g.scale(4) * 1.01, g.scale(4) * 1.02)}};
  CHECK_THROWS_AS(ridge_band_argmax(f, between, 0), Error);
  BandSpec overlap{{ScaleBand::constant(g.scale(5), g.scale(9)), ScaleBand::constant(g.scale(3), g.scale(6))}};
  CHECK_THROWS_AS(overlap.validate(g), Error);
}

TEST_CASE("ridges of clean tones") {
  const double fs = 100.0;
  const std::size_t n = 3000;
  const auto w = morse_at(20, 3, 10.0);
  const auto grid = TimeScaleGrid::from_range(0.0, fs, n, 0.1, 2.0, 32);
  const auto region = valid_region(grid, w);
  REQUIRE(region.size() > 0);
  const double omega = center_frequency(w);

  auto points_per_column = [&](const std::vector<double>& x) {
    const auto S = scalogram(awt_forward(x, fs, w, grid, {.dW = true, .d2W = true}), {.dW = true, .d2W = true});
    std::vector<std::vector<double>> cols(n);
    for (const auto& p : ridge_points(S)) cols[p.t_index].push_back(p.s_value);
    return std::make_pair(cols, S);
  };

  AhmSignal one;
  one.t1 = n / fs;
  one.fs = fs;
  one.components = {{ConstAmplitude{1.0}, Tone{10.0}}};
  const auto [cols1, S1] = points_per_column(sample_signal(one));
  const auto arg = ridge_argmax(S1);
  for (std::size_t k = region.begin; k < region.end; ++k) {
    REQUIRE(cols1[k].size() == 1);
    CHECK(std::abs(std::log(cols1[k][0] * 10.0 / omega)) < 1e-3);
    CHECK(std::abs(std::log(arg.scale_value[k] * 10.0 / omega)) <= std::log(grid.ratio) + 1e-12);
    if (k > region.begin) CHECK(std::abs(double(arg.scale_index[k]) - double(arg.scale_index[k - 1])) <= 1.0);
  }

  AhmSignal two = one;
  two.components = {{ConstAmplitude{1.0}, Tone{10.0}}, {ConstAmplitude{1.0}, Tone{30.0}}};
  REQUIRE(check_conditions(two).delta == doctest::Approx(0.5));
  const auto [cols2, S2] = points_per_column(sample_signal(two));
  BandSpec bands{{ScaleBand::constant(omega / 15.0, omega / 6.0), ScaleBand::constant(omega / 45.0, omega / 20.0)}};
  bands.validate(grid);
  const auto r0 = ridge_band_argmax(S2, bands, 0);
  const auto r1 = ridge_band_argmax(S2, bands, 1);
  for (std::size_t k = region.begin; k < region.end; ++k) {
    REQUIRE(cols2[k].size() == 2);
    CHECK(std::abs(std::log(cols2[k][0] * 30.0 / omega)) < 1e-3);
    CHECK(std::abs(std::log(cols2[k][1] * 10.0 / omega)) < 1e-3);
    CHECK(std::abs(std::log(r0.scale_value[k] * 10.0 / omega)) <= std::log(grid.ratio) + 1e-12);
    CHECK(std::abs(std::log(r1.scale_value[k] * 30.0 / omega)) <= std::log(grid.ratio) + 1e-12);
  }

  const auto [cols0, S0] = points_per_column(std::vector<double>(n, 0.0));
  for (const auto& c : cols0) CHECK(c.empty());
  CHECK_THROWS_AS(ridge_points(scalogram(awt_forward(std::vector<double>(n, 0.0), fs, w, grid))), Error);
}

TEST_CASE("deviation metrics") {
  const std::vector<double> a(100, 8.0), b(100, 10.0);
  const auto d = deviation_metrics(a, b, 80.0);
  CHECK(d.delta == 2.0);
  CHECK(d.delta_tilde == 2.0);
  const auto z = deviation_metrics(a, a, 80.0);
  CHECK(z.delta == 0.0);
  CHECK(z.delta_tilde == 0.0);

  std::vector<double> c = b;
  for (std::size_t k = 0; k < 10; ++k) c[k] = 1000.0;
  CHECK(deviation_metrics(a, c, 80.0, {10, 100}).delta == 2.0);
  c[50] = 0.0;
  CHECK_THROWS_AS(deviation_metrics(a, c, 80.0), Error);
  CHECK_THROWS_AS(deviation_metrics(a, std::vector<double>(99, 1.0), 80.0), Error);
}

TEST_CASE("ridge csv") {
  Matrix<double> s(3, 4, 1.0);
  s(2, 1) = 5.0;
  auto f = field_from(s);
  f.grid.t0 = 2.0;
  const auto r = ridge_argmax(f);
  const auto path = (std::filesystem::temp_directory_path() / "ridgelab_ridge.csv").string();
  write_ridge_csv(path, r);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,s_index,s_value,tie_count\r");
  std::getline(in, line);
  CHECK(line == "2,0,1,3\r");
  std::getline(in, line);
  CHECK(line.rfind("3,2,", 0) == 0);
  std::filesystem::remove(path);
}

TEST_CASE("wilcoxon statistic and p-values") {
  // W+ equals the count of Walsh averages (d_i + d_j) / 2 > 0 over i <= j
  // when there are no ties.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const std::size_t n = 10 + seed;
    std::vector<double> x(n), y(n, 0.0);
    for (double& v : x) v = rng.normal() + 0.2;
    double walsh = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) walsh += (x[i] + x[j] > 0);
    const auto r = wilcoxon_signed_rank(x, y, Alternative::Greater);
    CHECK(r.statistic == walsh);

    // Exact null tail from enumeration; the approximation is close for n >= 10.
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) ranks[i] = double(i + 1);
    const auto dist = exact_null(ranks);
    const long w2 = std::lround(2 * r.statistic);
    double upper = 0, lower = 0;
    for (auto [w, pr] : dist) {
      if (w >= w2) upper += pr;
      if (w <= w2) lower += pr;
    }
    CHECK(std::abs(r.p_value - upper) < 0.01);
    CHECK(std::abs(wilcoxon_signed_rank(x, y, Alternative::Less).p_value - lower) < 0.01);
    const double two = std::min(1.0, 2 * std::min(upper, lower));
    CHECK(std::abs(wilcoxon_signed_rank(x, y, Alternative::TwoSided).p_value - two) < 0.02);
  }

  std::vector<double> pos(20), zero(20, 0.0);
  for (std::size_t i = 0; i < 20; ++i) pos[i] = 0.1 * double(i + 1);
  const auto all = wilcoxon_signed_rank(pos, zero, Alternative::Greater);
  CHECK(all.statistic == 210.0);
  CHECK(all.p_value < 1e-4);
  CHECK(exact_null(std::vector<double>(20, 0.0)).size() == 1);

  // Antisymmetric pairs: every |d| appears once with each sign.
  std::vector<double> anti;
  for (int i = 1; i <= 8; ++i) {
    anti.push_back(i);
    anti.push_back(-i);
  }
  const std::vector<double> z16(16, 0.0);
  const auto sym = wilcoxon_signed_rank(anti, z16, Alternative::TwoSided);
  std::vector<double> tied_ranks;
  for (int i = 0; i < 8; ++i) {
    tied_ranks.push_back(2 * i + 1.5);
    tied_ranks.push_back(2 * i + 1.5);
  }
  const auto dist = exact_null(tied_ranks);
  const long w2 = std::lround(2 * sym.statistic);
  double upper = 0, lower = 0;
  for (auto [w, pr] : dist) {
    if (w >= w2) upper += pr;
    if (w <= w2) lower += pr;
  }
  CHECK(sym.p_value == doctest::Approx(std::min(1.0, 2 * std::min(upper, lower))).epsilon(0.05));
  CHECK(sym.p_value > 0.9);

  CHECK_THROWS_AS(wilcoxon_signed_rank(pos, pos, Alternative::TwoSided), Error);
  try {
    wilcoxon_signed_rank(pos, pos, Alternative::TwoSided);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InsufficientData);
  }
  CHECK(parse_alternative("greater") == Alternative::Greater);
  CHECK_THROWS_AS(parse_alternative("bigger"), Error);
}

TEST_CASE("ks against the unit exponential") {
  const std::size_t n = 400;
  std::vector<double> quantiles(n), uniform(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = (k + 0.5) / n;
    quantiles[k] = -std::log1p(-u);
    uniform[k] = u;
  }
  const auto good = ks_test_exp1(quantiles);
  CHECK(good.statistic == doctest::Approx(0.5 / n).epsilon(1e-9));
  CHECK(good.p_value > 0.999);
  CHECK(ks_test_exp1(uniform).p_value < 1e-6);

  // 1.3581 is the 5% point of the Kolmogorov distribution.
  CHECK(normal_sf(1.959963985) == doctest::Approx(0.025).epsilon(1e-6));
  Rng rng(5);
  std::size_t rejections = 0;
  const std::size_t reps = 400;
  for (std::size_t r = 0; r < reps; ++r) {
    std::vector<double> s(200);
    for (double& v : s) v = -std::log1p(-rng.uniform());
    rejections += ks_test_exp1(s).p_value < 0.05;
  }
  // Binomial(400, 0.05): mean 20, sd 4.4.
  CHECK(rejections >= 6);
  CHECK(rejections <= 36);
}
