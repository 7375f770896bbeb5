#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ridgelab/awt.hpp"

namespace ridgelab {

/// Piecewise-linear scale boundaries for one component over time; constant
/// beyond the first/last knot.
struct ScaleBand {
  std::vector<double> times;
  std::vector<double> lower;
  std::vector<double> upper;

  static ScaleBand constant(double lower, double upper);
  double lower_at(double t) const;
  double upper_at(double t) const;
};

/// Bands for components 1..M (index 0 is the lowest-frequency component,
/// which lives at the largest scales).
struct BandSpec {
  std::vector<ScaleBand> bands;

  /// Checks 0 < lower_M < upper_M <= ... <= lower_1 < upper_1 at each grid
  /// time; throws Band on violation.
  void validate(const TimeScaleGrid& grid) const;
};

enum class RidgeKind { Argmax, Band, Penalized };

struct RidgeTrack {
  TimeScaleGrid grid;
  std::vector<std::size_t> scale_index;
  std::vector<double> scale_value;
  /// Number of scale bins that attain the column maximum exactly (1 for
  /// penalized tracks, where it is not defined).
  std::vector<std::uint32_t> tie_count;
  RidgeKind kind = RidgeKind::Argmax;
  std::size_t band = 0;   // component index for Band tracks
  double lambda = 0.0;    // penalty for Penalized tracks

  std::size_t size() const { return scale_index.size(); }
};

struct RidgePoint {
  std::size_t t_index;
  std::size_t s_index;  // lower bin of the +/- sign change of dS/ds
  double s_value;       // linearly interpolated zero crossing
};

/// Grid points where dS/ds changes sign from + to - between bins i and i+1
/// and d2S/ds2, interpolated linearly to the crossing, is negative.
/// Crossings where S is below floor_rel times the field maximum are FFT
/// roundoff and are skipped.
std::vector<RidgePoint> ridge_points(const ScalogramField& S, double floor_rel = 1e-24);

/// Per-column argmax of S (smallest index on ties).
RidgeTrack ridge_argmax(const ScalogramField& S);
RidgeTrack ridge_argmax(const Matrix<double>& S, const TimeScaleGrid& grid);

/// Argmax restricted to the bins inside band m. Bins within 1e-9 (relative,
/// in log-scale index units) of a boundary count as inside.
RidgeTrack ridge_band_argmax(const ScalogramField& S, const BandSpec& bands, std::size_t m);

/// Normalized log scalogram log(R / sum R). Zero cells map to
/// min(log(eps), smallest finite value - 1) so they rank below every
/// nonzero cell. Throws Precondition when R is identically zero.
Matrix<double> log_normalized(const Matrix<double>& R);

/// Exact maximizer over paths c of sum_j Rt(c_j, j) - lambda sum_j (c_{j+1} - c_j)^2
/// with Rt = log_normalized(S). Ties go to the smaller index at every step.
RidgeTrack ridge_penalized_dp(const ScalogramField& S, double lambda);

/// The same optimization on an arbitrary score matrix (rows are states).
std::vector<std::size_t> penalized_path(const Matrix<double>& score, double lambda);

/// Objective value of a path under the same score and penalty.
double path_objective(const Matrix<double>& score, const std::vector<std::size_t>& path,
                      double lambda);

struct Deviation {
  double delta = 0.0;        // mean |s_a - s_b|
  double delta_tilde = 0.0;  // mean |omega_psi/s_a - omega_psi/s_b|, Hz
};

/// Averages over [region.begin, region.end); an empty region means all
/// samples.
Deviation deviation_metrics(const RidgeTrack& a, const RidgeTrack& b, double omega_psi,
                            ValidRegion region = {});
Deviation deviation_metrics(const std::vector<double>& a, const std::vector<double>& b,
                            double omega_psi, ValidRegion region = {});

/// CSV with header `t,s_index,s_value,tie_count`.
void write_ridge_csv(const std::string& path, const RidgeTrack& track);

}  // namespace ridgelab
