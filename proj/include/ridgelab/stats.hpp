#pragma once

#include <span>
#include <string>

namespace ridgelab {

enum class Alternative { Less, Greater, TwoSided };

Alternative parse_alternative(const std::string& name);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Wilcoxon signed-rank test on x - y. Zero differences are dropped; the
/// statistic is W+ (sum of ranks of positive differences, average ranks on
/// ties). The p-value uses the normal approximation with tie-corrected
/// variance and a continuity correction. "greater" tests x > y. Throws
/// InsufficientData for fewer than 10 nonzero differences.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                Alternative alternative);

/// One-sample Kolmogorov-Smirnov test against Exp(1); the p-value uses the
/// asymptotic Kolmogorov distribution with Stephens' small-sample factor.
TestResult ks_test_exp1(std::span<const double> sample);

/// Standard normal upper tail.
double normal_sf(double z);

}  // namespace ridgelab
