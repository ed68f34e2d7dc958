#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace delib::stats {

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator).
double sd(std::span<const double> xs);

/// Paired comparison of two stages. `mean_diff` is after - before; `t`
/// tests H0: mean(before - after) = 0, so an improvement on a loss
/// (after < before) gives a positive t.
struct PairedTestResult {
  std::size_t n = 0;
  double mean_before = 0, mean_after = 0;
  double sd_before = 0, sd_after = 0;
  double mean_diff = 0, sd_diff = 0;
  double t = 0;
  std::size_t df = 0;
  std::optional<double> p_two_tailed;  ///< empty when degenerate
  bool degenerate = false;             ///< all differences identical

  bool rejects(double alpha) const { return p_two_tailed && *p_two_tailed < alpha; }
};

PairedTestResult paired_t(std::span<const double> before, std::span<const double> after);

/// t for the stated convention from summary statistics alone.
double paired_t_from_summary(double mean_change, double sd_change, std::size_t n);

struct Coefficient {
  std::string name;
  double beta = 0, se = 0, t = 0, p = 0;
};

struct RegressionResult {
  std::vector<Coefficient> coefficients;  ///< intercept first
  std::size_t n = 0;
  std::size_t df_residual = 0;
  double residual_variance = 0;
  std::string reference_level;
  std::vector<double> fitted;
};

/// Dense least squares with classical standard errors. `design` is n x k,
/// row-major. Solved by Householder QR.
RegressionResult ols(std::span<const double> design, std::size_t k, std::span<const double> y,
                     std::vector<std::string> names);

/// Outcome on dummy-coded categories. The intercept carries `reference`;
/// each other level in `level_order` (or first-appearance order when empty)
/// gets one coefficient named after it. A listed level with no
/// observations is a rank deficiency.
RegressionResult ols_dummy(std::span<const double> outcome, std::span<const std::string> levels,
                           const std::string& reference, std::vector<std::string> level_order = {});

/// Paired Cohen's d: mean / sd of the differences.
double cohens_d(std::span<const double> diffs);

/// Effect (in sd units) a two-sided test at `alpha` detects with
/// probability `power`, normal approximation: (z_{1-a/2} + z_power)/sqrt(n).
double required_d(std::size_t n, double alpha, double power);

struct MDEResult {
  std::string label;
  double sd_of_change = 0;
  std::size_t n = 0;
  double alpha = 0;
  double power_target = 0;
  double d_required = 0;
  double mde = 0;  ///< d_required * sd_of_change
};

MDEResult mde(const std::string& label, double sd_of_change, std::size_t n, double alpha, double power);

std::vector<MDEResult> mde_table(std::span<const std::pair<std::string, double>> sd_by_scenario,
                                 std::size_t n, double alpha, double power);

/// Two-sided normal-approximation power of the paired test for a true
/// mean change `effect`.
double power_at(double effect, double sd_of_change, std::size_t n, double alpha);

struct PowerCurve {
  double sd_of_change = 0;
  std::size_t n = 0;
  double alpha = 0;
  std::vector<std::pair<double, double>> points;  ///< (effect, power)
};

PowerCurve power_curve(double sd_of_change, std::size_t n, double alpha, std::span<const double> effect_grid);

}  // namespace delib::stats
