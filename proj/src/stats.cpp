#include "delib/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "delib/distributions.hpp"
#include "delib/error.hpp"

namespace delib::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw Error("E_EMPTY", "mean of an empty sample");
  double sum = 0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sd(std::span<const double> xs) {
  if (xs.size() < 2) throw Error("E_EMPTY", "sd needs at least two values");
  const double m = mean(xs);
  double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

PairedTestResult paired_t(std::span<const double> before, std::span<const double> after) {
  if (before.size() != after.size()) {
    throw Error("E_LENGTH", fmt::format("paired samples differ in length ({} vs {})", before.size(), after.size()));
  }
  if (before.size() < 2) throw Error("E_EMPTY", "paired t-test needs at least two pairs");
  std::vector<double> diffs(before.size());
  for (std::size_t i = 0; i < before.size(); ++i) diffs[i] = after[i] - before[i];

  PairedTestResult r;
  r.n = before.size();
  r.df = r.n - 1;
  r.mean_before = mean(before);
  r.mean_after = mean(after);
  r.sd_before = sd(before);
  r.sd_after = sd(after);
  r.mean_diff = mean(diffs);
  r.sd_diff = sd(diffs);
  const bool constant = std::all_of(diffs.begin(), diffs.end(), [&](double d) { return d == diffs.front(); });
  if (constant || r.sd_diff == 0.0) {
    r.degenerate = true;
    r.sd_diff = 0.0;
    r.t = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.t = -r.mean_diff / (r.sd_diff / std::sqrt(static_cast<double>(r.n)));
  r.p_two_tailed = dist::student_t_two_tailed(r.t, static_cast<double>(r.df));
  return r;
}

double paired_t_from_summary(double mean_change, double sd_change, std::size_t n) {
  if (!(sd_change > 0) || n < 2) throw Error("E_RANGE", "summary t needs sd > 0 and n >= 2");
  return -mean_change / (sd_change / std::sqrt(static_cast<double>(n)));
}

RegressionResult ols(std::span<const double> design, std::size_t k, std::span<const double> y,
                     std::vector<std::string> names) {
  const std::size_t n = y.size();
  if (k == 0 || design.size() != n * k) throw Error("E_LENGTH", "design matrix does not match outcome length");
  if (n <= k) throw Error("E_RANK", fmt::format("need more observations ({}) than parameters ({})", n, k));
  if (names.size() != k) throw Error("E_LENGTH", "one name per coefficient required");

  // Column-major working copy; Householder reflections applied in place.
  std::vector<double> a(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) a[j * n + i] = design[i * k + j];
  std::vector<double> qty(y.begin(), y.end());
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[j * n + i]; };

  double max_diag = 0;
  for (std::size_t j = 0; j < k; ++j) {
    double norm = 0;
    for (std::size_t i = j; i < n; ++i) norm += at(i, j) * at(i, j);
    norm = std::sqrt(norm);
    if (norm == 0.0) throw Error("E_RANK", "design matrix is rank deficient");
    const double alpha = at(j, j) > 0 ? -norm : norm;
    std::vector<double> v(n - j);
    for (std::size_t i = j; i < n; ++i) v[i - j] = at(i, j);
    v[0] -= alpha;
    double vnorm2 = 0;
    for (double x : v) vnorm2 += x * x;
    if (vnorm2 > 0) {
      for (std::size_t c = j; c < k; ++c) {
        double dot = 0;
        for (std::size_t i = j; i < n; ++i) dot += v[i - j] * at(i, c);
        const double f = 2.0 * dot / vnorm2;
        for (std::size_t i = j; i < n; ++i) at(i, c) -= f * v[i - j];
      }
      double dot = 0;
      for (std::size_t i = j; i < n; ++i) dot += v[i - j] * qty[i];
      const double f = 2.0 * dot / vnorm2;
      for (std::size_t i = j; i < n; ++i) qty[i] -= f * v[i - j];
    }
    max_diag = std::max(max_diag, std::fabs(at(j, j)));
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (std::fabs(at(j, j)) <= 1e-12 * max_diag) throw Error("E_RANK", "design matrix is rank deficient");
  }

  // Back-substitution for beta, and R^{-1} for the covariance.
  std::vector<double> beta(k);
  for (std::size_t jj = k; jj-- > 0;) {
    double s = qty[jj];
    for (std::size_t c = jj + 1; c < k; ++c) s -= at(jj, c) * beta[c];
    beta[jj] = s / at(jj, jj);
  }
  std::vector<double> rinv(k * k, 0.0);  // row-major upper triangular
  for (std::size_t col = 0; col < k; ++col) {
    for (std::size_t row = col + 1; row-- > 0;) {
      double s = row == col ? 1.0 : 0.0;
      for (std::size_t c = row + 1; c <= col; ++c) s -= at(row, c) * rinv[c * k + col];
      rinv[row * k + col] = s / at(row, row);
    }
  }

  RegressionResult r;
  r.n = n;
  r.df_residual = n - k;
  r.fitted.assign(n, 0.0);
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = 0;
    for (std::size_t j = 0; j < k; ++j) f += design[i * k + j] * beta[j];
    r.fitted[i] = f;
    rss += (y[i] - f) * (y[i] - f);
  }
  r.residual_variance = rss / static_cast<double>(r.df_residual);
  for (std::size_t j = 0; j < k; ++j) {
    double var = 0;  // (R^{-1} R^{-T})_{jj}
    for (std::size_t c = j; c < k; ++c) var += rinv[j * k + c] * rinv[j * k + c];
    Coefficient coef;
    coef.name = std::move(names[j]);
    coef.beta = beta[j];
    coef.se = std::sqrt(var * r.residual_variance);
    coef.t = coef.se > 0 ? coef.beta / coef.se
                         : (coef.beta == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), coef.beta));
    coef.p = std::isnan(coef.t) ? 1.0 : dist::student_t_two_tailed(coef.t, static_cast<double>(r.df_residual));
    r.coefficients.push_back(std::move(coef));
  }
  return r;
}

RegressionResult ols_dummy(std::span<const double> outcome, std::span<const std::string> levels,
                           const std::string& reference, std::vector<std::string> level_order) {
  if (outcome.size() != levels.size()) throw Error("E_LENGTH", "one level per observation required");
  if (level_order.empty()) {
    level_order.push_back(reference);
    for (const std::string& l : levels) {
      if (std::find(level_order.begin(), level_order.end(), l) == level_order.end()) level_order.push_back(l);
    }
  }
  if (std::find(level_order.begin(), level_order.end(), reference) == level_order.end()) {
    level_order.insert(level_order.begin(), reference);
  }
  std::map<std::string, std::size_t> counts;
  for (const std::string& l : levels) {
    if (std::find(level_order.begin(), level_order.end(), l) == level_order.end()) {
      throw Error("E_LEVEL", "observation has undeclared level '" + l + "'");
    }
    ++counts[l];
  }
  for (const std::string& l : level_order) {
    if (counts[l] == 0) throw Error("E_RANK", "rank deficiency: level '" + l + "' has no observations");
  }
  if (level_order.size() < 2) throw Error("E_LEVEL", "need at least two levels");

  std::vector<std::string> others;
  for (const std::string& l : level_order) {
    if (l != reference) others.push_back(l);
  }
  const std::size_t k = 1 + others.size();
  std::vector<double> design(outcome.size() * k, 0.0);
  for (std::size_t i = 0; i < outcome.size(); ++i) {
    design[i * k] = 1.0;
    for (std::size_t j = 0; j < others.size(); ++j) design[i * k + 1 + j] = levels[i] == others[j] ? 1.0 : 0.0;
  }
  std::vector<std::string> names{"Intercept (" + reference + ")"};
  names.insert(names.end(), others.begin(), others.end());
  RegressionResult r = ols(design, k, outcome, std::move(names));
  r.reference_level = reference;
  return r;
}

double cohens_d(std::span<const double> diffs) {
  if (diffs.size() < 2) throw Error("E_EMPTY", "Cohen's d needs at least two differences");
  const double s = sd(diffs);
  if (s == 0.0) throw Error("E_DEGENERATE", "Cohen's d undefined for zero-variance differences");
  return mean(diffs) / s;
}

namespace {

void check_probabilities(double alpha, double power) {
  if (!(alpha > 0 && alpha < 1)) throw Error("E_RANGE", "alpha must lie in (0, 1)");
  if (!(power > 0 && power < 1)) throw Error("E_RANGE", "power must lie in (0, 1)");
}

}  // namespace

double required_d(std::size_t n, double alpha, double power) {
  check_probabilities(alpha, power);
  if (n < 2) throw Error("E_RANGE", "n must be at least 2");
  return (dist::normal_quantile(1.0 - alpha / 2.0) + dist::normal_quantile(power)) /
         std::sqrt(static_cast<double>(n));
}

MDEResult mde(const std::string& label, double sd_of_change, std::size_t n, double alpha, double power) {
  if (!(sd_of_change >= 0)) throw Error("E_RANGE", "sd of change must be non-negative");
  MDEResult r;
  r.label = label;
  r.sd_of_change = sd_of_change;
  r.n = n;
  r.alpha = alpha;
  r.power_target = power;
  r.d_required = required_d(n, alpha, power);
  r.mde = r.d_required * sd_of_change;
  return r;
}

std::vector<MDEResult> mde_table(std::span<const std::pair<std::string, double>> sd_by_scenario, std::size_t n,
                                 double alpha, double power) {
  std::vector<MDEResult> rows;
  for (const auto& [label, s] : sd_by_scenario) rows.push_back(mde(label, s, n, alpha, power));
  return rows;
}

double power_at(double effect, double sd_of_change, std::size_t n, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw Error("E_RANGE", "alpha must lie in (0, 1)");
  if (!std::isfinite(effect)) throw Error("E_RANGE", "effect must be finite");
  const double z = dist::normal_quantile(1.0 - alpha / 2.0);
  if (sd_of_change == 0.0) return effect == 0.0 ? alpha : 1.0;
  const double shift = std::fabs(effect) / (sd_of_change / std::sqrt(static_cast<double>(n)));
  return dist::normal_cdf(shift - z) + dist::normal_cdf(-shift - z);
}

PowerCurve power_curve(double sd_of_change, std::size_t n, double alpha, std::span<const double> effect_grid) {
  PowerCurve curve;
  curve.sd_of_change = sd_of_change;
  curve.n = n;
  curve.alpha = alpha;
  for (double e : effect_grid) curve.points.emplace_back(e, power_at(e, sd_of_change, n, alpha));
  return curve;
}

}  // namespace delib::stats
