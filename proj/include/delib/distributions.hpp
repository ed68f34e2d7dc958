#pragma once

namespace delib::dist {

double normal_pdf(double x);
double normal_cdf(double x);
/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

/// Regularised incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double x, double a, double b);

double student_t_pdf(double t, double df);
double student_t_cdf(double t, double df);
/// P(|T| >= |t|) for T ~ t(df), computed without cancellation.
double student_t_two_tailed(double t, double df);

}  // namespace delib::dist
