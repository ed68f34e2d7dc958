#include "delib/format.hpp"

#include <fmt/format.h>

#include <cmath>

namespace delib::display {

namespace {

// Avoid printing "-0.000" for values that round to zero.
double clean_zero(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(x * scale) == 0.0 ? 0.0 : x;
}

}  // namespace

std::string fixed3(double x) { return fmt::format("{:.3f}", clean_zero(x, 3)); }

std::string signed3(double x) { return fmt::format("{:+.3f}", clean_zero(x, 3)); }

std::string t_stat(double t) {
  if (!std::isfinite(t)) return "NA";
  return fmt::format("{:.2f}", clean_zero(t, 2));
}

std::string p_value(std::optional<double> p) {
  if (!p || !std::isfinite(*p)) return "NA";
  if (*p < 0.001) return "<.001";
  if (*p >= 0.1) return fmt::format("{:.2f}", *p);
  // Two significant figures: 0.017, 0.0042.
  const int decimals = 1 - static_cast<int>(std::floor(std::log10(*p)));
  return fmt::format("{:.{}f}", *p, decimals);
}

std::string mean_sd(double mean, double sd) {
  return fmt::format("{} ({})", fixed3(mean), fixed3(sd));
}

}  // namespace delib::display

namespace delib::display {

std::string p_value_no_zero(std::optional<double> p) {
  std::string s = p_value(p);
  if (s.size() > 1 && s[0] == '0' && s[1] == '.') s.erase(0, 1);
  return s;
}

std::string thousands(std::size_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

}  // namespace delib::display
