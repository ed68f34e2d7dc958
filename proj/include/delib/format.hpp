#pragma once

#include <optional>
#include <cstddef>
#include <string>

namespace delib::display {

// Rounding conventions for the published-style tables: three decimals for
// means, SDs and changes; two for t; p-values floored at "<.001".

std::string fixed3(double x);
/// Three decimals with an explicit sign ("+0.008", "-0.022").
std::string signed3(double x);
std::string t_stat(double t);
/// p >= 0.1: two decimals; 0.001 <= p < 0.1: two significant figures;
/// below that "<.001". Missing values print as "NA".
std::string p_value(std::optional<double> p);
/// "0.475 (0.494)"
std::string mean_sd(double mean, double sd);

}  // namespace delib::display

namespace delib::display {

/// Regression-table style: no leading zero (".48", "<.001").
std::string p_value_no_zero(std::optional<double> p);
/// "1,818"
std::string thousands(std::size_t n);

}  // namespace delib::display
