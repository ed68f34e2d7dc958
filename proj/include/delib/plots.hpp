#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace delib {

enum class PlotKind { Calibration, Power };

struct PlotPoint {
  std::optional<double> x;  ///< empty marks a gap (e.g. an empty bin)
  std::optional<double> y;
  std::optional<double> bin_lower;
  std::optional<double> bin_upper;
  std::optional<std::size_t> count;
};

struct Series {
  std::string label;
  std::vector<PlotPoint> points;
};

struct Panel {
  std::string slug;   ///< file-name fragment
  std::string title;
  std::vector<Series> series;
  std::vector<std::pair<double, double>> markers;  ///< highlighted points
};

/// One figure: a grid of panels sharing axes conventions.
struct PlotData {
  PlotKind kind = PlotKind::Calibration;
  std::string name;  ///< "calibration" or "power"
  std::string x_label;
  std::string y_label;
  std::optional<double> reference_hline;
  bool reference_diagonal = false;
  std::vector<Panel> panels;
  nlohmann::ordered_json metadata = nlohmann::ordered_json::object();
};

/// CSV for one panel. Calibration: series,bin_lower,bin_upper,count,
/// mean_predicted,observed_frequency (blank fields for empty bins).
/// Power: series,effect_size,power.
std::string panel_csv(const PlotData& plot, const Panel& panel);

/// Self-contained SVG of the whole figure drawn from the same points.
std::string render_svg(const PlotData& plot);

/// Writes figures/<name>_<panel>.csv, figures/<name>.svg and
/// figures/<name>.meta.json; returns the written paths.
std::vector<std::filesystem::path> emit_plots(const std::vector<PlotData>& plots,
                                              const std::filesystem::path& figures_dir);

}  // namespace delib
