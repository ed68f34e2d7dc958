#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "delib/plots.hpp"
#include "delib/protocol.hpp"
#include "delib/scoring.hpp"
#include "delib/stats.hpp"

namespace delib {

enum class Metric { LogLoss, Brier };

Metric metric_from_string(std::string_view text);

/// One emitted table: display rows for the text rendering and
/// full-precision rows for the CSV.
struct Table {
  std::string title;
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> csv_headers;
  std::vector<std::vector<std::string>> csv_rows;
  /// Section captions placed before the row with the given index.
  std::vector<std::pair<std::size_t, std::string>> sections;
  std::string note;
  std::size_t left_columns = 1;  ///< leading text columns, left-aligned

  std::string to_csv() const;
  std::string to_text() const;
};

struct ScenarioSummary {
  Scenario scenario;
  Metric metric = Metric::LogLoss;
  stats::PairedTestResult test;  ///< before = independent, after = deliberative
};

/// One row per primary scenario present, in main-table order; the unit of
/// analysis is the group median.
std::vector<ScenarioSummary> scenario_table(const GroupScoring& scoring, Metric metric);
Table format_scenario_table(std::span<const ScenarioSummary> rows);

struct ModelBreakdownRow {
  Scenario scenario;
  ModelId model = ModelId::Sim;
  stats::PairedTestResult test;
};

/// Homogeneous scenarios restricted to each question's round-robin model.
std::vector<ModelBreakdownRow> model_breakdown(const GroupScoring& scoring);
Table format_model_breakdown(std::span<const ModelBreakdownRow> rows);

struct InfoRegressionArm {
  Diversity diversity = Diversity::Diverse;
  stats::RegressionResult regression;
};

/// Agent-level independent-stage Log Loss regressed on information level
/// with "no information" as reference, one fit per diversity arm.
/// Homogeneous arms use the round-robin groups only.
std::vector<InfoRegressionArm> info_regression_table(std::span<const ForecastRecord> records, double epsilon);
Table format_info_regression(std::span<const InfoRegressionArm> arms);

struct MdeRow {
  Scenario scenario;
  stats::MDEResult mde;
  double observed_effect = 0;
  std::optional<double> p_value;
};

/// Minimum detectable Log Loss change per primary scenario from the
/// observed SD of paired changes and the scenario's n.
std::vector<MdeRow> mde_rows(std::span<const ScenarioSummary> log_loss_rows, double alpha, double power);
Table format_mde_table(std::span<const MdeRow> rows, double power);

std::vector<CalibrationCurve> calibration_curves(const GroupScoring& scoring, int bin_count);
PlotData calibration_plot(std::span<const CalibrationCurve> curves);
PlotData power_plot(std::span<const MdeRow> rows, double alpha, double power);

struct ReportOptions {
  Metric metric = Metric::LogLoss;
  std::optional<std::string> only;  ///< scenario|brier|info|mde|models|calibration|power|scores
  double epsilon = kDefaultEpsilon;
  int bin_count = 10;
  double alpha = 0.05;
  double power = 0.80;
};

struct ReportOutput {
  std::vector<std::filesystem::path> files;
  std::string console;  ///< table printed to standard output
  std::vector<std::string> notes;
};

/// Writes tables/*.csv, tables/*.txt, figures/* under `out_dir`. Output is
/// a pure function of the records and options.
ReportOutput write_report(std::span<const ForecastRecord> records, const std::filesystem::path& out_dir,
                          const ReportOptions& options);

}  // namespace delib
