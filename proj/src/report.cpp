#include "delib/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "delib/error.hpp"
#include "delib/format.hpp"

namespace delib {

namespace fs = std::filesystem;

Metric metric_from_string(std::string_view text) {
  if (text == "logloss") return Metric::LogLoss;
  if (text == "brier") return Metric::Brier;
  throw Error("E_ARGUMENT", "metric must be logloss or brier");
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string model_label(ModelId m) {
  switch (m) {
    case ModelId::GPT5: return "GPT-5";
    case ModelId::Sonnet: return "Sonnet";
    case ModelId::Pro: return "Pro";
    case ModelId::Sim: return "Sim";
  }
  return "Sim";
}

double metric_value(const GroupScore& g, Metric metric) {
  return metric == Metric::LogLoss ? g.log_loss : g.brier;
}

// Paired samples from matching independent/deliberative scores, keyed by group.
stats::PairedTestResult paired_scores(std::span<const GroupScore> scores, Metric metric,
                                      const std::function<bool(const GroupScore&)>& keep) {
  std::map<std::string, std::size_t> slot;
  std::vector<double> before, after;
  std::vector<bool> have_before, have_after;
  for (const GroupScore& g : scores) {
    if (!keep(g)) continue;
    auto [it, inserted] = slot.try_emplace(g.group_key, before.size());
    if (inserted) {
      before.push_back(0);
      after.push_back(0);
      have_before.push_back(false);
      have_after.push_back(false);
    }
    if (g.stage == Stage::Independent) {
      before[it->second] = metric_value(g, metric);
      have_before[it->second] = true;
    } else {
      after[it->second] = metric_value(g, metric);
      have_after[it->second] = true;
    }
  }
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (!have_before[i] || !have_after[i]) throw Error("E_INCOMPLETE", "group without both stages in score set");
  }
  return stats::paired_t(before, after);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("E_IO", "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("E_IO", "write failed for '" + path.string() + "'");
}

std::string full(double v) { return std::isfinite(v) ? fmt::format("{}", v) : "NA"; }
std::string full(const std::optional<double>& v) { return v ? full(*v) : "NA"; }

// Breakdown and MDE tables call homogeneous groups "Same model"; the short form
// abbreviates "information".
std::string short_label(const Scenario& s, bool short_form) {
  std::string head = s.diversity == Diversity::Diverse ? "Diverse models, " : "Same model, ";
  std::string info = std::string(to_string(s.info));
  return head + info + (short_form ? " info." : " information");
}

std::string metric_title(Metric metric) {
  return metric == Metric::LogLoss ? "Effect of deliberation on forecast accuracy by scenario on Log Loss"
                                   : "Effect of deliberation on forecast accuracy by scenario (Brier Score)";
}

}  // namespace

std::string Table::to_csv() const {
  const auto& head = csv_headers.empty() ? headers : csv_headers;
  const auto& body = csv_headers.empty() ? rows : csv_rows;
  std::string out;
  for (std::size_t i = 0; i < head.size(); ++i) out += (i ? "," : "") + csv_escape(head[i]);
  out += "\n";
  for (const auto& row : body) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_escape(row[i]);
    out += "\n";
  }
  return out;
}

std::string Table::to_text() const {
  std::vector<std::size_t> width(headers.size(), 0);
  for (std::size_t i = 0; i < headers.size(); ++i) width[i] = headers[i].size();
  for (const auto& row : rows)
    for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) width[i] = std::max(width[i], row[i].size());
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (width[i] == 0) continue;  // blank spacer column
      if (!out.empty()) out += "  ";
      out += i < left_columns ? fmt::format("{:<{}}", cells[i], width[i]) : fmt::format("{:>{}}", cells[i], width[i]);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::size_t total = 0;
  for (auto w : width) total += w ? w + 2 : 0;
  const std::string rule(total > 2 ? total - 2 : 0, '-');
  std::string out = title + "\n" + rule + "\n" + line(headers) + rule + "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [before, caption] : sections) {
      if (before == r) out += caption + "\n";
    }
    out += line(rows[r]);
  }
  out += rule + "\n";
  if (!note.empty()) out += note + "\n";
  return out;
}

std::vector<ScenarioSummary> scenario_table(const GroupScoring& scoring, Metric metric) {
  for (const std::string& key : scoring.incomplete_groups) {
    const Scenario s = parse_scenario(key.substr(0, key.find('/')));
    if (s.is_primary()) throw Error("E_INCOMPLETE", "incomplete scenario " + s.slug() + " (group " + key + ")");
  }
  std::vector<ScenarioSummary> rows;
  for (const Scenario& s : primary_scenarios()) {
    const bool present = std::any_of(scoring.scores.begin(), scoring.scores.end(),
                                     [&](const GroupScore& g) { return g.scenario == s; });
    if (!present) continue;
    rows.push_back({s, metric, paired_scores(scoring.scores, metric, [&](const GroupScore& g) { return g.scenario == s; })});
  }
  return rows;
}

Table format_scenario_table(std::span<const ScenarioSummary> rows) {
  Table t;
  const Metric metric = rows.empty() ? Metric::LogLoss : rows.front().metric;
  t.title = metric_title(metric);
  t.headers = {"Scenario", "Independent mean (SD)", "Deliberative mean (SD)", "Change mean (SD)", "t", "p"};
  t.csv_headers = {"scenario", "n", "independent_mean", "independent_sd", "deliberative_mean", "deliberative_sd",
                   "change_mean", "change_sd", "t", "df", "p"};
  std::vector<std::string> ns;
  for (const ScenarioSummary& r : rows) {
    const auto& x = r.test;
    t.rows.push_back({r.scenario.label(), display::mean_sd(x.mean_before, x.sd_before),
                      display::mean_sd(x.mean_after, x.sd_after),
                      fmt::format("{} ({})", display::signed3(x.mean_diff), display::fixed3(x.sd_diff)),
                      display::t_stat(x.t), display::p_value(x.p_two_tailed)});
    t.csv_rows.push_back({r.scenario.slug(), std::to_string(x.n), full(x.mean_before), full(x.sd_before),
                          full(x.mean_after), full(x.sd_after), full(x.mean_diff), full(x.sd_diff), full(x.t),
                          std::to_string(x.df), full(x.p_two_tailed)});
    ns.push_back(std::to_string(x.n));
  }
  std::string n_note;
  if (!ns.empty() && std::all_of(ns.begin(), ns.end(), [&](const std::string& n) { return n == ns.front(); })) {
    n_note = "n = " + ns.front() + " for all scenarios.";
  } else {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      n_note += fmt::format("{}n = {} ({})", i ? "; " : "", ns[i], rows[i].scenario.slug());
    }
    n_note += ".";
  }
  t.note = "Note: " + n_note + " Change = Deliberative minus Independent; negative values indicate improvement.";
  return t;
}

std::vector<ModelBreakdownRow> model_breakdown(const GroupScoring& scoring) {
  std::vector<ModelBreakdownRow> rows;
  for (InfoLevel info : {InfoLevel::Distributed, InfoLevel::Shared}) {
    const Scenario s{Diversity::Homogeneous, info};
    for (ModelId m : kPanelModels) {
      auto keep = [&](const GroupScore& g) { return g.scenario == s && g.is_round_robin() && g.group_model == m; };
      const std::size_t count = static_cast<std::size_t>(
          std::count_if(scoring.scores.begin(), scoring.scores.end(), [&](const GroupScore& g) { return keep(g); }));
      if (count < 4) continue;  // fewer than two paired groups
      rows.push_back({s, m, paired_scores(scoring.scores, Metric::LogLoss, keep)});
    }
  }
  return rows;
}

Table format_model_breakdown(std::span<const ModelBreakdownRow> rows) {
  Table t;
  t.title = "Deliberation effects by model type (homogeneous scenarios only)";
  t.left_columns = 2;
  t.headers = {"Scenario", "Model", "n", "Independent", "Deliberative", "Change", "t", "p"};
  t.csv_headers = {"scenario", "model", "n", "independent_mean", "deliberative_mean", "change_mean", "t", "p"};
  for (const ModelBreakdownRow& r : rows) {
    const auto& x = r.test;
    t.rows.push_back({short_label(r.scenario, true), model_label(r.model), std::to_string(x.n),
                      display::fixed3(x.mean_before), display::fixed3(x.mean_after), display::signed3(x.mean_diff),
                      display::t_stat(x.t), display::p_value(x.p_two_tailed)});
    t.csv_rows.push_back({r.scenario.slug(), std::string(to_string(r.model)), std::to_string(x.n),
                          full(x.mean_before), full(x.mean_after), full(x.mean_diff), full(x.t),
                          full(x.p_two_tailed)});
  }
  t.note = "Note: Questions were distributed across model types using round-robin assignment. Values show mean Log Loss.";
  return t;
}

std::vector<InfoRegressionArm> info_regression_table(std::span<const ForecastRecord> records, double epsilon) {
  static const std::map<InfoLevel, std::string> kLevelName = {
      {InfoLevel::None, "no info"}, {InfoLevel::Distributed, "Partial info"}, {InfoLevel::Shared, "Full info"}};
  std::vector<InfoRegressionArm> arms;
  for (Diversity d : {Diversity::Diverse, Diversity::Homogeneous}) {
    std::vector<double> y;
    std::vector<std::string> level;
    for (const ForecastRecord& r : records) {
      if (r.stage != Stage::Independent || r.scenario.diversity != d) continue;
      if (d == Diversity::Homogeneous && r.model_id != round_robin_model(r.position)) continue;
      y.push_back(log_loss(r.probability, r.outcome, epsilon));
      level.push_back(kLevelName.at(r.info_level));
    }
    if (y.empty()) continue;
    std::vector<std::string> order;
    for (InfoLevel l : {InfoLevel::None, InfoLevel::Distributed, InfoLevel::Shared}) {
      if (std::find(level.begin(), level.end(), kLevelName.at(l)) != level.end()) order.push_back(kLevelName.at(l));
    }
    if (order.size() < 2) {
      throw Error("E_LEVEL", fmt::format("information regression for {} groups needs at least two information levels",
                                         to_string(d)));
    }
    if (order.front() != kLevelName.at(InfoLevel::None)) {
      throw Error("E_LEVEL", "information regression needs the no-information reference arm");
    }
    arms.push_back({d, stats::ols_dummy(y, level, kLevelName.at(InfoLevel::None), order)});
  }
  if (arms.empty()) throw Error("E_LEVEL", "no independent-stage records for the information regression");
  return arms;
}

Table format_info_regression(std::span<const InfoRegressionArm> arms) {
  Table t;
  t.title = "Effect of information on forecast accuracy, measured as Log Loss (independent stage only)";
  t.left_columns = 2;
  t.headers = {"", "Predictor", "beta", "SE", "t", "p"};
  t.csv_headers = {"arm", "n", "predictor", "beta", "se", "t", "p"};
  for (const InfoRegressionArm& arm : arms) {
    const std::string arm_label = arm.diversity == Diversity::Diverse ? "Diverse" : "Homogeneous";
    t.sections.emplace_back(t.rows.size(),
                            fmt::format("{} (n = {})", arm_label, display::thousands(arm.regression.n)));
    for (std::size_t i = 0; i < arm.regression.coefficients.size(); ++i) {
      const stats::Coefficient& c = arm.regression.coefficients[i];
      t.rows.push_back({"", c.name, i == 0 ? display::fixed3(c.beta) : display::signed3(c.beta),
                        display::fixed3(c.se), display::t_stat(c.t), display::p_value_no_zero(c.p)});
      t.csv_rows.push_back({std::string(to_string(arm.diversity)), std::to_string(arm.regression.n), c.name,
                            full(c.beta), full(c.se), full(c.t), full(c.p)});
    }
  }
  return t;
}

std::vector<MdeRow> mde_rows(std::span<const ScenarioSummary> log_loss_rows, double alpha, double power) {
  // Sensitivity-table order: shared before distributed within each arm.
  static const std::vector<Scenario> kOrder = {{Diversity::Diverse, InfoLevel::Shared},
                                               {Diversity::Diverse, InfoLevel::Distributed},
                                               {Diversity::Homogeneous, InfoLevel::Shared},
                                               {Diversity::Homogeneous, InfoLevel::Distributed}};
  std::vector<MdeRow> rows;
  for (const Scenario& s : kOrder) {
    for (const ScenarioSummary& r : log_loss_rows) {
      if (!(r.scenario == s)) continue;
      rows.push_back({s, stats::mde(s.label(), r.test.sd_diff, r.test.n, alpha, power), r.test.mean_diff,
                      r.test.p_two_tailed});
    }
  }
  return rows;
}

Table format_mde_table(std::span<const MdeRow> rows, double power) {
  Table t;
  t.title = "Minimum Detectable Effects by Scenario";
  t.headers = {"Scenario", "SD of Change", fmt::format("MDE ({:g}% power)", power * 100), "Observed Effect", "p-value"};
  t.csv_headers = {"scenario", "n", "sd_of_change", "d_required", "mde", "observed_effect", "p"};
  for (const MdeRow& r : rows) {
    std::string p = r.p_value ? fmt::format("{:.3f}", *r.p_value) : "NA";
    if (r.p_value && *r.p_value < 0.001) p = "<.001";
    t.rows.push_back({short_label(r.scenario, false), display::fixed3(r.mde.sd_of_change),
                      display::fixed3(r.mde.mde), display::signed3(r.observed_effect), p});
    t.csv_rows.push_back({r.scenario.slug(), std::to_string(r.mde.n), full(r.mde.sd_of_change),
                          full(r.mde.d_required), full(r.mde.mde), full(r.observed_effect), full(r.p_value)});
  }
  if (!rows.empty()) {
    t.note = fmt::format("Note: MDE = d x SD of Change with d = (z(1-alpha/2) + z(power)) / sqrt(n), alpha = {:g}.",
                         rows.front().mde.alpha);
  }
  return t;
}

std::vector<CalibrationCurve> calibration_curves(const GroupScoring& scoring, int bin_count) {
  std::vector<CalibrationCurve> curves;
  for (const Scenario& s : primary_scenarios()) {
    for (Stage stage : {Stage::Independent, Stage::Deliberative}) {
      std::vector<std::pair<double, int>> pts;
      for (const GroupScore& g : scoring.scores) {
        if (g.scenario == s && g.stage == stage) pts.emplace_back(g.median_p, g.outcome);
      }
      if (pts.empty()) continue;
      CalibrationCurve c = calibration(pts, bin_count);
      c.scenario = s.slug();
      c.stage = std::string(to_string(stage));
      curves.push_back(std::move(c));
    }
  }
  return curves;
}

PlotData calibration_plot(std::span<const CalibrationCurve> curves) {
  PlotData plot;
  plot.kind = PlotKind::Calibration;
  plot.name = "calibration";
  plot.x_label = "Mean predicted probability";
  plot.y_label = "Observed frequency";
  plot.reference_diagonal = true;
  for (const CalibrationCurve& c : curves) {
    auto it = std::find_if(plot.panels.begin(), plot.panels.end(), [&](const Panel& p) { return p.slug == c.scenario; });
    if (it == plot.panels.end()) {
      plot.panels.push_back({c.scenario, parse_scenario(c.scenario).label(), {}, {}});
      it = std::prev(plot.panels.end());
    }
    Series s{c.stage, {}};
    for (const CalibrationBin& b : c.bins) {
      s.points.push_back({b.mean_predicted, b.observed_frequency, b.lower, b.upper, b.count});
    }
    it->series.push_back(std::move(s));
  }
  plot.metadata["figure"] = "calibration";
  plot.metadata["unit"] = "group median forecast";
  plot.metadata["x"] = "mean predicted probability within each bin (not the bin centre)";
  plot.metadata["y"] = "observed outcome frequency within each bin";
  plot.metadata["bins"] = curves.empty() ? 0 : curves.front().bins.size();
  plot.metadata["binning"] = "equal width [k/B, (k+1)/B), last bin closed at 1";
  plot.metadata["empty_bins"] = "blank mean_predicted and observed_frequency; drawn as gaps";
  return plot;
}

PlotData power_plot(std::span<const MdeRow> rows, double alpha, double power) {
  PlotData plot;
  plot.kind = PlotKind::Power;
  plot.name = "power";
  plot.x_label = "Effect size (|change in Log Loss|)";
  plot.y_label = "Power";
  plot.reference_hline = power;
  nlohmann::ordered_json panels = nlohmann::ordered_json::array();
  for (const MdeRow& r : rows) {
    const double top = std::max({2.5 * r.mde.mde, 1.5 * std::fabs(r.observed_effect), 1e-6});
    std::vector<double> grid;
    constexpr int kSteps = 100;
    for (int i = 0; i <= kSteps; ++i) grid.push_back(top * i / kSteps);
    grid.push_back(r.mde.mde);
    grid.push_back(std::fabs(r.observed_effect));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const stats::PowerCurve curve = stats::power_curve(r.mde.sd_of_change, r.mde.n, alpha, grid);
    Series s{r.scenario.slug(), {}};
    for (const auto& [e, p] : curve.points) s.points.push_back({e, p, std::nullopt, std::nullopt, std::nullopt});
    Panel panel{r.scenario.slug(), r.scenario.label(), {std::move(s)}, {}};
    panel.markers.emplace_back(r.observed_effect, stats::power_at(r.observed_effect, r.mde.sd_of_change, r.mde.n, alpha));
    plot.panels.push_back(std::move(panel));
    panels.push_back({{"scenario", r.scenario.slug()}, {"sd_of_change", r.mde.sd_of_change}, {"n", r.mde.n},
                      {"mde", r.mde.mde}, {"observed_effect", r.observed_effect}});
  }
  plot.metadata["figure"] = "power";
  plot.metadata["approximation"] = "two-sided normal approximation of the paired t-test";
  plot.metadata["alpha"] = alpha;
  plot.metadata["power_target"] = power;
  plot.metadata["panels"] = panels;
  return plot;
}

ReportOutput write_report(std::span<const ForecastRecord> records, const fs::path& out_dir,
                          const ReportOptions& options) {
  ReportOutput out;
  const fs::path tables = out_dir / "tables";
  const fs::path figures = out_dir / "figures";
  fs::create_directories(tables);

  const GroupScoring scoring = score_groups(records, options.epsilon);
  auto wants = [&](const char* name) { return !options.only || *options.only == name; };
  auto emit = [&](const std::string& stem, const Table& table) {
    write_text(tables / (stem + ".csv"), table.to_csv());
    write_text(tables / (stem + ".txt"), table.to_text());
    out.files.push_back(tables / (stem + ".csv"));
    out.files.push_back(tables / (stem + ".txt"));
    return table.to_text();
  };

  if (wants("scores")) {
    write_text(tables / "scores.csv", scores_csv(scoring.scores));
    out.files.push_back(tables / "scores.csv");
  }

  const auto log_rows = scenario_table(scoring, Metric::LogLoss);
  const auto brier_rows = scenario_table(scoring, Metric::Brier);
  if (wants("scenario")) {
    const std::string text = emit("scenario_logloss", format_scenario_table(log_rows));
    if (options.metric == Metric::LogLoss) out.console += text;
  }
  if (wants("brier") || (options.only && *options.only == "scenario" && options.metric == Metric::Brier)) {
    const std::string text = emit("scenario_brier", format_scenario_table(brier_rows));
    if (options.metric == Metric::Brier || (options.only && *options.only == "brier")) out.console += text;
  }
  if (wants("info")) {
    try {
      const std::string text = emit("information_regression", format_info_regression(info_regression_table(records, options.epsilon)));
      if (options.only) out.console += text;
    } catch (const Error& e) {
      out.notes.push_back(std::string("information table skipped: ") + e.what());
    }
  }
  const auto mdes = mde_rows(log_rows, options.alpha, options.power);
  if (wants("mde")) {
    const std::string text = emit("mde", format_mde_table(mdes, options.power));
    if (options.only) out.console += text;
  }
  if (wants("models")) {
    const std::string text = emit("model_breakdown", format_model_breakdown(model_breakdown(scoring)));
    if (options.only) out.console += text;
  }
  std::vector<PlotData> plots;
  if (wants("calibration")) plots.push_back(calibration_plot(calibration_curves(scoring, options.bin_count)));
  if (wants("power")) plots.push_back(power_plot(mdes, options.alpha, options.power));
  if (!plots.empty()) {
    auto written = emit_plots(plots, figures);
    out.files.insert(out.files.end(), written.begin(), written.end());
  }
  return out;
}

}  // namespace delib
