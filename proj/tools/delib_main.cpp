#include <CLI11.hpp>
#include <fmt/format.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <iostream>

#include "delib/app.hpp"
#include "delib/run_store.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_stop_signal(int sig) {
  g_stop.store(true);
  std::signal(sig, SIG_DFL);  // a second Ctrl-C kills immediately
}

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2, kIncomplete = 3 };

struct Flags {
  std::string config;
  std::string run_dir;
  std::string metric;
  std::string only;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool offline = false;
  bool no_info_baseline = false;
};

delib::Config load(const Flags& f) {
  if (f.config.empty()) throw delib::ValidationFailure("E_CONFIG", "--config is required");
  delib::Config c = delib::load_config(f.config);
  if (!f.run_dir.empty()) c.run_dir = f.run_dir;
  if (f.seed) c.seed = *f.seed;
  if (f.no_info_baseline) c.with_no_info_baseline = true;
  return c;
}

void print_completion(const delib::RunResult& r) {
  const auto& c = r.completion;
  fmt::print("run directory: {}\n", r.run_dir.string());
  fmt::print("groups complete: {}/{}; records {}/{} ({} written now)\n", c.groups_complete, c.groups_planned,
             c.records_present, c.records_expected, c.records_written);
  for (const std::string& f : c.failures) fmt::print(stderr, "failed: {}\n", f);
  if (c.interrupted) fmt::print(stderr, "interrupted; run 'resume' to finish\n");
  if (!c.complete()) fmt::print(stderr, "{} cells missing\n", c.missing_cells.size());
}

int run_command(const std::string& name, const Flags& f) {
  delib::AppOptions options;
  options.stop = &g_stop;
  options.log = [](const std::string& line) { fmt::print(stderr, "{}\n", line); };

  if (name == "validate") {
    const delib::Config c = load(f);
    const auto report = delib::validate(c, f.offline);
    for (const auto& d : report.diagnostics) {
      fmt::print(stderr, "{} {}: {}\n", d.warning ? "warning" : "error", d.code, d.message);
    }
    if (!report.clean()) return kValidation;
    fmt::print("ok\n");
    return kOk;
  }
  if (name == "fetch") {
    const delib::Config c = load(f);
    std::filesystem::path out = f.out;
    if (out.empty()) {
      if (!c.corpus_path) throw delib::ValidationFailure("E_CONFIG", "give --out or set \"corpus\" in the config");
      out = *c.corpus_path;
    }
    const auto result = delib::fetch_corpus(c, out);
    for (const auto& line : result.log) fmt::print(stderr, "{}\n", line);
    for (const auto& w : result.warnings) fmt::print(stderr, "warning: {}\n", w);
    fmt::print("{} questions written to {} ({} retries)\n", result.corpus.size(), out.string(), result.retries);
    return kOk;
  }
  if (name == "run" || name == "resume") {
    delib::RunResult result;
    if (name == "run") {
      const delib::Config c = load(f);
      if (const auto report = delib::validate(c, true); !report.clean()) {
        for (const auto& d : report.diagnostics) {
          if (!d.warning) fmt::print(stderr, "error {}: {}\n", d.code, d.message);
        }
        return kValidation;
      }
      result = delib::start_run(c, options);
    } else {
      std::filesystem::path dir = f.run_dir;
      if (dir.empty()) dir = load(f).run_dir;
      result = delib::resume_run(dir, options);
    }
    print_completion(result);
    return result.completion.complete() ? kOk : kRuntime;
  }
  if (name == "report") {
    std::filesystem::path dir = f.run_dir;
    if (dir.empty()) dir = load(f).run_dir;
    delib::ReportRequest request;
    if (!f.metric.empty()) request.metric = delib::metric_from_string(f.metric);
    if (!f.only.empty()) request.only = f.only;
    if (!f.out.empty()) request.out_dir = std::filesystem::path(f.out);
    const auto out = delib::report_run(dir, request);
    std::cout << out.console;
    for (const auto& note : out.notes) fmt::print(stderr, "note: {}\n", note);
    return kOk;
  }
  return kRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage deliberative forecasting runs and their analysis"};
  app.set_version_flag("--version", delib::software_version());
  app.require_subcommand(1);

  Flags f;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", f.config, "Run config (JSON)");
    cmd->add_option("--run-dir", f.run_dir, "Run directory (overrides the config)");
  };
  auto* validate = app.add_subcommand("validate", "Check config, corpus and backends");
  common(validate);
  validate->add_flag("--offline", f.offline, "Treat unreachable backends as warnings");
  validate->add_flag("--with-no-info-baseline", f.no_info_baseline, "Include the no-information arms");

  auto* fetch = app.add_subcommand("fetch", "Download resolved questions into a corpus file");
  common(fetch);
  fetch->add_option("--out", f.out, "Corpus file to write");

  auto* run = app.add_subcommand("run", "Start or continue the run described by the config");
  common(run);
  run->add_option("--seed", f.seed, "Override the config seed");
  run->add_flag("--with-no-info-baseline", f.no_info_baseline, "Include the no-information arms");

  auto* resume = app.add_subcommand("resume", "Complete the missing cells of a run");
  common(resume);

  auto* report = app.add_subcommand("report", "Score a finished run and write tables and figures");
  common(report);
  report->add_option("--metric", f.metric, "Scenario table metric")->check(CLI::IsMember({"logloss", "brier"}));
  report->add_option("--only", f.only, "Emit one output")
      ->check(CLI::IsMember({"scenario", "brier", "info", "mde", "models", "calibration", "power", "scores"}));
  report->add_option("--out", f.out, "Output directory (default <run-dir>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  std::signal(SIGINT, on_stop_signal);
  std::signal(SIGTERM, on_stop_signal);
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run_command(name, f);
  } catch (const delib::IncompleteRun& e) {
    fmt::print(stderr, "error {}: {}\n", e.code(), e.what());
    for (const auto& cell : e.missing_cells()) fmt::print(stderr, "  missing {}\n", cell);
    return kIncomplete;
  } catch (const delib::ValidationFailure& e) {
    fmt::print(stderr, "error {}: {}\n", e.code(), e.what());
    return kValidation;
  } catch (const delib::Error& e) {
    fmt::print(stderr, "error {}: {}\n", e.code(), e.what());
    return e.code() == "E_CONFIG" || e.code() == "E_SCENARIO" ? kValidation : kRuntime;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kRuntime;
  }
}
