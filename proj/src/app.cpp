#include "delib/app.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>

#include "delib/hashing.hpp"
#include "delib/run_store.hpp"

namespace delib {

namespace fs = std::filesystem;
using nlohmann::json;

bool ValidationReport::clean() const {
  return std::none_of(diagnostics.begin(), diagnostics.end(), [](const Diagnostic& d) { return !d.warning; });
}

std::string probe_endpoint(const RemoteEndpoint& endpoint) {
  try {
    httplib::Client client(endpoint.url);
    client.set_connection_timeout(3);
    client.set_read_timeout(5);
    auto res = client.Get("/");
    if (!res) return httplib::to_string(res.error());
    return {};  // any HTTP status means something is listening
  } catch (const std::exception& e) {
    return e.what();
  }
}

namespace {

bool needs_information(const std::vector<Scenario>& scenarios) {
  return std::any_of(scenarios.begin(), scenarios.end(), [](const Scenario& s) { return s.info != InfoLevel::None; });
}

void log_line(const AppOptions& options, const std::string& line) {
  if (options.log) options.log(line);
}

Corpus load_checked_corpus(const Config& config) {
  if (!config.corpus_path) {
    throw ValidationFailure("E_CONFIG", "no corpus file configured; run 'fetch' first and set \"corpus\"");
  }
  Corpus corpus;
  try {
    corpus = load_corpus(*config.corpus_path);
  } catch (const Error& e) {
    throw ValidationFailure(e.code(), e.what());
  }
  if (corpus.empty()) throw ValidationFailure("E_CORPUS_EMPTY", "corpus has no questions");
  if (needs_information(config.effective_scenarios()) && !corpus.information_capable()) {
    throw ValidationFailure("E_INFO_MISSING", "information scenarios selected but some questions have no information units");
  }
  return corpus;
}

RunResult execute(RunStore& store, const Config& config, const Corpus& corpus, const AppOptions& options,
                  bool created) {
  const auto plan = plan_groups(corpus, config.effective_scenarios());
  const auto agents = config.resolved_agents();
  Invoker invoker(config.retry);
  ProtocolRunner runner(corpus, agents, store, invoker, options.factory, config.archive_prompts);
  RunOptions run_options;
  run_options.concurrency = config.concurrency;
  run_options.stop = options.stop;
  log_line(options, fmt::format("{} groups planned, {} records on disk", plan.size(), store.size()));
  RunResult result{store.dir(), runner.run(plan, run_options), created};
  if (result.completion.complete() && store.manifest().finished_at.empty()) store.mark_finished();
  return result;
}

}  // namespace

ValidationReport validate(const Config& config, bool offline, const ReachabilityProbe& probe) {
  ValidationReport report;
  auto add = [&](std::string code, std::string message, bool warning = false) {
    report.diagnostics.push_back({std::move(code), std::move(message), warning});
  };
  for (const std::string& p : config_problems(config)) add("E_CONFIG", p);

  if (config.corpus_path) {
    try {
      load_checked_corpus(config);
    } catch (const Error& e) {
      add(e.code(), e.what());
    }
  } else if (config.api) {
    add("W_CORPUS_NOT_FETCHED", "corpus comes from the API; run 'fetch' before 'run'", true);
  }

  auto check_env = [&](const std::string& agent, const std::string& var) {
    if (var.empty()) {
      add("E_CREDENTIALS", agent + ": no credential_env configured");
    } else if (std::getenv(var.c_str()) == nullptr) {
      add(offline ? "W_CREDENTIALS" : "E_CREDENTIALS", agent + ": environment variable " + var + " is not set", offline);
    }
  };
  for (const auto& [model, spec] : config.agents) {
    const auto* e = std::get_if<RemoteEndpoint>(&spec.backend);
    if (e == nullptr || e->url.empty()) continue;
    check_env(std::string(to_string(model)), e->credential_env);
    if (const std::string why = probe(*e); !why.empty()) {
      add(offline ? "W_BACKEND_UNREACHABLE" : "E_BACKEND_UNREACHABLE",
          fmt::format("{}: {} unreachable ({})", to_string(model), e->url, why), offline);
    }
  }
  if (config.api) check_env("api", config.api->credential_env);
  return report;
}

std::string make_run_id(const Config& config, const std::string& corpus_sha256) {
  return sha256_hex(config.to_json().dump() + "|" + corpus_sha256).substr(0, 16);
}

RunResult start_run(const Config& config, const AppOptions& options) {
  if (const auto problems = config_problems(config); !problems.empty()) {
    throw ValidationFailure("E_CONFIG", problems.front());
  }
  if (config.run_dir.empty()) throw ValidationFailure("E_CONFIG", "no run directory configured");
  const Corpus corpus = load_checked_corpus(config);
  const std::string digest = sha256_file(*config.corpus_path);

  bool created = false;
  if (RunStore::exists(config.run_dir)) {
    RunStore probe_store(config.run_dir);
    const RunManifest& m = probe_store.manifest();
    if (m.corpus_sha256 != digest) {
      throw Error("E_DIGEST_MISMATCH", "corpus digest differs from the run manifest; use a new run directory");
    }
    if (json(m.config) != json(config.to_json())) {
      throw Error("E_CONFIG_MISMATCH", "run directory holds a run with a different config");
    }
  } else {
    RunManifest m;
    m.run_id = make_run_id(config, digest);
    m.corpus_path = fs::absolute(*config.corpus_path).lexically_normal().string();
    m.corpus_sha256 = digest;
    m.scenarios = config.effective_scenarios();
    m.config = config.to_json();
    m.seed = config.seed;
    m.started_at = utc_timestamp();
    m.software_version = software_version();
    RunStore::initialize(config.run_dir, m);
    created = true;
  }
  RunStore store(config.run_dir);
  return execute(store, config, corpus, options, created);
}

RunResult resume_run(const fs::path& run_dir, const AppOptions& options) {
  RunStore store(run_dir);
  const RunManifest& m = store.manifest();
  const Config config = Config::from_json(json(m.config));
  if (!fs::exists(m.corpus_path)) throw Error("E_CORPUS_MISSING", "corpus file '" + m.corpus_path + "' is gone");
  if (sha256_file(m.corpus_path) != m.corpus_sha256) {
    throw Error("E_DIGEST_MISMATCH", "corpus '" + m.corpus_path + "' changed since the run started");
  }
  Config effective = config;
  effective.corpus_path = m.corpus_path;
  const Corpus corpus = load_checked_corpus(effective);
  return execute(store, effective, corpus, options, false);
}

FetchResult fetch_corpus(const Config& config, const fs::path& out) {
  if (!config.api) throw ValidationFailure("E_CONFIG", "no api source configured");
  const ApiSource& api = *config.api;
  const char* token = api.credential_env.empty() ? nullptr : std::getenv(api.credential_env.c_str());
  if (token == nullptr) {
    throw ValidationFailure("E_CREDENTIALS", "set the environment variable named in api.credential_env");
  }
  const fs::path audit = out.parent_path() / (out.stem().string() + ".audit");
  FetchResult result = fetch_questions(api, token, config.retry, audit);
  if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
  save_corpus(result.corpus, out);
  return result;
}

ReportOutput report_run(const fs::path& run_dir, const ReportRequest& request) {
  if (!RunStore::exists(run_dir)) throw Error("E_RUN_MISSING", "no run in '" + run_dir.string() + "'");
  std::ifstream in(run_dir / "manifest.json");
  const RunManifest m = RunManifest::from_json(json::parse(in));
  const Config config = Config::from_json(json(m.config));
  const Corpus corpus = load_corpus(m.corpus_path);
  if (sha256_file(m.corpus_path) != m.corpus_sha256) {
    throw Error("E_DIGEST_MISMATCH", "corpus '" + m.corpus_path + "' changed since the run started");
  }
  const auto records = read_records(run_dir / "records.jsonl");

  std::vector<std::string> present;
  present.reserve(records.size());
  for (const ForecastRecord& r : records) present.push_back(r.cell());
  std::sort(present.begin(), present.end());
  std::vector<std::string> missing;
  for (const GroupAssignment& g : plan_groups(corpus, m.scenarios)) {
    for (Stage stage : {Stage::Independent, Stage::Deliberative}) {
      for (int agent = 0; agent < 3; ++agent) {
        std::string cell = cell_key(g.group_key, agent, stage);
        if (!std::binary_search(present.begin(), present.end(), cell)) missing.push_back(std::move(cell));
      }
    }
  }
  if (!missing.empty()) {
    throw IncompleteRun(fmt::format("run is incomplete: {} cells missing", missing.size()), std::move(missing));
  }

  ReportOptions options;
  options.metric = request.metric.value_or(Metric::LogLoss);
  options.only = request.only;
  options.epsilon = config.epsilon;
  options.bin_count = config.bin_count;
  options.alpha = config.alpha;
  options.power = config.power;
  const fs::path out_dir = request.out_dir.value_or(run_dir / "report");
  ReportOutput out = write_report(records, out_dir, options);
  fs::copy_file(run_dir / "manifest.json", out_dir / "manifest.json", fs::copy_options::overwrite_existing);
  out.files.push_back(out_dir / "manifest.json");
  return out;
}

}  // namespace delib
