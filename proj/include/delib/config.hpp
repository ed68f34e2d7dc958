#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <json.hpp>

#include "delib/agents.hpp"
#include "delib/fetch.hpp"
#include "delib/protocol.hpp"
#include "delib/retry.hpp"

namespace delib {

/// Everything that defines a run. Serialised verbatim into the run
/// manifest; credentials appear only as environment-variable names.
struct Config {
  std::optional<std::filesystem::path> corpus_path;
  std::optional<ApiSource> api;
  std::vector<Scenario> scenarios = primary_scenarios();
  bool with_no_info_baseline = false;
  std::map<ModelId, AgentSpec> agents;
  double epsilon = 0.005;
  int bin_count = 10;
  double alpha = 0.05;
  double power = 0.80;
  std::uint64_t seed = 0;
  std::filesystem::path run_dir;
  std::size_t concurrency = 4;
  RetryPolicy retry;
  bool archive_prompts = true;

  /// Scenario list including the optional no-information arms.
  std::vector<Scenario> effective_scenarios() const;

  /// Agent specs as the runner uses them: simulator seeds are derived from
  /// the run seed and the model name.
  std::map<ModelId, AgentSpec> resolved_agents() const;

  nlohmann::ordered_json to_json() const;
  /// Relative paths resolve against `base_dir`.
  static Config from_json(const nlohmann::json& json, const std::filesystem::path& base_dir = {});
};

Config load_config(const std::filesystem::path& path);

/// Sanity checks shared by `validate` and `run`: value ranges, one backend
/// per panel model, and a corpus source.
std::vector<std::string> config_problems(const Config& config);

}  // namespace delib
