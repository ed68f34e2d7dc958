#include "delib/config.hpp"

#include <fmt/format.h>

#include <fstream>

#include "delib/error.hpp"
#include "delib/hashing.hpp"

namespace delib {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error("E_CONFIG", fmt::format("config field '{}' has the wrong type", key));
  }
}

SimParams sim_from_json(const json& j) {
  SimParams p;
  p.base_skill = value_or(j, "base_skill", p.base_skill);
  p.bias = value_or(j, "bias", p.bias);
  p.noise_sd = value_or(j, "noise_sd", p.noise_sd);
  p.peer_weight = value_or(j, "peer_weight", p.peer_weight);
  p.info_gain = value_or(j, "info_gain", p.info_gain);
  p.seed = value_or<std::uint64_t>(j, "seed", 0);
  return p;
}

ordered_json sim_to_json(const SimParams& p) {
  return ordered_json{{"base_skill", p.base_skill}, {"bias", p.bias}, {"noise_sd", p.noise_sd},
                      {"peer_weight", p.peer_weight}, {"info_gain", p.info_gain}, {"seed", p.seed}};
}

RemoteEndpoint endpoint_from_json(const json& j) {
  RemoteEndpoint e;
  e.url = value_or<std::string>(j, "url", "");
  e.path = value_or<std::string>(j, "path", e.path);
  e.model = value_or<std::string>(j, "model", "");
  e.credential_env = value_or<std::string>(j, "credential_env", "");
  e.requests_per_second = value_or(j, "requests_per_second", 0.0);
  e.burst = value_or(j, "burst", 1.0);
  return e;
}

// Literal secrets are refused wherever they appear. The value is never echoed.
void reject_literal_credentials(const json& j, const std::string& where) {
  if (j.is_array()) {
    for (const json& v : j) reject_literal_credentials(v, where);
    return;
  }
  if (!j.is_object()) return;
  for (const auto& [key, v] : j.items()) {
    if (key == "api_key" || key == "token" || key == "credential") {
      throw Error("E_CONFIG", fmt::format("literal '{}' at {}; credentials must come from the environment, "
                                          "name the variable in credential_env",
                                          key, where.empty() ? "top level" : where));
    }
    reject_literal_credentials(v, where.empty() ? key : where + "." + key);
  }
}

ordered_json endpoint_to_json(const RemoteEndpoint& e) {
  return ordered_json{{"url", e.url}, {"path", e.path}, {"model", e.model},
                      {"credential_env", e.credential_env}, {"requests_per_second", e.requests_per_second},
                      {"burst", e.burst}};
}

}  // namespace

std::vector<Scenario> Config::effective_scenarios() const {
  return with_no_info_baseline ? delib::with_no_info_baseline(scenarios) : scenarios;
}

std::map<ModelId, AgentSpec> Config::resolved_agents() const {
  auto out = agents;
  for (auto& [model, spec] : out) {
    if (auto* sim = std::get_if<SimParams>(&spec.backend)) {
      sim->seed = stable_hash(to_string(model), seed) ^ sim->seed;
    }
  }
  return out;
}

ordered_json Config::to_json() const {
  ordered_json j;
  if (corpus_path) j["corpus"] = corpus_path->string();
  if (api) {
    j["api"] = {{"base_url", api->base_url}, {"tournament_id", api->tournament_id},
                {"credential_env", api->credential_env}, {"page_size", api->page_size}};
  }
  ordered_json scen = ordered_json::array();
  for (const Scenario& s : scenarios) scen.push_back(s.slug());
  j["scenarios"] = scen;
  j["with_no_info_baseline"] = with_no_info_baseline;
  ordered_json agent_json = ordered_json::object();
  for (const auto& [model, spec] : agents) {
    ordered_json a;
    if (const auto* sim = std::get_if<SimParams>(&spec.backend)) {
      a["backend"] = "sim";
      a["sim"] = sim_to_json(*sim);
    } else {
      a["backend"] = "http";
      a["endpoint"] = endpoint_to_json(std::get<RemoteEndpoint>(spec.backend));
    }
    a["sampling"] = spec.sampling;
    agent_json[std::string(to_string(model))] = a;
  }
  j["agents"] = agent_json;
  j["epsilon"] = epsilon;
  j["bin_count"] = bin_count;
  j["alpha"] = alpha;
  j["power"] = power;
  j["seed"] = seed;
  j["run_dir"] = run_dir.string();
  j["concurrency"] = concurrency;
  j["retry"] = {{"max_attempts", retry.max_attempts},
                {"base_delay_ms", retry.base_delay.count()},
                {"max_delay_ms", retry.max_delay.count()},
                {"jitter", retry.jitter}};
  j["archive_prompts"] = archive_prompts;
  return j;
}

Config Config::from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw Error("E_CONFIG", "config must be a JSON object");
  reject_literal_credentials(j, "");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : (base_dir / path).lexically_normal();
  };
  Config c;
  if (j.contains("corpus")) c.corpus_path = resolve(value_or<std::string>(j, "corpus", ""));
  if (j.contains("api")) {
    const json& a = j["api"];
    ApiSource src;
    src.base_url = value_or<std::string>(a, "base_url", "");
    src.tournament_id = value_or<std::string>(a, "tournament_id", "");
    src.credential_env = value_or<std::string>(a, "credential_env", "");
    src.page_size = value_or(a, "page_size", 100);
    c.api = src;
  }
  if (j.contains("scenarios")) {
    c.scenarios.clear();
    for (const json& s : j["scenarios"]) {
      if (!s.is_string()) throw Error("E_SCENARIO", "scenario entries must be strings");
      c.scenarios.push_back(parse_scenario(s.get<std::string>()));
    }
  }
  c.with_no_info_baseline = value_or(j, "with_no_info_baseline", false);
  if (j.contains("agents")) {
    for (const auto& [name, a] : j["agents"].items()) {
      AgentSpec spec;
      spec.model_id = model_id_from_string(name);
      const std::string backend = value_or<std::string>(a, "backend", "sim");
      if (backend == "sim") {
        spec.backend = sim_from_json(a.contains("sim") ? a["sim"] : json::object());
      } else if (backend == "http") {
        spec.backend = endpoint_from_json(a.contains("endpoint") ? a["endpoint"] : json::object());
      } else {
        throw Error("E_CONFIG", "unknown backend '" + backend + "' for " + name);
      }
      if (a.contains("sampling")) spec.sampling = ordered_json(a["sampling"]);
      c.agents[spec.model_id] = std::move(spec);
    }
  }
  c.epsilon = value_or(j, "epsilon", c.epsilon);
  c.bin_count = value_or(j, "bin_count", c.bin_count);
  c.alpha = value_or(j, "alpha", c.alpha);
  c.power = value_or(j, "power", c.power);
  c.seed = value_or<std::uint64_t>(j, "seed", c.seed);
  if (j.contains("run_dir")) c.run_dir = resolve(value_or<std::string>(j, "run_dir", ""));
  c.concurrency = value_or<std::size_t>(j, "concurrency", c.concurrency);
  if (j.contains("retry")) {
    const json& r = j["retry"];
    c.retry.max_attempts = value_or(r, "max_attempts", c.retry.max_attempts);
    c.retry.base_delay = std::chrono::milliseconds(value_or<long long>(r, "base_delay_ms", c.retry.base_delay.count()));
    c.retry.max_delay = std::chrono::milliseconds(value_or<long long>(r, "max_delay_ms", c.retry.max_delay.count()));
    c.retry.jitter = value_or(r, "jitter", c.retry.jitter);
  }
  c.archive_prompts = value_or(j, "archive_prompts", c.archive_prompts);
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("E_CONFIG", "cannot open config '" + path.string() + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("E_CONFIG", "config '" + path.string() + "' is not valid JSON");
  return Config::from_json(j, std::filesystem::absolute(path).parent_path());
}

std::vector<std::string> config_problems(const Config& c) {
  std::vector<std::string> problems;
  if (!c.corpus_path && !c.api) problems.push_back("no corpus path or api source configured");
  if (!(c.epsilon > 0 && c.epsilon < 0.5)) problems.push_back("epsilon must lie in (0, 0.5)");
  if (c.bin_count < 2) problems.push_back("bin_count must be at least 2");
  if (!(c.alpha > 0 && c.alpha < 1)) problems.push_back("alpha must lie in (0, 1)");
  if (!(c.power > 0 && c.power < 1)) problems.push_back("power must lie in (0, 1)");
  if (c.concurrency == 0) problems.push_back("concurrency must be positive");
  if (c.retry.max_attempts < 1) problems.push_back("retry.max_attempts must be positive");
  if (c.scenarios.empty()) problems.push_back("no scenarios selected");
  for (ModelId m : kPanelModels) {
    if (!c.agents.contains(m)) problems.push_back(fmt::format("no agent configured for {}", to_string(m)));
  }
  for (const auto& [model, spec] : c.agents) {
    if (const auto* e = std::get_if<RemoteEndpoint>(&spec.backend)) {
      if (e->url.empty()) problems.push_back(fmt::format("agent {} has no endpoint url", to_string(model)));
    } else {
      const auto& s = std::get<SimParams>(spec.backend);
      if (s.noise_sd < 0) problems.push_back(fmt::format("agent {} has negative noise_sd", to_string(model)));
      if (s.peer_weight < 0 || s.peer_weight > 1) {
        problems.push_back(fmt::format("agent {} peer_weight must lie in [0, 1]", to_string(model)));
      }
    }
  }
  return problems;
}

}  // namespace delib
