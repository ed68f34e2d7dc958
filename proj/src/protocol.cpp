#include "delib/protocol.hpp"

#include <fmt/format.h>

#include "delib/error.hpp"

namespace delib {

std::string_view to_string(Diversity d) { return d == Diversity::Diverse ? "diverse" : "homogeneous"; }

std::string Scenario::slug() const { return fmt::format("{}-{}", to_string(diversity), to_string(info)); }

std::string Scenario::label() const {
  const char* models = diversity == Diversity::Diverse ? "Diverse models" : "Homogeneous models";
  switch (info) {
    case InfoLevel::None: return fmt::format("{}, no information", models);
    case InfoLevel::Distributed: return fmt::format("{}, distributed information", models);
    case InfoLevel::Shared: return fmt::format("{}, shared information", models);
  }
  return models;
}

Scenario parse_scenario(std::string_view slug) {
  const auto dash = slug.find('-');
  if (dash == std::string_view::npos) throw Error("E_SCENARIO", "unknown scenario '" + std::string(slug) + "'");
  const std::string_view diversity = slug.substr(0, dash);
  Scenario s;
  if (diversity == "diverse") s.diversity = Diversity::Diverse;
  else if (diversity == "homogeneous") s.diversity = Diversity::Homogeneous;
  else throw Error("E_SCENARIO", "unknown scenario '" + std::string(slug) + "'");
  try {
    s.info = info_level_from_string(slug.substr(dash + 1));
  } catch (const Error&) {
    throw Error("E_SCENARIO", "unknown scenario '" + std::string(slug) + "'");
  }
  return s;
}

std::vector<Scenario> primary_scenarios() {
  return {{Diversity::Diverse, InfoLevel::Distributed},
          {Diversity::Diverse, InfoLevel::Shared},
          {Diversity::Homogeneous, InfoLevel::Distributed},
          {Diversity::Homogeneous, InfoLevel::Shared}};
}

std::vector<Scenario> with_no_info_baseline(std::vector<Scenario> scenarios) {
  for (Diversity d : {Diversity::Diverse, Diversity::Homogeneous}) {
    bool present = false, has_none = false;
    for (const Scenario& s : scenarios) {
      present |= s.diversity == d;
      has_none |= s.diversity == d && s.info == InfoLevel::None;
    }
    if (present && !has_none) scenarios.push_back({d, InfoLevel::None});
  }
  return scenarios;
}

ModelId round_robin_model(std::size_t position) {
  if (position == 0) throw Error("E_ARGUMENT", "positions are 1-based");
  switch (position % 3) {
    case 1: return ModelId::GPT5;
    case 2: return ModelId::Sonnet;
    default: return ModelId::Pro;
  }
}

ModelId GroupAssignment::group_model() const noexcept {
  return scenario.diversity == Diversity::Homogeneous ? members[0] : ModelId::Sim;
}

bool GroupAssignment::is_round_robin() const noexcept {
  return scenario.diversity == Diversity::Homogeneous && position > 0 &&
         members[0] == round_robin_model(position);
}

std::string make_group_key(const Scenario& scenario, std::string_view question_id, std::string_view model) {
  return fmt::format("{}/{}/{}", scenario.slug(), question_id, model);
}

std::string cell_key(std::string_view group_key, int agent_index, Stage stage) {
  return fmt::format("{}#{}#{}", group_key, agent_index, to_string(stage));
}

std::vector<GroupAssignment> plan_groups(const Corpus& corpus, std::span<const Scenario> scenarios) {
  if (corpus.empty()) throw Error("E_CORPUS_EMPTY", "cannot plan groups over an empty corpus");
  std::vector<GroupAssignment> plan;
  for (const Scenario& scenario : scenarios) {
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const Question& q = corpus.questions()[i];
      const std::size_t position = i + 1;
      if (scenario.diversity == Diversity::Diverse) {
        plan.push_back({scenario, q.id, make_group_key(scenario, q.id, "mixed"), kPanelModels, position});
      } else {
        for (ModelId model : kPanelModels) {
          plan.push_back({scenario, q.id, make_group_key(scenario, q.id, to_string(model)),
                          {model, model, model}, position});
        }
      }
    }
  }
  return plan;
}

nlohmann::ordered_json to_json(const ForecastRecord& r) {
  nlohmann::ordered_json j;
  j["cell"] = r.cell();
  j["group_key"] = r.group_key;
  j["scenario"] = r.scenario.slug();
  j["question_id"] = r.question_id;
  j["position"] = r.position;
  j["agent_index"] = r.agent_index;
  j["model_id"] = to_string(r.model_id);
  j["stage"] = to_string(r.stage);
  j["info_level"] = to_string(r.info_level);
  j["info_sha256"] = r.info_sha256;
  j["prompt_sha256"] = r.prompt_sha256;
  j["probability"] = r.probability;
  j["raw_probability"] = r.raw_probability;
  j["outcome"] = r.outcome;
  j["attempts"] = r.attempts;
  j["rationale"] = r.rationale;
  j["response"] = r.response;
  return j;
}

ForecastRecord record_from_json(const nlohmann::json& j) {
  try {
    ForecastRecord r;
    r.group_key = j.at("group_key").get<std::string>();
    r.scenario = parse_scenario(j.at("scenario").get<std::string>());
    r.question_id = j.at("question_id").get<std::string>();
    r.position = j.at("position").get<std::size_t>();
    r.agent_index = j.at("agent_index").get<int>();
    r.model_id = model_id_from_string(j.at("model_id").get<std::string>());
    r.stage = stage_from_string(j.at("stage").get<std::string>());
    r.info_level = info_level_from_string(j.at("info_level").get<std::string>());
    r.info_sha256 = j.at("info_sha256").get<std::string>();
    r.prompt_sha256 = j.at("prompt_sha256").get<std::string>();
    r.probability = j.at("probability").get<double>();
    r.raw_probability = j.at("raw_probability").get<double>();
    r.outcome = j.at("outcome").get<int>();
    r.attempts = j.at("attempts").get<int>();
    r.rationale = j.at("rationale").get<std::string>();
    r.response = j.at("response").get<std::string>();
    if (r.agent_index < 0 || r.agent_index > 2) throw Error("E_RECORD", "agent_index out of range");
    if (!(r.probability >= 0.0 && r.probability <= 1.0)) throw Error("E_RECORD", "probability out of range");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error("E_RECORD", std::string("malformed forecast record: ") + e.what());
  }
}

}  // namespace delib
