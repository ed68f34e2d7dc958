#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "delib/agents.hpp"
#include "delib/corpus.hpp"

namespace delib {

enum class Diversity { Diverse, Homogeneous };

std::string_view to_string(Diversity d);

struct Scenario {
  Diversity diversity = Diversity::Diverse;
  InfoLevel info = InfoLevel::Shared;

  /// Stable identifier, e.g. "diverse-shared".
  std::string slug() const;
  /// Table label, e.g. "Diverse models, shared information".
  std::string label() const;
  bool is_primary() const noexcept { return info != InfoLevel::None; }

  bool operator==(const Scenario&) const = default;
};

Scenario parse_scenario(std::string_view slug);

/// The four primary scenarios in the order the main results table uses.
std::vector<Scenario> primary_scenarios();

/// Adds the no-information arm for each diversity present in `scenarios`.
std::vector<Scenario> with_no_info_baseline(std::vector<Scenario> scenarios);

/// Model cycled onto a 1-based question position: 1, 4, 7, ... -> GPT5;
/// 2, 5, 8, ... -> Sonnet; 3, 6, 9, ... -> Pro.
ModelId round_robin_model(std::size_t position);

inline constexpr std::array<ModelId, 3> kPanelModels = {ModelId::GPT5, ModelId::Sonnet, ModelId::Pro};

struct GroupAssignment {
  Scenario scenario;
  std::string question_id;
  std::string group_key;
  std::array<ModelId, 3> members{};
  std::size_t position = 0;  ///< 1-based question index

  /// For homogeneous groups: the shared model; for diverse groups: Sim.
  ModelId group_model() const noexcept;
  /// Whether this group belongs to the round-robin single-model slice.
  bool is_round_robin() const noexcept;
};

/// Diverse scenarios: one (GPT5, Sonnet, Pro) group per question.
/// Homogeneous scenarios: three groups per question, one per model.
std::vector<GroupAssignment> plan_groups(const Corpus& corpus, std::span<const Scenario> scenarios);

std::string make_group_key(const Scenario& scenario, std::string_view question_id, std::string_view model);
std::string cell_key(std::string_view group_key, int agent_index, Stage stage);

/// One agent's answer at one stage of one group. Fields are deterministic
/// for simulated backends; wall-clock data lives in the attempt log.
struct ForecastRecord {
  std::string group_key;
  Scenario scenario;
  std::string question_id;
  std::size_t position = 0;
  int agent_index = 0;
  ModelId model_id = ModelId::Sim;
  Stage stage = Stage::Independent;
  InfoLevel info_level = InfoLevel::None;
  std::string info_sha256;    ///< hash of the research-report text this agent saw
  std::string prompt_sha256;  ///< hash of the rendered prompt
  double probability = 0;     ///< 0..1
  double raw_probability = 0; ///< 0..100 as emitted
  std::string rationale;
  std::string response;       ///< raw answer text (context for stage 2)
  int outcome = 0;
  int attempts = 1;

  std::string cell() const { return cell_key(group_key, agent_index, stage); }
};

nlohmann::ordered_json to_json(const ForecastRecord& record);
ForecastRecord record_from_json(const nlohmann::json& json);

}  // namespace delib
