#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "delib/corpus.hpp"
#include "delib/retry.hpp"

namespace delib {

enum class ModelId { GPT5, Sonnet, Pro, Sim };

std::string_view to_string(ModelId id);
ModelId model_id_from_string(std::string_view text);

enum class Stage { Independent, Deliberative };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view text);

/// Parameters of the deterministic stand-in forecaster.
struct SimParams {
  double base_skill = 1.0;   ///< log-odds pull toward the resolved outcome
  double bias = 0.0;         ///< additive log-odds bias toward "Yes"
  double noise_sd = 1.0;     ///< sd of the seeded log-odds noise
  double peer_weight = 0.0;  ///< stage-2 weight on the peers' mean
  double info_gain = 0.0;    ///< extra skill per information unit seen
  std::uint64_t seed = 0;
};

/// OpenAI-compatible chat-completions endpoint.
struct RemoteEndpoint {
  std::string url;             ///< scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string credential_env;  ///< environment variable holding the key
  double requests_per_second = 0;  ///< 0 disables rate limiting
  double burst = 1;
};

struct AgentSpec {
  ModelId model_id = ModelId::Sim;
  std::variant<SimParams, RemoteEndpoint> backend = SimParams{};
  nlohmann::ordered_json sampling = nlohmann::ordered_json::object();

  bool is_simulated() const noexcept { return std::holds_alternative<SimParams>(backend); }
};

struct StageOnePrompt {
  static constexpr std::string_view template_id = "independent_v1";
  std::string rendered;
};

struct PeerView {
  std::string rationale;
  double probability = 0;  ///< as emitted, 0..100
};

struct StageTwoPrompt {
  static constexpr std::string_view template_id = "deliberation_v1";
  std::string rendered;
  std::array<PeerView, 2> peers;
};

struct AgentResponse {
  double probability = 0;  ///< 0..100, as emitted
  std::string rationale;
  nlohmann::ordered_json structured_fields = nlohmann::ordered_json::object();
  std::string raw;
};

struct ChatTurn {
  std::string role;  ///< "user" or "assistant"
  std::string content;

  bool operator==(const ChatTurn&) const = default;
};

StageOnePrompt render_stage1(const Question& question, std::string_view information,
                             std::string_view as_of_date);

/// peer_a fills the "Forecaster 2" slots, peer_b the "Forecaster 3" slots.
StageTwoPrompt render_stage2(const AgentResponse& peer_a, const AgentResponse& peer_b);

/// The agent's own first round, replayed ahead of the deliberation message.
std::vector<ChatTurn> deliberation_context(const StageOnePrompt& own_prompt,
                                           const AgentResponse& own_response);

/// Formats an emitted probability the way the deliberation template shows
/// it: shortest round-trip decimal, no trailing ".0".
std::string format_probability(double percent);

class ParseError : public RetryableError {
 public:
  explicit ParseError(const std::string& message) : RetryableError("E_PARSE", message) {}
};

/// Parses a model answer against the stage's output schema. When the text
/// is not a bare schema object, one repair pass runs: the first embedded
/// schema object is taken, or failing that a trailing standalone number
/// becomes the probability and the whole text the rationale.
AgentResponse parse_response(std::string_view raw, Stage stage);

struct SimInput {
  int agent_index = 0;
  int info_units = 0;
  std::vector<double> peer_probabilities;  ///< 0..100, stage 2 only
};

/// Stage 1: 100 * logistic(skill * (2y - 1) + bias + noise), where skill
/// grows with the information units seen and noise ~ N(0, noise_sd) is
/// seeded by (seed, question, agent index). Stage 2 blends the agent's own
/// stage-1 value with the peers' mean by `peer_weight`.
AgentResponse simulate(const SimParams& params, const Question& question, Stage stage,
                       const SimInput& input);

/// The schema JSON a simulator "emits"; parse_response maps it back exactly.
std::string encode_response(const AgentResponse& response, Stage stage);

}  // namespace delib
