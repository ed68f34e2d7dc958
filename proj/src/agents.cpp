#include "delib/agents.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>

#include "delib/hashing.hpp"

namespace delib {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kIndependentTemplate =
    "You are a professional forecaster interviewing for a job.\n"
    "Your interview question is: {{questionTitle}}\n"
    "Question background: {{questionDescription}}\n"
    "\n"
    "This question's outcome will be determined by the specific \n"
    "criteria below. These criteria have not yet been satisfied: \n"
    "{{questionResolutionCriteria}}\n"
    "\n"
    "{{question.questionFinePrint}}\n"
    "\n"
    "Your research assistant's report says: {{information}}\n"
    "\n"
    "Today is {{question.date}}.\n"
    "\n"
    "Before answering you think: (a) The time left until the \n"
    "outcome to the question is known. (b) The status quo outcome \n"
    "if nothing changed. (c) A brief description of a scenario that \n"
    "results in a No outcome. (d) A brief description of a scenario \n"
    "that results in a Yes outcome. (e) You write your rationale \n"
    "remembering that good forecasters put extra weight on the \n"
    "status quo outcome since the world changes slowly most of the \n"
    "time. Explain your reasoning and the evidence behind your \n"
    "forecast in detail. Summarise information your received from \n"
    "your research assistant that influences your forecast (if any). \n"
    "Explain why your forecast is not higher, and why it is not \n"
    "lower. Outline what would need to be true for you to update \n"
    "your forecast in either direction. (f) The last thing you write \n"
    "is your final probabilistic forecast as a number between 0 \n"
    "and 100.\n"
    "\n"
    "OUTPUT SCHEMA { \n"
    "  \"time_left_until_outcome_known\": \"string\", \n"
    "  \"status_quo_outcome\": \"string\", \n"
    "  \"no_outcome_scenario\": \"string\", \n"
    "  \"yes_outcome_scenario\": \"string\", \n"
    "  \"rationale\": \"string\", \n"
    "  \"probability\": \"number\" (0-100) \n"
    "}";

constexpr std::string_view kDeliberationTemplate =
    "You are now in a deliberation phase with two other expert \n"
    "forecasters. Please review their analyses:\n"
    "\n"
    "Forecaster 2's Analysis\n"
    "{{forecaster2_rationale}} Forecast: {{forecaster2_probability}}%\n"
    "\n"
    "Forecaster 3's Analysis\n"
    "{{forecaster3_rationale}} Forecast: {{forecaster3_probability}}%\n"
    "\n"
    "Consider their reasoning and any new information or arguments \n"
    "carefully:\n"
    "\n"
    "- What evidence or arguments did they raise that you hadn't \n"
    "  considered?\n"
    "- Do you find their reasoning convincing? Why or why not?\n"
    "- Should you update your forecast based on their input? If so, \n"
    "  how much? If not, why not?\n"
    "\n"
    "Weigh your previous analysis and critically review your own \n"
    "reasoning and evidence in light of any new information or \n"
    "arguments, as if you were participating in a structured \n"
    "deliberation process.\n"
    "\n"
    "Based on your thoughtful analysis, provide a clear and concise \n"
    "review of all the arguments and information you have considered, \n"
    "your updated rationale, and your updated forecast. Do not feel \n"
    "obligated to update your forecast if you do not think it is \n"
    "warranted.\n"
    "\n"
    "Provide your updated analysis and forecast.\n"
    "\n"
    "OUTPUT SCHEMA { \n"
    "  \"review\": \"string (your thoughts on the other forecasters' \n"
    "             reasoning)\", \n"
    "  \"rationale\": \"string (your updated reasoning; if you change \n"
    "               your forecast, explain why and how much; if not, \n"
    "               explain why not)\", \n"
    "  \"probability\": \"number\" (0-100) \n"
    "}";

struct Slot {
  std::string_view name;
  std::string_view value;
};

// Single left-to-right pass: substituted values are never rescanned, so
// braces or percent signs inside user text pass through untouched.
std::string substitute(std::string_view templ, std::initializer_list<Slot> slots) {
  std::string out;
  out.reserve(templ.size() + 1024);
  std::size_t pos = 0;
  while (pos < templ.size()) {
    const std::size_t open = templ.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(templ.substr(pos));
      break;
    }
    const std::size_t close = templ.find("}}", open + 2);
    if (close == std::string_view::npos) throw Error("E_TEMPLATE", "unterminated slot in template");
    const std::string_view name = templ.substr(open + 2, close - open - 2);
    auto it = std::find_if(slots.begin(), slots.end(), [&](const Slot& s) { return s.name == name; });
    if (it == slots.end()) throw Error("E_TEMPLATE", "unfilled slot '" + std::string(name) + "'");
    out.append(templ.substr(pos, open - pos));
    out.append(it->value);
    pos = close + 2;
  }
  return out;
}

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return std::string(text.substr(first, last - first + 1));
}

std::optional<double> number_from(const ordered_json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    std::string text = trim(value.get<std::string>());
    if (!text.empty() && text.back() == '%') text.pop_back();
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

double checked_probability(double value) {
  if (!std::isfinite(value)) throw ParseError("probability is not a finite number");
  if (value < 0.0 || value > 100.0) {
    throw ParseError(fmt::format("probability out of range: {}", value));
  }
  return value;
}

constexpr std::array<std::string_view, 4> kStageOneTextFields = {
    "time_left_until_outcome_known", "status_quo_outcome", "no_outcome_scenario",
    "yes_outcome_scenario"};

bool looks_like_schema(const ordered_json& obj) {
  return obj.is_object() && obj.contains("probability") && obj.contains("rationale");
}

AgentResponse from_schema(const ordered_json& obj, Stage stage, std::string_view raw) {
  auto p = number_from(obj.at("probability"));
  if (!p) throw ParseError("probability is not a number");
  const ordered_json& rationale = obj.at("rationale");
  if (!rationale.is_string() || trim(rationale.get<std::string>()).empty()) {
    throw ParseError("missing rationale");
  }
  AgentResponse response;
  response.probability = checked_probability(*p);
  response.rationale = rationale.get<std::string>();
  response.raw = std::string(raw);
  if (stage == Stage::Independent) {
    for (auto key : kStageOneTextFields) {
      auto it = obj.find(std::string(key));
      if (it != obj.end() && it->is_string()) response.structured_fields[std::string(key)] = *it;
    }
  } else if (auto it = obj.find("review"); it != obj.end() && it->is_string()) {
    response.structured_fields["review"] = *it;
  }
  response.structured_fields["rationale"] = response.rationale;
  return response;
}

// End of the JSON object opening at `open`, honouring string literals.
std::size_t matching_brace(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string_view to_string(ModelId id) {
  switch (id) {
    case ModelId::GPT5: return "GPT5";
    case ModelId::Sonnet: return "Sonnet";
    case ModelId::Pro: return "Pro";
    case ModelId::Sim: return "Sim";
  }
  return "Sim";
}

ModelId model_id_from_string(std::string_view text) {
  if (text == "GPT5") return ModelId::GPT5;
  if (text == "Sonnet") return ModelId::Sonnet;
  if (text == "Pro") return ModelId::Pro;
  if (text == "Sim") return ModelId::Sim;
  throw Error("E_CONFIG", "unknown model id '" + std::string(text) + "'");
}

std::string_view to_string(Stage stage) {
  return stage == Stage::Independent ? "independent" : "deliberative";
}

Stage stage_from_string(std::string_view text) {
  if (text == "independent") return Stage::Independent;
  if (text == "deliberative") return Stage::Deliberative;
  throw Error("E_RECORD", "unknown stage '" + std::string(text) + "'");
}

StageOnePrompt render_stage1(const Question& question, std::string_view information,
                             std::string_view as_of_date) {
  return StageOnePrompt{substitute(kIndependentTemplate,
                                   {{"questionTitle", question.title},
                                    {"questionDescription", question.description},
                                    {"questionResolutionCriteria", question.resolution_criteria},
                                    {"question.questionFinePrint", question.fine_print},
                                    {"information", information},
                                    {"question.date", as_of_date}})};
}

std::string format_probability(double percent) { return fmt::format("{}", percent); }

StageTwoPrompt render_stage2(const AgentResponse& peer_a, const AgentResponse& peer_b) {
  for (const AgentResponse* peer : {&peer_a, &peer_b}) {
    if (trim(peer->rationale).empty()) throw Error("E_PEER", "missing peer rationale");
    checked_probability(peer->probability);
  }
  const std::string p2 = format_probability(peer_a.probability);
  const std::string p3 = format_probability(peer_b.probability);
  StageTwoPrompt prompt;
  prompt.rendered = substitute(kDeliberationTemplate, {{"forecaster2_rationale", peer_a.rationale},
                                                       {"forecaster2_probability", p2},
                                                       {"forecaster3_rationale", peer_b.rationale},
                                                       {"forecaster3_probability", p3}});
  prompt.peers = {PeerView{peer_a.rationale, peer_a.probability},
                  PeerView{peer_b.rationale, peer_b.probability}};
  return prompt;
}

std::vector<ChatTurn> deliberation_context(const StageOnePrompt& own_prompt,
                                           const AgentResponse& own_response) {
  return {ChatTurn{"user", own_prompt.rendered}, ChatTurn{"assistant", own_response.raw}};
}

AgentResponse parse_response(std::string_view raw, Stage stage) {
  const std::string text = trim(raw);
  if (text.empty()) throw ParseError("empty response");

  // Whole answer is a JSON object: it must satisfy the schema as-is.
  if (text.front() == '{') {
    ordered_json whole = ordered_json::parse(text, nullptr, false);
    if (!whole.is_discarded()) {
      if (!looks_like_schema(whole)) throw ParseError("response object does not match the output schema");
      return from_schema(whole, stage, raw);
    }
  }

  // Repair: first embedded object carrying the schema's required fields.
  for (std::size_t open = text.find('{'); open != std::string::npos; open = text.find('{', open + 1)) {
    const std::size_t close = matching_brace(text, open);
    if (close == std::string::npos) continue;
    ordered_json candidate = ordered_json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (!candidate.is_discarded() && looks_like_schema(candidate)) return from_schema(candidate, stage, raw);
  }

  // Repair: trailing standalone number.
  static const std::regex trailing(R"((?:^|[^\w.])(-?\d+(?:\.\d+)?)\s*%?\s*\.?$)");
  std::smatch match;
  if (std::regex_search(text, match, trailing)) {
    AgentResponse response;
    response.probability = checked_probability(std::stod(match[1].str()));
    response.rationale = text;
    response.structured_fields["rationale"] = text;
    response.raw = std::string(raw);
    return response;
  }
  throw ParseError("no forecast found in response");
}

std::string encode_response(const AgentResponse& response, Stage stage) {
  ordered_json out = ordered_json::object();
  if (stage == Stage::Independent) {
    for (auto key : kStageOneTextFields) {
      auto it = response.structured_fields.find(std::string(key));
      out[std::string(key)] = it != response.structured_fields.end() ? *it : ordered_json("");
    }
  } else {
    auto it = response.structured_fields.find("review");
    out["review"] = it != response.structured_fields.end() ? *it : ordered_json("");
  }
  out["rationale"] = response.rationale;
  out["probability"] = response.probability;
  return out.dump();
}

AgentResponse simulate(const SimParams& params, const Question& question, Stage stage,
                       const SimInput& input) {
  const int outcome = question.resolved_outcome.value_or(0);
  const double skill = params.base_skill + params.info_gain * input.info_units;
  const std::string stream = fmt::format("{}|{}|{}", question.id, input.agent_index,
                                         to_string(Stage::Independent));
  std::mt19937_64 rng(stable_hash(stream, params.seed));
  std::normal_distribution<double> noise(0.0, 1.0);
  const double log_odds = skill * (outcome == 1 ? 1.0 : -1.0) + params.bias + params.noise_sd * noise(rng);
  const double own = 100.0 * logistic(log_odds);

  AgentResponse response;
  if (stage == Stage::Independent) {
    response.probability = own;
    response.rationale = fmt::format(
        "Simulated forecaster {} on question {}: skill {:.3f} (base {}, {} information unit(s) at gain {}), "
        "bias {}, noise sd {}. Log-odds {:.6f} gives {:.4f}%.",
        input.agent_index, question.id, skill, params.base_skill, input.info_units, params.info_gain,
        params.bias, params.noise_sd, log_odds, own);
    response.structured_fields["time_left_until_outcome_known"] = "simulated";
    response.structured_fields["status_quo_outcome"] = "simulated";
    response.structured_fields["no_outcome_scenario"] = "simulated";
    response.structured_fields["yes_outcome_scenario"] = "simulated";
  } else {
    double peer_mean = own;
    if (!input.peer_probabilities.empty()) {
      peer_mean = 0;
      for (double p : input.peer_probabilities) peer_mean += p;
      peer_mean /= static_cast<double>(input.peer_probabilities.size());
    }
    const double w = params.peer_weight;
    response.probability = std::clamp((1.0 - w) * own + w * peer_mean, 0.0, 100.0);
    response.rationale = fmt::format(
        "Simulated forecaster {} on question {}: own estimate {:.4f}%, peer mean {:.4f}%, "
        "peer weight {}; updated to {:.4f}%.",
        input.agent_index, question.id, own, peer_mean, w, response.probability);
    response.structured_fields["review"] = fmt::format("peer mean {:.4f}%", peer_mean);
  }
  response.structured_fields["rationale"] = response.rationale;
  response.raw = encode_response(response, stage);
  return response;
}

}  // namespace delib
