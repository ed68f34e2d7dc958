#include "delib/corpus.hpp"

#include <chrono>
#include <fstream>
#include <iterator>
#include <random>
#include <set>

#include <json.hpp>

#include <fmt/format.h>

#include "delib/error.hpp"

namespace delib {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(InfoLevel level) {
  switch (level) {
    case InfoLevel::None: return "none";
    case InfoLevel::Distributed: return "distributed";
    case InfoLevel::Shared: return "shared";
  }
  return "none";
}

InfoLevel info_level_from_string(std::string_view text) {
  if (text == "none") return InfoLevel::None;
  if (text == "distributed") return InfoLevel::Distributed;
  if (text == "shared") return InfoLevel::Shared;
  throw Error("E_SCENARIO", "unknown information level '" + std::string(text) + "'");
}

int units_seen(InfoLevel level) {
  switch (level) {
    case InfoLevel::None: return 0;
    case InfoLevel::Distributed: return 1;
    case InfoLevel::Shared: return 3;
  }
  return 0;
}

namespace {

std::optional<std::chrono::year_month_day> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t from, std::size_t count) -> std::optional<int> {
    int value = 0;
    for (std::size_t i = from; i < from + count; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      value = value * 10 + (text[i] - '0');
    }
    return value;
  };
  auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (!y || !m || !d) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
                                  std::chrono::day{static_cast<unsigned>(*d)}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

[[noreturn]] void fail_at(const std::string& code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

std::string required_string(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    fail_at("E_CORPUS_MALFORMED", line, std::string("missing or non-string field '") + key + "'");
  }
  return it->get<std::string>();
}

void validate_question(const Question& q, bool require_resolution, std::size_t line) {
  if (q.id.empty()) fail_at("E_CORPUS_MALFORMED", line, "empty question id");
  if (!parse_date(q.as_of_date)) {
    fail_at("E_CORPUS_MALFORMED", line, "as_of_date '" + q.as_of_date + "' is not an ISO-8601 date");
  }
  if (q.resolution_date) {
    auto resolved = parse_date(*q.resolution_date);
    if (!resolved) fail_at("E_CORPUS_MALFORMED", line, "resolution_date is not an ISO-8601 date");
    if (!(std::chrono::sys_days{*parse_date(q.as_of_date)} < std::chrono::sys_days{*resolved})) {
      fail_at("E_CORPUS_LEAKAGE", line, "as_of_date does not precede resolution_date for '" + q.id + "'");
    }
  }
  if (require_resolution && !q.resolved_outcome) {
    fail_at("E_UNRESOLVED", line, "unresolved question '" + q.id + "'");
  }
}

}  // namespace

bool is_iso_date(std::string_view text) { return parse_date(text).has_value(); }

Corpus::Corpus(std::vector<Question> questions, std::map<std::string, InformationSet> info)
    : questions_(std::move(questions)), info_(std::move(info)) {
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    if (!index_.emplace(questions_[i].id, i).second) {
      throw Error("E_CORPUS_DUPLICATE_ID", "duplicate id '" + questions_[i].id + "'");
    }
  }
  for (const auto& [qid, units] : info_) {
    if (!index_.contains(qid)) {
      throw Error("E_CORPUS_MALFORMED", "information for unknown question '" + qid + "'");
    }
    for (int i = 0; i < 3; ++i) {
      if (units[i].index != i + 1 || units[i].question_id != qid || units[i].text.empty()) {
        throw Error("E_INFO_MISSING", "information units for '" + qid + "' are incomplete");
      }
    }
  }
}

bool Corpus::contains(std::string_view id) const { return index_.contains(std::string(id)); }

const Question& Corpus::question(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error("E_UNKNOWN_QUESTION", "unknown question '" + std::string(id) + "'");
  return questions_[it->second];
}

std::size_t Corpus::position(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error("E_UNKNOWN_QUESTION", "unknown question '" + std::string(id) + "'");
  return it->second + 1;
}

bool Corpus::has_information(std::string_view id) const { return info_.contains(std::string(id)); }

const InformationSet& Corpus::information(std::string_view id) const {
  auto it = info_.find(std::string(id));
  if (it == info_.end()) {
    throw Error("E_INFO_MISSING", "no information units for question '" + std::string(id) + "'");
  }
  return it->second;
}

bool Corpus::information_capable() const noexcept {
  return !questions_.empty() && info_.size() == questions_.size();
}

Corpus parse_corpus(std::string_view text, const LoadOptions& options) {
  std::vector<Question> questions;
  std::vector<std::size_t> question_lines;
  std::map<std::string, std::size_t> seen_ids;
  // question id -> index -> (line, text)
  std::map<std::string, std::map<int, std::pair<std::size_t, std::string>>> units;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_at("E_CORPUS_MALFORMED", line_no, std::string("malformed record: ") + e.what());
    }
    if (!record.is_object()) fail_at("E_CORPUS_MALFORMED", line_no, "malformed record: not an object");
    const std::string kind = required_string(record, "kind", line_no);

    if (kind == "question") {
      Question q;
      q.id = required_string(record, "id", line_no);
      q.title = required_string(record, "title", line_no);
      q.description = required_string(record, "description", line_no);
      q.resolution_criteria = required_string(record, "resolution_criteria", line_no);
      q.fine_print = record.contains("fine_print") ? required_string(record, "fine_print", line_no) : "";
      q.as_of_date = required_string(record, "as_of_date", line_no);
      if (record.contains("resolution_date") && !record["resolution_date"].is_null()) {
        q.resolution_date = required_string(record, "resolution_date", line_no);
      }
      if (auto it = record.find("resolved_outcome"); it != record.end() && !it->is_null()) {
        if (!it->is_number_integer() || (it->get<int>() != 0 && it->get<int>() != 1)) {
          fail_at("E_CORPUS_MALFORMED", line_no, "resolved_outcome must be 0 or 1");
        }
        q.resolved_outcome = it->get<int>();
      }
      validate_question(q, options.require_resolution, line_no);
      if (auto [it, inserted] = seen_ids.emplace(q.id, line_no); !inserted) {
        fail_at("E_CORPUS_DUPLICATE_ID", line_no,
                "duplicate id '" + q.id + "' (first seen on line " + std::to_string(it->second) + ")");
      }
      questions.push_back(std::move(q));
      question_lines.push_back(line_no);
    } else if (kind == "info") {
      const std::string qid = required_string(record, "question_id", line_no);
      auto idx = record.find("index");
      if (idx == record.end() || !idx->is_number_integer()) {
        fail_at("E_CORPUS_MALFORMED", line_no, "missing or non-integer field 'index'");
      }
      const int index = idx->get<int>();
      if (index < 1 || index > 3) fail_at("E_CORPUS_MALFORMED", line_no, "information index out of range 1..3");
      std::string body = required_string(record, "text", line_no);
      if (body.empty()) fail_at("E_CORPUS_MALFORMED", line_no, "empty information text");
      auto& slot = units[qid];
      if (slot.contains(index)) {
        fail_at("E_INFO_DUPLICATE", line_no,
                "duplicate information index " + std::to_string(index) + " for '" + qid + "'");
      }
      slot.emplace(index, std::make_pair(line_no, std::move(body)));
    } else {
      fail_at("E_CORPUS_MALFORMED", line_no, "unknown record kind '" + kind + "'");
    }
  }

  std::map<std::string, InformationSet> info;
  for (auto& [qid, by_index] : units) {
    const std::size_t first_line = by_index.begin()->second.first;
    if (!seen_ids.contains(qid)) {
      fail_at("E_CORPUS_MALFORMED", first_line, "information for unknown question '" + qid + "'");
    }
    InformationSet set;
    for (int i = 1; i <= 3; ++i) {
      auto it = by_index.find(i);
      if (it == by_index.end()) {
        fail_at("E_INFO_MISSING", seen_ids.at(qid),
                "missing information index " + std::to_string(i) + " for '" + qid + "'");
      }
      set[i - 1] = InformationUnit{qid, i, std::move(it->second.second)};
    }
    info.emplace(qid, std::move(set));
  }
  return Corpus(std::move(questions), std::move(info));
}

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("E_IO", "cannot open corpus '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_corpus(bytes, options);
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Question& q : corpus.questions()) {
    ordered_json rec;
    rec["kind"] = "question";
    rec["id"] = q.id;
    rec["title"] = q.title;
    rec["description"] = q.description;
    rec["resolution_criteria"] = q.resolution_criteria;
    rec["fine_print"] = q.fine_print;
    rec["as_of_date"] = q.as_of_date;
    if (q.resolution_date) rec["resolution_date"] = *q.resolution_date;
    if (q.resolved_outcome) rec["resolved_outcome"] = *q.resolved_outcome;
    out += rec.dump();
    out += '\n';
    if (!corpus.has_information(q.id)) continue;
    for (const InformationUnit& unit : corpus.information(q.id)) {
      ordered_json info;
      info["kind"] = "info";
      info["question_id"] = unit.question_id;
      info["index"] = unit.index;
      info["text"] = unit.text;
      out += info.dump();
      out += '\n';
    }
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("E_IO", "cannot write corpus '" + path.string() + "'");
  out << serialize_corpus(corpus);
  if (!out) throw Error("E_IO", "write failed for '" + path.string() + "'");
}

std::string information_for(const Corpus& corpus, std::string_view question_id, InfoLevel level,
                            int agent_index) {
  if (agent_index < 0 || agent_index > 2) {
    throw Error("E_ARGUMENT", "agent index must be 0, 1 or 2");
  }
  corpus.question(question_id);  // throws for unknown ids
  switch (level) {
    case InfoLevel::None:
      return std::string(kNoInformation);
    case InfoLevel::Distributed:
      return corpus.information(question_id)[static_cast<std::size_t>(agent_index)].text;
    case InfoLevel::Shared: {
      const auto& units = corpus.information(question_id);
      return units[0].text + "\n\n" + units[1].text + "\n\n" + units[2].text;
    }
  }
  return std::string(kNoInformation);
}

Corpus synthetic_corpus(const SyntheticOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::bernoulli_distribution yes(options.base_rate);
  std::vector<Question> questions;
  std::map<std::string, InformationSet> info;
  for (std::size_t i = 1; i <= options.questions; ++i) {
    Question q;
    q.id = fmt::format("syn-{:04d}", i);
    q.title = fmt::format("Will synthetic indicator {} exceed its threshold by the end of the quarter?", i);
    q.description = fmt::format("Synthetic question {} generated for pipeline checks.", i);
    q.resolution_criteria = fmt::format("Resolves Yes if indicator {} is above its threshold on the resolution date.", i);
    q.fine_print = "Synthetic; no real-world source.";
    q.as_of_date = "2025-04-01";
    q.resolution_date = "2025-07-01";
    q.resolved_outcome = yes(rng) ? 1 : 0;
    if (options.with_information) {
      InformationSet set;
      for (int k = 1; k <= 3; ++k) {
        set[k - 1] = InformationUnit{q.id, k, fmt::format("Synthetic evidence item {} for indicator {}.", k, i)};
      }
      info.emplace(q.id, std::move(set));
    }
    questions.push_back(std::move(q));
  }
  return Corpus(std::move(questions), std::move(info));
}

}  // namespace delib
