#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace delib {

enum class InfoLevel { None, Distributed, Shared };

std::string_view to_string(InfoLevel level);
InfoLevel info_level_from_string(std::string_view text);

/// Number of information units an agent sees at a given level.
int units_seen(InfoLevel level);

/// Text injected into the research-report slot when no information is given.
inline constexpr std::string_view kNoInformation = "No research report available.";

struct Question {
  std::string id;
  std::string title;
  std::string description;
  std::string resolution_criteria;
  std::string fine_print;
  std::string as_of_date;  ///< ISO-8601 calendar date, "YYYY-MM-DD".
  std::optional<std::string> resolution_date;
  std::optional<int> resolved_outcome;  ///< 1 = Yes, 0 = No.
};

struct InformationUnit {
  std::string question_id;
  int index = 0;  ///< 1..3
  std::string text;
};

using InformationSet = std::array<InformationUnit, 3>;

/// Immutable, validated question collection. Question order is file order
/// and defines the 1-based round-robin position.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Question> questions, std::map<std::string, InformationSet> info);

  const std::vector<Question>& questions() const noexcept { return questions_; }
  std::size_t size() const noexcept { return questions_.size(); }
  bool empty() const noexcept { return questions_.empty(); }

  bool contains(std::string_view id) const;
  const Question& question(std::string_view id) const;
  /// 1-based position of the question in corpus order.
  std::size_t position(std::string_view id) const;

  bool has_information(std::string_view id) const;
  const InformationSet& information(std::string_view id) const;
  /// False when at least one question lacks its units; such a corpus can
  /// only drive the no-information arm.
  bool information_capable() const noexcept;

 private:
  std::vector<Question> questions_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, InformationSet> info_;
};

struct LoadOptions {
  bool require_resolution = true;
};

Corpus parse_corpus(std::string_view text, const LoadOptions& options = {});
Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options = {});

/// Canonical line-delimited serialisation: each question record followed by
/// its information records in index order.
std::string serialize_corpus(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// The research-report text agent `agent_index` (0..2) receives.
std::string information_for(const Corpus& corpus, std::string_view question_id,
                            InfoLevel level, int agent_index);

bool is_iso_date(std::string_view text);

struct SyntheticOptions {
  std::size_t questions = 202;
  std::uint64_t seed = 0;
  double base_rate = 0.35;  ///< share of questions resolving Yes
  bool with_information = true;
};

/// Resolved placeholder questions for dry runs with simulated agents.
Corpus synthetic_corpus(const SyntheticOptions& options = {});

}  // namespace delib
