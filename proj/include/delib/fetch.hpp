#pragma once

#include <filesystem>
#include <future>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "delib/corpus.hpp"
#include "delib/retry.hpp"

namespace delib {

/// Where questions come from. The bearer token is read from the environment
/// variable named by `credential_env`; the token itself is never stored.
struct ApiSource {
  std::string base_url;       ///< e.g. "https://www.metaculus.com"
  std::string tournament_id;
  std::string credential_env;
  int page_size = 100;
};

struct FetchResult {
  Corpus corpus;
  std::vector<std::string> warnings;
  int retries = 0;
  std::vector<std::string> log;
};

/// Pages through `GET {base}/api/posts/?tournaments={id}&limit=..&offset=..`
/// and keeps resolved binary questions. Each raw page body is written to
/// `audit_dir` (when non-empty) next to the parsed corpus.
FetchResult fetch_questions(const ApiSource& source, const std::string& token,
                            const RetryPolicy& policy, const std::filesystem::path& audit_dir);

/// Converts one page payload into questions; exposed for tests.
std::vector<Question> parse_question_page(const std::string& body, std::vector<std::string>& warnings,
                                          bool& has_next);

/// Deduplicates concurrent fetches of the same tournament.
class QuestionFetcher {
 public:
  QuestionFetcher(RetryPolicy policy, std::filesystem::path audit_dir)
      : policy_(policy), audit_dir_(std::move(audit_dir)) {}

  FetchResult fetch(const ApiSource& source, const std::string& token);

 private:
  RetryPolicy policy_;
  std::filesystem::path audit_dir_;
  std::mutex mutex_;
  std::map<std::string, std::shared_future<FetchResult>> inflight_;
};

}  // namespace delib
