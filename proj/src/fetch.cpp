#include "delib/fetch.hpp"

#include <fmt/format.h>

#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "delib/error.hpp"

namespace delib {

using nlohmann::json;

namespace {

std::string string_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  return (it != obj.end() && it->is_string()) ? it->get<std::string>() : std::string();
}

std::string id_string(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  return {};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("E_IO", "cannot write '" + path.string() + "'");
  out << bytes;
}

}  // namespace

std::vector<Question> parse_question_page(const std::string& body, std::vector<std::string>& warnings,
                                          bool& has_next) {
  json page;
  try {
    page = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error("E_FETCH_PAYLOAD", std::string("unparseable payload: ") + e.what());
  }
  if (!page.is_object() || !page.contains("results") || !page["results"].is_array()) {
    throw Error("E_FETCH_PAYLOAD", "unparseable payload: missing 'results' array");
  }
  has_next = page.contains("next") && !page["next"].is_null();

  std::vector<Question> out;
  for (const json& post : page["results"]) {
    const std::string id = post.contains("id") ? id_string(post["id"]) : std::string();
    if (id.empty() || !post.contains("question") || !post["question"].is_object()) {
      warnings.push_back("skipping post without an id or question body");
      continue;
    }
    const json& q = post["question"];
    if (string_field(q, "type") != "binary") {
      warnings.push_back(fmt::format("question {} excluded: not binary", id));
      continue;
    }
    const std::string resolution = string_field(q, "resolution");
    if (resolution != "yes" && resolution != "no") {
      warnings.push_back(fmt::format("question {} excluded: not resolved", id));
      continue;
    }
    Question question;
    question.id = id;
    question.title = !string_field(post, "title").empty() ? string_field(post, "title")
                                                           : string_field(q, "title");
    question.description = string_field(q, "description");
    question.resolution_criteria = string_field(q, "resolution_criteria");
    question.fine_print = string_field(q, "fine_print");
    std::string opened = string_field(q, "open_time");
    if (opened.empty()) opened = string_field(post, "open_time");
    question.as_of_date = opened.substr(0, 10);
    if (!is_iso_date(question.as_of_date)) {
      warnings.push_back(fmt::format("question {} excluded: no usable open_time", id));
      continue;
    }
    const std::string resolved_at = string_field(q, "actual_resolve_time").substr(0, 10);
    if (is_iso_date(resolved_at) && resolved_at > question.as_of_date) {
      question.resolution_date = resolved_at;
    }
    question.resolved_outcome = resolution == "yes" ? 1 : 0;
    out.push_back(std::move(question));
  }
  return out;
}

FetchResult fetch_questions(const ApiSource& source, const std::string& token, const RetryPolicy& policy,
                            const std::filesystem::path& audit_dir) {
  if (source.base_url.empty() || source.tournament_id.empty()) {
    throw Error("E_CONFIG", "api source needs base_url and tournament_id");
  }
  if (!audit_dir.empty()) std::filesystem::create_directories(audit_dir);

  httplib::Client client(source.base_url);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(std::chrono::seconds(60));
  httplib::Headers headers;
  if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

  FetchResult result;
  std::vector<Question> questions;
  for (int offset = 0, page_no = 0;; offset += source.page_size, ++page_no) {
    const std::string path = fmt::format("/api/posts/?tournaments={}&limit={}&offset={}",
                                         source.tournament_id, source.page_size, offset);
    const std::string body = with_retry(
        policy,
        [&](int) {
          auto response = client.Get(path, headers);
          if (!response) {
            throw RetryableError("E_HTTP", "GET " + path + " failed: " + httplib::to_string(response.error()));
          }
          if (response->status == 429 || response->status >= 500) {
            throw RetryableError("E_HTTP", fmt::format("GET {} returned HTTP {}", path, response->status));
          }
          if (response->status != 200) {
            throw Error("E_HTTP", fmt::format("GET {} returned HTTP {}", path, response->status));
          }
          return response->body;
        },
        [&](int attempt, const RetryableError& e) {
          if (attempt < policy.max_attempts) {
            ++result.retries;
            result.log.push_back(fmt::format("retry {} after: {}", attempt, e.what()));
          }
        });
    if (!audit_dir.empty()) write_file(audit_dir / fmt::format("page_{:04d}.json", page_no), body);
    bool has_next = false;
    auto page = parse_question_page(body, result.warnings, has_next);
    for (auto& q : page) questions.push_back(std::move(q));
    if (!has_next) break;
  }
  result.corpus = Corpus(std::move(questions), {});
  if (!audit_dir.empty()) write_file(audit_dir / "corpus.jsonl", serialize_corpus(result.corpus));
  return result;
}

FetchResult QuestionFetcher::fetch(const ApiSource& source, const std::string& token) {
  std::shared_future<FetchResult> future;
  bool owner = false;
  std::promise<FetchResult> promise;
  {
    std::lock_guard lock(mutex_);
    auto it = inflight_.find(source.tournament_id);
    if (it != inflight_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      inflight_.emplace(source.tournament_id, future);
      owner = true;
    }
  }
  if (owner) {
    try {
      promise.set_value(fetch_questions(source, token, policy_, audit_dir_));
    } catch (...) {
      promise.set_exception(std::current_exception());
    }
    std::lock_guard lock(mutex_);
    inflight_.erase(source.tournament_id);
  }
  return future.get();
}

}  // namespace delib
