#include "delib/backend.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cstdlib>

#include <httplib.h>

#include "delib/error.hpp"

namespace delib {

using ordered_json = nlohmann::ordered_json;

std::string SimBackend::complete(const InvocationRequest& request) {
  if (request.question == nullptr) throw Error("E_ARGUMENT", "simulator needs the question");
  return simulate(params_, *request.question, request.stage, request.sim).raw;
}

HttpChatBackend::HttpChatBackend(RemoteEndpoint endpoint, ordered_json sampling)
    : endpoint_(std::move(endpoint)), sampling_(std::move(sampling)) {}

ordered_json HttpChatBackend::request_body(const InvocationRequest& request) const {
  ordered_json body = ordered_json::object();
  body["model"] = endpoint_.model;
  ordered_json messages = ordered_json::array();
  for (const ChatTurn& turn : request.context) {
    messages.push_back({{"role", turn.role}, {"content", turn.content}});
  }
  messages.push_back({{"role", "user"}, {"content", request.prompt}});
  body["messages"] = std::move(messages);
  for (const auto& [key, value] : sampling_.items()) {
    if (key != "model" && key != "messages") body[key] = value;
  }
  return body;
}

std::string HttpChatBackend::complete(const InvocationRequest& request) {
  httplib::Client client(endpoint_.url);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(std::chrono::seconds(600));
  httplib::Headers headers;
  if (!endpoint_.credential_env.empty()) {
    const char* key = std::getenv(endpoint_.credential_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error("E_CREDENTIALS", "environment variable " + endpoint_.credential_env + " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  auto response = client.Post(endpoint_.path, headers, request_body(request).dump(), "application/json");
  if (!response) {
    throw RetryableError("E_TRANSPORT", "POST " + endpoint_.url + endpoint_.path +
                                            " failed: " + httplib::to_string(response.error()));
  }
  if (response->status == 429 || response->status >= 500) {
    throw RetryableError("E_TRANSPORT", fmt::format("backend returned HTTP {}", response->status));
  }
  if (response->status != 200) {
    throw Error("E_TRANSPORT", fmt::format("backend returned HTTP {}", response->status));
  }
  ordered_json payload = ordered_json::parse(response->body, nullptr, false);
  if (payload.is_discarded()) throw RetryableError("E_TRANSPORT", "backend payload is not JSON");
  try {
    return payload.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw RetryableError("E_TRANSPORT", "backend payload has no choices[0].message.content");
  }
}

std::shared_ptr<Backend> make_backend(const AgentSpec& spec) {
  if (const auto* sim = std::get_if<SimParams>(&spec.backend)) return std::make_shared<SimBackend>(*sim);
  return std::make_shared<HttpChatBackend>(std::get<RemoteEndpoint>(spec.backend), spec.sampling);
}

void Invoker::set_rate_limit(const std::string& key, double requests_per_second, double burst) {
  std::lock_guard lock(mutex_);
  buckets_[key] = std::make_unique<TokenBucket>(requests_per_second, burst);
}

TokenBucket* Invoker::bucket_for(const std::string& key) {
  if (key.empty()) return nullptr;
  std::lock_guard lock(mutex_);
  auto it = buckets_.find(key);
  return it == buckets_.end() ? nullptr : it->second.get();
}

Invocation Invoker::invoke(Backend& backend, const InvocationRequest& request) {
  Invocation result;
  TokenBucket* bucket = bucket_for(backend.limiter_key());
  try {
    result.response = with_retry(
        policy_,
        [&](int attempt) {
          if (bucket != nullptr) bucket->acquire();
          const auto start = std::chrono::steady_clock::now();
          AttemptRecord record;
          record.attempt = attempt;
          auto elapsed = [&] {
            return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
          };
          try {
            record.raw = backend.complete(request);
            AgentResponse parsed = parse_response(record.raw, request.stage);
            record.ok = true;
            record.latency_ms = elapsed();
            result.attempts.push_back(std::move(record));
            return parsed;
          } catch (const Error& e) {
            record.error = fmt::format("{}: {}", e.code(), e.what());
            record.latency_ms = elapsed();
            result.attempts.push_back(std::move(record));
            throw;
          }
        });
  } catch (const Error& e) {
    throw InvokeError(e.code(), fmt::format("invocation failed after {} attempt(s): {}",
                                            result.attempts.size(), e.what()),
                      std::move(result.attempts));
  }
  return result;
}

}  // namespace delib
