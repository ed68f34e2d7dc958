#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "delib/agents.hpp"
#include "delib/retry.hpp"

namespace delib {

struct InvocationRequest {
  Stage stage = Stage::Independent;
  std::string prompt;
  std::vector<ChatTurn> context;  ///< prior turns, oldest first
  const Question* question = nullptr;
  SimInput sim;  ///< structured view used only by simulators
};

/// Produces the raw text of one model answer. Throws RetryableError for
/// transient failures and Error for permanent ones.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const InvocationRequest& request) = 0;
  /// Rate-limit bucket this backend draws from; empty means unlimited.
  virtual std::string limiter_key() const { return {}; }
};

class SimBackend final : public Backend {
 public:
  explicit SimBackend(SimParams params) : params_(params) {}
  std::string complete(const InvocationRequest& request) override;

 private:
  SimParams params_;
};

/// OpenAI-compatible chat-completions transport. Sampling parameters are
/// merged into the request body verbatim.
class HttpChatBackend final : public Backend {
 public:
  HttpChatBackend(RemoteEndpoint endpoint, nlohmann::ordered_json sampling);
  std::string complete(const InvocationRequest& request) override;
  std::string limiter_key() const override { return endpoint_.url; }

  /// Request body sent for a conversation; exposed for tests.
  nlohmann::ordered_json request_body(const InvocationRequest& request) const;

 private:
  RemoteEndpoint endpoint_;
  nlohmann::ordered_json sampling_;
};

using BackendFactory = std::function<std::shared_ptr<Backend>(const AgentSpec&)>;

std::shared_ptr<Backend> make_backend(const AgentSpec& spec);

struct AttemptRecord {
  int attempt = 0;
  bool ok = false;
  std::string error;
  double latency_ms = 0;
  std::string raw;
};

struct Invocation {
  AgentResponse response;
  std::vector<AttemptRecord> attempts;
};

class InvokeError : public Error {
 public:
  InvokeError(const std::string& code, const std::string& message, std::vector<AttemptRecord> attempts)
      : Error(code, message), attempts_(std::move(attempts)) {}
  const std::vector<AttemptRecord>& attempts() const noexcept { return attempts_; }

 private:
  std::vector<AttemptRecord> attempts_;
};

/// Calls a backend and parses its answer, retrying transport and parse
/// failures under one policy. Rate limits are shared across all callers of
/// the same Invoker.
class Invoker {
 public:
  explicit Invoker(RetryPolicy policy = {}) : policy_(policy) {}

  void set_rate_limit(const std::string& key, double requests_per_second, double burst);

  Invocation invoke(Backend& backend, const InvocationRequest& request);

 private:
  TokenBucket* bucket_for(const std::string& key);

  RetryPolicy policy_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<TokenBucket>> buckets_;
};

}  // namespace delib
