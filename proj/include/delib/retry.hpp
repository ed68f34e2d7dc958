#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include "delib/error.hpp"

namespace delib {

/// Exponential backoff with multiplicative jitter.
struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
  double jitter = 0.5;  ///< delay is scaled by U(1 - jitter, 1)
  std::uint64_t seed = 0;
};

/// Delay before attempt `failed_attempts + 1`.
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int failed_attempts,
                                        std::mt19937_64& rng);

/// Failure that is worth another attempt (5xx, 429, connection reset, an
/// unparseable model answer).
class RetryableError : public Error {
 public:
  using Error::Error;
};

/// Runs `op` until it succeeds, throws a non-retryable exception, or the
/// attempt budget is spent. `on_failure(attempt, error)` sees every failed
/// attempt; the final RetryableError is rethrown unchanged.
template <class Op>
auto with_retry(const RetryPolicy& policy, Op&& op,
                const std::function<void(int, const RetryableError&)>& on_failure = {}) {
  std::mt19937_64 rng(policy.seed);
  for (int attempt = 1;; ++attempt) {
    try {
      return op(attempt);
    } catch (const RetryableError& e) {
      if (on_failure) on_failure(attempt, e);
      if (attempt >= policy.max_attempts) throw;
      auto delay = backoff_delay(policy, attempt, rng);
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }
  }
}

/// Blocking token bucket. `rate` tokens per second, at most `burst` stored.
class TokenBucket {
 public:
  TokenBucket(double rate, double burst);

  void acquire();
  bool try_acquire();

 private:
  void refill_locked(std::chrono::steady_clock::time_point now);

  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mutex_;
};

}  // namespace delib
