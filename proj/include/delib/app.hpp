#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "delib/backend.hpp"
#include "delib/config.hpp"
#include "delib/error.hpp"
#include "delib/report.hpp"
#include "delib/runner.hpp"

namespace delib {

/// Raised when a config or corpus fails validation (CLI exit code 1).
class ValidationFailure : public Error {
 public:
  using Error::Error;
};

/// Raised when a report is requested for a run with missing cells (exit 3).
class IncompleteRun : public Error {
 public:
  IncompleteRun(const std::string& message, std::vector<std::string> missing)
      : Error("E_INCOMPLETE", message), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing_cells() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

struct Diagnostic {
  std::string code;
  std::string message;
  bool warning = false;
};

struct ValidationReport {
  std::vector<Diagnostic> diagnostics;
  bool clean() const;
};

/// Returns an empty string when the endpoint answers, otherwise the reason.
using ReachabilityProbe = std::function<std::string(const RemoteEndpoint&)>;
std::string probe_endpoint(const RemoteEndpoint& endpoint);

/// Config, corpus and backend checks. With `offline`, unreachable
/// backends and unset credentials are warnings instead of errors.
ValidationReport validate(const Config& config, bool offline, const ReachabilityProbe& probe = probe_endpoint);

struct AppOptions {
  const std::atomic<bool>* stop = nullptr;
  BackendFactory factory = make_backend;
  std::function<void(const std::string&)> log;
};

struct RunResult {
  std::filesystem::path run_dir;
  CompletionReport completion;
  bool created = false;  ///< false when an existing run was resumed
};

/// Creates the run directory, or resumes it when it already holds a run
/// of the same config and corpus.
RunResult start_run(const Config& config, const AppOptions& options = {});

/// Completes the missing cells of an existing run from its manifest.
/// Refuses to continue when the corpus file no longer matches the digest.
RunResult resume_run(const std::filesystem::path& run_dir, const AppOptions& options = {});

/// Fetches resolved questions from the configured API and writes the
/// corpus to `out`.
FetchResult fetch_corpus(const Config& config, const std::filesystem::path& out);

struct ReportRequest {
  std::optional<Metric> metric;
  std::optional<std::string> only;
  std::optional<std::filesystem::path> out_dir;  ///< default <run>/report
};

/// Scores and analyses a complete run. Throws IncompleteRun otherwise.
ReportOutput report_run(const std::filesystem::path& run_dir, const ReportRequest& request);

/// Stable run identifier derived from the config and corpus digest.
std::string make_run_id(const Config& config, const std::string& corpus_sha256);

}  // namespace delib
