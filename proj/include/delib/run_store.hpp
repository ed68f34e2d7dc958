#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "delib/backend.hpp"
#include "delib/protocol.hpp"

namespace delib {

struct RunManifest {
  std::string run_id;
  std::string corpus_path;
  std::string corpus_sha256;
  std::vector<Scenario> scenarios;
  nlohmann::ordered_json config;  ///< Config::to_json()
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::string software_version;

  nlohmann::ordered_json to_json() const;
  static RunManifest from_json(const nlohmann::json& json);
};

std::string utc_timestamp();
const char* software_version();

/// Run directory:
///   manifest.json     run description
///   records.jsonl     one ForecastRecord per line, unique per cell
///   attempts.jsonl    per-attempt timing and errors
///   archive/          prompt, context and raw answer per cell
///
/// The records file is append-only. Opening a store drops a torn final
/// line left by a crash; nothing else is ever rewritten.
class RunStore {
 public:
  static void initialize(const std::filesystem::path& dir, const RunManifest& manifest);
  static bool exists(const std::filesystem::path& dir);

  explicit RunStore(std::filesystem::path dir);
  RunStore(const RunStore&) = delete;
  RunStore& operator=(const RunStore&) = delete;

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const RunManifest& manifest() const noexcept { return manifest_; }
  std::filesystem::path records_path() const { return dir_ / "records.jsonl"; }

  /// False (and nothing written) when the cell already has a record.
  bool append(const ForecastRecord& record);
  bool contains(const std::string& cell) const;
  std::optional<ForecastRecord> find(const std::string& cell) const;
  /// Records in file order.
  std::vector<ForecastRecord> records() const;
  std::size_t size() const;

  void log_attempts(const std::string& cell, const std::vector<AttemptRecord>& attempts);
  void archive(const std::string& cell, const nlohmann::ordered_json& entry);
  std::filesystem::path archive_path(const std::string& cell) const;

  void mark_finished();

 private:
  void load_records();

  std::filesystem::path dir_;
  RunManifest manifest_;
  mutable std::mutex mutex_;
  std::vector<ForecastRecord> records_;
  std::unordered_map<std::string, std::size_t> by_cell_;
  std::ofstream records_out_;
  std::ofstream attempts_out_;
};

/// Reads records.jsonl without opening a store (no repair).
std::vector<ForecastRecord> read_records(const std::filesystem::path& records_file);

}  // namespace delib
