#include "delib/run_store.hpp"

#include <fmt/format.h>

#include <ctime>
#include <iterator>

#include "delib/error.hpp"
#include "delib/hashing.hpp"

#ifndef DELIB_VERSION
#define DELIB_VERSION "dev"
#endif

namespace delib {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace fs = std::filesystem;

const char* software_version() { return DELIB_VERSION; }

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json RunManifest::to_json() const {
  ordered_json j;
  j["run_id"] = run_id;
  j["corpus_path"] = corpus_path;
  j["corpus_sha256"] = corpus_sha256;
  ordered_json scen = ordered_json::array();
  for (const Scenario& s : scenarios) scen.push_back(s.slug());
  j["scenarios"] = scen;
  j["seed"] = seed;
  j["config"] = config;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["software_version"] = software_version;
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  try {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.corpus_path = j.at("corpus_path").get<std::string>();
    m.corpus_sha256 = j.at("corpus_sha256").get<std::string>();
    for (const json& s : j.at("scenarios")) m.scenarios.push_back(parse_scenario(s.get<std::string>()));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = ordered_json(j.at("config"));
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    m.software_version = j.value("software_version", "");
    return m;
  } catch (const json::exception& e) {
    throw Error("E_MANIFEST", std::string("malformed manifest: ") + e.what());
  }
}

namespace {

void write_atomically(const fs::path& path, const std::string& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("E_IO", "cannot write '" + tmp.string() + "'");
    out << bytes;
    out.flush();
    if (!out) throw Error("E_IO", "write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

RunManifest read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("E_RUN_MISSING", "no manifest in run directory '" + dir.string() + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error("E_MANIFEST", "manifest is not valid JSON");
  return RunManifest::from_json(j);
}

// A crash mid-append can leave a final line without its newline; it is
// never a complete record, so it is cut off before appending resumes.
void drop_torn_tail(const fs::path& path) {
  if (!fs::exists(path)) return;
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  if (bytes.empty() || bytes.back() == '\n') return;
  const auto last_newline = bytes.rfind('\n');
  fs::resize_file(path, last_newline == std::string::npos ? 0 : last_newline + 1);
}

std::string sanitize(const std::string& cell) {
  std::string out;
  for (char c : cell) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                      c == '.';
    out.push_back(keep ? c : '_');
  }
  return out + "." + sha256_hex(cell).substr(0, 8);
}

}  // namespace

std::vector<ForecastRecord> read_records(const fs::path& records_file) {
  std::vector<ForecastRecord> out;
  std::ifstream in(records_file, std::ios::binary);
  if (!in) return out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      if (in.peek() == std::char_traits<char>::eof()) break;  // torn tail
      throw Error("E_RECORD", fmt::format("records line {} is not valid JSON", line_no));
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

void RunStore::initialize(const fs::path& dir, const RunManifest& manifest) {
  fs::create_directories(dir);
  if (fs::exists(dir / "manifest.json")) {
    throw Error("E_RUN_EXISTS", "run directory '" + dir.string() + "' already holds a manifest");
  }
  write_atomically(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
}

bool RunStore::exists(const fs::path& dir) { return fs::exists(dir / "manifest.json"); }

RunStore::RunStore(fs::path dir) : dir_(std::move(dir)), manifest_(read_manifest(dir_)) {
  fs::create_directories(dir_ / "archive");
  drop_torn_tail(records_path());
  load_records();
  records_out_.open(records_path(), std::ios::binary | std::ios::app);
  attempts_out_.open(dir_ / "attempts.jsonl", std::ios::binary | std::ios::app);
  if (!records_out_ || !attempts_out_) throw Error("E_IO", "cannot open run files in '" + dir_.string() + "'");
}

void RunStore::load_records() {
  records_ = read_records(records_path());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!by_cell_.emplace(records_[i].cell(), i).second) {
      throw Error("E_RECORD", "duplicate record for cell " + records_[i].cell());
    }
  }
}

bool RunStore::append(const ForecastRecord& record) {
  const std::string cell = record.cell();
  const std::string line = to_json(record).dump() + "\n";
  std::lock_guard lock(mutex_);
  if (by_cell_.contains(cell)) return false;
  records_out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  records_out_.flush();
  if (!records_out_) throw Error("E_IO", "append to records file failed");
  by_cell_.emplace(cell, records_.size());
  records_.push_back(record);
  return true;
}

bool RunStore::contains(const std::string& cell) const {
  std::lock_guard lock(mutex_);
  return by_cell_.contains(cell);
}

std::optional<ForecastRecord> RunStore::find(const std::string& cell) const {
  std::lock_guard lock(mutex_);
  auto it = by_cell_.find(cell);
  if (it == by_cell_.end()) return std::nullopt;
  return records_[it->second];
}

std::vector<ForecastRecord> RunStore::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t RunStore::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

void RunStore::log_attempts(const std::string& cell, const std::vector<AttemptRecord>& attempts) {
  std::string lines;
  const std::string now = utc_timestamp();
  for (const AttemptRecord& a : attempts) {
    ordered_json j;
    j["cell"] = cell;
    j["attempt"] = a.attempt;
    j["ok"] = a.ok;
    j["error"] = a.error;
    j["latency_ms"] = a.latency_ms;
    j["timestamp"] = now;
    lines += j.dump() + "\n";
  }
  std::lock_guard lock(mutex_);
  attempts_out_ << lines;
  attempts_out_.flush();
}

fs::path RunStore::archive_path(const std::string& cell) const {
  return dir_ / "archive" / (sanitize(cell) + ".json");
}

void RunStore::archive(const std::string& cell, const ordered_json& entry) {
  write_atomically(archive_path(cell), entry.dump(2) + "\n");
}

void RunStore::mark_finished() {
  std::lock_guard lock(mutex_);
  manifest_.finished_at = utc_timestamp();
  write_atomically(dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
}

}  // namespace delib
