#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "delib/backend.hpp"
#include "delib/corpus.hpp"
#include "delib/protocol.hpp"
#include "delib/run_store.hpp"

namespace delib {

struct RunOptions {
  std::size_t concurrency = 1;
  /// Checked before each group starts; in-flight groups always finish.
  const std::atomic<bool>* stop = nullptr;
  /// Called after each record is appended, in commit order.
  std::function<void(const ForecastRecord&)> on_commit;
};

struct CompletionReport {
  std::size_t groups_planned = 0;
  std::size_t groups_complete = 0;
  std::size_t records_expected = 0;
  std::size_t records_present = 0;
  std::size_t records_written = 0;  ///< by this invocation
  std::vector<std::string> missing_cells;
  std::vector<std::string> failures;  ///< "cell: error"
  bool interrupted = false;

  bool complete() const noexcept { return missing_cells.empty(); }
};

/// Missing cells of `plan` given what `store` holds.
CompletionReport completion(std::span<const GroupAssignment> plan, const RunStore& store);

/// Drives the two-stage protocol for planned groups against one run store.
class ProtocolRunner {
 public:
  ProtocolRunner(const Corpus& corpus, std::map<ModelId, AgentSpec> agents, RunStore& store,
                 Invoker& invoker, const BackendFactory& factory = make_backend, bool archive = true);

  /// Independent round: fills missing stage-1 cells and returns every
  /// stage-1 record of the group that now exists, by agent index. Agents
  /// that fail permanently are left missing.
  std::vector<ForecastRecord> run_stage1(const GroupAssignment& group);

  /// Deliberation round; requires all three stage-1 records. Agent i sees
  /// agents (i+1)%3 and (i+2)%3 as Forecasters 2 and 3.
  std::vector<ForecastRecord> run_stage2(const GroupAssignment& group,
                                         std::span<const ForecastRecord> stage1);

  /// Runs every incomplete group. Groups execute concurrently, but their
  /// records are appended in plan order, so an interrupted run that is
  /// resumed ends with the same records file as an uninterrupted one.
  CompletionReport run(std::span<const GroupAssignment> plan, const RunOptions& options = {});

 private:
  struct GroupOutcome {
    std::vector<ForecastRecord> fresh;
    std::vector<std::string> failures;
  };

  GroupOutcome execute(const GroupAssignment& group, bool include_stage2);
  ForecastRecord independent(const GroupAssignment& group, int agent);
  ForecastRecord deliberative(const GroupAssignment& group, int agent,
                              std::span<const ForecastRecord, 3> stage1);
  ForecastRecord finish_record(const GroupAssignment& group, int agent, Stage stage, const Invocation& inv,
                               const std::string& info_text, const std::string& prompt,
                               const std::vector<ChatTurn>& context);
  Backend& backend_for(ModelId model);
  void commit(const std::vector<ForecastRecord>& records, const RunOptions* options, std::size_t& written);

  const Corpus& corpus_;
  std::map<ModelId, AgentSpec> agents_;
  std::map<ModelId, std::shared_ptr<Backend>> backends_;
  RunStore& store_;
  Invoker& invoker_;
  bool archive_;
};

}  // namespace delib
