#include "delib/runner.hpp"

#include <fmt/format.h>

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <thread>

#include "delib/error.hpp"
#include "delib/hashing.hpp"

namespace delib {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::array<Stage, 2> kStages = {Stage::Independent, Stage::Deliberative};

AgentResponse as_response(const ForecastRecord& record) {
  AgentResponse r;
  r.probability = record.raw_probability;
  r.rationale = record.rationale;
  r.raw = record.response;
  return r;
}

}  // namespace

CompletionReport completion(std::span<const GroupAssignment> plan, const RunStore& store) {
  CompletionReport report;
  report.groups_planned = plan.size();
  report.records_expected = plan.size() * 6;
  for (const GroupAssignment& g : plan) {
    bool complete = true;
    for (Stage stage : kStages) {
      for (int agent = 0; agent < 3; ++agent) {
        const std::string cell = cell_key(g.group_key, agent, stage);
        if (store.contains(cell)) {
          ++report.records_present;
        } else {
          complete = false;
          report.missing_cells.push_back(cell);
        }
      }
    }
    report.groups_complete += complete ? 1 : 0;
  }
  return report;
}

ProtocolRunner::ProtocolRunner(const Corpus& corpus, std::map<ModelId, AgentSpec> agents, RunStore& store,
                               Invoker& invoker, const BackendFactory& factory, bool archive)
    : corpus_(corpus), agents_(std::move(agents)), store_(store), invoker_(invoker), archive_(archive) {
  for (const auto& [model, spec] : agents_) {
    backends_[model] = factory(spec);
    if (const auto* remote = std::get_if<RemoteEndpoint>(&spec.backend);
        remote != nullptr && remote->requests_per_second > 0) {
      invoker_.set_rate_limit(backends_[model]->limiter_key(), remote->requests_per_second, remote->burst);
    }
  }
}

Backend& ProtocolRunner::backend_for(ModelId model) {
  auto it = backends_.find(model);
  if (it == backends_.end()) throw Error("E_CONFIG", fmt::format("no agent configured for {}", to_string(model)));
  return *it->second;
}

ForecastRecord ProtocolRunner::finish_record(const GroupAssignment& group, int agent, Stage stage,
                                             const Invocation& inv, const std::string& info_text,
                                             const std::string& prompt, const std::vector<ChatTurn>& context) {
  const Question& q = corpus_.question(group.question_id);
  ForecastRecord rec;
  rec.group_key = group.group_key;
  rec.scenario = group.scenario;
  rec.question_id = group.question_id;
  rec.position = group.position;
  rec.agent_index = agent;
  rec.model_id = group.members[static_cast<std::size_t>(agent)];
  rec.stage = stage;
  rec.info_level = group.scenario.info;
  rec.info_sha256 = sha256_hex(info_text);
  rec.prompt_sha256 = sha256_hex(prompt);
  rec.raw_probability = inv.response.probability;
  rec.probability = inv.response.probability / 100.0;
  rec.rationale = inv.response.rationale;
  rec.response = inv.response.raw;
  rec.outcome = q.resolved_outcome.value_or(0);
  rec.attempts = static_cast<int>(inv.attempts.size());

  const std::string cell = rec.cell();
  store_.log_attempts(cell, inv.attempts);
  if (archive_) {
    ordered_json entry;
    entry["cell"] = cell;
    entry["template_id"] = stage == Stage::Independent ? StageOnePrompt::template_id : StageTwoPrompt::template_id;
    ordered_json turns = ordered_json::array();
    for (const ChatTurn& t : context) turns.push_back({{"role", t.role}, {"content", t.content}});
    entry["context"] = turns;
    entry["prompt"] = prompt;
    entry["response"] = inv.response.raw;
    entry["info_sha256"] = rec.info_sha256;
    store_.archive(cell, entry);
  }
  return rec;
}

ForecastRecord ProtocolRunner::independent(const GroupAssignment& group, int agent) {
  const Question& q = corpus_.question(group.question_id);
  const std::string info = information_for(corpus_, q.id, group.scenario.info, agent);
  const StageOnePrompt prompt = render_stage1(q, info, q.as_of_date);
  InvocationRequest request;
  request.stage = Stage::Independent;
  request.prompt = prompt.rendered;
  request.question = &q;
  request.sim = SimInput{agent, units_seen(group.scenario.info), {}};
  const Invocation inv = invoker_.invoke(backend_for(group.members[static_cast<std::size_t>(agent)]), request);
  return finish_record(group, agent, Stage::Independent, inv, info, prompt.rendered, {});
}

ForecastRecord ProtocolRunner::deliberative(const GroupAssignment& group, int agent,
                                            std::span<const ForecastRecord, 3> stage1) {
  const Question& q = corpus_.question(group.question_id);
  const std::string info = information_for(corpus_, q.id, group.scenario.info, agent);
  const ForecastRecord& own = stage1[static_cast<std::size_t>(agent)];
  const ForecastRecord& peer_a = stage1[static_cast<std::size_t>((agent + 1) % 3)];
  const ForecastRecord& peer_b = stage1[static_cast<std::size_t>((agent + 2) % 3)];

  const StageOnePrompt own_prompt = render_stage1(q, info, q.as_of_date);
  const StageTwoPrompt prompt = render_stage2(as_response(peer_a), as_response(peer_b));
  InvocationRequest request;
  request.stage = Stage::Deliberative;
  request.prompt = prompt.rendered;
  request.context = deliberation_context(own_prompt, as_response(own));
  request.question = &q;
  request.sim = SimInput{agent, units_seen(group.scenario.info), {peer_a.raw_probability, peer_b.raw_probability}};
  const Invocation inv = invoker_.invoke(backend_for(group.members[static_cast<std::size_t>(agent)]), request);
  return finish_record(group, agent, Stage::Deliberative, inv, info, prompt.rendered, request.context);
}

ProtocolRunner::GroupOutcome ProtocolRunner::execute(const GroupAssignment& group, bool include_stage2) {
  GroupOutcome out;
  std::array<std::optional<ForecastRecord>, 3> stage1;
  for (int agent = 0; agent < 3; ++agent) {
    const std::string cell = cell_key(group.group_key, agent, Stage::Independent);
    if (auto existing = store_.find(cell)) {
      stage1[static_cast<std::size_t>(agent)] = std::move(existing);
      continue;
    }
    try {
      stage1[static_cast<std::size_t>(agent)] = independent(group, agent);
      out.fresh.push_back(*stage1[static_cast<std::size_t>(agent)]);
    } catch (const InvokeError& e) {
      store_.log_attempts(cell, e.attempts());
      out.failures.push_back(fmt::format("{}: {}", cell, e.what()));
    }
  }
  if (!include_stage2) return out;
  for (const auto& r : stage1) {
    if (!r) return out;  // stage 2 waits for the whole independent round
  }
  const std::array<ForecastRecord, 3> round1 = {*stage1[0], *stage1[1], *stage1[2]};
  for (int agent = 0; agent < 3; ++agent) {
    const std::string cell = cell_key(group.group_key, agent, Stage::Deliberative);
    if (store_.contains(cell)) continue;
    try {
      out.fresh.push_back(deliberative(group, agent, round1));
    } catch (const InvokeError& e) {
      store_.log_attempts(cell, e.attempts());
      out.failures.push_back(fmt::format("{}: {}", cell, e.what()));
    }
  }
  return out;
}

void ProtocolRunner::commit(const std::vector<ForecastRecord>& records, const RunOptions* options,
                            std::size_t& written) {
  for (const ForecastRecord& r : records) {
    if (!store_.append(r)) continue;
    ++written;
    if (options != nullptr && options->on_commit) options->on_commit(r);
  }
}

std::vector<ForecastRecord> ProtocolRunner::run_stage1(const GroupAssignment& group) {
  GroupOutcome outcome = execute(group, false);
  std::size_t written = 0;
  commit(outcome.fresh, nullptr, written);
  std::vector<ForecastRecord> present;
  for (int agent = 0; agent < 3; ++agent) {
    if (auto r = store_.find(cell_key(group.group_key, agent, Stage::Independent))) present.push_back(*r);
  }
  return present;
}

std::vector<ForecastRecord> ProtocolRunner::run_stage2(const GroupAssignment& group,
                                                       std::span<const ForecastRecord> stage1) {
  std::array<std::optional<ForecastRecord>, 3> by_agent;
  for (const ForecastRecord& r : stage1) {
    if (r.group_key == group.group_key && r.stage == Stage::Independent && r.agent_index >= 0 &&
        r.agent_index < 3) {
      by_agent[static_cast<std::size_t>(r.agent_index)] = r;
    }
  }
  for (int agent = 0; agent < 3; ++agent) {
    if (!by_agent[static_cast<std::size_t>(agent)]) {
      throw Error("E_STAGE1_MISSING", "missing stage-1 record " + cell_key(group.group_key, agent, Stage::Independent));
    }
  }
  const std::array<ForecastRecord, 3> round1 = {*by_agent[0], *by_agent[1], *by_agent[2]};
  std::vector<ForecastRecord> fresh;
  for (int agent = 0; agent < 3; ++agent) {
    if (store_.contains(cell_key(group.group_key, agent, Stage::Deliberative))) continue;
    fresh.push_back(deliberative(group, agent, round1));
  }
  std::size_t written = 0;
  commit(fresh, nullptr, written);
  std::vector<ForecastRecord> present;
  for (int agent = 0; agent < 3; ++agent) {
    if (auto r = store_.find(cell_key(group.group_key, agent, Stage::Deliberative))) present.push_back(*r);
  }
  return present;
}

CompletionReport ProtocolRunner::run(std::span<const GroupAssignment> plan, const RunOptions& options) {
  std::vector<const GroupAssignment*> pending;
  for (const GroupAssignment& g : plan) {
    bool complete = true;
    for (Stage stage : kStages) {
      for (int agent = 0; agent < 3 && complete; ++agent) complete = store_.contains(cell_key(g.group_key, agent, stage));
    }
    if (!complete) pending.push_back(&g);
  }

  const std::size_t n = pending.size();
  std::vector<std::optional<GroupOutcome>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::mutex mutex;
  std::condition_variable ready;
  std::size_t next = 0;
  std::size_t committed = 0;  // groups handed to the store so far
  std::size_t workers_running = 0;
  bool interrupted = false;

  auto stopping = [&] { return options.stop != nullptr && options.stop->load(); };
  const std::size_t thread_count = std::max<std::size_t>(1, std::min(options.concurrency, n));
  // Workers stay within this many groups of the commit cursor, which bounds
  // memory and lets a stop request take effect promptly.
  const std::size_t window = 2 * thread_count;

  auto worker = [&] {
    for (;;) {
      std::size_t index;
      {
        std::unique_lock lock(mutex);
        while (next < n && next >= committed + window && !stopping()) {
          ready.wait_for(lock, std::chrono::milliseconds(50));
        }
        if (next >= n) break;
        if (stopping()) {
          interrupted = true;
          break;
        }
        index = next++;
      }
      std::optional<GroupOutcome> outcome;
      std::exception_ptr error;
      try {
        outcome = execute(*pending[index], true);
      } catch (...) {
        error = std::current_exception();
      }
      std::lock_guard lock(mutex);
      results[index] = outcome ? std::move(outcome) : GroupOutcome{};
      errors[index] = error;
      ready.notify_all();
    }
    std::lock_guard lock(mutex);
    --workers_running;
    ready.notify_all();
  };

  std::vector<std::thread> threads;
  workers_running = n == 0 ? 0 : thread_count;
  for (std::size_t i = 0; i < thread_count && n > 0; ++i) threads.emplace_back(worker);

  CompletionReport report;
  std::size_t written = 0;
  std::exception_ptr first_error;
  for (std::size_t k = 0; k < n; ++k) {
    GroupOutcome outcome;
    {
      std::unique_lock lock(mutex);
      ready.wait(lock, [&] { return results[k].has_value() || workers_running == 0; });
      if (!results[k]) break;  // never dispatched: run was stopped
      outcome = std::move(*results[k]);
      results[k].reset();
      if (errors[k] && !first_error) first_error = errors[k];
    }
    try {
      commit(outcome.fresh, &options, written);
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
    for (auto& f : outcome.failures) report.failures.push_back(std::move(f));
    {
      std::lock_guard lock(mutex);
      committed = k + 1;
    }
    ready.notify_all();
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  CompletionReport status = completion(plan, store_);
  status.records_written = written;
  status.failures = std::move(report.failures);
  status.interrupted = interrupted;
  return status;
}

}  // namespace delib
