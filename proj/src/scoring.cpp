#include "delib/scoring.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "delib/error.hpp"

namespace delib {

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error("E_RANGE", fmt::format("probability {} outside [0, 1]", p));
}

void check_outcome(int y) {
  if (y != 0 && y != 1) throw Error("E_RANGE", "outcome must be 0 or 1");
}

}  // namespace

double median3(double a, double b, double c) {
  check_probability(a);
  check_probability(b);
  check_probability(c);
  return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

double log_loss(double p, int outcome, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw Error("E_RANGE", "epsilon must lie in (0, 0.5)");
  check_probability(p);
  check_outcome(outcome);
  const double q = std::clamp(p, epsilon, 1.0 - epsilon);
  return outcome == 1 ? -std::log(q) : -std::log1p(-q);
}

double brier(double p, int outcome) {
  check_probability(p);
  check_outcome(outcome);
  const double d = p - outcome;
  return d * d;
}

std::size_t CalibrationCurve::total() const {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

std::size_t calibration_bin(double p, int bin_count) {
  check_probability(p);
  const auto bins = static_cast<std::size_t>(bin_count);
  auto lower = [&](std::size_t k) { return static_cast<double>(k) / bin_count; };
  std::size_t k = std::min(bins - 1, static_cast<std::size_t>(p * bin_count));
  // Settle floating-point disagreements between p*B and the edges k/B.
  while (k > 0 && p < lower(k)) --k;
  while (k + 1 < bins && p >= lower(k + 1)) ++k;
  return k;
}

CalibrationCurve calibration(std::span<const std::pair<double, int>> forecasts, int bin_count) {
  if (bin_count < 2) throw Error("E_RANGE", "bin_count must be at least 2");
  if (forecasts.empty()) throw Error("E_EMPTY", "calibration needs at least one forecast");
  const auto bins = static_cast<std::size_t>(bin_count);
  std::vector<double> sum_p(bins, 0.0), sum_y(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (const auto& [p, y] : forecasts) {
    check_outcome(y);
    const std::size_t k = calibration_bin(p, bin_count);
    sum_p[k] += p;
    sum_y[k] += y;
    ++count[k];
  }
  CalibrationCurve curve;
  curve.bins.reserve(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    CalibrationBin b;
    b.lower = static_cast<double>(k) / bin_count;
    b.upper = static_cast<double>(k + 1) / bin_count;
    b.count = count[k];
    if (count[k] > 0) {
      b.mean_predicted = sum_p[k] / static_cast<double>(count[k]);
      b.observed_frequency = sum_y[k] / static_cast<double>(count[k]);
    }
    curve.bins.push_back(b);
  }
  return curve;
}

bool GroupScore::is_round_robin() const noexcept {
  return scenario.diversity == Diversity::Homogeneous && position > 0 &&
         group_model == round_robin_model(position);
}

GroupScoring score_groups(std::span<const ForecastRecord> records, double epsilon) {
  struct Cells {
    const ForecastRecord* first = nullptr;
    std::array<std::array<const ForecastRecord*, 3>, 2> by_stage{};
  };
  std::vector<std::string> order;
  std::map<std::string, Cells> groups;
  for (const ForecastRecord& r : records) {
    auto [it, inserted] = groups.try_emplace(r.group_key);
    if (inserted) {
      order.push_back(r.group_key);
      it->second.first = &r;
    }
    it->second.by_stage[r.stage == Stage::Independent ? 0 : 1][static_cast<std::size_t>(r.agent_index)] = &r;
  }

  GroupScoring out;
  for (const std::string& key : order) {
    const Cells& cells = groups.at(key);
    bool complete = true;
    for (const auto& stage : cells.by_stage) {
      for (const ForecastRecord* r : stage) complete &= r != nullptr;
    }
    if (!complete) {
      out.incomplete_groups.push_back(key);
      continue;
    }
    const ForecastRecord& head = *cells.first;
    for (int s = 0; s < 2; ++s) {
      const auto& m = cells.by_stage[static_cast<std::size_t>(s)];
      GroupScore g;
      g.scenario = head.scenario;
      g.question_id = head.question_id;
      g.group_key = key;
      g.position = head.position;
      g.group_model = head.scenario.diversity == Diversity::Homogeneous ? head.model_id : ModelId::Sim;
      g.stage = s == 0 ? Stage::Independent : Stage::Deliberative;
      g.median_p = median3(m[0]->probability, m[1]->probability, m[2]->probability);
      g.outcome = head.outcome;
      g.log_loss = log_loss(g.median_p, g.outcome, epsilon);
      g.brier = brier(g.median_p, g.outcome);
      out.scores.push_back(g);
    }
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string scores_csv(std::span<const GroupScore> scores) {
  std::string out = "scenario,question_id,group_key,stage,median_p,outcome,log_loss,brier\n";
  for (const GroupScore& g : scores) {
    out += fmt::format("{},{},{},{},{:.17g},{},{:.17g},{:.17g}\n", g.scenario.slug(), csv_field(g.question_id),
                       csv_field(g.group_key), to_string(g.stage), g.median_p, g.outcome, g.log_loss, g.brier);
  }
  return out;
}

}  // namespace delib
