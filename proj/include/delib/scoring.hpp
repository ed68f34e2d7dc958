#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "delib/protocol.hpp"

namespace delib {

inline constexpr double kDefaultEpsilon = 0.005;

/// Middle order statistic of three probabilities in [0, 1].
double median3(double a, double b, double c);

/// Cross-entropy of a binary forecast; p is clamped to [eps, 1 - eps] first.
double log_loss(double p, int outcome, double epsilon = kDefaultEpsilon);

/// Squared error (p - y)^2 on the unclamped forecast.
double brier(double p, int outcome);

struct CalibrationBin {
  double lower = 0;
  double upper = 0;
  std::size_t count = 0;
  std::optional<double> mean_predicted;      ///< empty when count == 0
  std::optional<double> observed_frequency;  ///< empty when count == 0
};

struct CalibrationCurve {
  std::string scenario;
  std::string stage;
  std::vector<CalibrationBin> bins;

  std::size_t total() const;
};

/// Equal-width bins [k/B, (k+1)/B); the last bin also takes p == 1.
std::size_t calibration_bin(double p, int bin_count);

CalibrationCurve calibration(std::span<const std::pair<double, int>> forecasts, int bin_count = 10);

/// Group-level outcome for one stage: the median of the three members'
/// probabilities, scored against the resolution.
struct GroupScore {
  Scenario scenario;
  std::string question_id;
  std::string group_key;
  std::size_t position = 0;
  ModelId group_model = ModelId::Sim;  ///< homogeneous model, Sim for diverse
  Stage stage = Stage::Independent;
  double median_p = 0;
  int outcome = 0;
  double log_loss = 0;
  double brier = 0;

  bool is_round_robin() const noexcept;
};

struct GroupScoring {
  std::vector<GroupScore> scores;          ///< groups with all six records
  std::vector<std::string> incomplete_groups;
};

/// Scores every group that has three records at both stages, in first
/// appearance order of the group in `records`.
GroupScoring score_groups(std::span<const ForecastRecord> records, double epsilon = kDefaultEpsilon);

/// scenario,question_id,group_key,stage,median_p,outcome,log_loss,brier
std::string scores_csv(std::span<const GroupScore> scores);

}  // namespace delib
