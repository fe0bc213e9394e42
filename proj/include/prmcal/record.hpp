#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace prmcal {

/// One (question, trajectory, prefix-step) row of calibration data: the raw
/// reward-model output for the prefix plus the Monte Carlo estimate of the
/// true success probability from that prefix.
struct CalibrationRecord {
  std::string question_id;
  int trajectory_index = 1;  // i >= 1
  int step_index = 0;        // t >= 0; 0 is the empty prefix (question only)
  int total_steps = 0;       // T >= t
  std::optional<double> raw_score;  // in [0,1]
  std::optional<double> raw_logit;  // score = sigmoid(logit) when both present
  int success_count = 0;            // Z in [0, mc_samples]
  int mc_samples = 1;               // N_MC >= 1
  std::optional<int> difficulty_level;  // 1..5
  std::map<std::string, double> features;

  /// Empirical success probability Z / N_MC.
  double success_rate() const {
    return static_cast<double>(success_count) / static_cast<double>(mc_samples);
  }

  /// Normalized step position t / T (0 when the trajectory has no steps).
  double step_position() const {
    return total_steps > 0 ? static_cast<double>(step_index) / static_cast<double>(total_steps)
                           : 0.0;
  }

  bool operator==(const CalibrationRecord&) const = default;
};

/// Validates a single record's invariants; throws Error on violation.
/// `row` is used in messages when the record came from a file (-1 otherwise).
void validate_record(const CalibrationRecord& rec, long row = -1);

enum class Grouping { by_record, by_question };

struct DatasetSplit {
  std::vector<CalibrationRecord> fit_set;
  std::vector<CalibrationRecord> conformal_set;
  std::vector<CalibrationRecord> test_set;
  std::uint64_t split_seed = 0;
  Grouping grouping = Grouping::by_question;
};

struct SplitFractions {
  double fit = 0.5;
  double conformal = 0.25;
  double test = 0.25;
};

/// Randomly partitions records into fit/conformal/test sets. Deterministic
/// given the seed. With Grouping::by_question all records sharing a
/// question_id land in the same set.
DatasetSplit split_dataset(const std::vector<CalibrationRecord>& records,
                           const SplitFractions& fractions, std::uint64_t seed,
                           Grouping grouping = Grouping::by_question);

}  // namespace prmcal
