#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prmcal/calibrator_io.hpp"
#include "prmcal/record.hpp"
#include "prmcal/rng.hpp"

namespace prmcal {

enum class DifficultyDistribution { uniform_grid_5_levels, beta };
enum class StepModel { absorbing_failure, drifting_logit };

struct WorldConfig {
  int n_questions = 500;
  DifficultyDistribution difficulty = DifficultyDistribution::uniform_grid_5_levels;
  double beta_a = 2.0;
  double beta_b = 2.0;
  int steps = 20;  // T, steps per trajectory
  StepModel step_model = StepModel::absorbing_failure;
  // absorbing_failure: probability that a trajectory surviving all T steps is
  // correct; the per-step survival rate is derived per question so that the
  // question-level success probability equals its p0.
  double final_success = 0.92;
  // drifting_logit: the success logit takes +/- drift_step each step.
  double drift_step = 0.35;
  double prm_bias = 0.0;   // b > 0 makes the reward oracle overestimate
  double prm_noise = 0.0;  // logit-scale gaussian noise
  std::uint64_t seed = 0;
};

struct Question {
  std::string id;
  int level = 3;            // 1 (easy) .. 5 (hard)
  double p0 = 0.5;          // success probability of one full trajectory
  double survive_prob = 1;  // absorbing model, per step
  double final_success = 1; // absorbing model
  double logit0 = 0.0;      // drifting model start
};

struct PrefixState {
  int question = 0;
  int step = 0;        // t; 0 is the empty prefix
  bool alive = true;   // absorbing model
  double logit = 0.0;  // drifting model
};

/// Generative world: questions with latent difficulty, trajectories as
/// step-wise stochastic processes with an exact closed-form conditional
/// success probability for every prefix. Immutable after construction; all
/// randomness flows through caller-provided streams.
class World {
 public:
  explicit World(const WorldConfig& config);

  const WorldConfig& config() const { return config_; }
  int n_questions() const { return static_cast<int>(questions_.size()); }
  const Question& question(int i) const { return questions_[static_cast<std::size_t>(i)]; }
  const std::vector<Question>& questions() const { return questions_; }

  PrefixState initial_state(int question_index) const;

  /// Advances the prefix by one reasoning step.
  PrefixState step(const PrefixState& state, Rng& rng) const;

  /// Exact conditional success probability from this prefix (the world's
  /// ground truth; strategies only see it through a reward oracle).
  double true_success_prob(const PrefixState& state) const;

  /// Draws the correctness of a trajectory that has completed all T steps.
  bool resolve(const PrefixState& final_state, Rng& rng) const;

  struct RolloutResult {
    PrefixState final_state;
    bool correct = false;
  };

  /// Completes the prefix to a full trajectory; P(correct) equals
  /// true_success_prob(prefix) exactly.
  RolloutResult rollout(const PrefixState& prefix, Rng& rng) const;

  Rng stream(std::uint64_t tag) const { return Rng(config_.seed).split(tag); }

 private:
  WorldConfig config_;
  std::vector<Question> questions_;
};

World build_world(const WorldConfig& config);

/// Reward oracle over prefixes. The raw score is
///   clip(sigmoid(logit(p(t)) + bias + noise * eta), 0, 1)
/// with eta standard normal; bias = noise = 0 reproduces p(t) exactly.
/// When `route` is set the raw output is passed through the calibrator
/// (optionally at a fixed quantile level) before use.
struct PrmOracle {
  double bias = 0.0;
  double noise = 0.0;
  std::shared_ptr<const Calibrator> route;
  std::optional<double> level;

  static PrmOracle raw_from_world(const World& world) {
    return PrmOracle{world.config().prm_bias, world.config().prm_noise, nullptr, std::nullopt};
  }
};

/// The raw reward logit for a prefix (before any calibration routing).
double oracle_raw_logit(const World& world, const PrmOracle& oracle, const PrefixState& state,
                        Rng& rng);

/// Builds the record a calibrator consumes for this prefix evaluation.
CalibrationRecord oracle_record(const World& world, const PrefixState& state, double raw_logit);

/// Oracle score for a prefix, routed through the calibrator when configured.
double oracle_score(const World& world, const PrmOracle& oracle, const PrefixState& state,
                    Rng& rng);

/// Generates a synthetic calibration dataset: n_val trajectories per
/// question, and for every prefix of each trajectory an n_mc-rollout Monte
/// Carlo estimate of the success probability plus the raw oracle score.
std::vector<CalibrationRecord> generate_calibration_data(const World& world, int n_val = 8,
                                                         int n_mc = 8);

}  // namespace prmcal
