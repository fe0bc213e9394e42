#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "prmcal/budget.hpp"
#include "prmcal/simworld.hpp"

namespace prmcal {

/// How the final answer is chosen among completed trajectories. prm_score is
/// the realistic mode (argmax of the reward oracle); perfect picks a correct
/// trajectory whenever one exists and is used by the theoretical checks.
enum class Selector { prm_score, perfect };

struct StrategyConfig {
  int trials = 100;
  std::uint64_t seed = 0;
  Selector selector = Selector::prm_score;
  int threads = 1;
};

struct BeamConfig {
  int beam_width = 8;  // K
  int expansions = 8;  // M
  int stride = 5;      // evaluate/prune every `stride` steps
};

struct QuestionStat {
  std::string question_id;
  int level = 3;
  double accuracy = 0.0;
  double mean_budget = 0.0;
};

struct StratumStat {
  int level = 3;
  int n_questions = 0;
  double accuracy = 0.0;
  double mean_budget = 0.0;
};

struct RunReport {
  std::string strategy;
  int trials = 0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;     // questions weighted equally
  double mean_budget = 0.0;  // trajectories for BoN, step-generations for BS
  double baseline_budget = 1.0;
  double budget_ratio = 1.0;
  long generations_audit = 0;  // world-call count, cross-checks mean_budget
  std::vector<QuestionStat> per_question;
  std::vector<StratumStat> by_level;
};

/// Fixed best-of-N: draw N trajectories, return the top-scored one.
/// N = 1 with many trials estimates Pass@1.
RunReport run_bon_fixed(const World& world, const PrmOracle& rank_oracle, int n,
                        const StrategyConfig& config);

/// Instance-adaptive best-of-N: the budget oracle scores the empty prefix,
/// n_ias converts that into a per-question sample count, ranking stays on
/// the rank oracle. budget_ratio is reported against n_max.
RunReport run_bon_ias(const World& world, const PrmOracle& budget_oracle,
                      const PrmOracle& rank_oracle, const BudgetParams& params,
                      const StrategyConfig& config);

/// Fixed beam search: every `stride` steps each survivor spawns M one-step
/// extensions and the pool is pruned to the top K by oracle score; other
/// steps extend each survivor once. Budget counts step-generations.
RunReport run_beam_fixed(const World& world, const PrmOracle& rank_oracle,
                         const BeamConfig& beam, const StrategyConfig& config);

/// Beam search with adaptive expansions: at each evaluation step M_t comes
/// from m_ias of the most pessimistic calibrated score among survivors.
RunReport run_beam_ias_of_m(const World& world, const PrmOracle& budget_oracle,
                            const PrmOracle& rank_oracle, const BeamConfig& beam,
                            const BudgetParams& params, const StrategyConfig& config);

/// Beam search with adaptive width: candidates are ranked by calibrated
/// score and k_ias picks how many to retain.
RunReport run_beam_ias_of_k(const World& world, const PrmOracle& budget_oracle,
                            const PrmOracle& rank_oracle, const BeamConfig& beam,
                            const BudgetParams& params, const StrategyConfig& config);

/// Step-generations of one fixed beam search run, the baseline for beam
/// budget ratios.
long beam_fixed_generations(const BeamConfig& beam, int total_steps);

std::string run_report_to_json(const RunReport& report);
void write_question_csv(const RunReport& report, std::ostream& out);
void write_level_csv(const RunReport& report, std::ostream& out);

}  // namespace prmcal
