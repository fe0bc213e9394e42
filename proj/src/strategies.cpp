#include "prmcal/strategies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <thread>

#include <json.hpp>

#include "prmcal/error.hpp"

namespace prmcal {

namespace {

struct TrialOutcome {
  bool success = false;
  long generations = 0;
};

// Per-question trial loop shared by every strategy. The trial body gets a
// dedicated random stream so parallel schedules cannot change results.
template <typename TrialFn>
RunReport run_over_questions(const World& world, const StrategyConfig& config,
                             std::string strategy, double baseline_budget, TrialFn&& trial) {
  if (config.trials < 1) fail(Errc::invalid_config, "trials must be >= 1");
  const int nq = world.n_questions();
  RunReport report;
  report.strategy = std::move(strategy);
  report.trials = config.trials;
  report.seed = config.seed;
  report.baseline_budget = baseline_budget;
  report.per_question.resize(static_cast<std::size_t>(nq));

  std::atomic<long> audit{0};
  auto run_question = [&](int qi) {
    const Rng q_stream = Rng(config.seed).split(static_cast<std::uint64_t>(qi));
    long successes = 0;
    long generations = 0;
    for (int t = 0; t < config.trials; ++t) {
      Rng rng = q_stream.split(static_cast<std::uint64_t>(t));
      const TrialOutcome outcome = trial(qi, rng);
      successes += outcome.success ? 1 : 0;
      generations += outcome.generations;
    }
    QuestionStat& qs = report.per_question[static_cast<std::size_t>(qi)];
    qs.question_id = world.question(qi).id;
    qs.level = world.question(qi).level;
    qs.accuracy = static_cast<double>(successes) / config.trials;
    qs.mean_budget = static_cast<double>(generations) / config.trials;
    audit += generations;
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1 || nq == 1) {
    for (int qi = 0; qi < nq; ++qi) run_question(qi);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (int qi = next.fetch_add(1); qi < nq; qi = next.fetch_add(1)) run_question(qi);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::map<int, StratumStat> strata;
  double acc_sum = 0.0;
  double budget_sum = 0.0;
  for (const QuestionStat& qs : report.per_question) {
    acc_sum += qs.accuracy;
    budget_sum += qs.mean_budget;
    StratumStat& s = strata[qs.level];
    s.level = qs.level;
    ++s.n_questions;
    s.accuracy += qs.accuracy;
    s.mean_budget += qs.mean_budget;
  }
  report.accuracy = acc_sum / nq;
  report.mean_budget = budget_sum / nq;
  report.budget_ratio = report.mean_budget / baseline_budget;
  report.generations_audit = audit.load();
  for (auto& [level, s] : strata) {
    s.accuracy /= s.n_questions;
    s.mean_budget /= s.n_questions;
    report.by_level.push_back(s);
  }
  return report;
}

double final_score(const World& world, const PrmOracle& oracle, Selector selector,
                   const World::RolloutResult& traj, Rng& rng) {
  if (selector == Selector::perfect) return traj.correct ? 1.0 : 0.0;
  return oracle_score(world, oracle, traj.final_state, rng);
}

TrialOutcome bon_trial(const World& world, const PrmOracle& rank_oracle, Selector selector,
                       int qi, int n, Rng& rng) {
  TrialOutcome outcome;
  double best_score = -1.0;
  bool best_correct = false;
  for (int i = 0; i < n; ++i) {
    const auto traj = world.rollout(world.initial_state(qi), rng);
    const double score = final_score(world, rank_oracle, selector, traj, rng);
    if (score > best_score) {  // ties keep the lowest trajectory index
      best_score = score;
      best_correct = traj.correct;
    }
  }
  outcome.success = best_correct;
  outcome.generations = n;
  return outcome;
}

// Shared beam-search loop. `plan_expansions` picks M_t at evaluation steps,
// `plan_width` prunes the scored candidates.
template <typename ExpandFn, typename WidthFn>
TrialOutcome beam_trial(const World& world, const PrmOracle& rank_oracle, Selector selector,
                        const BeamConfig& beam, int qi, Rng& rng, ExpandFn&& plan_expansions,
                        WidthFn&& plan_width) {
  TrialOutcome outcome;
  const int total_steps = world.config().steps;
  std::vector<PrefixState> beams(static_cast<std::size_t>(beam.beam_width),
                                 world.initial_state(qi));
  for (int t = 1; t <= total_steps; ++t) {
    const bool evaluate = beam.stride > 0 && t % beam.stride == 0;
    if (!evaluate) {
      for (auto& state : beams) state = world.step(state, rng);
      outcome.generations += static_cast<long>(beams.size());
      continue;
    }
    const int m_t = plan_expansions(beams, rng);
    std::vector<PrefixState> candidates;
    candidates.reserve(beams.size() * static_cast<std::size_t>(m_t));
    for (const auto& state : beams)
      for (int j = 0; j < m_t; ++j) candidates.push_back(world.step(state, rng));
    outcome.generations += static_cast<long>(candidates.size());
    beams = plan_width(std::move(candidates), m_t, rng);
  }

  // All beams are complete; resolve correctness, then select the answer.
  double best_score = -1.0;
  bool best_correct = false;
  for (const auto& state : beams) {
    World::RolloutResult traj;
    traj.final_state = state;
    traj.correct = world.resolve(state, rng);
    const double score = final_score(world, rank_oracle, selector, traj, rng);
    if (score > best_score) {
      best_score = score;
      best_correct = traj.correct;
    }
  }
  outcome.success = best_correct;
  return outcome;
}

// Prune candidates to the top `width` by score, ties keeping earlier
// candidates. Scores are paired with indices to keep the sort stable.
std::vector<PrefixState> prune_top(std::vector<PrefixState> candidates,
                                   const std::vector<double>& scores, int width) {
  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(width),
                                                 candidates.size());
  std::vector<PrefixState> kept;
  kept.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) kept.push_back(candidates[order[i]]);
  return kept;
}

void check_beam(const BeamConfig& beam) {
  if (beam.beam_width < 1 || beam.expansions < 1 || beam.stride < 1)
    fail(Errc::invalid_beam_params, "beam width, expansions and stride must be >= 1");
}

}  // namespace

RunReport run_bon_fixed(const World& world, const PrmOracle& rank_oracle, int n,
                        const StrategyConfig& config) {
  if (n < 1) fail(Errc::invalid_n, "N must be >= 1, got " + std::to_string(n));
  return run_over_questions(
      world, config, "bon_fixed_n" + std::to_string(n), static_cast<double>(n),
      [&](int qi, Rng& rng) { return bon_trial(world, rank_oracle, config.selector, qi, n, rng); });
}

RunReport run_bon_ias(const World& world, const PrmOracle& budget_oracle,
                      const PrmOracle& rank_oracle, const BudgetParams& params,
                      const StrategyConfig& config) {
  return run_over_questions(
      world, config, "bon_ias", static_cast<double>(params.n_max), [&](int qi, Rng& rng) {
        // Budget from the question itself: the empty prefix at step 0.
        const double p_hat = oracle_score(world, budget_oracle, world.initial_state(qi), rng);
        const int n = n_ias(p_hat, params).value;
        return bon_trial(world, rank_oracle, config.selector, qi, n, rng);
      });
}

long beam_fixed_generations(const BeamConfig& beam, int total_steps) {
  long total = 0;
  for (int t = 1; t <= total_steps; ++t) {
    const bool evaluate = beam.stride > 0 && t % beam.stride == 0;
    total += evaluate ? static_cast<long>(beam.beam_width) * beam.expansions : beam.beam_width;
  }
  return total;
}

RunReport run_beam_fixed(const World& world, const PrmOracle& rank_oracle,
                         const BeamConfig& beam, const StrategyConfig& config) {
  check_beam(beam);
  const auto baseline =
      static_cast<double>(beam_fixed_generations(beam, world.config().steps));
  return run_over_questions(
      world, config, "beam_fixed", std::max(baseline, 1.0), [&](int qi, Rng& rng) {
        return beam_trial(
            world, rank_oracle, config.selector, beam, qi, rng,
            [&](const std::vector<PrefixState>&, Rng&) { return beam.expansions; },
            [&](std::vector<PrefixState> candidates, int, Rng& prune_rng) {
              std::vector<double> scores(candidates.size());
              for (std::size_t i = 0; i < candidates.size(); ++i)
                scores[i] = oracle_score(world, rank_oracle, candidates[i], prune_rng);
              return prune_top(std::move(candidates), scores, beam.beam_width);
            });
      });
}

RunReport run_beam_ias_of_m(const World& world, const PrmOracle& budget_oracle,
                            const PrmOracle& rank_oracle, const BeamConfig& beam,
                            const BudgetParams& params, const StrategyConfig& config) {
  check_beam(beam);
  const auto baseline =
      static_cast<double>(beam_fixed_generations(beam, world.config().steps));
  return run_over_questions(
      world, config, "beam_ias_of_m", std::max(baseline, 1.0), [&](int qi, Rng& rng) {
        return beam_trial(
            world, rank_oracle, config.selector, beam, qi, rng,
            [&](const std::vector<PrefixState>& beams, Rng& plan_rng) {
              // Most pessimistic calibrated estimate among survivors.
              double r_min = 1.0;
              for (const auto& state : beams)
                r_min = std::min(r_min, oracle_score(world, budget_oracle, state, plan_rng));
              return m_ias(r_min, beam.beam_width, params).value;
            },
            [&](std::vector<PrefixState> candidates, int, Rng& prune_rng) {
              std::vector<double> scores(candidates.size());
              for (std::size_t i = 0; i < candidates.size(); ++i)
                scores[i] = oracle_score(world, rank_oracle, candidates[i], prune_rng);
              return prune_top(std::move(candidates), scores, beam.beam_width);
            });
      });
}

RunReport run_beam_ias_of_k(const World& world, const PrmOracle& budget_oracle,
                            const PrmOracle& rank_oracle, const BeamConfig& beam,
                            const BudgetParams& params, const StrategyConfig& config) {
  check_beam(beam);
  const auto baseline =
      static_cast<double>(beam_fixed_generations(beam, world.config().steps));
  return run_over_questions(
      world, config, "beam_ias_of_k", std::max(baseline, 1.0), [&](int qi, Rng& rng) {
        return beam_trial(
            world, rank_oracle, config.selector, beam, qi, rng,
            [&](const std::vector<PrefixState>&, Rng&) { return beam.expansions; },
            [&](std::vector<PrefixState> candidates, int m_t, Rng& prune_rng) {
              // Candidates are ranked by calibrated score; k_ias picks how
              // many of the top-ranked prefixes survive.
              std::vector<double> scores(candidates.size());
              for (std::size_t i = 0; i < candidates.size(); ++i)
                scores[i] = oracle_score(world, budget_oracle, candidates[i], prune_rng);
              std::vector<double> sorted = scores;
              std::sort(sorted.begin(), sorted.end(), std::greater<>());
              const int k_t = k_ias(sorted, m_t, params).value;
              return prune_top(std::move(candidates), scores, k_t);
            });
      });
}

std::string run_report_to_json(const RunReport& report) {
  nlohmann::json j;
  j["strategy"] = report.strategy;
  j["trials"] = report.trials;
  j["seed"] = report.seed;
  j["accuracy"] = report.accuracy;
  j["mean_budget"] = report.mean_budget;
  j["baseline_budget"] = report.baseline_budget;
  j["budget_ratio"] = report.budget_ratio;
  j["generations_audit"] = report.generations_audit;
  nlohmann::json by_level = nlohmann::json::array();
  for (const auto& s : report.by_level) {
    by_level.push_back({{"level", s.level},
                        {"n_questions", s.n_questions},
                        {"accuracy", s.accuracy},
                        {"mean_budget", s.mean_budget}});
  }
  j["by_level"] = by_level;
  return j.dump(2);
}

void write_question_csv(const RunReport& report, std::ostream& out) {
  out << "question_id,level,accuracy,mean_budget\n";
  char buf[64];
  for (const auto& q : report.per_question) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", q.accuracy, q.mean_budget);
    out << q.question_id << ',' << q.level << ',' << buf << '\n';
  }
}

void write_level_csv(const RunReport& report, std::ostream& out) {
  out << "level,n_questions,accuracy,mean_budget\n";
  char buf[64];
  for (const auto& s : report.by_level) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", s.accuracy, s.mean_budget);
    out << s.level << ',' << s.n_questions << ',' << buf << '\n';
  }
}

}  // namespace prmcal
