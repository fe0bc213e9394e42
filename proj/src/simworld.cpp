#include "prmcal/simworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "prmcal/error.hpp"
#include "prmcal/mathutil.hpp"

namespace prmcal {

namespace {

constexpr double kGridP0[5] = {0.9, 0.7, 0.5, 0.3, 0.1};
constexpr double kProbClamp = 1e-9;

int level_of_p0(double p0) {
  if (p0 >= 0.8) return 1;
  if (p0 >= 0.6) return 2;
  if (p0 >= 0.4) return 3;
  if (p0 >= 0.2) return 4;
  return 5;
}

// Gamma(shape >= 0) via Marsaglia-Tsang, with the u^(1/a) boost for a < 1.
double gamma_draw(double shape, Rng& rng) {
  if (shape < 1.0) {
    const double u = std::max(rng.uniform01(), 1e-300);
    return gamma_draw(shape + 1.0, rng) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double beta_draw(double a, double b, Rng& rng) {
  const double x = gamma_draw(a, rng);
  const double y = gamma_draw(b, rng);
  return x / (x + y);
}

// Success probability of the drifting model after n remaining +/- d steps
// from logit l: a binomial average of the terminal sigmoid.
double drift_success(double l, double d, int n) {
  if (n <= 0) return sigmoid(l);
  std::vector<double> w(static_cast<std::size_t>(n) + 1);
  w[0] = std::pow(0.5, n);
  for (int k = 0; k < n; ++k)
    w[static_cast<std::size_t>(k) + 1] =
        w[static_cast<std::size_t>(k)] * static_cast<double>(n - k) / static_cast<double>(k + 1);
  double p = 0.0;
  for (int k = 0; k <= n; ++k)
    p += w[static_cast<std::size_t>(k)] * sigmoid(l + (2.0 * k - n) * d);
  return p;
}

double solve_drift_logit0(double target_p0, double d, int steps) {
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (drift_success(mid, d, steps) < target_p0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

World::World(const WorldConfig& config) : config_(config) {
  if (config.n_questions < 1) fail(Errc::invalid_config, "n_questions must be >= 1");
  if (config.steps < 0) fail(Errc::invalid_config, "steps must be >= 0");
  if (!(config.final_success > 0.0 && config.final_success <= 1.0))
    fail(Errc::invalid_config, "final_success must lie in (0,1]");
  if (config.drift_step < 0.0) fail(Errc::invalid_config, "drift_step must be >= 0");
  if (config.prm_noise < 0.0) fail(Errc::invalid_config, "prm_noise must be >= 0");
  if (config.difficulty == DifficultyDistribution::beta &&
      (config.beta_a <= 0.0 || config.beta_b <= 0.0))
    fail(Errc::invalid_config, "beta parameters must be positive");

  Rng rng = Rng(config.seed).split(0x5EED);
  questions_.resize(static_cast<std::size_t>(config.n_questions));
  for (int i = 0; i < config.n_questions; ++i) {
    Question& q = questions_[static_cast<std::size_t>(i)];
    char buf[16];
    std::snprintf(buf, sizeof(buf), "q%05d", i);
    q.id = buf;
    if (config.difficulty == DifficultyDistribution::uniform_grid_5_levels) {
      q.level = 1 + static_cast<int>((static_cast<long>(i) * 5) / config.n_questions);
      q.p0 = kGridP0[q.level - 1];
    } else {
      q.p0 = std::clamp(beta_draw(config.beta_a, config.beta_b, rng), 1e-4, 1.0 - 1e-4);
      q.level = level_of_p0(q.p0);
    }
    if (config.step_model == StepModel::absorbing_failure) {
      q.final_success = std::max(config.final_success, q.p0);
      q.survive_prob =
          config.steps > 0
              ? std::pow(q.p0 / q.final_success, 1.0 / static_cast<double>(config.steps))
              : 1.0;
    } else {
      q.logit0 = solve_drift_logit0(q.p0, config.drift_step, config.steps);
    }
  }
}

World build_world(const WorldConfig& config) { return World(config); }

PrefixState World::initial_state(int question_index) const {
  PrefixState s;
  s.question = question_index;
  s.step = 0;
  s.alive = true;
  s.logit = questions_[static_cast<std::size_t>(question_index)].logit0;
  return s;
}

PrefixState World::step(const PrefixState& state, Rng& rng) const {
  PrefixState next = state;
  next.step = state.step + 1;
  if (config_.step_model == StepModel::absorbing_failure) {
    const Question& q = questions_[static_cast<std::size_t>(state.question)];
    if (state.alive) next.alive = rng.uniform01() < q.survive_prob;
  } else {
    next.logit = state.logit + (rng.uniform01() < 0.5 ? -config_.drift_step : config_.drift_step);
  }
  return next;
}

double World::true_success_prob(const PrefixState& state) const {
  const Question& q = questions_[static_cast<std::size_t>(state.question)];
  const int remaining = config_.steps - state.step;
  if (config_.step_model == StepModel::absorbing_failure) {
    if (!state.alive) return 0.0;
    return std::pow(q.survive_prob, static_cast<double>(remaining)) * q.final_success;
  }
  return drift_success(state.logit, config_.drift_step, remaining);
}

bool World::resolve(const PrefixState& final_state, Rng& rng) const {
  return rng.uniform01() < true_success_prob(final_state);
}

World::RolloutResult World::rollout(const PrefixState& prefix, Rng& rng) const {
  PrefixState state = prefix;
  while (state.step < config_.steps) state = step(state, rng);
  RolloutResult result;
  result.correct = resolve(state, rng);
  result.final_state = state;
  return result;
}

double oracle_raw_logit(const World& world, const PrmOracle& oracle, const PrefixState& state,
                        Rng& rng) {
  const double p = world.true_success_prob(state);
  double z = logit(p, kProbClamp) + oracle.bias;
  if (oracle.noise > 0.0) z += oracle.noise * rng.normal();
  return z;
}

CalibrationRecord oracle_record(const World& world, const PrefixState& state,
                                double raw_logit) {
  CalibrationRecord rec;
  rec.question_id = world.question(state.question).id;
  rec.trajectory_index = 1;
  rec.step_index = state.step;
  rec.total_steps = world.config().steps;
  rec.raw_logit = raw_logit;
  rec.raw_score = sigmoid(raw_logit);
  rec.success_count = 0;
  rec.mc_samples = 1;
  rec.difficulty_level = world.question(state.question).level;
  return rec;
}

double oracle_score(const World& world, const PrmOracle& oracle, const PrefixState& state,
                    Rng& rng) {
  const double z = oracle_raw_logit(world, oracle, state, rng);
  if (!oracle.route) return clip01(sigmoid(z));
  return clip01(apply_calibrator(*oracle.route, oracle_record(world, state, z), oracle.level));
}

std::vector<CalibrationRecord> generate_calibration_data(const World& world, int n_val,
                                                         int n_mc) {
  if (n_val < 1 || n_mc < 1) fail(Errc::invalid_config, "n_val and n_mc must be >= 1");
  const int T = world.config().steps;
  const PrmOracle oracle = PrmOracle::raw_from_world(world);

  std::vector<CalibrationRecord> records;
  records.reserve(static_cast<std::size_t>(world.n_questions()) *
                  static_cast<std::size_t>(n_val) * static_cast<std::size_t>(T + 1));
  for (int qi = 0; qi < world.n_questions(); ++qi) {
    const Question& q = world.question(qi);
    for (int traj = 0; traj < n_val; ++traj) {
      Rng rng = world.stream(0xDA7A).split(
          static_cast<std::uint64_t>(qi) * static_cast<std::uint64_t>(n_val) +
          static_cast<std::uint64_t>(traj));
      // Stage 1: one trajectory; stage 2/3: per-prefix Monte Carlo rollouts.
      std::vector<PrefixState> prefixes;
      prefixes.reserve(static_cast<std::size_t>(T) + 1);
      PrefixState state = world.initial_state(qi);
      prefixes.push_back(state);
      for (int t = 0; t < T; ++t) {
        state = world.step(state, rng);
        prefixes.push_back(state);
      }
      for (int t = 0; t <= T; ++t) {
        const PrefixState& prefix = prefixes[static_cast<std::size_t>(t)];
        int correct = 0;
        for (int j = 0; j < n_mc; ++j)
          if (world.rollout(prefix, rng).correct) ++correct;
        const double z = oracle_raw_logit(world, oracle, prefix, rng);
        CalibrationRecord rec = oracle_record(world, prefix, z);
        rec.trajectory_index = traj + 1;
        rec.success_count = correct;
        rec.mc_samples = n_mc;
        rec.difficulty_level = q.level;
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

}  // namespace prmcal
