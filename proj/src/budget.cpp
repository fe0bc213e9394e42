#include "prmcal/budget.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prmcal/error.hpp"

namespace prmcal {

namespace {

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0))
    fail(Errc::invalid_probability, std::string(what) + " outside [0,1]: " + std::to_string(p));
}

void check_confidence(double c) {
  if (!(c > 0.0 && c < 1.0))
    fail(Errc::invalid_config, "target confidence outside (0,1): " + std::to_string(c));
}

double clamp_probability(double p, double eps) { return std::clamp(p, eps, 1.0 - eps); }

}  // namespace

double n_ias_real(double p, double confidence) {
  return std::log1p(-confidence) / std::log1p(-p);
}

long n_ias_ceil(double p, double confidence) {
  const double raw = n_ias_real(p, confidence);
  auto n = static_cast<long>(std::ceil(raw - 1e-9));
  if (n < 1) n = 1;
  // The defining inequality is (1-p)^n <= 1-C; nudge against fp noise in the
  // log ratio so the result always matches the brute-force minimum.
  const double fail_target = 1.0 - confidence;
  while (n > 1 && std::pow(1.0 - p, static_cast<double>(n - 1)) <= fail_target) --n;
  while (std::pow(1.0 - p, static_cast<double>(n)) > fail_target &&
         static_cast<double>(n) < raw + 2.0)
    ++n;
  return n;
}

BudgetPlan n_ias(double p, const BudgetParams& params) {
  check_probability(p, "p");
  check_confidence(params.target_confidence);
  if (params.n_max < 1) fail(Errc::invalid_n, "n_max must be >= 1");

  const double p_cl = clamp_probability(p, params.epsilon);
  BudgetPlan plan;
  plan.kind = BudgetKind::bon_n;
  plan.p_used = p_cl;
  plan.target_confidence = params.target_confidence;
  plan.cap = params.n_max;
  plan.raw_real = n_ias_real(p_cl, params.target_confidence);
  if (plan.raw_real >= static_cast<double>(params.n_max)) {
    plan.value = params.n_max;
  } else {
    const long n = n_ias_ceil(p_cl, params.target_confidence);
    plan.value = static_cast<int>(std::min<long>(n, params.n_max));
  }
  return plan;
}

BudgetPlan m_ias(double r_min, int beam_width, const BudgetParams& params) {
  check_probability(r_min, "r_min");
  check_confidence(params.target_confidence);
  if (beam_width < 1) fail(Errc::invalid_k, "beam width must be >= 1");
  if (params.m_max < 1) fail(Errc::invalid_m, "m_max must be >= 1");

  const double p_cl = clamp_probability(r_min, params.epsilon);
  BudgetPlan plan;
  plan.kind = BudgetKind::beam_m;
  plan.p_used = p_cl;
  plan.target_confidence = params.target_confidence;
  plan.cap = params.m_max;
  // Real-valued N_IAS before dividing, i.e. ceil(N_IAS / K), not
  // ceil(ceil(N_IAS) / K).
  const double quotient =
      n_ias_real(p_cl, params.target_confidence) / static_cast<double>(beam_width);
  plan.raw_real = quotient;
  auto m = static_cast<long>(std::ceil(quotient - 1e-9));
  if (m < 1) m = 1;
  plan.value = static_cast<int>(std::min<long>(m, params.m_max));
  return plan;
}

BudgetPlan k_ias(const std::vector<double>& sorted_rewards, int expansions,
                 const BudgetParams& params) {
  if (sorted_rewards.empty()) fail(Errc::empty_input, "no rewards");
  if (expansions < 1) fail(Errc::invalid_m, "expansions must be >= 1");
  if (params.k_max < 1) fail(Errc::invalid_k, "k_max must be >= 1");
  check_confidence(params.target_confidence);
  for (std::size_t i = 0; i < sorted_rewards.size(); ++i) {
    check_probability(sorted_rewards[i], "reward");
    if (i > 0 && sorted_rewards[i] > sorted_rewards[i - 1] + 1e-12)
      fail(Errc::unsorted_input, "rewards must be sorted descending");
  }

  BudgetPlan plan;
  plan.kind = BudgetKind::beam_k;
  plan.target_confidence = params.target_confidence;
  plan.cap = params.k_max;
  const auto scan_limit =
      std::min<std::size_t>(sorted_rewards.size(), static_cast<std::size_t>(params.k_max));
  for (std::size_t k = 1; k <= scan_limit; ++k) {
    const double r_k = clamp_probability(sorted_rewards[k - 1], params.epsilon);
    const double need = n_ias_real(r_k, params.target_confidence);
    if (need <= static_cast<double>(k) * static_cast<double>(expansions) + 1e-9) {
      plan.value = static_cast<int>(k);
      plan.p_used = r_k;
      plan.raw_real = need;
      return plan;
    }
  }
  // No k qualifies: fall back to the maximum width.
  plan.value = params.k_max;
  const std::size_t last = std::min<std::size_t>(sorted_rewards.size(),
                                                 static_cast<std::size_t>(params.k_max)) -
                           1;
  plan.p_used = clamp_probability(sorted_rewards[last], params.epsilon);
  plan.raw_real = n_ias_real(plan.p_used, params.target_confidence);
  return plan;
}

}  // namespace prmcal
