#pragma once

#include <vector>

namespace prmcal {

struct BudgetParams {
  double target_confidence = 0.99;  // C
  double quantile_level = 0.1;      // beta, echoed into plans
  int n_max = 64;
  int m_max = 8;
  int k_max = 8;
  double epsilon = 1e-6;  // probability clamp making log(1-p) finite
};

enum class BudgetKind { bon_n, beam_m, beam_k };

struct BudgetPlan {
  BudgetKind kind = BudgetKind::bon_n;
  int value = 1;         // clamped sample count, >= 1 and <= the relevant cap
  double raw_real = 0.0; // unclamped real-valued N_IAS(p, C) (or its /K quotient)
  double p_used = 0.0;   // probability after clamping
  double target_confidence = 0.99;
  int cap = 1;
};

/// Real-valued N_IAS(p, C) = log(1-C) / log(1-p). p must lie in (0,1).
double n_ias_real(double p, double confidence);

/// Mathematical ceiling of n_ias_real, robust to floating-point noise: the
/// result n is the least integer with (1-p)^n <= 1-C. Uncapped.
long n_ias_ceil(double p, double confidence);

/// Minimum best-of-N budget meeting the target confidence, clamped to
/// [1, n_max]. p outside [0,1] is an error; p is clamped to
/// [epsilon, 1-epsilon] before the formula.
BudgetPlan n_ias(double p, const BudgetParams& params);

/// Per-prefix expansion width for beam search with fixed width K:
/// ceil(N_IAS(r_min, C) / K) using the real-valued N_IAS, clamped to
/// [1, m_max].
BudgetPlan m_ias(double r_min, int beam_width, const BudgetParams& params);

/// Adaptive beam width for fixed expansion count M: the smallest k with
/// N_IAS(r_k, C) <= k * M, or k_max when no k qualifies. Rewards must be
/// sorted descending.
BudgetPlan k_ias(const std::vector<double>& sorted_rewards, int expansions,
                 const BudgetParams& params);

}  // namespace prmcal
