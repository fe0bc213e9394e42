#pragma once

#include <cstddef>
#include <vector>

#include "prmcal/quantile_model.hpp"
#include "prmcal/record.hpp"

namespace prmcal {

/// One-sided split-conformal offset for a quantile predictor: subtracting the
/// held-out residual quantile from the model's prediction yields a lower
/// bound with finite-sample coverage 1 - alpha under exchangeability.
struct ConformalAdjustment {
  double quantile_level = 0.1;  // beta of the underlying quantile prediction
  double alpha = 0.1;           // miscoverage level
  double offset = 0.0;          // Q_{1-alpha}(E, I2)
  std::size_t residual_count = 0;
  bool rank_overflow = false;  // rank exceeded |I2|; the max residual was used
};

/// Computes residuals E_i = prediction_beta(X_i) - rate_i on the held-out
/// conformal set and takes the empirical quantile at rank
/// ceil((1 - alpha) * (|I2| + 1)), 1-indexed among the sorted residuals.
ConformalAdjustment conformal_calibrate(const QuantileModel& model, double level,
                                        const std::vector<CalibrationRecord>& conformal_set,
                                        double alpha);

/// clip(prediction_beta(x) - offset, 0, 1).
double conformal_lower_bound(const ConformalAdjustment& adj, const QuantileModel& model,
                             const CalibrationRecord& rec);

/// Rank-based offset on raw residuals; exposed for tests and reuse.
ConformalAdjustment conformal_from_residuals(std::vector<double> residuals, double level,
                                             double alpha);

}  // namespace prmcal
