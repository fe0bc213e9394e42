#include "prmcal/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "prmcal/error.hpp"
#include "prmcal/mathutil.hpp"

namespace prmcal {

ConformalAdjustment conformal_from_residuals(std::vector<double> residuals, double level,
                                             double alpha) {
  if (residuals.empty()) fail(Errc::empty_conformal_set, "no residuals");
  if (!(alpha > 0.0 && alpha < 1.0))
    fail(Errc::invalid_config, "alpha must lie in (0,1), got " + std::to_string(alpha));

  const auto n = residuals.size();
  const double exact_rank = (1.0 - alpha) * (static_cast<double>(n) + 1.0);
  auto rank = static_cast<std::size_t>(std::ceil(exact_rank - 1e-9));
  if (rank < 1) rank = 1;

  ConformalAdjustment adj;
  adj.quantile_level = level;
  adj.alpha = alpha;
  adj.residual_count = n;
  if (rank > n) {
    adj.rank_overflow = true;
    rank = n;
  }
  adj.offset = kth_smallest(std::move(residuals), rank);
  return adj;
}

ConformalAdjustment conformal_calibrate(const QuantileModel& model, double level,
                                        const std::vector<CalibrationRecord>& conformal_set,
                                        double alpha) {
  if (conformal_set.empty()) fail(Errc::empty_conformal_set, "conformal set is empty");
  const std::size_t idx = model.level_index(level);
  std::vector<double> residuals;
  residuals.reserve(conformal_set.size());
  for (const auto& rec : conformal_set)
    residuals.push_back(model.predict(rec)[idx] - rec.success_rate());
  return conformal_from_residuals(std::move(residuals), level, alpha);
}

double conformal_lower_bound(const ConformalAdjustment& adj, const QuantileModel& model,
                             const CalibrationRecord& rec) {
  const double pred = model.predict_at(rec, adj.quantile_level);
  return clip01(pred - adj.offset);
}

}  // namespace prmcal
