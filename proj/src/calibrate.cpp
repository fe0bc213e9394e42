#include "prmcal/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "prmcal/error.hpp"
#include "prmcal/metrics.hpp"

namespace prmcal {

double record_logit(const CalibrationRecord& rec) {
  if (rec.raw_logit) return *rec.raw_logit;
  if (rec.raw_score) return logit(*rec.raw_score);
  fail(Errc::missing_logits,
       "record " + rec.question_id + " has neither raw_logit nor raw_score");
}

double record_score(const CalibrationRecord& rec) {
  if (rec.raw_score) return *rec.raw_score;
  if (rec.raw_logit) return sigmoid(*rec.raw_logit);
  fail(Errc::missing_scores,
       "record " + rec.question_id + " has neither raw_score nor raw_logit");
}

// ---------------------------------------------------------------------------

TemperatureFit fit_temperature(const std::vector<CalibrationRecord>& records,
                               TemperatureObjective objective, int ece_bins) {
  if (records.size() < 2)
    fail(Errc::empty_fit_set, "temperature fitting needs at least 2 records");
  std::vector<double> logits(records.size());
  std::vector<double> targets(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].raw_logit && !records[i].raw_score)
      fail(Errc::missing_logits, "record " + std::to_string(i) + " has no logit");
    logits[i] = record_logit(records[i]);
    targets[i] = records[i].success_rate();
  }

  const bool degenerate =
      std::all_of(targets.begin(), targets.end(), [&](double t) { return t == targets[0]; });

  auto loss = [&](double log_t) {
    const double t = std::exp(log_t);
    std::vector<double> preds(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) preds[i] = sigmoid(logits[i] / t);
    return objective == TemperatureObjective::brier ? brier(preds, targets)
                                                    : ece(preds, targets, ece_bins);
  };

  // Golden section on log T in [log 0.05, log 20], tolerance 1e-4.
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = std::log(0.05);
  double hi = std::log(20.0);
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = loss(x1);
  double f2 = loss(x2);
  while (hi - lo > 1e-4) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = loss(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = loss(x2);
    }
  }
  const double best = 0.5 * (lo + hi);
  TemperatureFit fit;
  fit.scaler.temperature = std::exp(best);
  fit.objective_value = loss(best);
  fit.degenerate_data = degenerate;
  return fit;
}

// ---------------------------------------------------------------------------

std::vector<double> pava(const std::vector<double>& y, const std::vector<double>& w) {
  // Stack of blocks; adjacent blocks with decreasing means are merged.
  struct Block {
    double sum, weight;
    std::size_t size;
    double mean() const { return sum / weight; }
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    blocks.push_back({y[i] * w[i], w[i], 1});
    while (blocks.size() >= 2 &&
           blocks[blocks.size() - 2].mean() >= blocks.back().mean()) {
      Block top = blocks.back();
      blocks.pop_back();
      blocks.back().sum += top.sum;
      blocks.back().weight += top.weight;
      blocks.back().size += top.size;
    }
  }
  std::vector<double> fitted;
  fitted.reserve(y.size());
  for (const Block& b : blocks) fitted.insert(fitted.end(), b.size, b.mean());
  return fitted;
}

IsotonicMap fit_isotonic(const std::vector<CalibrationRecord>& records) {
  if (records.empty()) fail(Errc::empty_fit_set, "isotonic fitting needs at least 1 record");
  // Pre-pool equal scores: weight = count, value = mean rate.
  std::map<double, std::pair<double, double>> pooled;  // score -> (rate sum, count)
  for (const auto& rec : records) {
    if (!rec.raw_score && !rec.raw_logit)
      fail(Errc::missing_scores, "record for " + rec.question_id + " has no score");
    auto& slot = pooled[record_score(rec)];
    slot.first += rec.success_rate();
    slot.second += 1.0;
  }
  std::vector<double> xs, ys, ws;
  xs.reserve(pooled.size());
  for (const auto& [score, agg] : pooled) {
    xs.push_back(score);
    ys.push_back(agg.first / agg.second);
    ws.push_back(agg.second);
  }
  IsotonicMap map;
  map.scores = std::move(xs);
  map.values = pava(ys, ws);
  return map;
}

double IsotonicMap::apply_score(double score) const {
  if (scores.empty()) return 0.5;
  // Right-continuous step: value of the greatest breakpoint <= score.
  auto it = std::upper_bound(scores.begin(), scores.end(), score);
  if (it == scores.begin()) return values.front();
  const auto idx = static_cast<std::size_t>(std::distance(scores.begin(), it)) - 1;
  return values[idx];
}

// ---------------------------------------------------------------------------

HistogramBinner fit_histogram(const std::vector<CalibrationRecord>& records, int bins) {
  if (bins < 1) fail(Errc::invalid_bin_count, "bins must be >= 1, got " + std::to_string(bins));
  if (records.empty()) fail(Errc::empty_fit_set, "histogram fitting needs at least 1 record");

  const auto b = static_cast<std::size_t>(bins);
  std::vector<double> sums(b, 0.0);
  std::vector<std::size_t> counts(b, 0);
  double global_sum = 0.0;
  for (const auto& rec : records) {
    if (!rec.raw_score && !rec.raw_logit)
      fail(Errc::missing_scores, "record for " + rec.question_id + " has no score");
    const double score = record_score(rec);
    auto idx = static_cast<long>(std::floor(score * bins));
    const auto bin = static_cast<std::size_t>(std::clamp<long>(idx, 0, bins - 1));
    sums[bin] += rec.success_rate();
    ++counts[bin];
    global_sum += rec.success_rate();
  }

  HistogramBinner binner;
  binner.bin_count = bins;
  binner.fallback_value = global_sum / static_cast<double>(records.size());
  binner.bin_values.assign(b, binner.fallback_value);
  for (std::size_t i = 0; i < b; ++i)
    if (counts[i] > 0) binner.bin_values[i] = sums[i] / static_cast<double>(counts[i]);

  // Empty bins take the nearest nonempty bin's value (lower index on ties).
  for (std::size_t i = 0; i < b; ++i) {
    if (counts[i] > 0) continue;
    std::size_t best = b;
    std::size_t best_dist = b + 1;
    for (std::size_t j = 0; j < b; ++j) {
      if (counts[j] == 0) continue;
      const std::size_t dist = i > j ? i - j : j - i;
      if (dist < best_dist) {
        best_dist = dist;
        best = j;
      }
    }
    if (best < b) binner.bin_values[i] = sums[best] / static_cast<double>(counts[best]);
  }
  return binner;
}

double HistogramBinner::apply_score(double score) const {
  auto idx = static_cast<long>(std::floor(score * bin_count));
  const auto bin = static_cast<std::size_t>(std::clamp<long>(idx, 0, bin_count - 1));
  return bin < bin_values.size() ? bin_values[bin] : fallback_value;
}

}  // namespace prmcal
