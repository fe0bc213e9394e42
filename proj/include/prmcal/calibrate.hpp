#pragma once

#include <vector>

#include "prmcal/mathutil.hpp"
#include "prmcal/record.hpp"

namespace prmcal {

/// Returns the logit input a calibrator consumes for this record: raw_logit
/// when present, otherwise the inverse-sigmoid of raw_score. Throws
/// Errc::missing_logits when neither is available.
double record_logit(const CalibrationRecord& rec);

/// Returns the probability-scale score: raw_score, or sigmoid(raw_logit).
/// Throws Errc::missing_scores when neither is available.
double record_score(const CalibrationRecord& rec);

// ---------------------------------------------------------------------------
// Temperature scaling: divide logits by a scalar T before the sigmoid.

struct TemperatureScaler {
  double temperature = 1.0;

  double apply_logit(double z) const { return sigmoid(z / temperature); }
  double apply(const CalibrationRecord& rec) const { return apply_logit(record_logit(rec)); }
};

enum class TemperatureObjective { brier, ece };

struct TemperatureFit {
  TemperatureScaler scaler;
  double objective_value = 0.0;
  bool degenerate_data = false;  // all targets identical; T is still returned
};

/// Golden-section search for T on a log scale over [0.05, 20], minimizing the
/// chosen metric of sigmoid(z/T) against the empirical success rates.
TemperatureFit fit_temperature(const std::vector<CalibrationRecord>& records,
                               TemperatureObjective objective = TemperatureObjective::brier,
                               int ece_bins = 10);

// ---------------------------------------------------------------------------
// Isotonic regression via pool-adjacent-violators.

/// Nondecreasing step map from score to calibrated probability.
/// Evaluation is right-continuous with constant extrapolation outside the
/// fitted score range.
struct IsotonicMap {
  std::vector<double> scores;  // strictly ascending breakpoints
  std::vector<double> values;  // nondecreasing fitted values

  double apply_score(double score) const;
  double apply(const CalibrationRecord& rec) const { return apply_score(record_score(rec)); }
};

/// Least-squares monotone fit of success rate on score. Records with equal
/// scores are pre-pooled by averaging.
IsotonicMap fit_isotonic(const std::vector<CalibrationRecord>& records);

/// Weighted PAVA on already-pooled (x ascending, y, w) data; exposed for
/// direct use and oracle testing.
std::vector<double> pava(const std::vector<double>& y, const std::vector<double>& w);

// ---------------------------------------------------------------------------
// Histogram binning over equal-width score bins.

struct HistogramBinner {
  int bin_count = 10;
  std::vector<double> bin_values;  // one per bin, empty bins filled at fit time
  double fallback_value = 0.5;     // global mean rate, kept for serialization

  double apply_score(double score) const;
  double apply(const CalibrationRecord& rec) const { return apply_score(record_score(rec)); }
};

/// Bin value = mean success rate of records whose score falls in the bin;
/// bins empty at fit time inherit the nearest nonempty bin's value.
HistogramBinner fit_histogram(const std::vector<CalibrationRecord>& records, int bins);

}  // namespace prmcal
