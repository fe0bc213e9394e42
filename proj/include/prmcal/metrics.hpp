#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace prmcal {

struct MetricReport {
  double brier = 0.0;
  double pos_brier = 0.0;
  double ece = 0.0;
  double adaptive_ce = 0.0;
  double average_ce = 0.0;
  std::size_t n_samples = 0;
  int bin_count = 10;
};

/// Mean squared error between predictions and empirical success rates.
/// Targets are real-valued rates, not binarized labels.
double brier(const std::vector<double>& preds, const std::vector<double>& targets);

/// Mean squared overestimation error: (1/N) sum max(pred - target, 0)^2.
double pos_brier(const std::vector<double>& preds, const std::vector<double>& targets);

/// Expected calibration error over `bins` equal-width bins on [0,1], each
/// weighted by its share of the samples. Bins are [lo, hi) with the last bin
/// closed at 1.0; empty bins contribute nothing.
double ece(const std::vector<double>& preds, const std::vector<double>& targets, int bins);

/// Calibration error over equal-mass bins: predictions are stable-sorted
/// (ties broken by input index) and cut into `bins` contiguous groups whose
/// sizes differ by at most one; each group weighted by its share of samples.
double adaptive_ce(const std::vector<double>& preds, const std::vector<double>& targets,
                   int bins);

/// Like ece but every nonempty bin is weighted 1 / (number of nonempty bins).
double average_ce(const std::vector<double>& preds, const std::vector<double>& targets,
                  int bins);

MetricReport compute_metrics(const std::vector<double>& preds,
                             const std::vector<double>& targets, int bins = 10);

/// Per-bin reliability data (for external plotting).
struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_pred = 0.0;
  double mean_target = 0.0;
};

std::vector<ReliabilityBin> reliability_bins(const std::vector<double>& preds,
                                             const std::vector<double>& targets, int bins);

/// Histogram counts of signed deviations pred - target over [-1, 1].
struct DeviationHistogram {
  std::vector<double> edges;       // bins+1 edges from -1 to 1
  std::vector<std::size_t> counts;  // size bins
  double mean_deviation = 0.0;
};

DeviationHistogram deviation_histogram(const std::vector<double>& preds,
                                       const std::vector<double>& targets, int bins = 40);

std::string metric_report_to_json(const MetricReport& report);

}  // namespace prmcal
