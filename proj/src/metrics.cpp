#include "prmcal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "prmcal/error.hpp"

namespace prmcal {

namespace {

void check_inputs(const std::vector<double>& preds, const std::vector<double>& targets) {
  if (preds.size() != targets.size())
    fail(Errc::length_mismatch, "preds has " + std::to_string(preds.size()) +
                                    " entries, targets has " + std::to_string(targets.size()));
  if (preds.empty()) fail(Errc::empty_input, "no samples");
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (!(preds[i] >= 0.0 && preds[i] <= 1.0))
      fail(Errc::out_of_range, "pred[" + std::to_string(i) + "] outside [0,1]");
    if (!(targets[i] >= 0.0 && targets[i] <= 1.0))
      fail(Errc::out_of_range, "target[" + std::to_string(i) + "] outside [0,1]");
  }
}

void check_bins(int bins) {
  if (bins < 1) fail(Errc::invalid_bin_count, "bins must be >= 1, got " + std::to_string(bins));
}

std::size_t bin_of(double p, int bins) {
  // [lo, hi) except the last bin, which is closed so p = 1.0 is binned.
  auto b = static_cast<long>(std::floor(p * bins));
  return static_cast<std::size_t>(std::clamp<long>(b, 0, bins - 1));
}

struct BinStats {
  std::size_t count = 0;
  double pred_sum = 0.0;
  double target_sum = 0.0;
  double gap() const { return std::abs(pred_sum - target_sum) / static_cast<double>(count); }
};

std::vector<BinStats> equal_width_bins(const std::vector<double>& preds,
                                       const std::vector<double>& targets, int bins) {
  std::vector<BinStats> stats(static_cast<std::size_t>(bins));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    BinStats& s = stats[bin_of(preds[i], bins)];
    ++s.count;
    s.pred_sum += preds[i];
    s.target_sum += targets[i];
  }
  return stats;
}

}  // namespace

double brier(const std::vector<double>& preds, const std::vector<double>& targets) {
  check_inputs(preds, targets);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(preds.size());
}

double pos_brier(const std::vector<double>& preds, const std::vector<double>& targets) {
  check_inputs(preds, targets);
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = std::max(preds[i] - targets[i], 0.0);
    sum += d * d;
  }
  return sum / static_cast<double>(preds.size());
}

double ece(const std::vector<double>& preds, const std::vector<double>& targets, int bins) {
  check_inputs(preds, targets);
  check_bins(bins);
  double total = 0.0;
  for (const BinStats& s : equal_width_bins(preds, targets, bins)) {
    if (s.count == 0) continue;
    total += (static_cast<double>(s.count) / static_cast<double>(preds.size())) * s.gap();
  }
  return total;
}

double adaptive_ce(const std::vector<double>& preds, const std::vector<double>& targets,
                   int bins) {
  check_inputs(preds, targets);
  check_bins(bins);
  const std::size_t n = preds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a] < preds[b]; });

  const auto b = static_cast<std::size_t>(bins);
  const std::size_t base = n / b;
  const std::size_t extra = n % b;  // first `extra` bins get one more sample
  double total = 0.0;
  std::size_t pos = 0;
  for (std::size_t g = 0; g < b; ++g) {
    const std::size_t size = base + (g < extra ? 1 : 0);
    if (size == 0) continue;
    double pred_sum = 0.0;
    double target_sum = 0.0;
    for (std::size_t k = 0; k < size; ++k, ++pos) {
      pred_sum += preds[order[pos]];
      target_sum += targets[order[pos]];
    }
    const double gap = std::abs(pred_sum - target_sum) / static_cast<double>(size);
    total += (static_cast<double>(size) / static_cast<double>(n)) * gap;
  }
  return total;
}

double average_ce(const std::vector<double>& preds, const std::vector<double>& targets,
                  int bins) {
  check_inputs(preds, targets);
  check_bins(bins);
  double total = 0.0;
  std::size_t nonempty = 0;
  for (const BinStats& s : equal_width_bins(preds, targets, bins)) {
    if (s.count == 0) continue;
    ++nonempty;
    total += s.gap();
  }
  return nonempty == 0 ? 0.0 : total / static_cast<double>(nonempty);
}

MetricReport compute_metrics(const std::vector<double>& preds,
                             const std::vector<double>& targets, int bins) {
  MetricReport report;
  report.brier = brier(preds, targets);
  report.pos_brier = pos_brier(preds, targets);
  report.ece = ece(preds, targets, bins);
  report.adaptive_ce = adaptive_ce(preds, targets, bins);
  report.average_ce = average_ce(preds, targets, bins);
  report.n_samples = preds.size();
  report.bin_count = bins;
  return report;
}

std::vector<ReliabilityBin> reliability_bins(const std::vector<double>& preds,
                                             const std::vector<double>& targets, int bins) {
  check_inputs(preds, targets);
  check_bins(bins);
  const auto stats = equal_width_bins(preds, targets, bins);
  std::vector<ReliabilityBin> out(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) {
    out[i].lo = static_cast<double>(i) / bins;
    out[i].hi = static_cast<double>(i + 1) / bins;
    out[i].count = stats[i].count;
    if (stats[i].count > 0) {
      out[i].mean_pred = stats[i].pred_sum / static_cast<double>(stats[i].count);
      out[i].mean_target = stats[i].target_sum / static_cast<double>(stats[i].count);
    }
  }
  return out;
}

DeviationHistogram deviation_histogram(const std::vector<double>& preds,
                                       const std::vector<double>& targets, int bins) {
  check_inputs(preds, targets);
  check_bins(bins);
  DeviationHistogram hist;
  hist.edges.resize(static_cast<std::size_t>(bins) + 1);
  hist.counts.assign(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i <= static_cast<std::size_t>(bins); ++i)
    hist.edges[i] = -1.0 + 2.0 * static_cast<double>(i) / bins;
  double sum = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - targets[i];
    sum += d;
    auto b = static_cast<long>(std::floor((d + 1.0) / 2.0 * bins));
    ++hist.counts[static_cast<std::size_t>(std::clamp<long>(b, 0, bins - 1))];
  }
  hist.mean_deviation = sum / static_cast<double>(preds.size());
  return hist;
}

std::string metric_report_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["brier"] = report.brier;
  j["pos_brier"] = report.pos_brier;
  j["ece"] = report.ece;
  j["adaptive_ce"] = report.adaptive_ce;
  j["average_ce"] = report.average_ce;
  j["n_samples"] = report.n_samples;
  j["bin_count"] = report.bin_count;
  return j.dump();
}

}  // namespace prmcal
