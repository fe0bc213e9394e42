#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prmcal/record.hpp"

namespace prmcal {

/// Weighted quantile loss (mean pinball loss across levels):
///   (1/Nq) sum_n [ beta_n * max(0, target - pred_n)
///                + (1 - beta_n) * max(0, pred_n - target) ].
double wql_loss(const std::vector<double>& predictions, double target,
                const std::vector<double>& levels);

struct QuantileTrainConfig {
  double learning_rate = 2.0;
  double lr_decay = 0.002;  // step t uses learning_rate / (1 + lr_decay * t)
  int max_iters = 5000;
  double tol = 1e-8;  // stop when the loss delta falls below this
  std::uint64_t seed = 0;
  bool use_step_position = true;
  std::vector<std::string> extra_features;  // names looked up in record.features
};

/// Multi-quantile score calibrator. Each level predicts
/// sigmoid(a*z + base(x) + cumulative increments), where z is the raw logit,
/// a >= 0, and the per-level increments are nonnegative by construction, so
/// predictions never cross and are nondecreasing in the raw score.
///
/// A freshly initialized model outputs sigmoid(z) at every level, matching
/// the raw score exactly.
class QuantileModel {
 public:
  QuantileModel() = default;
  QuantileModel(std::vector<double> levels, const QuantileTrainConfig& config);

  /// Per-level predictions, ascending across levels, each in [0,1].
  std::vector<double> predict(const CalibrationRecord& rec) const;

  /// Prediction at one level; the level must be one of quantile_levels().
  double predict_at(const CalibrationRecord& rec, double level) const;

  const std::vector<double>& quantile_levels() const { return levels_; }
  std::size_t level_index(double level) const;

  double final_loss() const { return final_loss_; }
  int iterations_run() const { return iterations_; }

  /// Full-batch subgradient descent on the mean weighted quantile loss.
  void fit(const std::vector<CalibrationRecord>& records);

  // Parameter access for serialization.
  struct Params {
    double z_slope = 1.0;                      // a >= 0, shared across levels
    double base_bias = 0.0;                    // level-1 intercept
    std::vector<double> base_weights;          // per non-z feature
    std::vector<double> inc_scale;             // v_m >= 0, per level above the first
    std::vector<double> inc_gate_bias;         // gate intercept per increment
    std::vector<std::vector<double>> inc_gate_weights;  // per increment, per feature
  };
  const Params& params() const { return params_; }
  Params& mutable_params() { return params_; }
  const QuantileTrainConfig& config() const { return config_; }
  void set_config(const QuantileTrainConfig& c);
  void set_levels(std::vector<double> levels);

 private:
  std::vector<double> features_of(const CalibrationRecord& rec) const;
  std::vector<double> predict_features(double z, const std::vector<double>& f) const;

  std::vector<double> levels_;
  QuantileTrainConfig config_;
  Params params_;
  double final_loss_ = 0.0;
  int iterations_ = 0;
};

struct QuantileFitResult {
  QuantileModel model;
  double final_loss = 0.0;
  int iterations = 0;
};

/// Fits a quantile model on the fit set. Levels must be ascending in (0,1).
QuantileFitResult fit_quantile_model(const std::vector<CalibrationRecord>& fit_set,
                                     const std::vector<double>& levels,
                                     const QuantileTrainConfig& config = {});

}  // namespace prmcal
