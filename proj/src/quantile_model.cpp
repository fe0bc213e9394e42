#include "prmcal/quantile_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "prmcal/calibrate.hpp"
#include "prmcal/error.hpp"
#include "prmcal/mathutil.hpp"

namespace prmcal {

double wql_loss(const std::vector<double>& predictions, double target,
                const std::vector<double>& levels) {
  if (predictions.size() != levels.size())
    fail(Errc::length_mismatch, "predictions and levels differ in length");
  if (levels.empty()) fail(Errc::empty_input, "no quantile levels");
  double sum = 0.0;
  for (std::size_t n = 0; n < levels.size(); ++n) {
    const double under = std::max(0.0, target - predictions[n]);
    const double over = std::max(0.0, predictions[n] - target);
    sum += levels[n] * under + (1.0 - levels[n]) * over;
  }
  return sum / static_cast<double>(levels.size());
}

namespace {

void check_levels(const std::vector<double>& levels) {
  if (levels.empty()) fail(Errc::invalid_config, "need at least one quantile level");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0 && levels[i] < 1.0))
      fail(Errc::invalid_config, "quantile levels must lie in (0,1)");
    if (i > 0 && levels[i] <= levels[i - 1])
      fail(Errc::invalid_config, "quantile levels must be strictly ascending");
  }
}

}  // namespace

QuantileModel::QuantileModel(std::vector<double> levels, const QuantileTrainConfig& config) {
  set_levels(std::move(levels));
  set_config(config);
}

void QuantileModel::set_levels(std::vector<double> levels) {
  check_levels(levels);
  levels_ = std::move(levels);
  const std::size_t n_inc = levels_.size() - 1;
  params_.inc_scale.assign(n_inc, 0.0);
  params_.inc_gate_bias.assign(n_inc, 0.0);
  params_.inc_gate_weights.assign(n_inc, std::vector<double>(params_.base_weights.size(), 0.0));
}

void QuantileModel::set_config(const QuantileTrainConfig& c) {
  config_ = c;
  const std::size_t n_feats =
      (config_.use_step_position ? 1 : 0) + config_.extra_features.size();
  params_.base_weights.assign(n_feats, 0.0);
  for (auto& w : params_.inc_gate_weights) w.assign(n_feats, 0.0);
}

std::size_t QuantileModel::level_index(double level) const {
  for (std::size_t i = 0; i < levels_.size(); ++i)
    if (std::abs(levels_[i] - level) < 1e-12) return i;
  fail(Errc::invalid_config,
       "level " + std::to_string(level) + " is not one of the model's quantile levels");
}

std::vector<double> QuantileModel::features_of(const CalibrationRecord& rec) const {
  std::vector<double> f;
  f.reserve(params_.base_weights.size());
  if (config_.use_step_position) f.push_back(rec.step_position());
  for (const auto& name : config_.extra_features) {
    auto it = rec.features.find(name);
    if (it == rec.features.end())
      fail(Errc::missing_feature, "record lacks feature '" + name + "'");
    f.push_back(it->second);
  }
  return f;
}

std::vector<double> QuantileModel::predict_features(double z,
                                                    const std::vector<double>& f) const {
  double u = params_.z_slope * z + params_.base_bias;
  for (std::size_t j = 0; j < f.size(); ++j) u += params_.base_weights[j] * f[j];
  std::vector<double> out(levels_.size());
  out[0] = clip01(sigmoid(u));
  for (std::size_t m = 0; m + 1 < levels_.size(); ++m) {
    double gate_in = params_.inc_gate_bias[m];
    for (std::size_t j = 0; j < f.size(); ++j) gate_in += params_.inc_gate_weights[m][j] * f[j];
    u += params_.inc_scale[m] * sigmoid(gate_in);  // nonnegative increment
    out[m + 1] = clip01(sigmoid(u));
  }
  return out;
}

std::vector<double> QuantileModel::predict(const CalibrationRecord& rec) const {
  return predict_features(record_logit(rec), features_of(rec));
}

double QuantileModel::predict_at(const CalibrationRecord& rec, double level) const {
  return predict(rec)[level_index(level)];
}

void QuantileModel::fit(const std::vector<CalibrationRecord>& records) {
  if (records.empty()) fail(Errc::empty_fit_set, "quantile fitting needs a nonempty fit set");
  const std::size_t n = records.size();
  const std::size_t n_levels = levels_.size();
  const std::size_t n_feats = params_.base_weights.size();
  const std::size_t n_inc = n_levels - 1;

  std::vector<double> zs(n);
  std::vector<double> targets(n);
  std::vector<std::vector<double>> feats(n);
  for (std::size_t i = 0; i < n; ++i) {
    zs[i] = record_logit(records[i]);
    targets[i] = records[i].success_rate();
    feats[i] = features_of(records[i]);
  }

  Params& p = params_;
  double prev_loss = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (; iter < config_.max_iters; ++iter) {
    double g_slope = 0.0;
    double g_base_bias = 0.0;
    std::vector<double> g_base_w(n_feats, 0.0);
    std::vector<double> g_inc_scale(n_inc, 0.0);
    std::vector<double> g_gate_bias(n_inc, 0.0);
    std::vector<std::vector<double>> g_gate_w(n_inc, std::vector<double>(n_feats, 0.0));

    double loss = 0.0;
    const double inv = 1.0 / (static_cast<double>(n) * static_cast<double>(n_levels));
    for (std::size_t i = 0; i < n; ++i) {
      double u = p.z_slope * zs[i] + p.base_bias;
      for (std::size_t j = 0; j < n_feats; ++j) u += p.base_weights[j] * feats[i][j];

      // Forward pass: level logits and the gate activations they reuse.
      std::vector<double> gates(n_inc);
      std::vector<double> us(n_levels);
      us[0] = u;
      for (std::size_t m = 0; m < n_inc; ++m) {
        double gate_in = p.inc_gate_bias[m];
        for (std::size_t j = 0; j < n_feats; ++j) gate_in += p.inc_gate_weights[m][j] * feats[i][j];
        gates[m] = sigmoid(gate_in);
        us[m + 1] = us[m] + p.inc_scale[m] * gates[m];
      }

      std::vector<double> dl_du(n_levels);
      for (std::size_t m = 0; m < n_levels; ++m) {
        const double pred = sigmoid(us[m]);
        const double t = targets[i];
        if (pred < t) {
          loss += levels_[m] * (t - pred);
        } else {
          loss += (1.0 - levels_[m]) * (pred - t);
        }
        double dl_dpred = 0.0;
        if (pred < t) dl_dpred = -levels_[m];
        else if (pred > t) dl_dpred = 1.0 - levels_[m];
        dl_du[m] = dl_dpred * pred * (1.0 - pred) * inv;
      }

      // u_0 feeds every level; increment m feeds levels m+1 and above.
      double du_accum = 0.0;
      for (std::size_t m = 0; m < n_levels; ++m) du_accum += dl_du[m];
      g_slope += du_accum * zs[i];
      g_base_bias += du_accum;
      for (std::size_t j = 0; j < n_feats; ++j) g_base_w[j] += du_accum * feats[i][j];

      double tail = du_accum;
      for (std::size_t m = 0; m < n_inc; ++m) {
        tail -= dl_du[m];  // levels above m
        g_inc_scale[m] += tail * gates[m];
        const double dgate = tail * p.inc_scale[m] * gates[m] * (1.0 - gates[m]);
        g_gate_bias[m] += dgate;
        for (std::size_t j = 0; j < n_feats; ++j) g_gate_w[m][j] += dgate * feats[i][j];
      }
    }
    loss /= static_cast<double>(n) * static_cast<double>(n_levels);
    if (!std::isfinite(loss))
      fail(Errc::non_finite_loss, "training diverged at iteration " + std::to_string(iter));
    if (std::abs(prev_loss - loss) < config_.tol) {
      final_loss_ = loss;
      iterations_ = iter;
      return;
    }
    prev_loss = loss;

    const double lr = config_.learning_rate / (1.0 + config_.lr_decay * iter);
    p.z_slope = std::max(0.0, p.z_slope - lr * g_slope);  // keeps preds monotone in z
    p.base_bias -= lr * g_base_bias;
    for (std::size_t j = 0; j < n_feats; ++j) p.base_weights[j] -= lr * g_base_w[j];
    for (std::size_t m = 0; m < n_inc; ++m) {
      p.inc_scale[m] = std::max(0.0, p.inc_scale[m] - lr * g_inc_scale[m]);  // non-crossing
      p.inc_gate_bias[m] -= lr * g_gate_bias[m];
      for (std::size_t j = 0; j < n_feats; ++j) p.inc_gate_weights[m][j] -= lr * g_gate_w[m][j];
    }
  }

  // Final loss at the last parameters.
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    loss += wql_loss(predict_features(zs[i], feats[i]), targets[i], levels_);
  final_loss_ = loss / static_cast<double>(n);
  if (!std::isfinite(final_loss_)) fail(Errc::non_finite_loss, "training diverged");
  iterations_ = iter;
}

QuantileFitResult fit_quantile_model(const std::vector<CalibrationRecord>& fit_set,
                                     const std::vector<double>& levels,
                                     const QuantileTrainConfig& config) {
  QuantileModel model(levels, config);
  model.fit(fit_set);
  QuantileFitResult result;
  result.final_loss = model.final_loss();
  result.iterations = model.iterations_run();
  result.model = std::move(model);
  return result;
}

}  // namespace prmcal
