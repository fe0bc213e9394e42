#include "prmcal/calibrator_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prmcal/error.hpp"

namespace prmcal {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json train_config_to_json(const QuantileTrainConfig& c) {
  json j;
  j["learning_rate"] = c.learning_rate;
  j["lr_decay"] = c.lr_decay;
  j["max_iters"] = c.max_iters;
  j["tol"] = c.tol;
  j["seed"] = c.seed;
  j["use_step_position"] = c.use_step_position;
  j["extra_features"] = c.extra_features;
  return j;
}

QuantileTrainConfig train_config_from_json(const json& j) {
  QuantileTrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.tol = j.value("tol", c.tol);
  c.seed = j.value("seed", c.seed);
  c.use_step_position = j.value("use_step_position", c.use_step_position);
  if (j.contains("extra_features"))
    c.extra_features = j.at("extra_features").get<std::vector<std::string>>();
  return c;
}

json quantile_to_json(const QuantileModel& m) {
  const auto& p = m.params();
  json j;
  j["levels"] = m.quantile_levels();
  j["train_config"] = train_config_to_json(m.config());
  j["z_slope"] = p.z_slope;
  j["base_bias"] = p.base_bias;
  j["base_weights"] = p.base_weights;
  j["inc_scale"] = p.inc_scale;
  j["inc_gate_bias"] = p.inc_gate_bias;
  j["inc_gate_weights"] = p.inc_gate_weights;
  return j;
}

QuantileModel quantile_from_json(const json& j) {
  QuantileModel m(j.at("levels").get<std::vector<double>>(),
                  train_config_from_json(j.at("train_config")));
  auto& p = m.mutable_params();
  p.z_slope = j.at("z_slope").get<double>();
  p.base_bias = j.at("base_bias").get<double>();
  p.base_weights = j.at("base_weights").get<std::vector<double>>();
  p.inc_scale = j.at("inc_scale").get<std::vector<double>>();
  p.inc_gate_bias = j.at("inc_gate_bias").get<std::vector<double>>();
  p.inc_gate_weights = j.at("inc_gate_weights").get<std::vector<std::vector<double>>>();
  return m;
}

json adjustment_to_json(const ConformalAdjustment& a) {
  json j;
  j["quantile_level"] = a.quantile_level;
  j["alpha"] = a.alpha;
  j["offset"] = a.offset;
  j["residual_count"] = a.residual_count;
  j["rank_overflow"] = a.rank_overflow;
  return j;
}

ConformalAdjustment adjustment_from_json(const json& j) {
  ConformalAdjustment a;
  a.quantile_level = j.at("quantile_level").get<double>();
  a.alpha = j.at("alpha").get<double>();
  a.offset = j.at("offset").get<double>();
  a.residual_count = j.at("residual_count").get<std::size_t>();
  a.rank_overflow = j.at("rank_overflow").get<bool>();
  return a;
}

}  // namespace

const char* calibrator_type_name(const Calibrator& cal) {
  switch (cal.index()) {
    case 0: return "temperature";
    case 1: return "isotonic";
    case 2: return "histogram";
    case 3: return "quantile";
    case 4: return "conformal";
  }
  return "unknown";
}

double apply_calibrator(const Calibrator& cal, const CalibrationRecord& rec,
                        std::optional<double> level) {
  if (const auto* t = std::get_if<TemperatureScaler>(&cal)) return t->apply(rec);
  if (const auto* iso = std::get_if<IsotonicMap>(&cal)) return iso->apply(rec);
  if (const auto* h = std::get_if<HistogramBinner>(&cal)) return h->apply(rec);
  if (const auto* q = std::get_if<QuantileModel>(&cal)) {
    double chosen;
    if (level) {
      chosen = *level;
    } else {
      chosen = q->quantile_levels()[0];
      for (double l : q->quantile_levels())
        if (std::abs(l - 0.5) < std::abs(chosen - 0.5)) chosen = l;
    }
    return q->predict_at(rec, chosen);
  }
  const auto& c = std::get<ConformalCalibrator>(cal);
  return conformal_lower_bound(c.adjustment, c.model, rec);
}

std::string calibrator_to_json(const Calibrator& cal) {
  json j;
  j["type"] = calibrator_type_name(cal);
  j["version"] = kFormatVersion;
  if (const auto* t = std::get_if<TemperatureScaler>(&cal)) {
    j["temperature"] = t->temperature;
  } else if (const auto* iso = std::get_if<IsotonicMap>(&cal)) {
    j["scores"] = iso->scores;
    j["values"] = iso->values;
  } else if (const auto* h = std::get_if<HistogramBinner>(&cal)) {
    j["bin_count"] = h->bin_count;
    j["bin_values"] = h->bin_values;
    j["fallback_value"] = h->fallback_value;
  } else if (const auto* q = std::get_if<QuantileModel>(&cal)) {
    j["model"] = quantile_to_json(*q);
  } else {
    const auto& c = std::get<ConformalCalibrator>(cal);
    j["model"] = quantile_to_json(c.model);
    j["adjustment"] = adjustment_to_json(c.adjustment);
  }
  return j.dump(2);
}

Calibrator calibrator_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(Errc::invalid_config, "calibrator document is not a JSON object");
  const int version = j.value("version", 0);
  if (version != kFormatVersion)
    fail(Errc::invalid_config, "unsupported calibrator version " + std::to_string(version));
  const std::string type = j.value("type", "");
  try {
    if (type == "temperature") {
      TemperatureScaler t;
      t.temperature = j.at("temperature").get<double>();
      return t;
    }
    if (type == "isotonic") {
      IsotonicMap iso;
      iso.scores = j.at("scores").get<std::vector<double>>();
      iso.values = j.at("values").get<std::vector<double>>();
      return iso;
    }
    if (type == "histogram") {
      HistogramBinner h;
      h.bin_count = j.at("bin_count").get<int>();
      h.bin_values = j.at("bin_values").get<std::vector<double>>();
      h.fallback_value = j.at("fallback_value").get<double>();
      return h;
    }
    if (type == "quantile") return quantile_from_json(j.at("model"));
    if (type == "conformal") {
      ConformalCalibrator c;
      c.model = quantile_from_json(j.at("model"));
      c.adjustment = adjustment_from_json(j.at("adjustment"));
      return c;
    }
  } catch (const json::exception& e) {
    fail(Errc::invalid_config, std::string("bad calibrator document: ") + e.what());
  }
  fail(Errc::invalid_config, "unknown calibrator type '" + type + "'");
}

void save_calibrator(const Calibrator& cal, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write '" + path + "'");
  out << calibrator_to_json(cal) << '\n';
}

Calibrator load_calibrator(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return calibrator_from_json(ss.str());
}

}  // namespace prmcal
