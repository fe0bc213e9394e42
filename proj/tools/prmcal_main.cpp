// prmcal: calibration and adaptive compute budgeting for process-reward
// scores. Subcommands: calibrate, evaluate, plan, simulate, report.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prmcal/budget.hpp"
#include "prmcal/calibrate.hpp"
#include "prmcal/calibrator_io.hpp"
#include "prmcal/conformal.hpp"
#include "prmcal/error.hpp"
#include "prmcal/metrics.hpp"
#include "prmcal/quantile_model.hpp"
#include "prmcal/record_io.hpp"
#include "prmcal/simworld.hpp"
#include "prmcal/strategies.hpp"
#include "prmcal/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prmcal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::invalid_config:
    case Errc::invalid_bin_count:
    case Errc::invalid_probability:
    case Errc::invalid_k:
    case Errc::invalid_m:
    case Errc::invalid_n:
    case Errc::invalid_beam_params:
      return kExitConfig;
    case Errc::non_finite_loss:
      return kExitNumeric;
    default:
      return kExitData;
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::invalid_config, "cannot open config '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    fail(Errc::invalid_config, "config '" + path + "' is not a JSON object");
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write '" + path.string() + "'");
  out << text;
}

struct Manifest {
  std::string command;
  std::string config_path;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
};

void write_manifest(const fs::path& out_dir, const Manifest& m, const json& config_echo) {
  json j;
  j["command"] = m.command;
  j["toolkit_version"] = kVersion;
  j["config_path"] = m.config_path;
  char hash_buf[24];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016llx",
                static_cast<unsigned long long>(m.config_hash));
  j["config_hash"] = hash_buf;
  j["seed"] = m.seed;
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  j["timestamp_unix_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  j["outputs"] = m.outputs;
  j["config"] = config_echo;
  write_text(out_dir / "manifest.json", j.dump(2) + "\n");
}

RecordFormat parse_format(const std::string& name) {
  if (name == "jsonl") return RecordFormat::jsonl;
  if (name == "csv") return RecordFormat::csv;
  fail(Errc::invalid_config, "unknown record format '" + name + "'");
}

std::vector<CalibrationRecord> load_records_from_config(const json& cfg) {
  if (!cfg.contains("records")) fail(Errc::invalid_config, "config needs a 'records' path");
  const std::string path = cfg.at("records").get<std::string>();
  const RecordFormat format = parse_format(cfg.value("format", std::string("jsonl")));
  ColumnMap map;
  if (cfg.contains("column_map"))
    for (const auto& [k, v] : cfg.at("column_map").items()) map[k] = v.get<std::string>();
  return load_records(path, format, map);
}

SplitFractions parse_fractions(const json& split_cfg) {
  SplitFractions f;
  if (split_cfg.contains("fractions")) {
    const auto arr = split_cfg.at("fractions").get<std::vector<double>>();
    if (arr.size() != 3) fail(Errc::invalid_config, "split.fractions must have 3 entries");
    f.fit = arr[0];
    f.conformal = arr[1];
    f.test = arr[2];
  }
  return f;
}

Grouping parse_grouping(const std::string& name) {
  if (name == "by_question") return Grouping::by_question;
  if (name == "by_record") return Grouping::by_record;
  fail(Errc::invalid_config, "unknown grouping '" + name + "'");
}

QuantileTrainConfig parse_train_config(const json& cfg, std::uint64_t seed) {
  QuantileTrainConfig tc;
  tc.learning_rate = cfg.value("learning_rate", tc.learning_rate);
  tc.lr_decay = cfg.value("lr_decay", tc.lr_decay);
  tc.max_iters = cfg.value("max_iters", tc.max_iters);
  tc.tol = cfg.value("tol", tc.tol);
  tc.seed = seed;
  tc.use_step_position = cfg.value("use_step_position", tc.use_step_position);
  if (cfg.contains("extra_features"))
    tc.extra_features = cfg.at("extra_features").get<std::vector<std::string>>();
  return tc;
}

std::vector<double> predictions_for(const Calibrator& cal,
                                    const std::vector<CalibrationRecord>& records,
                                    std::optional<double> level) {
  std::vector<double> preds;
  preds.reserve(records.size());
  for (const auto& rec : records) preds.push_back(clip01(apply_calibrator(cal, rec, level)));
  return preds;
}

std::vector<double> targets_for(const std::vector<CalibrationRecord>& records) {
  std::vector<double> targets;
  targets.reserve(records.size());
  for (const auto& rec : records) targets.push_back(rec.success_rate());
  return targets;
}

std::string metrics_csv(const std::map<std::string, MetricReport>& reports) {
  std::ostringstream out;
  out << "name,brier,pos_brier,ece,adaptive_ce,average_ce,n_samples,bin_count\n";
  for (const auto& [name, r] : reports) {
    out << name << ',' << fmt(r.brier) << ',' << fmt(r.pos_brier) << ',' << fmt(r.ece) << ','
        << fmt(r.adaptive_ce) << ',' << fmt(r.average_ce) << ',' << r.n_samples << ','
        << r.bin_count << '\n';
  }
  return out.str();
}

std::string metrics_json_doc(const std::map<std::string, MetricReport>& reports) {
  json j;
  for (const auto& [name, r] : reports) j[name] = json::parse(metric_report_to_json(r));
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

int cmd_calibrate(const std::string& config_path, const std::string& out_dir_arg,
                  std::optional<std::uint64_t> seed_arg, const std::string& format) {
  const json cfg = load_config(config_path);
  const fs::path out_dir = out_dir_arg.empty() ? fs::path("calibrate_out") : fs::path(out_dir_arg);
  fs::create_directories(out_dir);

  const std::uint64_t seed =
      seed_arg.value_or(cfg.value("split", json::object()).value("seed", 0ULL));
  auto records = load_records_from_config(cfg);

  const json split_cfg = cfg.value("split", json::object());
  const DatasetSplit split =
      split_dataset(records, parse_fractions(split_cfg), seed,
                    parse_grouping(split_cfg.value("grouping", std::string("by_question"))));
  if (split.fit_set.empty()) fail(Errc::empty_split, "fit split is empty");

  const int metric_bins = cfg.value("metric_bins", 10);
  std::optional<double> eval_level;
  if (cfg.contains("eval_level")) eval_level = cfg.at("eval_level").get<double>();

  std::map<std::string, MetricReport> reports;
  const auto targets = targets_for(split.test_set);
  if (!split.test_set.empty()) {
    std::vector<double> raw_preds;
    raw_preds.reserve(split.test_set.size());
    for (const auto& rec : split.test_set) raw_preds.push_back(record_score(rec));
    reports["uncalibrated"] = compute_metrics(raw_preds, targets, metric_bins);
  }

  Manifest manifest{"calibrate", config_path, fnv1a(cfg.dump()), seed, {}};
  if (!cfg.contains("calibrators") || !cfg.at("calibrators").is_array())
    fail(Errc::invalid_config, "config needs a 'calibrators' array");

  for (const json& spec : cfg.at("calibrators")) {
    const std::string type = spec.value("type", "");
    Calibrator cal = [&]() -> Calibrator {
      if (type == "temperature") {
        const std::string obj = spec.value("objective", std::string("brier"));
        const auto objective =
            obj == "ece" ? TemperatureObjective::ece : TemperatureObjective::brier;
        return fit_temperature(split.fit_set, objective, metric_bins).scaler;
      }
      if (type == "isotonic") return fit_isotonic(split.fit_set);
      if (type == "histogram") return fit_histogram(split.fit_set, spec.value("bins", 10));
      if (type == "quantile" || type == "conformal") {
        auto levels = spec.value("levels", std::vector<double>{0.1, 0.5, 0.9});
        auto fit = fit_quantile_model(split.fit_set, levels, parse_train_config(spec, seed));
        if (type == "quantile") return std::move(fit.model);
        const double alpha = spec.value("alpha", 0.1);
        const double level = spec.value("level", levels.front());
        if (split.conformal_set.empty())
          fail(Errc::empty_conformal_set, "conformal calibrator needs a conformal split");
        ConformalCalibrator cc;
        cc.adjustment = conformal_calibrate(fit.model, level, split.conformal_set, alpha);
        cc.model = std::move(fit.model);
        return cc;
      }
      fail(Errc::invalid_config, "unknown calibrator type '" + type + "'");
    }();

    const std::string name = spec.value("name", type);
    const fs::path cal_path = out_dir / (name + ".calibrator.json");
    save_calibrator(cal, cal_path.string());
    manifest.outputs.push_back(cal_path.filename().string());
    if (!split.test_set.empty()) {
      const auto preds = predictions_for(cal, split.test_set, eval_level);
      reports[name] = compute_metrics(preds, targets, metric_bins);
    }
  }

  const fs::path metrics_path = out_dir / (format == "csv" ? "metrics.csv" : "metrics.json");
  write_text(metrics_path, format == "csv" ? metrics_csv(reports) : metrics_json_doc(reports));
  manifest.outputs.push_back(metrics_path.filename().string());
  write_manifest(out_dir, manifest, cfg);
  std::cout << "wrote " << manifest.outputs.size() << " files to " << out_dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const std::string& config_path, const std::string& out_dir_arg,
                 std::optional<std::uint64_t> seed_arg, const std::string& format) {
  const json cfg = load_config(config_path);
  const fs::path out_dir = out_dir_arg.empty() ? fs::path("evaluate_out") : fs::path(out_dir_arg);
  fs::create_directories(out_dir);
  const std::uint64_t seed = seed_arg.value_or(cfg.value("seed", 0ULL));

  const auto records = load_records_from_config(cfg);
  if (records.empty()) fail(Errc::empty_input, "no records to evaluate");

  std::optional<Calibrator> cal;
  if (cfg.contains("calibrator"))
    cal = load_calibrator(cfg.at("calibrator").get<std::string>());
  std::optional<double> eval_level;
  if (cfg.contains("eval_level")) eval_level = cfg.at("eval_level").get<double>();

  std::vector<double> preds;
  preds.reserve(records.size());
  for (const auto& rec : records)
    preds.push_back(cal ? clip01(apply_calibrator(*cal, rec, eval_level)) : record_score(rec));
  const auto targets = targets_for(records);

  const int bins = cfg.value("bins", 10);
  std::map<std::string, MetricReport> reports;
  reports[cal ? "calibrated" : "raw"] = compute_metrics(preds, targets, bins);

  const fs::path metrics_path = out_dir / (format == "csv" ? "metrics.csv" : "metrics.json");
  write_text(metrics_path, format == "csv" ? metrics_csv(reports) : metrics_json_doc(reports));

  const auto hist = deviation_histogram(preds, targets, cfg.value("deviation_bins", 40));
  std::ostringstream hist_csv;
  hist_csv << "lo,hi,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    hist_csv << fmt(hist.edges[i]) << ',' << fmt(hist.edges[i + 1]) << ',' << hist.counts[i]
             << '\n';
  write_text(out_dir / "deviation_histogram.csv", hist_csv.str());

  std::ostringstream rel_csv;
  rel_csv << "lo,hi,count,mean_pred,mean_target\n";
  for (const auto& b : reliability_bins(preds, targets, bins))
    rel_csv << fmt(b.lo) << ',' << fmt(b.hi) << ',' << b.count << ',' << fmt(b.mean_pred) << ','
            << fmt(b.mean_target) << '\n';
  write_text(out_dir / "reliability.csv", rel_csv.str());

  Manifest manifest{"evaluate", config_path, fnv1a(cfg.dump()), seed, {}};
  manifest.outputs = {metrics_path.filename().string(), "deviation_histogram.csv",
                      "reliability.csv"};
  write_manifest(out_dir, manifest, cfg);
  std::cout << "mean deviation " << fmt(hist.mean_deviation) << "; wrote "
            << out_dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_plan(const std::string& config_path, const std::string& out_dir_arg,
             std::optional<std::uint64_t> seed_arg) {
  const json cfg = load_config(config_path);
  const fs::path out_dir = out_dir_arg.empty() ? fs::path("plan_out") : fs::path(out_dir_arg);
  fs::create_directories(out_dir);
  const std::uint64_t seed = seed_arg.value_or(cfg.value("seed", 0ULL));

  const auto records = load_records_from_config(cfg);
  std::optional<Calibrator> cal;
  if (cfg.contains("calibrator"))
    cal = load_calibrator(cfg.at("calibrator").get<std::string>());

  BudgetParams params;
  const json budget_cfg = cfg.value("budget", json::object());
  params.target_confidence = budget_cfg.value("target_confidence", params.target_confidence);
  params.n_max = budget_cfg.value("n_max", params.n_max);
  params.epsilon = budget_cfg.value("epsilon", params.epsilon);
  params.quantile_level = cfg.value("beta", params.quantile_level);

  // One row per question, from its first empty-prefix record.
  std::ostringstream csv;
  csv << "question_id,p_used,n_ias,raw_real\n";
  std::map<std::string, bool> planned;
  long rows = 0;
  for (const auto& rec : records) {
    if (rec.step_index != 0) continue;
    if (planned[rec.question_id]) continue;
    planned[rec.question_id] = true;
    const double p_hat =
        cal ? clip01(apply_calibrator(*cal, rec, params.quantile_level)) : record_score(rec);
    const BudgetPlan plan = n_ias(p_hat, params);
    csv << rec.question_id << ',' << fmt(plan.p_used) << ',' << plan.value << ','
        << fmt(plan.raw_real) << '\n';
    ++rows;
  }
  if (rows == 0) fail(Errc::empty_input, "no step-0 records to plan from");
  write_text(out_dir / "plan.csv", csv.str());

  Manifest manifest{"plan", config_path, fnv1a(cfg.dump()), seed, {"plan.csv"}};
  write_manifest(out_dir, manifest, cfg);
  std::cout << "planned " << rows << " questions\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

WorldConfig parse_world(const json& w, std::uint64_t seed) {
  WorldConfig config;
  config.n_questions = w.value("n_questions", config.n_questions);
  const std::string difficulty = w.value("difficulty", std::string("uniform_grid_5_levels"));
  if (difficulty == "uniform_grid_5_levels") {
    config.difficulty = DifficultyDistribution::uniform_grid_5_levels;
  } else if (difficulty == "beta") {
    config.difficulty = DifficultyDistribution::beta;
  } else {
    fail(Errc::invalid_config, "unknown difficulty '" + difficulty + "'");
  }
  config.beta_a = w.value("beta_a", config.beta_a);
  config.beta_b = w.value("beta_b", config.beta_b);
  config.steps = w.value("steps", config.steps);
  const std::string model = w.value("step_model", std::string("absorbing_failure"));
  if (model == "absorbing_failure") {
    config.step_model = StepModel::absorbing_failure;
  } else if (model == "drifting_logit") {
    config.step_model = StepModel::drifting_logit;
  } else {
    fail(Errc::invalid_config, "unknown step_model '" + model + "'");
  }
  config.final_success = w.value("final_success", config.final_success);
  config.drift_step = w.value("drift_step", config.drift_step);
  config.prm_bias = w.value("prm_bias", config.prm_bias);
  config.prm_noise = w.value("prm_noise", config.prm_noise);
  config.seed = w.value("seed", seed);
  return config;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir_arg,
                 std::optional<std::uint64_t> seed_arg, int threads) {
  const json cfg = load_config(config_path);
  const fs::path out_dir = out_dir_arg.empty() ? fs::path("simulate_out") : fs::path(out_dir_arg);
  fs::create_directories(out_dir);
  const std::uint64_t seed = seed_arg.value_or(cfg.value("seed", 0ULL));

  const World world(parse_world(cfg.value("world", json::object()), seed));
  const PrmOracle raw_oracle = PrmOracle::raw_from_world(world);

  BudgetParams params;
  const json budget_cfg = cfg.value("budget", json::object());
  params.n_max = budget_cfg.value("n_max", params.n_max);
  params.m_max = budget_cfg.value("m_max", params.m_max);
  params.k_max = budget_cfg.value("k_max", params.k_max);
  params.epsilon = budget_cfg.value("epsilon", params.epsilon);

  BeamConfig beam;
  const json beam_cfg = cfg.value("beam", json::object());
  beam.beam_width = beam_cfg.value("beam_width", beam.beam_width);
  beam.expansions = beam_cfg.value("expansions", beam.expansions);
  beam.stride = beam_cfg.value("stride", beam.stride);

  StrategyConfig strat;
  strat.trials = cfg.value("trials", 100);
  strat.seed = seed;
  strat.threads = threads;

  const auto c_grid = cfg.value("c_grid", std::vector<double>{0.99});
  const auto beta_grid = cfg.value("beta_grid", std::vector<double>{0.1});
  const auto strategies = cfg.value(
      "strategies", std::vector<std::string>{"pass1", "bon_fixed", "bon_ias"});
  auto oracle_modes = cfg.value("oracles", std::vector<std::string>{"raw", "calibrated"});

  // The calibrated oracle either loads a fitted calibrator or fits a quantile
  // model on data generated from this world.
  std::shared_ptr<const Calibrator> calibrated;
  const bool wants_calibrated =
      std::find(oracle_modes.begin(), oracle_modes.end(), "calibrated") != oracle_modes.end() ||
      std::find(oracle_modes.begin(), oracle_modes.end(), "conformal") != oracle_modes.end();
  std::shared_ptr<const Calibrator> conformal_cal;
  if (wants_calibrated) {
    if (cfg.contains("calibrator")) {
      calibrated = std::make_shared<Calibrator>(
          load_calibrator(cfg.at("calibrator").get<std::string>()));
    } else {
      const json fit_cfg = cfg.value("fit", json::object());
      std::vector<double> levels = beta_grid;
      levels.push_back(0.5);
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      levels = fit_cfg.value("levels", levels);
      const json data_cfg = cfg.value("data", json::object());
      auto records = generate_calibration_data(world, data_cfg.value("n_val", 8),
                                               data_cfg.value("n_mc", 8));
      save_records(records, (out_dir / "records.jsonl").string(), RecordFormat::jsonl);
      const DatasetSplit split = split_dataset(records, SplitFractions{0.6, 0.2, 0.2}, seed);
      auto fit = fit_quantile_model(split.fit_set, levels, parse_train_config(fit_cfg, seed));
      const double alpha = fit_cfg.value("alpha", 0.1);
      ConformalCalibrator cc;
      cc.adjustment =
          conformal_calibrate(fit.model, levels.front(), split.conformal_set, alpha);
      cc.model = fit.model;
      conformal_cal = std::make_shared<Calibrator>(std::move(cc));
      calibrated = std::make_shared<Calibrator>(std::move(fit.model));
      save_calibrator(*calibrated, (out_dir / "quantile.calibrator.json").string());
    }
  }

  std::ostringstream runs;
  runs << "strategy,C,beta,oracle,accuracy,mean_budget,budget_ratio\n";
  std::vector<std::string> outputs = {"runs.csv"};
  if (conformal_cal) outputs.push_back("records.jsonl");
  long run_index = 0;

  auto emit = [&](const RunReport& report, const std::string& strategy_name, double c,
                  double beta_level, const std::string& oracle_name, bool grid_row) {
    runs << strategy_name << ',' << (grid_row ? fmt(c) : std::string()) << ','
         << (grid_row ? fmt(beta_level) : std::string()) << ',' << oracle_name << ','
         << fmt(report.accuracy) << ',' << fmt(report.mean_budget) << ','
         << fmt(report.budget_ratio) << '\n';
    char stem[64];
    std::snprintf(stem, sizeof(stem), "run_%03ld_%s", run_index++, strategy_name.c_str());
    std::ofstream qcsv(out_dir / (std::string(stem) + "_questions.csv"));
    write_question_csv(report, qcsv);
    std::ofstream lcsv(out_dir / (std::string(stem) + "_levels.csv"));
    write_level_csv(report, lcsv);
    write_text(out_dir / (std::string(stem) + ".json"), run_report_to_json(report) + "\n");
    outputs.push_back(std::string(stem) + ".json");
  };

  auto budget_oracle_for = [&](const std::string& mode, double beta_level) {
    PrmOracle oracle = raw_oracle;
    if (mode == "calibrated") {
      oracle.route = calibrated;
      oracle.level = beta_level;
    } else if (mode == "conformal") {
      oracle.route = conformal_cal ? conformal_cal : calibrated;
      oracle.level = std::nullopt;
    } else if (mode != "raw") {
      fail(Errc::invalid_config, "unknown oracle mode '" + mode + "'");
    }
    return oracle;
  };

  // Ranking normally stays on the raw oracle; "rank_with": "calibrated"
  // switches it for ablation runs.
  const std::string rank_mode = cfg.value("rank_with", std::string("raw"));
  if (rank_mode != "raw" && rank_mode != "calibrated")
    fail(Errc::invalid_config, "unknown rank_with mode '" + rank_mode + "'");

  for (const std::string& name : strategies) {
    if (name == "pass1") {
      emit(run_bon_fixed(world, raw_oracle, 1, strat), name, 0, 0, "raw", false);
    } else if (name == "bon_fixed") {
      emit(run_bon_fixed(world, raw_oracle, params.n_max, strat), name, 0, 0, "raw", false);
    } else if (name == "beam_fixed") {
      emit(run_beam_fixed(world, raw_oracle, beam, strat), name, 0, 0, "raw", false);
    } else if (name == "bon_ias" || name == "beam_ias_m" || name == "beam_ias_k") {
      for (double c : c_grid) {
        for (double beta_level : beta_grid) {
          BudgetParams p = params;
          p.target_confidence = c;
          p.quantile_level = beta_level;
          for (const std::string& mode : oracle_modes) {
            const PrmOracle budget_oracle = budget_oracle_for(mode, beta_level);
            const PrmOracle rank_oracle =
                rank_mode == "calibrated" ? budget_oracle : raw_oracle;
            RunReport report;
            if (name == "bon_ias") {
              report = run_bon_ias(world, budget_oracle, rank_oracle, p, strat);
            } else if (name == "beam_ias_m") {
              report = run_beam_ias_of_m(world, budget_oracle, rank_oracle, beam, p, strat);
            } else {
              report = run_beam_ias_of_k(world, budget_oracle, rank_oracle, beam, p, strat);
            }
            emit(report, name, c, beta_level, mode, true);
          }
        }
      }
    } else {
      fail(Errc::invalid_config, "unknown strategy '" + name + "'");
    }
  }

  write_text(out_dir / "runs.csv", runs.str());
  Manifest manifest{"simulate", config_path, fnv1a(cfg.dump()), seed, outputs};
  write_manifest(out_dir, manifest, cfg);
  std::cout << "simulated " << run_index << " runs\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_dir_arg) {
  if (inputs.empty()) fail(Errc::invalid_config, "report needs at least one input directory");
  const fs::path out_dir = out_dir_arg.empty() ? fs::path("report_out") : fs::path(out_dir_arg);
  fs::create_directories(out_dir);

  std::ostringstream table;
  table << "source,command,name,metric,value\n";
  for (const std::string& dir : inputs) {
    const fs::path manifest_path = fs::path(dir) / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) fail(Errc::io_error, "no manifest in '" + dir + "'");
    json manifest = json::parse(in, nullptr, false);
    if (manifest.is_discarded())
      fail(Errc::io_error, "bad manifest in '" + dir + "'");
    const std::string command = manifest.value("command", "");

    const fs::path metrics_path = fs::path(dir) / "metrics.json";
    if (fs::exists(metrics_path)) {
      std::ifstream min(metrics_path);
      json metrics = json::parse(min, nullptr, false);
      if (!metrics.is_discarded()) {
        for (const auto& [name, report] : metrics.items())
          for (const auto& [key, value] : report.items())
            if (value.is_number())
              table << dir << ',' << command << ',' << name << ',' << key << ','
                    << fmt(value.get<double>()) << '\n';
      }
    }
    const fs::path runs_path = fs::path(dir) / "runs.csv";
    if (fs::exists(runs_path)) {
      std::ifstream rin(runs_path);
      std::string line;
      std::getline(rin, line);  // header
      while (std::getline(rin, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string strategy, c, beta, oracle, accuracy, mean_budget, ratio;
        std::getline(ls, strategy, ',');
        std::getline(ls, c, ',');
        std::getline(ls, beta, ',');
        std::getline(ls, oracle, ',');
        std::getline(ls, accuracy, ',');
        std::getline(ls, mean_budget, ',');
        std::getline(ls, ratio, ',');
        const std::string name = strategy + "/" + oracle + (c.empty() ? "" : "/C=" + c) +
                                 (beta.empty() ? "" : "/beta=" + beta);
        table << dir << ',' << command << ',' << name << ",accuracy," << accuracy << '\n';
        table << dir << ',' << command << ',' << name << ",budget_ratio," << ratio << '\n';
      }
    }
  }
  write_text(out_dir / "report.csv", table.str());
  std::cout << "wrote " << (out_dir / "report.csv").string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration and instance-adaptive compute budgeting for process-reward scores"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config_path;
  std::string out_dir;
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::vector<std::string> report_inputs;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out-dir", out_dir, "output directory");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "worker threads for trial loops");
    sub->add_option("--format", format, "tabular output format")
        ->check(CLI::IsMember({"json", "csv"}));
  };

  CLI::App* calibrate = app.add_subcommand("calibrate", "fit calibrators on a record file");
  add_common(calibrate, true);
  CLI::App* evaluate = app.add_subcommand("evaluate", "compute calibration metrics");
  add_common(evaluate, true);
  CLI::App* plan = app.add_subcommand("plan", "emit per-question best-of-N budgets");
  add_common(plan, true);
  CLI::App* simulate = app.add_subcommand("simulate", "run strategy grids on a synthetic world");
  add_common(simulate, true);
  CLI::App* report = app.add_subcommand("report", "aggregate run manifests into a table");
  report->add_option("--inputs", report_inputs, "run output directories")->required();
  report->add_option("--out-dir", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) return cmd_calibrate(config_path, out_dir, seed, format);
    if (evaluate->parsed()) return cmd_evaluate(config_path, out_dir, seed, format);
    if (plan->parsed()) return cmd_plan(config_path, out_dir, seed);
    if (simulate->parsed()) return cmd_simulate(config_path, out_dir, seed, threads);
    if (report->parsed()) return cmd_report(report_inputs, out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
