#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <variant>

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

namespace py = pybind11;
using namespace prmcal;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Calibration and instance-adaptive compute budgeting for process-reward scores";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "PrmcalError", PyExc_ValueError);

  // ----- records ----------------------------------------------------------
  py::class_<CalibrationRecord>(m, "CalibrationRecord")
      .def(py::init<>())
      .def_readwrite("question_id", &CalibrationRecord::question_id)
      .def_readwrite("trajectory_index", &CalibrationRecord::trajectory_index)
      .def_readwrite("step_index", &CalibrationRecord::step_index)
      .def_readwrite("total_steps", &CalibrationRecord::total_steps)
      .def_readwrite("raw_score", &CalibrationRecord::raw_score)
      .def_readwrite("raw_logit", &CalibrationRecord::raw_logit)
      .def_readwrite("success_count", &CalibrationRecord::success_count)
      .def_readwrite("mc_samples", &CalibrationRecord::mc_samples)
      .def_readwrite("difficulty_level", &CalibrationRecord::difficulty_level)
      .def_readwrite("features", &CalibrationRecord::features)
      .def("success_rate", &CalibrationRecord::success_rate)
      .def("step_position", &CalibrationRecord::step_position)
      .def("__eq__", [](const CalibrationRecord& a, const CalibrationRecord& b) { return a == b; })
      .def("__repr__", [](const CalibrationRecord& rec) {
        return "<CalibrationRecord " + rec.question_id + " traj " +
               std::to_string(rec.trajectory_index) + " step " +
               std::to_string(rec.step_index) + ">";
      });

  m.def("validate_record", &validate_record, py::arg("record"), py::arg("row") = -1);

  py::enum_<RecordFormat>(m, "RecordFormat")
      .value("jsonl", RecordFormat::jsonl)
      .value("csv", RecordFormat::csv);

  py::enum_<Grouping>(m, "Grouping")
      .value("by_record", Grouping::by_record)
      .value("by_question", Grouping::by_question);

  py::class_<DatasetSplit>(m, "DatasetSplit")
      .def_readonly("fit_set", &DatasetSplit::fit_set)
      .def_readonly("conformal_set", &DatasetSplit::conformal_set)
      .def_readonly("test_set", &DatasetSplit::test_set)
      .def_readonly("split_seed", &DatasetSplit::split_seed);

  m.def(
      "load_records",
      [](const std::string& path, RecordFormat format, const ColumnMap& column_map) {
        return load_records(path, format, column_map);
      },
      py::arg("path"), py::arg("format") = RecordFormat::jsonl,
      py::arg("column_map") = ColumnMap{});
  m.def("save_records", &save_records, py::arg("records"), py::arg("path"),
        py::arg("format") = RecordFormat::jsonl);
  m.def(
      "split_dataset",
      [](const std::vector<CalibrationRecord>& records, double fit, double conformal,
         double test, std::uint64_t seed, Grouping grouping) {
        return split_dataset(records, SplitFractions{fit, conformal, test}, seed, grouping);
      },
      py::arg("records"), py::arg("fit") = 0.5, py::arg("conformal") = 0.25,
      py::arg("test") = 0.25, py::arg("seed") = 0, py::arg("grouping") = Grouping::by_question);

  // ----- metrics ----------------------------------------------------------
  py::class_<MetricReport>(m, "MetricReport")
      .def_readonly("brier", &MetricReport::brier)
      .def_readonly("pos_brier", &MetricReport::pos_brier)
      .def_readonly("ece", &MetricReport::ece)
      .def_readonly("adaptive_ce", &MetricReport::adaptive_ce)
      .def_readonly("average_ce", &MetricReport::average_ce)
      .def_readonly("n_samples", &MetricReport::n_samples)
      .def_readonly("bin_count", &MetricReport::bin_count)
      .def("to_json", &metric_report_to_json);

  m.def("brier", &brier, py::arg("preds"), py::arg("targets"));
  m.def("pos_brier", &pos_brier, py::arg("preds"), py::arg("targets"));
  m.def("ece", &ece, py::arg("preds"), py::arg("targets"), py::arg("bins") = 10);
  m.def("adaptive_ce", &adaptive_ce, py::arg("preds"), py::arg("targets"),
        py::arg("bins") = 10);
  m.def("average_ce", &average_ce, py::arg("preds"), py::arg("targets"), py::arg("bins") = 10);
  m.def("compute_metrics", &compute_metrics, py::arg("preds"), py::arg("targets"),
        py::arg("bins") = 10);

  // ----- calibrators ------------------------------------------------------
  py::class_<TemperatureScaler>(m, "TemperatureScaler")
      .def(py::init<>())
      .def_readwrite("temperature", &TemperatureScaler::temperature)
      .def("apply_logit", &TemperatureScaler::apply_logit)
      .def("apply", &TemperatureScaler::apply);

  py::class_<TemperatureFit>(m, "TemperatureFit")
      .def_readonly("scaler", &TemperatureFit::scaler)
      .def_readonly("objective_value", &TemperatureFit::objective_value)
      .def_readonly("degenerate_data", &TemperatureFit::degenerate_data);

  py::enum_<TemperatureObjective>(m, "TemperatureObjective")
      .value("brier", TemperatureObjective::brier)
      .value("ece", TemperatureObjective::ece);

  m.def("fit_temperature", &fit_temperature, py::arg("records"),
        py::arg("objective") = TemperatureObjective::brier, py::arg("ece_bins") = 10);

  py::class_<IsotonicMap>(m, "IsotonicMap")
      .def(py::init<>())
      .def_readonly("scores", &IsotonicMap::scores)
      .def_readonly("values", &IsotonicMap::values)
      .def("apply_score", &IsotonicMap::apply_score)
      .def("apply", &IsotonicMap::apply);

  m.def("fit_isotonic", &fit_isotonic, py::arg("records"));
  m.def("pava", &pava, py::arg("values"), py::arg("weights"));

  py::class_<HistogramBinner>(m, "HistogramBinner")
      .def(py::init<>())
      .def_readonly("bin_count", &HistogramBinner::bin_count)
      .def_readonly("bin_values", &HistogramBinner::bin_values)
      .def_readonly("fallback_value", &HistogramBinner::fallback_value)
      .def("apply_score", &HistogramBinner::apply_score)
      .def("apply", &HistogramBinner::apply);

  m.def("fit_histogram", &fit_histogram, py::arg("records"), py::arg("bins") = 10);

  py::class_<QuantileTrainConfig>(m, "QuantileTrainConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &QuantileTrainConfig::learning_rate)
      .def_readwrite("lr_decay", &QuantileTrainConfig::lr_decay)
      .def_readwrite("max_iters", &QuantileTrainConfig::max_iters)
      .def_readwrite("tol", &QuantileTrainConfig::tol)
      .def_readwrite("seed", &QuantileTrainConfig::seed)
      .def_readwrite("use_step_position", &QuantileTrainConfig::use_step_position)
      .def_readwrite("extra_features", &QuantileTrainConfig::extra_features);

  py::class_<QuantileModel>(m, "QuantileModel")
      .def(py::init<std::vector<double>, const QuantileTrainConfig&>(), py::arg("levels"),
           py::arg("config") = QuantileTrainConfig{})
      .def("fit", &QuantileModel::fit, py::arg("records"))
      .def("predict", &QuantileModel::predict, py::arg("record"))
      .def("predict_at", &QuantileModel::predict_at, py::arg("record"), py::arg("level"))
      .def_property_readonly("quantile_levels", &QuantileModel::quantile_levels)
      .def_property_readonly("final_loss", &QuantileModel::final_loss)
      .def_property_readonly("iterations_run", &QuantileModel::iterations_run);

  m.def(
      "fit_quantile_model",
      [](const std::vector<CalibrationRecord>& fit_set, const std::vector<double>& levels,
         const QuantileTrainConfig& config) {
        auto result = fit_quantile_model(fit_set, levels, config);
        return result.model;
      },
      py::arg("fit_set"), py::arg("levels"), py::arg("config") = QuantileTrainConfig{});

  m.def("wql_loss", &wql_loss, py::arg("predictions"), py::arg("target"), py::arg("levels"));

  py::class_<ConformalAdjustment>(m, "ConformalAdjustment")
      .def(py::init<>())
      .def_readwrite("quantile_level", &ConformalAdjustment::quantile_level)
      .def_readwrite("alpha", &ConformalAdjustment::alpha)
      .def_readwrite("offset", &ConformalAdjustment::offset)
      .def_readonly("residual_count", &ConformalAdjustment::residual_count)
      .def_readonly("rank_overflow", &ConformalAdjustment::rank_overflow);

  m.def("conformal_calibrate", &conformal_calibrate, py::arg("model"), py::arg("level"),
        py::arg("conformal_set"), py::arg("alpha") = 0.1);
  m.def("conformal_lower_bound", &conformal_lower_bound, py::arg("adjustment"),
        py::arg("model"), py::arg("record"));
  m.def("conformal_from_residuals", &conformal_from_residuals, py::arg("residuals"),
        py::arg("level"), py::arg("alpha") = 0.1);

  py::class_<ConformalCalibrator>(m, "ConformalCalibrator")
      .def(py::init<>())
      .def_readwrite("model", &ConformalCalibrator::model)
      .def_readwrite("adjustment", &ConformalCalibrator::adjustment);

  m.def("apply_calibrator", &apply_calibrator, py::arg("calibrator"), py::arg("record"),
        py::arg("level") = std::nullopt);
  m.def("calibrator_to_json", &calibrator_to_json, py::arg("calibrator"));
  m.def("calibrator_from_json", &calibrator_from_json, py::arg("text"));
  m.def("save_calibrator", &save_calibrator, py::arg("calibrator"), py::arg("path"));
  m.def("load_calibrator", &load_calibrator, py::arg("path"));

  // ----- budget -----------------------------------------------------------
  py::class_<BudgetParams>(m, "BudgetParams")
      .def(py::init<>())
      .def_readwrite("target_confidence", &BudgetParams::target_confidence)
      .def_readwrite("quantile_level", &BudgetParams::quantile_level)
      .def_readwrite("n_max", &BudgetParams::n_max)
      .def_readwrite("m_max", &BudgetParams::m_max)
      .def_readwrite("k_max", &BudgetParams::k_max)
      .def_readwrite("epsilon", &BudgetParams::epsilon);

  py::enum_<BudgetKind>(m, "BudgetKind")
      .value("bon_n", BudgetKind::bon_n)
      .value("beam_m", BudgetKind::beam_m)
      .value("beam_k", BudgetKind::beam_k);

  py::class_<BudgetPlan>(m, "BudgetPlan")
      .def_readonly("kind", &BudgetPlan::kind)
      .def_readonly("value", &BudgetPlan::value)
      .def_readonly("raw_real", &BudgetPlan::raw_real)
      .def_readonly("p_used", &BudgetPlan::p_used)
      .def_readonly("target_confidence", &BudgetPlan::target_confidence)
      .def_readonly("cap", &BudgetPlan::cap);

  m.def("n_ias_real", &n_ias_real, py::arg("p"), py::arg("confidence"));
  m.def("n_ias_ceil", &n_ias_ceil, py::arg("p"), py::arg("confidence"));
  m.def("n_ias", &n_ias, py::arg("p"), py::arg("params") = BudgetParams{});
  m.def("m_ias", &m_ias, py::arg("r_min"), py::arg("beam_width"),
        py::arg("params") = BudgetParams{});
  m.def("k_ias", &k_ias, py::arg("sorted_rewards"), py::arg("expansions"),
        py::arg("params") = BudgetParams{});

  // ----- simulation world -------------------------------------------------
  py::enum_<DifficultyDistribution>(m, "DifficultyDistribution")
      .value("uniform_grid_5_levels", DifficultyDistribution::uniform_grid_5_levels)
      .value("beta", DifficultyDistribution::beta);

  py::enum_<StepModel>(m, "StepModel")
      .value("absorbing_failure", StepModel::absorbing_failure)
      .value("drifting_logit", StepModel::drifting_logit);

  py::class_<WorldConfig>(m, "WorldConfig")
      .def(py::init<>())
      .def_readwrite("n_questions", &WorldConfig::n_questions)
      .def_readwrite("difficulty", &WorldConfig::difficulty)
      .def_readwrite("beta_a", &WorldConfig::beta_a)
      .def_readwrite("beta_b", &WorldConfig::beta_b)
      .def_readwrite("steps", &WorldConfig::steps)
      .def_readwrite("step_model", &WorldConfig::step_model)
      .def_readwrite("final_success", &WorldConfig::final_success)
      .def_readwrite("drift_step", &WorldConfig::drift_step)
      .def_readwrite("prm_bias", &WorldConfig::prm_bias)
      .def_readwrite("prm_noise", &WorldConfig::prm_noise)
      .def_readwrite("seed", &WorldConfig::seed);

  py::class_<Question>(m, "Question")
      .def_readonly("id", &Question::id)
      .def_readonly("level", &Question::level)
      .def_readonly("p0", &Question::p0);

  py::class_<PrefixState>(m, "PrefixState")
      .def(py::init<>())
      .def_readwrite("question", &PrefixState::question)
      .def_readwrite("step", &PrefixState::step)
      .def_readwrite("alive", &PrefixState::alive)
      .def_readwrite("logit", &PrefixState::logit);

  py::class_<World>(m, "World")
      .def(py::init<const WorldConfig&>(), py::arg("config"))
      .def_property_readonly("n_questions", &World::n_questions)
      .def("question", &World::question, py::return_value_policy::reference_internal)
      .def("initial_state", &World::initial_state)
      .def("true_success_prob", &World::true_success_prob);

  py::class_<PrmOracle>(m, "PrmOracle")
      .def(py::init([](double bias, double noise) {
             PrmOracle oracle;
             oracle.bias = bias;
             oracle.noise = noise;
             return oracle;
           }),
           py::arg("bias") = 0.0, py::arg("noise") = 0.0)
      .def_readwrite("bias", &PrmOracle::bias)
      .def_readwrite("noise", &PrmOracle::noise)
      .def(
          "with_calibrator",
          [](const PrmOracle& oracle, const Calibrator& cal, std::optional<double> level) {
            PrmOracle routed = oracle;
            routed.route = std::make_shared<Calibrator>(cal);
            routed.level = level;
            return routed;
          },
          py::arg("calibrator"), py::arg("level") = std::nullopt,
          "Returns a copy whose scores pass through the calibrator.")
      .def_static("raw_from_world", &PrmOracle::raw_from_world, py::arg("world"));

  m.def("generate_calibration_data", &generate_calibration_data, py::arg("world"),
        py::arg("n_val") = 8, py::arg("n_mc") = 8);

  // ----- strategies -------------------------------------------------------
  py::enum_<Selector>(m, "Selector")
      .value("prm_score", Selector::prm_score)
      .value("perfect", Selector::perfect);

  py::class_<StrategyConfig>(m, "StrategyConfig")
      .def(py::init<>())
      .def_readwrite("trials", &StrategyConfig::trials)
      .def_readwrite("seed", &StrategyConfig::seed)
      .def_readwrite("selector", &StrategyConfig::selector)
      .def_readwrite("threads", &StrategyConfig::threads);

  py::class_<BeamConfig>(m, "BeamConfig")
      .def(py::init<>())
      .def_readwrite("beam_width", &BeamConfig::beam_width)
      .def_readwrite("expansions", &BeamConfig::expansions)
      .def_readwrite("stride", &BeamConfig::stride);

  py::class_<QuestionStat>(m, "QuestionStat")
      .def_readonly("question_id", &QuestionStat::question_id)
      .def_readonly("level", &QuestionStat::level)
      .def_readonly("accuracy", &QuestionStat::accuracy)
      .def_readonly("mean_budget", &QuestionStat::mean_budget);

  py::class_<StratumStat>(m, "StratumStat")
      .def_readonly("level", &StratumStat::level)
      .def_readonly("n_questions", &StratumStat::n_questions)
      .def_readonly("accuracy", &StratumStat::accuracy)
      .def_readonly("mean_budget", &StratumStat::mean_budget);

  py::class_<RunReport>(m, "RunReport")
      .def_readonly("strategy", &RunReport::strategy)
      .def_readonly("trials", &RunReport::trials)
      .def_readonly("seed", &RunReport::seed)
      .def_readonly("accuracy", &RunReport::accuracy)
      .def_readonly("mean_budget", &RunReport::mean_budget)
      .def_readonly("baseline_budget", &RunReport::baseline_budget)
      .def_readonly("budget_ratio", &RunReport::budget_ratio)
      .def_readonly("per_question", &RunReport::per_question)
      .def_readonly("by_level", &RunReport::by_level)
      .def("to_json", &run_report_to_json);

  m.def("run_bon_fixed", &run_bon_fixed, py::arg("world"), py::arg("rank_oracle"),
        py::arg("n"), py::arg("config"));
  m.def("run_bon_ias", &run_bon_ias, py::arg("world"), py::arg("budget_oracle"),
        py::arg("rank_oracle"), py::arg("params"), py::arg("config"));
  m.def("run_beam_fixed", &run_beam_fixed, py::arg("world"), py::arg("rank_oracle"),
        py::arg("beam"), py::arg("config"));
  m.def("run_beam_ias_of_m", &run_beam_ias_of_m, py::arg("world"), py::arg("budget_oracle"),
        py::arg("rank_oracle"), py::arg("beam"), py::arg("params"), py::arg("config"));
  m.def("run_beam_ias_of_k", &run_beam_ias_of_k, py::arg("world"), py::arg("budget_oracle"),
        py::arg("rank_oracle"), py::arg("beam"), py::arg("params"), py::arg("config"));
}
