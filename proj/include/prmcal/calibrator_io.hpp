#pragma once

#include <optional>
#include <string>
#include <variant>

#include "prmcal/calibrate.hpp"
#include "prmcal/conformal.hpp"
#include "prmcal/quantile_model.hpp"

namespace prmcal {

/// Quantile model paired with its conformal offset.
struct ConformalCalibrator {
  QuantileModel model;
  ConformalAdjustment adjustment;
};

using Calibrator =
    std::variant<TemperatureScaler, IsotonicMap, HistogramBinner, QuantileModel,
                 ConformalCalibrator>;

const char* calibrator_type_name(const Calibrator& cal);

/// Applies a calibrator to one record, returning a probability in [0,1].
/// For quantile models `level` selects the quantile (default: the level
/// closest to 0.5); conformal calibrators return the lower bound at their
/// own level; the other types ignore `level`.
double apply_calibrator(const Calibrator& cal, const CalibrationRecord& rec,
                        std::optional<double> level = std::nullopt);

/// Versioned JSON document: {"type": ..., "version": 1, ...parameters}.
std::string calibrator_to_json(const Calibrator& cal);
Calibrator calibrator_from_json(const std::string& text);

void save_calibrator(const Calibrator& cal, const std::string& path);
Calibrator load_calibrator(const std::string& path);

}  // namespace prmcal
