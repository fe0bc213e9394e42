#pragma once

#include <stdexcept>
#include <string>

namespace prmcal {

enum class Errc {
  malformed_row,
  missing_field,
  invariant_violation,
  empty_split,
  length_mismatch,
  empty_input,
  out_of_range,
  invalid_bin_count,
  missing_logits,
  missing_scores,
  non_finite_loss,
  empty_fit_set,
  missing_feature,
  empty_conformal_set,
  invalid_probability,
  invalid_k,
  invalid_m,
  invalid_n,
  unsorted_input,
  invalid_beam_params,
  invalid_config,
  io_error,
};

const char* errc_name(Errc c);

/// Exception carrying a machine-checkable error code next to the message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::malformed_row: return "MalformedRow";
    case Errc::missing_field: return "MissingField";
    case Errc::invariant_violation: return "InvariantViolation";
    case Errc::empty_split: return "EmptySplit";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::empty_input: return "EmptyInput";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::invalid_bin_count: return "InvalidBinCount";
    case Errc::missing_logits: return "MissingLogits";
    case Errc::missing_scores: return "MissingScores";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::empty_fit_set: return "EmptyFitSet";
    case Errc::missing_feature: return "MissingFeature";
    case Errc::empty_conformal_set: return "EmptyConformalSet";
    case Errc::invalid_probability: return "InvalidProbability";
    case Errc::invalid_k: return "InvalidK";
    case Errc::invalid_m: return "InvalidM";
    case Errc::invalid_n: return "InvalidN";
    case Errc::unsorted_input: return "UnsortedInput";
    case Errc::invalid_beam_params: return "InvalidBeamParams";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::io_error: return "IoError";
  }
  return "Error";
}

}  // namespace prmcal
