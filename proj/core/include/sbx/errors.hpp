#pragma once

#include <stdexcept>
#include <string>

namespace sbx {

enum class ErrorCode {
  // panel
  EmptyInput,
  NonFiniteMetric,
  CalendarGapUnresolvable,
  // design
  DegenerateFeatures,
  TooFewUnits,
  OddHorizon,
  // calibrate
  ShortPanel,
  RankDeficientBasis,
  ZeroSeasonality,
  DegenerateSeries,
  NonPositiveBaseline,
  // generate
  DimensionMismatch,
  // estimate
  NotIdentified,
  SingleCluster,
  // evaluate
  NonPositiveSE,
  HorizonTooLong,
  // cli / config
  SchemaError,
  IoError,
  // generic precondition violation
  InvalidArgument,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteMetric: return "NonFiniteMetric";
    case ErrorCode::CalendarGapUnresolvable: return "CalendarGapUnresolvable";
    case ErrorCode::DegenerateFeatures: return "DegenerateFeatures";
    case ErrorCode::TooFewUnits: return "TooFewUnits";
    case ErrorCode::OddHorizon: return "OddHorizon";
    case ErrorCode::ShortPanel: return "ShortPanel";
    case ErrorCode::RankDeficientBasis: return "RankDeficientBasis";
    case ErrorCode::ZeroSeasonality: return "ZeroSeasonality";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::NonPositiveBaseline: return "NonPositiveBaseline";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotIdentified: return "NotIdentified";
    case ErrorCode::SingleCluster: return "SingleCluster";
    case ErrorCode::NonPositiveSE: return "NonPositiveSE";
    case ErrorCode::HorizonTooLong: return "HorizonTooLong";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

/// Exception carrying a machine-checkable code plus a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sbx
