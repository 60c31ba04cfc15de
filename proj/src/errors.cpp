#include "auditbench/errors.hpp"

namespace auditbench {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::BadLabel: return "BadLabel";
    case Errc::EmptyFile: return "EmptyFile";
    case Errc::DegenerateSplit: return "DegenerateSplit";
    case Errc::EmptyTable: return "EmptyTable";
    case Errc::NonPositiveL2: return "NonPositiveL2";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::PredictionsAbsent: return "PredictionsAbsent";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::UndefinedRate: return "UndefinedRate";
    case Errc::TooManyDegenerate: return "TooManyDegenerate";
    case Errc::NonPositiveEpsilon: return "NonPositiveEpsilon";
    case Errc::UnknownFeature: return "UnknownFeature";
    case Errc::EmptyResult: return "EmptyResult";
    case Errc::NoPositivePredictions: return "NoPositivePredictions";
    case Errc::EmptyValues: return "EmptyValues";
    case Errc::InvalidInterval: return "InvalidInterval";
    case Errc::MixedConfigs: return "MixedConfigs";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace auditbench
