#pragma once

#include <stdexcept>
#include <string>

namespace auditbench {

// Failure categories surfaced by the library. The harness maps a subset of
// these to skip records instead of aborting a run (see harness.cpp).
enum class Errc {
  MissingColumn,
  BadLabel,
  EmptyFile,
  DegenerateSplit,
  EmptyTable,
  NonPositiveL2,
  TooFewRows,
  PredictionsAbsent,
  EmptyGroup,
  UndefinedRate,
  TooManyDegenerate,
  NonPositiveEpsilon,
  UnknownFeature,
  EmptyResult,
  NoPositivePredictions,
  EmptyValues,
  InvalidInterval,
  MixedConfigs,
  ConfigError,
  IoError,
};

const char* errc_name(Errc code);

class AuditError : public std::runtime_error {
 public:
  AuditError(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw AuditError(code, message);
}

}  // namespace auditbench
