#pragma once

#include <stdexcept>
#include <string>

namespace emobench {

// Every failure the engine can report carries one of these codes so callers
// (and tests) can branch on the kind of failure instead of parsing messages.
enum class ErrorCode {
  // dataset manifest
  MissingFile,
  ChannelCountMismatch,
  UnknownLabel,
  DuplicateTrialId,
  EmptySession,
  MissingModality,
  // signal containers
  BadMagic,
  TruncatedPayload,
  NonFiniteSample,
  IoFailure,
  // preprocessing
  ChannelMismatch,
  InvalidBandEdges,
  SignalTooShort,
  DegenerateCovariance,
  // auxiliary features
  MissingEventAnnotations,
  NonMonotonicTimestamps,
  WrongChannelCount,
  RowCountMismatch,
  // splitting
  TooFewTrials,
  TooFewSubjects,
  MissingFeatures,
  // models
  SingleClassTrainSet,
  NonFiniteLoss,
  RankDeficient,
  // external-model adapter
  ProtocolViolation,
  Timeout,
  NonZeroExit,
  // metrics
  LengthMismatch,
  LabelOutOfRange,
  EmptyInput,
  // configuration
  InvalidConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace emobench
