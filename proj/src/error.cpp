#include "emobench/error.hpp"

namespace emobench {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::ChannelCountMismatch: return "ChannelCountMismatch";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::DuplicateTrialId: return "DuplicateTrialId";
    case ErrorCode::EmptySession: return "EmptySession";
    case ErrorCode::MissingModality: return "MissingModality";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::InvalidBandEdges: return "InvalidBandEdges";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::MissingEventAnnotations: return "MissingEventAnnotations";
    case ErrorCode::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorCode::WrongChannelCount: return "WrongChannelCount";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::TooFewTrials: return "TooFewTrials";
    case ErrorCode::TooFewSubjects: return "TooFewSubjects";
    case ErrorCode::MissingFeatures: return "MissingFeatures";
    case ErrorCode::SingleClassTrainSet: return "SingleClassTrainSet";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::NonZeroExit: return "NonZeroExit";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace emobench
