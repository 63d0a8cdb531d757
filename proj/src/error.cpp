#include "auditod/error.hpp"

namespace auditod {

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidConfig:
      return ErrorCategory::Config;
    case ErrorCode::EigenFailure:
    case ErrorCode::DegenerateCovariance:
    case ErrorCode::NonFiniteLoss:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DuplicateRecordId: return "DuplicateRecordId";
    case ErrorCode::UnknownRecordId: return "UnknownRecordId";
    case ErrorCode::EmptyLabels: return "EmptyLabels";
    case ErrorCode::DegenerateLabels: return "DegenerateLabels";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

int exit_status(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Config: return 2;
    case ErrorCategory::Data: return 3;
    case ErrorCategory::Numeric: return 4;
  }
  return 1;
}

}  // namespace auditod
