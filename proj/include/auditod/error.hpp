#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace auditod {

enum class ErrorCode {
  // configuration
  InvalidConfig,
  // data
  FileNotFound,
  MissingHeader,
  EmptyTable,
  MalformedCsv,
  AllMissingColumn,
  NonFiniteInput,
  DuplicateRecordId,
  UnknownRecordId,
  EmptyLabels,
  DegenerateLabels,
  // numeric
  EigenFailure,
  DegenerateCovariance,
  NonFiniteLoss,
};

enum class ErrorCategory { Config, Data, Numeric };

ErrorCategory category_of(ErrorCode code) noexcept;
std::string_view to_string(ErrorCode code) noexcept;

// Process exit status for an error category: 2 config, 3 data, 4 numeric.
int exit_status(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }
  const std::string& message() const noexcept { return message_; }

  // Same error with `context` prepended to the message.
  Error with_context(const std::string& context) const { return Error(code_, context + ": " + message_); }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace auditod
