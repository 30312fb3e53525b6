#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairtab {

enum class ErrorKind {
  kShape,
  kDomain,
  kLabel,
  kBatchSize,
  kContract,
  kNumeric,
  kGroupMissing,
  kUndefinedRatio,
  kDegenerateLabels,
  kAlignment,
  kValidation,
  kIngestion,
  kSplit,
  kConfig,
  kState,
  kTraining,
  kRoster,
  kIo,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kLabel: return "label error";
    case ErrorKind::kBatchSize: return "batch-size error";
    case ErrorKind::kContract: return "contract violation";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kGroupMissing: return "group-missing error";
    case ErrorKind::kUndefinedRatio: return "undefined-ratio error";
    case ErrorKind::kDegenerateLabels: return "degenerate-labels error";
    case ErrorKind::kAlignment: return "alignment error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kIngestion: return "ingestion error";
    case ErrorKind::kSplit: return "split error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kState: return "state error";
    case ErrorKind::kTraining: return "training error";
    case ErrorKind::kRoster: return "roster error";
    case ErrorKind::kIo: return "i/o error";
  }
  return "error";
}

/// Every failure raised by the library. The kind selects the CLI exit code and
/// lets tests distinguish error paths without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace fairtab
