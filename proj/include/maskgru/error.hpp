// Copyright 2026 The maskgru Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef MASKGRU_ERROR_HPP_
#define MASKGRU_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace maskgru {

enum class Errc {
  kInvalidInput,
  kConfigMismatch,
  kShapeError,
  kInvalidMask,
  kUnsupportedFormat,
  kCorruptFile,
  kDegenerateSignal,
  kInvalidDelay,
  kInsufficientCorpus,
  kInvalidConfig,
  kAttainabilityViolation,
  kInvalidState,
  kCorruptCheckpoint,
  kTooShort,
  kCorruptTestset,
  kNumericalAbort,
};

inline std::string_view ErrcName(Errc code);

// Every failure raised by the library carries one of the codes above so
// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

inline std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kInvalidInput: return "InvalidInput";
    case Errc::kConfigMismatch: return "ConfigMismatch";
    case Errc::kShapeError: return "ShapeError";
    case Errc::kInvalidMask: return "InvalidMask";
    case Errc::kUnsupportedFormat: return "UnsupportedFormat";
    case Errc::kCorruptFile: return "CorruptFile";
    case Errc::kDegenerateSignal: return "DegenerateSignal";
    case Errc::kInvalidDelay: return "InvalidDelay";
    case Errc::kInsufficientCorpus: return "InsufficientCorpus";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kAttainabilityViolation: return "AttainabilityViolation";
    case Errc::kInvalidState: return "InvalidState";
    case Errc::kCorruptCheckpoint: return "CorruptCheckpoint";
    case Errc::kTooShort: return "TooShort";
    case Errc::kCorruptTestset: return "CorruptTestset";
    case Errc::kNumericalAbort: return "NumericalAbort";
  }
  return "Unknown";
}

}  // namespace maskgru

#endif  // MASKGRU_ERROR_HPP_
