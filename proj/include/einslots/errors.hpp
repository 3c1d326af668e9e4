// Copyright (c) 2026 The einslots authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace einslots {

// Every failure the library reports deliberately, keyed so callers (and the
// CLI exit-code mapping) can dispatch without string matching.
enum class ErrorKind {
  malformed_equation,
  rank_mismatch,
  size_conflict,
  unknown_output_label,
  repeated_label,
  implicit_output,
  does_not_fit,
  length_mismatch,
  level_exhausted,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::malformed_equation: return "MalformedEquation";
    case ErrorKind::rank_mismatch: return "RankMismatch";
    case ErrorKind::size_conflict: return "SizeConflict";
    case ErrorKind::unknown_output_label: return "UnknownOutputLabel";
    case ErrorKind::repeated_label: return "RepeatedLabel";
    case ErrorKind::implicit_output: return "ImplicitOutput";
    case ErrorKind::does_not_fit: return "DoesNotFit";
    case ErrorKind::length_mismatch: return "LengthMismatch";
    case ErrorKind::level_exhausted: return "LevelExhausted";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  const char* kind_name() const { return error_kind_name(kind_); }

  // Capacity and level errors are operational; the rest are input validation.
  bool is_capacity_error() const {
    return kind_ == ErrorKind::does_not_fit || kind_ == ErrorKind::level_exhausted;
  }

 private:
  ErrorKind kind_;
};

struct MalformedEquation : Error {
  explicit MalformedEquation(const std::string& m) : Error(ErrorKind::malformed_equation, m) {}
};
struct RankMismatch : Error {
  explicit RankMismatch(const std::string& m) : Error(ErrorKind::rank_mismatch, m) {}
};
struct SizeConflict : Error {
  explicit SizeConflict(const std::string& m) : Error(ErrorKind::size_conflict, m) {}
};
struct UnknownOutputLabel : Error {
  explicit UnknownOutputLabel(const std::string& m) : Error(ErrorKind::unknown_output_label, m) {}
};
struct RepeatedLabel : Error {
  explicit RepeatedLabel(const std::string& m) : Error(ErrorKind::repeated_label, m) {}
};
struct ImplicitOutput : Error {
  explicit ImplicitOutput(const std::string& m) : Error(ErrorKind::implicit_output, m) {}
};
struct DoesNotFit : Error {
  explicit DoesNotFit(const std::string& m) : Error(ErrorKind::does_not_fit, m) {}
};
struct LengthMismatch : Error {
  explicit LengthMismatch(const std::string& m) : Error(ErrorKind::length_mismatch, m) {}
};
struct LevelExhausted : Error {
  explicit LevelExhausted(const std::string& m) : Error(ErrorKind::level_exhausted, m) {}
};

}  // namespace einslots
