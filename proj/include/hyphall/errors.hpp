#pragma once

#include <stdexcept>
#include <string>

namespace hyphall {

// Failure classes used across the library.  CLI maps these to exit codes:
// config -> 1, solver/degeneracy -> 2, invariant violations -> 3.
enum class ErrorKind {
  Config,
  InvalidIsometry,
  NumericalDegeneracy,
  Construction,
  Freeness,
  Placement,
  Solver,
  TruncationInsufficient,
  InternalConsistency,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "config";
    case ErrorKind::InvalidIsometry: return "invalid-isometry";
    case ErrorKind::NumericalDegeneracy: return "numerical-degeneracy";
    case ErrorKind::Construction: return "construction";
    case ErrorKind::Freeness: return "freeness";
    case ErrorKind::Placement: return "placement";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::TruncationInsufficient: return "truncation-insufficient";
    case ErrorKind::InternalConsistency: return "internal-consistency";
  }
  return "unknown";
}

}  // namespace hyphall
