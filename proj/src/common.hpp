#pragma once

// Shared error vocabulary and small utilities used across the library.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fb {

enum class ErrorCode {
  InvalidArgument,
  Overflow,
  BoundInvalid,
  EigenFailure,
  SingularFactor,
  EigenvalueCollision,
  StepUnderflow,
  MaxSteps,
  NonFinite,
  AcceptanceTooLow,
  AllStartsFailed,
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:     return "InvalidArgument";
    case ErrorCode::Overflow:            return "Overflow";
    case ErrorCode::BoundInvalid:        return "BoundInvalid";
    case ErrorCode::EigenFailure:        return "EigenFailure";
    case ErrorCode::SingularFactor:      return "SingularFactor";
    case ErrorCode::EigenvalueCollision: return "EigenvalueCollision";
    case ErrorCode::StepUnderflow:       return "StepUnderflow";
    case ErrorCode::MaxSteps:            return "MaxSteps";
    case ErrorCode::NonFinite:           return "NonFinite";
    case ErrorCode::AcceptanceTooLow:    return "AcceptanceTooLow";
    case ErrorCode::AllStartsFailed:     return "AllStartsFailed";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

// Sum with a fixed pairwise reduction order. The result depends only on the
// contents of v, never on thread count or summation chunking upstream.
inline double pairwise_sum(const std::vector<double>& v) {
  struct Rec {
    static double run(const double* p, std::size_t n) {
      if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += p[i];
        return s;
      }
      std::size_t h = n / 2;
      return run(p, h) + run(p + h, n - h);
    }
  };
  return Rec::run(v.data(), v.size());
}

}  // namespace fb
