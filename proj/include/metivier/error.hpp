#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace metivier {

enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kNotSkewSymmetric,
  kDependentStructureMatrices,
  kSingularPencil,
  kNonConvergence,
  kRangeExceeded,
  kOutOfDomain,
  kUnsupportedDimension,
  kNonFiniteValue,
  kGridMismatch,
  kMalformedFile,
  kVersionMismatch,
  kTruncationDominates,
  kNyquistViolation,
  kNotHomogeneous,
  kGridTooCoarse,
  kNoUsableRadius,
  kInadmissibleRadii,
};

constexpr std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNotSkewSymmetric: return "NotSkewSymmetric";
    case ErrorCode::kDependentStructureMatrices: return "DependentStructureMatrices";
    case ErrorCode::kSingularPencil: return "SingularPencil";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kRangeExceeded: return "RangeExceeded";
    case ErrorCode::kOutOfDomain: return "OutOfDomain";
    case ErrorCode::kUnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kGridMismatch: return "GridMismatch";
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kTruncationDominates: return "TruncationDominates";
    case ErrorCode::kNyquistViolation: return "NyquistViolation";
    case ErrorCode::kNotHomogeneous: return "NotHomogeneous";
    case ErrorCode::kGridTooCoarse: return "GridTooCoarse";
    case ErrorCode::kNoUsableRadius: return "NoUsableRadius";
    case ErrorCode::kInadmissibleRadii: return "InadmissibleRadii";
  }
  return "Unknown";
}

/// Errors that signal a mathematical precondition failure rather than bad
/// input. The CLI maps these to exit code 2.
constexpr bool is_mathematical(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSingularPencil:
    case ErrorCode::kNonConvergence:
    case ErrorCode::kNoUsableRadius:
    case ErrorCode::kInadmissibleRadii:
    case ErrorCode::kTruncationDominates:
    case ErrorCode::kGridTooCoarse:
    case ErrorCode::kNotHomogeneous:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace metivier
