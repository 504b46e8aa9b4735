#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gravimetric {

enum class ErrorCode {
  // input (exit 2)
  Io,
  SchemaMismatch,
  BadNumber,
  NegativeValue,
  BadCode,
  NonPositiveCovariate,
  OutOfRange,
  FlagConflict,
  DuplicateAttributeKey,
  NoSectorMatch,
  InvalidSpec,
  InvalidArgument,
  NonPositiveUnderLog,
  MissingRemoteness,
  AllZeroResponse,
  InsufficientData,
  DegenerateSpread,
  EmptyYear,
  MissingDistance,
  AsymmetricDistance,
  RateAbove100Pct,
  ZeroBaseline,
  ZeroBaseValue,
  ZeroCoefficient,
  MeanOverflow,
  // convergence (exit 3)
  NotConverged,
  // numerical structure (exit 4)
  RankDeficient,
  HessianNotPositiveDefinite,
  SingularBread,
  BoundaryMaximum,
  // everything else (exit 5)
  Internal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Process exit code for an error: 2 input, 3 convergence, 4 numerical
/// structure, 5 internal.
int exit_code_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace gravimetric
