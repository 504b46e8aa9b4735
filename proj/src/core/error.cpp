#include "gravimetric/error.hpp"

namespace gravimetric {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io: return "Io";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::BadNumber: return "BadNumber";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::BadCode: return "BadCode";
    case ErrorCode::NonPositiveCovariate: return "NonPositiveCovariate";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::FlagConflict: return "FlagConflict";
    case ErrorCode::DuplicateAttributeKey: return "DuplicateAttributeKey";
    case ErrorCode::NoSectorMatch: return "NoSectorMatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveUnderLog: return "NonPositiveUnderLog";
    case ErrorCode::MissingRemoteness: return "MissingRemoteness";
    case ErrorCode::AllZeroResponse: return "AllZeroResponse";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DegenerateSpread: return "DegenerateSpread";
    case ErrorCode::EmptyYear: return "EmptyYear";
    case ErrorCode::MissingDistance: return "MissingDistance";
    case ErrorCode::AsymmetricDistance: return "AsymmetricDistance";
    case ErrorCode::RateAbove100Pct: return "RateAbove100Pct";
    case ErrorCode::ZeroBaseline: return "ZeroBaseline";
    case ErrorCode::ZeroBaseValue: return "ZeroBaseValue";
    case ErrorCode::ZeroCoefficient: return "ZeroCoefficient";
    case ErrorCode::MeanOverflow: return "MeanOverflow";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::HessianNotPositiveDefinite: return "HessianNotPositiveDefinite";
    case ErrorCode::SingularBread: return "SingularBread";
    case ErrorCode::BoundaryMaximum: return "BoundaryMaximum";
    case ErrorCode::Internal: return "InternalError";
  }
  return "InternalError";
}

int exit_code_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotConverged: return 3;
    case ErrorCode::RankDeficient:
    case ErrorCode::HessianNotPositiveDefinite:
    case ErrorCode::SingularBread:
    case ErrorCode::BoundaryMaximum: return 4;
    case ErrorCode::Internal: return 5;
    default: return 2;
  }
}

}  // namespace gravimetric
