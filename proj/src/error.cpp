#include "migra/error.hpp"

namespace migra {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidCentroid: return "InvalidCentroid";
    case Errc::UnknownZone: return "UnknownZone";
    case Errc::UnknownFeature: return "UnknownFeature";
    case Errc::ParseError: return "ParseError";
    case Errc::NegativeCount: return "NegativeCount";
    case Errc::DiagonalEntry: return "DiagonalEntry";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ZoneUniverseMismatch: return "ZoneUniverseMismatch";
    case Errc::MissingDistance: return "MissingDistance";
    case Errc::DegenerateTruth: return "DegenerateTruth";
    case Errc::AllZeroPopulations: return "AllZeroPopulations";
    case Errc::ZeroRow: return "ZeroRow";
    case Errc::ZeroDistance: return "ZeroDistance";
    case Errc::CalibrationFailed: return "CalibrationFailed";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::DegenerateBatch: return "DegenerateBatch";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::NoPositives: return "NoPositives";
    case Errc::AllTrialsFailed: return "AllTrialsFailed";
    case Errc::InsufficientYears: return "InsufficientYears";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace migra
