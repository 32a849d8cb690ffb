#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace migra {

enum class Errc {
  InvalidCentroid,
  UnknownZone,
  UnknownFeature,
  ParseError,
  NegativeCount,
  DiagonalEntry,
  InvalidConfig,
  ZoneUniverseMismatch,
  MissingDistance,
  DegenerateTruth,
  AllZeroPopulations,
  ZeroRow,
  ZeroDistance,
  CalibrationFailed,
  EmptyBatch,
  DegenerateBatch,
  NonFiniteLoss,
  SchemaMismatch,
  NoPositives,
  AllTrialsFailed,
  InsufficientYears,
  IoError,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI exit path) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace migra
