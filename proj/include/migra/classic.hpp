#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "migra/flows.hpp"
#include "migra/pairs.hpp"

namespace migra {

/// G_i = alpha * m_i: expected out-migrants per timestep.
struct ProductionFn {
  double alpha = 0.0;
  double operator()(double population) const noexcept { return alpha * population; }
};

/// Least-squares slope through the origin of (m_i, O_i):
/// alpha = sum m_i O_i / sum m_i^2. Errors: AllZeroPopulations.
ProductionFn fit_production(std::span<const double> populations, std::span<const double> outgoing);

enum class ClassicKind { radiation, ext_radiation, gravity_power, gravity_exp };

std::string_view to_string(ClassicKind kind) noexcept;
/// Throws Errc::InvalidConfig for unknown names.
ClassicKind parse_classic_kind(std::string_view name);
bool needs_beta(ClassicKind kind) noexcept;

struct ClassicModelSpec {
  ClassicKind kind = ClassicKind::radiation;
  std::optional<double> beta;
  ProductionFn production;
  /// Lower bound applied to distances by gravity_power. 0 means a zero
  /// distance is an error.
  double distance_floor_km = 0.0;

  /// Throws Errc::InvalidConfig when beta is missing/non-positive for a
  /// kind that needs it, or alpha is negative.
  void validate() const;
};

void to_json(nlohmann::json& j, const ClassicModelSpec& s);
void from_json(const nlohmann::json& j, ClassicModelSpec& s);

/// Unnormalized kernel value for one (i, j) pair.
/// m_i, m_j: populations; s: intervening population; d: distance in km.
double classic_kernel(ClassicKind kind, double beta, double m_i, double m_j, double s, double d);

/// P_ij for a single origin, renormalized to sum to 1. The returned vector
/// has one entry per zone; the origin's own entry is 0.
/// Errors: ZeroRow, ZeroDistance, UnknownFeature (radiation kinds need the
/// intervening population variable in `pairs`), InvalidConfig.
std::vector<double> predict_row_probs(const ClassicModelSpec& spec, const PairFeatureSet& pairs, std::size_t origin);

/// T^_ij = alpha * m_i * P_ij over all origins, parallel over rows.
/// Origins whose row is all-zero contribute nothing and are reported
/// through `zero_rows` when given.
PredictedFlows predict_matrix(const ClassicModelSpec& spec, const PairFeatureSet& pairs, int year,
                              std::vector<std::size_t>* zero_rows = nullptr);

struct CalibrationOptions {
  double log_beta_min = -6.907755278982137;  // log(1e-3)
  double log_beta_max = 4.605170185988092;   // log(1e2)
  double relative_tolerance = 1e-3;
  int grid_points = 50;
};

struct Calibration {
  ClassicModelSpec spec;
  double train_cpc = 0.0;
  bool used_grid_fallback = false;
};

/// Maximizes cpc(train, predict_matrix(spec)) over beta by golden-section
/// search on log beta, cross-checked against a log-spaced grid.
/// Errors: InvalidConfig for radiation, CalibrationFailed.
Calibration calibrate_beta(ClassicKind kind, const PairFeatureSet& pairs, const FlowMatrix& train,
                           const ProductionFn& production, const CalibrationOptions& options = {});

}  // namespace migra
