#pragma once

#include <span>

#include "migra/classic.hpp"
#include "migra/flows.hpp"

namespace migra {

/// T'_ij = M(m_i) * T^_ij / sum_k T^_ik. Rows that are entirely zero stay
/// zero. Errors: SchemaMismatch when `populations` has the wrong length.
PredictedFlows apply_production(const PredictedFlows& pred, const ProductionFn& production,
                                std::span<const double> populations);

}  // namespace migra
