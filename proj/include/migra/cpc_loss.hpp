#pragma once

#include <span>

namespace migra {

/// Mini-batch CPC loss: 1 - 2 sum min(y, y^) / (sum y + sum y^).
/// Predictions are assumed non-negative. A batch with sum y + sum y^ == 0
/// has loss 0. Errors: EmptyBatch, SchemaMismatch (length mismatch).
double cpc_loss(std::span<const double> y, std::span<const double> y_hat);

/// dL/dy^_j = 2 S / D^2 - [y^_j < y_j] 2 / D with S = sum min(y, y^) and
/// D = sum y + sum y^. At y^_j == y_j the indicator is false. A degenerate
/// batch (D == 0) gets a zero gradient.
void cpc_loss_grad(std::span<const double> y, std::span<const double> y_hat, std::span<double> grad);

}  // namespace migra
