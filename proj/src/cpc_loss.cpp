#include "migra/cpc_loss.hpp"

#include <algorithm>

#include "migra/error.hpp"
#include "migra/numeric.hpp"

namespace migra {

namespace {

struct BatchSums {
  double common;
  double total;
};

BatchSums batch_sums(std::span<const double> y, std::span<const double> y_hat) {
  if (y.empty()) throw Error(Errc::EmptyBatch, "CPC loss on an empty batch");
  if (y.size() != y_hat.size()) throw Error(Errc::SchemaMismatch, "target and prediction batches differ in size");
  CompensatedSum common, total;
  for (std::size_t i = 0; i < y.size(); ++i) {
    common += std::min(y[i], y_hat[i]);
    total += y[i];
    total += y_hat[i];
  }
  return {common.value(), total.value()};
}

}  // namespace

double cpc_loss(std::span<const double> y, std::span<const double> y_hat) {
  const auto s = batch_sums(y, y_hat);
  if (s.total == 0.0) return 0.0;
  return 1.0 - 2.0 * s.common / s.total;
}

void cpc_loss_grad(std::span<const double> y, std::span<const double> y_hat, std::span<double> grad) {
  const auto s = batch_sums(y, y_hat);
  if (grad.size() != y.size()) throw Error(Errc::SchemaMismatch, "gradient buffer has the wrong size");
  if (s.total == 0.0) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return;
  }
  const double shared = 2.0 * s.common / (s.total * s.total);
  const double under = 2.0 / s.total;
  for (std::size_t j = 0; j < y.size(); ++j) grad[j] = shared - (y_hat[j] < y[j] ? under : 0.0);
}

}  // namespace migra
