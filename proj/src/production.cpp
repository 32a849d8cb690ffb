#include "migra/production.hpp"

#include "migra/error.hpp"
#include "migra/numeric.hpp"

namespace migra {

PredictedFlows apply_production(const PredictedFlows& pred, const ProductionFn& production,
                                std::span<const double> populations) {
  if (populations.size() != pred.zone_count())
    throw Error(Errc::SchemaMismatch, "population vector does not match the zone count");
  std::vector<PredictedFlows::Entry> out;
  out.reserve(pred.nnz());
  for (std::size_t i = 0; i < pred.zone_count(); ++i) {
    const auto row = pred.row(i);
    CompensatedSum s;
    for (const auto& e : row) s += e.value;
    const double total = s.value();
    if (!(total > 0.0)) continue;
    const double scale = production(populations[i]) / total;
    for (const auto& e : row) out.push_back({e.origin, e.destination, e.value * scale});
  }
  return PredictedFlows(pred.zones_ptr(), pred.year(), std::move(out));
}

}  // namespace migra
