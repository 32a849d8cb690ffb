#include "migra/reference.hpp"

#include "migra/error.hpp"

namespace migra::reference {

PairFeatureSet pair_features(const ZoneTablePtr& zones, const std::vector<std::string>& variables) {
  const std::size_t n = zones->size();
  for (const auto& v : variables) (void)zones->column(v);
  std::vector<double> distance;
  std::vector<std::vector<double>> intervening(variables.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      distance.push_back(distance_km(zones->centroid(i), zones->centroid(j)));
      for (std::size_t v = 0; v < variables.size(); ++v)
        intervening[v].push_back(intervening_sum(*zones, {variables[v], zones->id(i), zones->id(j)}));
    }
  }
  return PairFeatureSet(zones, variables, std::move(distance), std::move(intervening));
}

PredictedFlows predict_matrix(const ClassicModelSpec& spec, const PairFeatureSet& pairs, int year) {
  spec.validate();
  const ZoneTable& zones = pairs.zones();
  std::vector<PredictedFlows::Entry> entries;
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const double g = spec.production(zones.population(i));
    if (g == 0.0) continue;
    std::vector<double> p;
    try {
      p = predict_row_probs(spec, pairs, i);
    } catch (const Error& e) {
      if (e.code() != Errc::ZeroRow) throw;
      continue;
    }
    for (std::size_t j = 0; j < zones.size(); ++j)
      if (p[j] > 0.0) entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), g * p[j]});
  }
  return PredictedFlows(pairs.zones_ptr(), year, std::move(entries));
}

}  // namespace migra::reference
