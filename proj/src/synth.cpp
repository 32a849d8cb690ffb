#include "migra/synth.hpp"

#include <cmath>
#include <cstdio>

#include "migra/error.hpp"
#include "migra/numeric.hpp"
#include "migra/pairs.hpp"

namespace migra {

SynthDataset synth_dataset(const SynthConfig& c) {
  if (c.n_zones < 2) throw Error(Errc::InvalidConfig, "synthetic data needs at least 2 zones");
  if (c.n_years < 1) throw Error(Errc::InvalidConfig, "synthetic data needs at least 1 year");
  if (!(c.noise >= 0.0)) throw Error(Errc::InvalidConfig, "noise must be >= 0");
  if (!(c.pop_min > 0.0 && c.pop_min <= c.pop_max)) throw Error(Errc::InvalidConfig, "invalid population range");
  if (!(c.lat_min <= c.lat_max && c.lon_min <= c.lon_max)) throw Error(Errc::InvalidConfig, "invalid extent");
  c.generator.validate();

  Rng rng(derive_seed(c.seed, {0}));
  const int width = static_cast<int>(std::to_string(c.n_zones - 1).size());
  std::vector<ZoneRecord> rows;
  rows.reserve(c.n_zones);
  for (std::size_t i = 0; i < c.n_zones; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "Z%0*zu", width, i);
    const double lat = rng.uniform(c.lat_min, c.lat_max);
    const double lon = rng.uniform(c.lon_min, c.lon_max);
    const double pop = std::round(std::exp(rng.uniform(std::log(c.pop_min), std::log(c.pop_max))));
    ZoneRecord r{id, Centroid(lat, lon), pop, {}};
    if (c.extra_features) {
      r.features.push_back(std::round(rng.uniform(100.0, 5000.0)));   // area
      r.features.push_back(std::round(rng.uniform(30000.0, 90000.0)));  // income
    }
    rows.push_back(std::move(r));
  }
  std::vector<std::string> names;
  if (c.extra_features) names = {"area", "income"};
  auto zones = std::make_shared<const ZoneTable>(std::move(names), std::move(rows));

  const PairFeatureSet pairs = pair_features(zones, {std::string(kPopulationColumn)});
  const PredictedFlows expected = predict_matrix(c.generator, pairs, c.first_year);

  SynthDataset out{zones, {}};
  for (std::size_t y = 0; y < c.n_years; ++y) {
    Rng noise(derive_seed(c.seed, {1, y}));
    std::vector<FlowMatrix::Entry> entries;
    for (const auto& e : expected.entries()) {
      double v = e.value;
      if (c.noise > 0.0) v *= std::exp(c.noise * noise.normal() - 0.5 * c.noise * c.noise);
      const auto count = static_cast<std::int64_t>(std::llround(v));
      if (count > 0) entries.push_back({e.origin, e.destination, count});
    }
    out.years.emplace_back(zones, c.first_year + static_cast<int>(y), std::move(entries));
  }
  return out;
}

}  // namespace migra
