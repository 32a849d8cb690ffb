#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "migra/classic.hpp"
#include "migra/flows.hpp"

namespace migra {

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_zones = 50;
  std::size_t n_years = 3;
  int first_year = 2000;
  ClassicModelSpec generator{ClassicKind::gravity_power, 2.0, ProductionFn{0.03}, 0.0};
  /// Standard deviation of the log-normal multiplicative noise (0 = none).
  double noise = 0.0;
  double lat_min = 35.0, lat_max = 40.0;
  double lon_min = -95.0, lon_max = -90.0;
  /// Populations are log-uniform in [pop_min, pop_max].
  double pop_min = 1e4, pop_max = 1e6;
  /// Adds `area` and `income` feature columns.
  bool extra_features = true;
};

struct SynthDataset {
  ZoneTablePtr zones;
  std::vector<FlowMatrix> years;
};

/// Random centroids and populations; each year's flows are the generator's
/// predictions (times noise) rounded to integers. Deterministic in the
/// seed. Errors: InvalidConfig.
SynthDataset synth_dataset(const SynthConfig& config);

}  // namespace migra
