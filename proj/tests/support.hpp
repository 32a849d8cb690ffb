#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "migra/flows.hpp"
#include "migra/numeric.hpp"
#include "migra/zones.hpp"

namespace testing {

struct Z {
  std::string id;
  double lat, lon, pop;
  std::vector<double> features = {};
};

inline migra::ZoneTablePtr zones(std::vector<Z> rows, std::vector<std::string> feature_names = {}) {
  std::vector<migra::ZoneRecord> recs;
  for (auto& r : rows) recs.push_back({r.id, migra::Centroid(r.lat, r.lon), r.pop, r.features});
  return std::make_shared<const migra::ZoneTable>(std::move(feature_names), std::move(recs));
}

inline std::string zone_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "Z%04zu", i);
  return buf;
}

/// Random centroids in a box, log-uniform populations, two features.
inline migra::ZoneTablePtr random_zones(migra::Rng& rng, std::size_t n, double box_deg = 5.0) {
  std::vector<Z> rows;
  for (std::size_t i = 0; i < n; ++i)
    rows.push_back({zone_id(i), 35.0 + rng.uniform(0.0, box_deg), -95.0 + rng.uniform(0.0, box_deg),
                    std::exp(rng.uniform(std::log(1e3), std::log(1e6))),
                    {rng.uniform(10.0, 1000.0), rng.uniform(-1.0, 1.0)}});
  return zones(std::move(rows), {"area", "score"});
}

/// Each off-diagonal pair is positive with probability `density`.
inline migra::FlowMatrix random_flows(const migra::ZoneTablePtr& z, migra::Rng& rng, double density, int year = 2000,
                                      std::int64_t max_count = 50) {
  std::vector<migra::FlowMatrix::Entry> e;
  const auto n = static_cast<std::uint32_t>(z->size());
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      if (i != j && rng.uniform() < density) e.push_back({i, j, rng.uniform_int(1, max_count)});
  return migra::FlowMatrix(z, year, std::move(e));
}

inline migra::PredictedFlows random_pred(const migra::ZoneTablePtr& z, migra::Rng& rng, double density, int year = 2000) {
  std::vector<migra::PredictedFlows::Entry> e;
  const auto n = static_cast<std::uint32_t>(z->size());
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j)
      if (i != j && rng.uniform() < density) e.push_back({i, j, rng.uniform(0.0, 60.0)});
  return migra::PredictedFlows(z, year, std::move(e));
}

/// n*n row-major copy, diagonal zero.
template <class V>
std::vector<double> dense(const migra::BasicFlowMatrix<V>& m) {
  const std::size_t n = m.zone_count();
  std::vector<double> d(n * n, 0.0);
  for (const auto& e : m.entries()) d[e.origin * n + e.destination] = static_cast<double>(e.value);
  return d;
}

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace testing
