#include "migra/pairs.hpp"

#include <algorithm>
#include <numeric>

#include "migra/error.hpp"

namespace migra {

double intervening_sum(const ZoneTable& zones, const InterveningQuery& q) {
  const std::size_t i = zones.index_of(q.origin);
  const std::size_t j = zones.index_of(q.destination);
  const auto x = zones.column(q.variable);
  const Centroid& ci = zones.centroid(i);
  const double radius = distance_km(ci, zones.centroid(j));
  double sum = 0.0;
  for (std::size_t k = 0; k < zones.size(); ++k) {
    if (k == i || k == j) continue;
    if (distance_km(ci, zones.centroid(k)) < radius) sum += x[k];
  }
  return sum;
}

std::string intervening_column(std::string_view variable) { return "intervening_" + std::string(variable); }

PairFeatureSet::PairFeatureSet(ZoneTablePtr zones, std::vector<std::string> variables, std::vector<double> distance,
                               std::vector<std::vector<double>> intervening)
    : zones_(std::move(zones)),
      variables_(std::move(variables)),
      distance_(std::move(distance)),
      intervening_(std::move(intervening)) {
  const std::size_t n = zones_->size();
  const std::size_t expected = n < 2 ? 0 : n * (n - 1);
  if (distance_.size() != expected || intervening_.size() != variables_.size())
    throw Error(Errc::InvalidConfig, "pair feature arrays do not match the zone table");
  for (const auto& col : intervening_)
    if (col.size() != expected) throw Error(Errc::InvalidConfig, "pair feature arrays do not match the zone table");
}

bool PairFeatureSet::has_variable(std::string_view name) const noexcept {
  return std::find(variables_.begin(), variables_.end(), name) != variables_.end();
}

std::size_t PairFeatureSet::variable_index(std::string_view name) const {
  auto it = std::find(variables_.begin(), variables_.end(), name);
  if (it == variables_.end())
    throw Error(Errc::UnknownFeature, "pair features lack intervening '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - variables_.begin());
}

std::vector<std::string> PairFeatureSet::column_names() const {
  std::vector<std::string> out{"distance"};
  for (const auto& v : variables_) out.push_back(intervening_column(v));
  return out;
}

std::span<const double> PairFeatureSet::column(std::string_view name) const {
  if (name == "distance") return distance_;
  for (std::size_t v = 0; v < variables_.size(); ++v)
    if (name == intervening_column(variables_[v])) return intervening_[v];
  throw Error(Errc::UnknownFeature, "no pair column '" + std::string(name) + "'");
}

PairFeatureSet pair_features(const ZoneTablePtr& zones, const std::vector<std::string>& variables) {
  const std::size_t n = zones->size();
  std::vector<std::span<const double>> columns;
  for (const auto& v : variables) columns.push_back(zones->column(v));

  const std::size_t pairs = n < 2 ? 0 : n * (n - 1);
  std::vector<double> distance(pairs);
  std::vector<std::vector<double>> intervening(variables.size(), std::vector<double>(pairs));

  const auto n_signed = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
  {
    std::vector<double> d(n);
    std::vector<std::size_t> order;
    std::vector<double> sorted_d;
    std::vector<double> prefix;
    order.reserve(n);
    sorted_d.reserve(n);
    prefix.reserve(n + 1);
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t io = 0; io < n_signed; ++io) {
      const auto i = static_cast<std::size_t>(io);
      const Centroid& ci = zones->centroid(i);
      for (std::size_t k = 0; k < n; ++k) d[k] = distance_km(ci, zones->centroid(k));

      // Every zone except the origin, nearest first.
      order.clear();
      for (std::size_t k = 0; k < n; ++k)
        if (k != i) order.push_back(k);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
      sorted_d.clear();
      for (std::size_t k : order) sorted_d.push_back(d[k]);

      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) distance[PairFeatureSet::index(i, j, n)] = d[j];
      }
      for (std::size_t v = 0; v < columns.size(); ++v) {
        prefix.assign(1, 0.0);
        for (std::size_t k : order) prefix.push_back(prefix.back() + columns[v][k]);
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          // Zones strictly inside the circle occupy a prefix of `order`;
          // j itself sits at distance d[j] and is never inside.
          const auto inside =
              static_cast<std::size_t>(std::lower_bound(sorted_d.begin(), sorted_d.end(), d[j]) - sorted_d.begin());
          intervening[v][PairFeatureSet::index(i, j, n)] = prefix[inside];
        }
      }
    }
  }
  return PairFeatureSet(zones, variables, std::move(distance), std::move(intervening));
}

}  // namespace migra
