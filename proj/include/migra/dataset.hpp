#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "migra/flows.hpp"
#include "migra/pairs.hpp"

namespace migra {

enum class FeatureVariant { traditional, extended };

std::string_view to_string(FeatureVariant v) noexcept;
FeatureVariant parse_feature_variant(std::string_view name);

struct FeatureSchema {
  std::vector<std::string> origin_features;
  std::vector<std::string> destination_features;
  std::vector<std::string> pair_features;
  FeatureVariant variant = FeatureVariant::traditional;

  /// origin/destination population, distance, intervening population.
  static FeatureSchema traditional();
  /// Every zone column for both ends and every pair column.
  static FeatureSchema extended(const ZoneTable& zones, const PairFeatureSet& pairs);

  std::vector<std::string> column_names() const;
  std::size_t column_count() const noexcept {
    return origin_features.size() + destination_features.size() + pair_features.size();
  }
};

/// Row-major feature matrix plus targets and the (origin, destination)
/// index of every row. Plain data shared by full and sampled sets.
struct ObservationTable {
  std::vector<std::string> columns;
  std::vector<double> values;
  std::vector<double> targets;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;

  std::size_t rows() const noexcept { return targets.size(); }
  std::size_t cols() const noexcept { return columns.size(); }
  std::span<const double> row(std::size_t r) const noexcept {
    return std::span<const double>(values).subspan(r * cols(), cols());
  }
};

class ObservationSet;
ObservationSet build_observations(const PairFeatureSet&, const FlowMatrix&, const FeatureSchema&);
namespace reference {
ObservationSet build_observations(const PairFeatureSet&, const FlowMatrix&, const FeatureSchema&);
}

/// One row per ordered pair (i, j), i != j, in (origin, destination) index
/// order. Only `build_observations` creates these, so holding one means the
/// pair set is complete; evaluation entry points accept nothing else.
class ObservationSet {
 public:
  const ObservationTable& table() const noexcept { return table_; }
  const ZoneTable& zones() const noexcept { return *zones_; }
  const ZoneTablePtr& zones_ptr() const noexcept { return zones_; }
  int year() const noexcept { return year_; }
  const FeatureSchema& schema() const noexcept { return schema_; }
  std::size_t positives() const noexcept;

  /// Targets reassembled as a matrix (the ground truth for this year).
  PredictedFlows truth() const;

 private:
  friend ObservationSet build_observations(const PairFeatureSet&, const FlowMatrix&, const FeatureSchema&);
  friend ObservationSet reference::build_observations(const PairFeatureSet&, const FlowMatrix&, const FeatureSchema&);
  ObservationSet(ZoneTablePtr zones, int year, FeatureSchema schema, ObservationTable table)
      : zones_(std::move(zones)), year_(year), schema_(std::move(schema)), table_(std::move(table)) {}

  ZoneTablePtr zones_;
  int year_ = 0;
  FeatureSchema schema_;
  ObservationTable table_;
};

/// Training rows after negative downsampling. Deliberately a separate type:
/// it cannot be passed where an ObservationSet is expected.
class SampledSet {
 public:
  SampledSet(ObservationTable table, std::size_t positives, std::size_t k)
      : table_(std::move(table)), positives_(positives), k_(k) {}
  const ObservationTable& table() const noexcept { return table_; }
  std::size_t positives() const noexcept { return positives_; }
  std::size_t k() const noexcept { return k_; }

 private:
  ObservationTable table_;
  std::size_t positives_;
  std::size_t k_;
};

/// Full pair enumeration with targets taken from `next` (0 when absent).
/// Parallel over origins. Errors: UnknownFeature, ZoneUniverseMismatch.
ObservationSet build_observations(const PairFeatureSet& pairs, const FlowMatrix& next, const FeatureSchema& schema);

/// Keeps every positive row and appends positives * k rows drawn with
/// replacement from the zero-target rows. When no zero rows exist only
/// the positives are returned. Errors: NoPositives.
SampledSet downsample(const ObservationSet& obs, std::size_t k, std::uint64_t seed);

/// Column-wise standardization. Constant columns pass through unchanged.
class Scaler {
 public:
  Scaler() = default;
  Scaler(std::vector<double> means, std::vector<double> stds) : means_(std::move(means)), stds_(std::move(stds)) {}

  static Scaler fit(const ObservationTable& table);
  ObservationTable apply(const ObservationTable& table) const;
  void apply_row(std::span<const double> in, std::span<double> out) const;

  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& stds() const noexcept { return stds_; }
  bool is_constant(std::size_t col) const noexcept { return !(stds_[col] > 0.0); }

 private:
  std::vector<double> means_;
  std::vector<double> stds_;
};

/// Header = feature columns then `origin,destination,target`.
std::string observations_to_csv(const ObservationSet& obs);

/// Share of pairs with a positive flow.
double positive_density(const FlowMatrix& m);

}  // namespace migra
