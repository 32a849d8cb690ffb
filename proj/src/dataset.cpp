#include "migra/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "csv.hpp"
#include "migra/error.hpp"
#include "migra/numeric.hpp"

namespace migra {

std::string_view to_string(FeatureVariant v) noexcept {
  return v == FeatureVariant::traditional ? "traditional" : "extended";
}

FeatureVariant parse_feature_variant(std::string_view name) {
  if (name == "traditional") return FeatureVariant::traditional;
  if (name == "extended") return FeatureVariant::extended;
  throw Error(Errc::InvalidConfig, "unknown feature set '" + std::string(name) + "'");
}

FeatureSchema FeatureSchema::traditional() {
  return FeatureSchema{{std::string(kPopulationColumn)},
                       {std::string(kPopulationColumn)},
                       {"distance", intervening_column(kPopulationColumn)},
                       FeatureVariant::traditional};
}

FeatureSchema FeatureSchema::extended(const ZoneTable& zones, const PairFeatureSet& pairs) {
  return FeatureSchema{zones.column_names(), zones.column_names(), pairs.column_names(), FeatureVariant::extended};
}

std::vector<std::string> FeatureSchema::column_names() const {
  std::vector<std::string> out;
  for (const auto& f : origin_features) out.push_back("origin_" + f);
  for (const auto& f : destination_features) out.push_back("destination_" + f);
  out.insert(out.end(), pair_features.begin(), pair_features.end());
  return out;
}

std::size_t ObservationSet::positives() const noexcept {
  return static_cast<std::size_t>(std::count_if(table_.targets.begin(), table_.targets.end(), [](double t) { return t > 0.0; }));
}

PredictedFlows ObservationSet::truth() const {
  std::vector<PredictedFlows::Entry> entries;
  for (std::size_t r = 0; r < table_.rows(); ++r)
    if (table_.targets[r] > 0.0) entries.push_back({table_.pairs[r].first, table_.pairs[r].second, table_.targets[r]});
  return PredictedFlows(zones_, year_, std::move(entries));
}

namespace {

struct ResolvedColumns {
  std::vector<std::span<const double>> origin, destination, pair;
};

ResolvedColumns resolve(const PairFeatureSet& pairs, const FlowMatrix& next, const FeatureSchema& schema) {
  if (!pairs.zones().same_universe(next.zones()))
    throw Error(Errc::ZoneUniverseMismatch, "flows and pair features use different zone tables");
  ResolvedColumns c;
  for (const auto& f : schema.origin_features) c.origin.push_back(pairs.zones().column(f));
  for (const auto& f : schema.destination_features) c.destination.push_back(pairs.zones().column(f));
  for (const auto& f : schema.pair_features) c.pair.push_back(pairs.column(f));
  return c;
}

void fill_row(const ResolvedColumns& c, std::size_t i, std::size_t j, std::size_t pair_index, double* out) {
  for (auto col : c.origin) *out++ = col[i];
  for (auto col : c.destination) *out++ = col[j];
  for (auto col : c.pair) *out++ = col[pair_index];
}

}  // namespace

ObservationSet build_observations(const PairFeatureSet& pairs, const FlowMatrix& next, const FeatureSchema& schema) {
  const ResolvedColumns cols = resolve(pairs, next, schema);
  const std::size_t n = pairs.zone_count();
  ObservationTable t;
  t.columns = schema.column_names();
  const std::size_t width = t.cols();
  const std::size_t rows = pairs.pair_count();
  t.values.resize(rows * width);
  t.targets.assign(rows, 0.0);
  t.pairs.resize(rows);

  const auto n_signed = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t io = 0; io < n_signed; ++io) {
    const auto i = static_cast<std::size_t>(io);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const std::size_t r = PairFeatureSet::index(i, j, n);
      fill_row(cols, i, j, r, t.values.data() + r * width);
      t.pairs[r] = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
    }
    for (const auto& e : next.row(i)) t.targets[PairFeatureSet::index(i, e.destination, n)] = static_cast<double>(e.value);
  }
  return ObservationSet(pairs.zones_ptr(), next.year(), schema, std::move(t));
}

namespace reference {

ObservationSet build_observations(const PairFeatureSet& pairs, const FlowMatrix& next, const FeatureSchema& schema) {
  const ResolvedColumns cols = resolve(pairs, next, schema);
  const std::size_t n = pairs.zone_count();
  ObservationTable t;
  t.columns = schema.column_names();
  std::vector<double> row(t.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      fill_row(cols, i, j, PairFeatureSet::index(i, j, n), row.data());
      t.values.insert(t.values.end(), row.begin(), row.end());
      t.targets.push_back(static_cast<double>(next.at(i, j)));
      t.pairs.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
  }
  return ObservationSet(pairs.zones_ptr(), next.year(), schema, std::move(t));
}

}  // namespace reference

SampledSet downsample(const ObservationSet& obs, std::size_t k, std::uint64_t seed) {
  const ObservationTable& src = obs.table();
  std::vector<std::size_t> positive, zero;
  for (std::size_t r = 0; r < src.rows(); ++r) (src.targets[r] > 0.0 ? positive : zero).push_back(r);
  if (positive.empty()) throw Error(Errc::NoPositives, "no observed migrations to train on");

  std::vector<std::size_t> picked = positive;
  if (!zero.empty()) {
    Rng rng(seed);
    const std::size_t draws = positive.size() * k;
    picked.reserve(picked.size() + draws);
    for (std::size_t d = 0; d < draws; ++d) picked.push_back(zero[rng.index(zero.size())]);
  }

  ObservationTable out;
  out.columns = src.columns;
  out.values.reserve(picked.size() * src.cols());
  out.targets.reserve(picked.size());
  out.pairs.reserve(picked.size());
  for (std::size_t r : picked) {
    auto row = src.row(r);
    out.values.insert(out.values.end(), row.begin(), row.end());
    out.targets.push_back(src.targets[r]);
    out.pairs.push_back(src.pairs[r]);
  }
  return SampledSet(std::move(out), positive.size(), k);
}

Scaler Scaler::fit(const ObservationTable& table) {
  const std::size_t cols = table.cols();
  const std::size_t rows = table.rows();
  std::vector<double> means(cols, 0.0), stds(cols, 0.0);
  if (rows == 0) return Scaler(std::move(means), std::move(stds));
  for (std::size_t c = 0; c < cols; ++c) {
    CompensatedSum s;
    for (std::size_t r = 0; r < rows; ++r) s += table.values[r * cols + c];
    const double mean = s.value() / static_cast<double>(rows);
    CompensatedSum v;
    bool constant = true;
    const double first = table.values[c];
    for (std::size_t r = 0; r < rows; ++r) {
      const double x = table.values[r * cols + c];
      constant = constant && x == first;
      v += (x - mean) * (x - mean);
    }
    means[c] = mean;
    stds[c] = constant ? 0.0 : std::sqrt(v.value() / static_cast<double>(rows));
  }
  return Scaler(std::move(means), std::move(stds));
}

void Scaler::apply_row(std::span<const double> in, std::span<double> out) const {
  for (std::size_t c = 0; c < in.size(); ++c) out[c] = is_constant(c) ? in[c] : (in[c] - means_[c]) / stds_[c];
}

ObservationTable Scaler::apply(const ObservationTable& table) const {
  if (table.cols() != means_.size()) throw Error(Errc::SchemaMismatch, "scaler fitted on a different column count");
  ObservationTable out = table;
  for (std::size_t r = 0; r < table.rows(); ++r)
    apply_row(table.row(r), std::span<double>(out.values).subspan(r * table.cols(), table.cols()));
  return out;
}

std::string observations_to_csv(const ObservationSet& obs) {
  const ObservationTable& t = obs.table();
  std::string out;
  for (const auto& c : t.columns) out += csv::quote(c) + ",";
  out += "origin,destination,target\n";
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (double v : t.row(r)) out += csv::format_double(v) + ",";
    out += csv::quote(obs.zones().id(t.pairs[r].first)) + "," + csv::quote(obs.zones().id(t.pairs[r].second)) + "," +
           csv::format_double(t.targets[r]) + "\n";
  }
  return out;
}

double positive_density(const FlowMatrix& m) {
  return m.pair_count() == 0 ? 0.0 : static_cast<double>(m.nnz()) / static_cast<double>(m.pair_count());
}

}  // namespace migra
