#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "migra/error.hpp"
#include "migra/numeric.hpp"
#include "migra/zones.hpp"

namespace migra {

/// Sparse origin -> destination matrix over a zone universe. Stored
/// entries are strictly positive and sorted row-major; absent pairs are 0.
/// Memory is O(nnz + n).
template <class V>
class BasicFlowMatrix {
 public:
  using value_type = V;

  struct Entry {
    std::uint32_t origin;
    std::uint32_t destination;
    V value;
  };

  /// Validates and canonicalizes: duplicates are summed, zero entries
  /// dropped. Errors: UnknownZone, DiagonalEntry, NegativeCount.
  BasicFlowMatrix(ZoneTablePtr zones, int year, std::vector<Entry> entries)
      : zones_(std::move(zones)), year_(year) {
    const std::size_t n = zones_->size();
    for (const Entry& e : entries) {
      if (e.origin >= n || e.destination >= n)
        throw Error(Errc::UnknownZone, "flow entry references zone index outside the universe");
      if (e.origin == e.destination)
        throw Error(Errc::DiagonalEntry, "within-zone flow for zone '" + zones_->id(e.origin) + "'");
      if (!(e.value >= V{0}))
        throw Error(Errc::NegativeCount, "negative or undefined flow " + zones_->id(e.origin) + " -> " +
                                             zones_->id(e.destination));
    }
    std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.origin != b.origin ? a.origin < b.origin : a.destination < b.destination;
    });
    entries_.reserve(entries.size());
    for (const Entry& e : entries) {
      if (!entries_.empty() && entries_.back().origin == e.origin && entries_.back().destination == e.destination)
        entries_.back().value += e.value;
      else
        entries_.push_back(e);
    }
    std::erase_if(entries_, [](const Entry& e) { return e.value == V{0}; });
    row_offsets_.assign(n + 1, 0);
    for (const Entry& e : entries_) ++row_offsets_[e.origin + 1];
    for (std::size_t i = 0; i < n; ++i) row_offsets_[i + 1] += row_offsets_[i];
  }

  static BasicFlowMatrix empty(ZoneTablePtr zones, int year) { return BasicFlowMatrix(std::move(zones), year, {}); }

  int year() const noexcept { return year_; }
  const ZoneTable& zones() const noexcept { return *zones_; }
  const ZoneTablePtr& zones_ptr() const noexcept { return zones_; }
  std::size_t zone_count() const noexcept { return zones_->size(); }
  /// Number of ordered off-diagonal pairs, n(n-1).
  std::size_t pair_count() const noexcept {
    const std::size_t n = zone_count();
    return n * (n == 0 ? 0 : n - 1);
  }
  std::size_t nnz() const noexcept { return entries_.size(); }

  std::span<const Entry> entries() const noexcept { return entries_; }
  std::span<const Entry> row(std::size_t i) const noexcept {
    return std::span<const Entry>(entries_).subspan(row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]);
  }

  V at(std::size_t i, std::size_t j) const noexcept {
    auto r = row(i);
    auto it = std::lower_bound(r.begin(), r.end(), j,
                               [](const Entry& e, std::size_t d) { return e.destination < d; });
    return (it != r.end() && it->destination == j) ? it->value : V{0};
  }

  V total() const noexcept {
    if constexpr (std::is_integral_v<V>) {
      V s = 0;
      for (const Entry& e : entries_) s += e.value;
      return s;
    } else {
      CompensatedSum s;
      for (const Entry& e : entries_) s.add(e.value);
      return s.value();
    }
  }

  friend bool operator==(const BasicFlowMatrix& a, const BasicFlowMatrix& b) {
    if (a.year_ != b.year_ || !a.zones_->same_universe(*b.zones_) || a.entries_.size() != b.entries_.size())
      return false;
    for (std::size_t k = 0; k < a.entries_.size(); ++k) {
      const Entry& x = a.entries_[k];
      const Entry& y = b.entries_[k];
      if (x.origin != y.origin || x.destination != y.destination || x.value != y.value) return false;
    }
    return true;
  }

 private:
  ZoneTablePtr zones_;
  int year_ = 0;
  std::vector<Entry> entries_;
  std::vector<std::size_t> row_offsets_;
};

/// Observed migrant counts.
using FlowMatrix = BasicFlowMatrix<std::int64_t>;
/// Real-valued model output (never rounded before evaluation).
using PredictedFlows = BasicFlowMatrix<double>;

template <class V>
PredictedFlows to_real(const BasicFlowMatrix<V>& m) {
  std::vector<PredictedFlows::Entry> out;
  out.reserve(m.nnz());
  for (const auto& e : m.entries()) out.push_back({e.origin, e.destination, static_cast<double>(e.value)});
  return PredictedFlows(m.zones_ptr(), m.year(), std::move(out));
}

/// Outgoing (row sums) and incoming (column sums) per zone.
template <class V>
struct ZoneAggregates {
  std::vector<V> outgoing;
  std::vector<V> incoming;
};

template <class V>
ZoneAggregates<V> aggregates(const BasicFlowMatrix<V>& m) {
  ZoneAggregates<V> a{std::vector<V>(m.zone_count(), V{0}), std::vector<V>(m.zone_count(), V{0})};
  for (const auto& e : m.entries()) {
    a.outgoing[e.origin] += e.value;
    a.incoming[e.destination] += e.value;
  }
  return a;
}

/// Flows CSV: header `year,origin_id,destination_id,count`. Counts must be
/// non-negative integers; zero rows are dropped and duplicates summed.
/// Errors: ParseError (with line number), UnknownZone, NegativeCount,
/// DiagonalEntry. Returns one matrix per year present, ordered by year.
std::map<int, FlowMatrix> parse_flows(std::string_view csv_text, const ZoneTablePtr& zones);
std::map<int, FlowMatrix> load_flows(const std::filesystem::path& path, const ZoneTablePtr& zones);

/// Same schema with real-valued counts (model predictions).
std::map<int, PredictedFlows> parse_predicted_flows(std::string_view csv_text, const ZoneTablePtr& zones);
std::map<int, PredictedFlows> load_predicted_flows(const std::filesystem::path& path, const ZoneTablePtr& zones);

/// Serializes with header, rows sorted by origin then destination id.
std::string flows_to_csv(std::span<const FlowMatrix> years);
std::string flows_to_csv(std::span<const PredictedFlows> years);
void save_flows(std::span<const FlowMatrix> years, const std::filesystem::path& path);
void save_flows(std::span<const PredictedFlows> years, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace migra
