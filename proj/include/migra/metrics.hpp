#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "migra/error.hpp"
#include "migra/flows.hpp"
#include "migra/numeric.hpp"
#include "migra/pairs.hpp"

namespace migra {

namespace detail {

template <class A, class B>
void check_universe(const BasicFlowMatrix<A>& t, const BasicFlowMatrix<B>& p) {
  if (!t.zones().same_universe(p.zones()))
    throw Error(Errc::ZoneUniverseMismatch, "matrices are defined over different zone tables");
}

// Visits every pair stored in either matrix, row-major, with both values.
template <class A, class B, class F>
void for_each_union(const BasicFlowMatrix<A>& t, const BasicFlowMatrix<B>& p, F&& f) {
  for (std::size_t i = 0; i < t.zone_count(); ++i) {
    auto rt = t.row(i);
    auto rp = p.row(i);
    std::size_t a = 0, b = 0;
    while (a < rt.size() || b < rp.size()) {
      if (b == rp.size() || (a < rt.size() && rt[a].destination < rp[b].destination)) {
        f(i, rt[a].destination, static_cast<double>(rt[a].value), 0.0);
        ++a;
      } else if (a == rt.size() || rp[b].destination < rt[a].destination) {
        f(i, rp[b].destination, 0.0, static_cast<double>(rp[b].value));
        ++b;
      } else {
        f(i, rt[a].destination, static_cast<double>(rt[a].value), static_cast<double>(rp[b].value));
        ++a;
        ++b;
      }
    }
  }
}

template <class V>
bool constant_over_pairs(const BasicFlowMatrix<V>& t) {
  if (t.nnz() == 0) return true;
  if (t.nnz() != t.pair_count()) return false;
  const V first = t.entries().front().value;
  return std::all_of(t.entries().begin(), t.entries().end(), [&](const auto& e) { return e.value == first; });
}

}  // namespace detail

/// Common Part of Commuters: 2 sum min(T, T^) / (sum T + sum T^).
/// Two all-zero matrices score 1.
template <class A, class B>
double cpc(const BasicFlowMatrix<A>& truth, const BasicFlowMatrix<B>& pred) {
  detail::check_universe(truth, pred);
  CompensatedSum common, total;
  detail::for_each_union(truth, pred, [&](std::size_t, std::size_t, double t, double p) {
    common += std::min(t, p);
    total += t;
    total += p;
  });
  const double denom = total.value();
  return denom == 0.0 ? 1.0 : 2.0 * common.value() / denom;
}

/// Bin index for the 2 km distance histogram; bin k (0-based) holds
/// distances in [2k, 2k + 2).
inline std::int64_t distance_bin(double km) noexcept { return static_cast<std::int64_t>(std::floor(km / 2.0)); }

/// Migrants per 2 km distance bin.
template <class V>
std::map<std::int64_t, double> distance_histogram(const BasicFlowMatrix<V>& m, const PairFeatureSet& pairs) {
  if (!pairs.zones().same_universe(m.zones()))
    throw Error(Errc::MissingDistance, "pair features do not cover the matrix's zone universe");
  std::map<std::int64_t, CompensatedSum> bins;
  for (const auto& e : m.entries()) {
    const double d = pairs.distance(e.origin, e.destination);
    if (!std::isfinite(d) || d < 0.0)
      throw Error(Errc::MissingDistance, "no distance for " + m.zones().id(e.origin) + " -> " +
                                             m.zones().id(e.destination));
    bins[distance_bin(d)] += static_cast<double>(e.value);
  }
  std::map<std::int64_t, double> out;
  for (const auto& [k, s] : bins) out.emplace(k, s.value());
  return out;
}

/// CPC on the 2 km distance histograms of both matrices.
template <class A, class B>
double cpc_d(const BasicFlowMatrix<A>& truth, const BasicFlowMatrix<B>& pred, const PairFeatureSet& pairs) {
  detail::check_universe(truth, pred);
  const auto nt = distance_histogram(truth, pairs);
  const auto np = distance_histogram(pred, pairs);
  CompensatedSum common, total;
  for (const auto& [k, v] : nt) {
    total += v;
    if (auto it = np.find(k); it != np.end()) common += std::min(v, it->second);
  }
  for (const auto& [k, v] : np) total += v;
  const double denom = total.value();
  return denom == 0.0 ? 1.0 : 2.0 * common.value() / denom;
}

/// Root mean squared error over all n(n-1) ordered pairs, zeros included.
template <class A, class B>
double rmse(const BasicFlowMatrix<A>& truth, const BasicFlowMatrix<B>& pred) {
  detail::check_universe(truth, pred);
  const std::size_t pairs = truth.pair_count();
  if (pairs == 0) return 0.0;
  CompensatedSum sse;
  detail::for_each_union(truth, pred, [&](std::size_t, std::size_t, double t, double p) { sse += (t - p) * (t - p); });
  return std::sqrt(sse.value() / static_cast<double>(pairs));
}

/// Coefficient of determination over all n(n-1) ordered pairs.
/// Errors: DegenerateTruth when the truth is constant across pairs.
template <class A, class B>
double r2(const BasicFlowMatrix<A>& truth, const BasicFlowMatrix<B>& pred) {
  detail::check_universe(truth, pred);
  if (detail::constant_over_pairs(truth))
    throw Error(Errc::DegenerateTruth, "truth matrix is constant over all pairs");
  const double pairs = static_cast<double>(truth.pair_count());
  CompensatedSum sum_t;
  for (const auto& e : truth.entries()) sum_t += static_cast<double>(e.value);
  const double mean = sum_t.value() / pairs;
  CompensatedSum ss_tot;
  for (const auto& e : truth.entries()) {
    const double d = static_cast<double>(e.value) - mean;
    ss_tot += d * d;
  }
  ss_tot += (pairs - static_cast<double>(truth.nnz())) * mean * mean;
  CompensatedSum ss_res;
  detail::for_each_union(truth, pred, [&](std::size_t, std::size_t, double t, double p) { ss_res += (t - p) * (t - p); });
  return 1.0 - ss_res.value() / ss_tot.value();
}

struct IncomingMetrics {
  double mae = 0.0;
  double r2 = 0.0;
};

double mean_absolute_error(std::span<const double> truth, std::span<const double> pred);
/// Errors: DegenerateTruth when `truth` is constant.
double r2_score(std::span<const double> truth, std::span<const double> pred);

/// MAE and r^2 between the incoming-migrant vectors (column sums).
template <class A, class B>
IncomingMetrics incoming_metrics(const BasicFlowMatrix<A>& truth, const BasicFlowMatrix<B>& pred) {
  detail::check_universe(truth, pred);
  const auto at = aggregates(truth);
  const auto ap = aggregates(pred);
  std::vector<double> v(at.incoming.begin(), at.incoming.end());
  std::vector<double> vh(ap.incoming.begin(), ap.incoming.end());
  return {mean_absolute_error(v, vh), r2_score(v, vh)};
}

struct EvalReport {
  std::string model;
  int year = 0;
  std::string features;
  double cpc = 0.0;
  double cpc_d = 0.0;
  double rmse = 0.0;
  double r2 = 0.0;
  double incoming_mae = 0.0;
  double incoming_r2 = 0.0;
};

template <class A, class B>
EvalReport evaluate(const BasicFlowMatrix<A>& truth, const BasicFlowMatrix<B>& pred, const PairFeatureSet& pairs) {
  EvalReport r;
  r.year = truth.year();
  r.cpc = cpc(truth, pred);
  r.cpc_d = cpc_d(truth, pred, pairs);
  r.rmse = rmse(truth, pred);
  r.r2 = r2(truth, pred);
  const auto in = incoming_metrics(truth, pred);
  r.incoming_mae = in.mae;
  r.incoming_r2 = in.r2;
  return r;
}

/// Names of the six metric fields in report order.
inline constexpr const char* kMetricNames[] = {"cpc", "cpc_d", "rmse", "r2", "incoming_mae", "incoming_r2"};
double metric_value(const EvalReport& r, std::string_view metric);

/// Flat JSON object: model, year, features and the six metric fields.
void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

}  // namespace migra
