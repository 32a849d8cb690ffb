#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <type_traits>

#include "migra/ann.hpp"
#include "migra/dataset.hpp"
#include "migra/error.hpp"
#include "migra/gbt.hpp"
#include "migra/reference.hpp"
#include "migra/search.hpp"
#include "support.hpp"

using namespace migra;

namespace {

const std::vector<std::string> kVars{"population", "area", "score", std::string(kZoneCountColumn)};

// Evaluation entry points only take complete observation sets.
template <class Model>
concept PredictsOnSampled = requires(const Model& m, const SampledSet& s) { predict(m, s); };
static_assert(!PredictsOnSampled<GbtModel>);
static_assert(!PredictsOnSampled<AnnModel>);
static_assert(!PredictsOnSampled<LearnedModel>);
static_assert(!std::is_convertible_v<SampledSet, ObservationSet>);
static_assert(!std::is_constructible_v<ObservationSet, SampledSet>);
static_assert(!std::is_invocable_v<decltype(&random_search), const SearchSpace&, const ObservationSet&, const SampledSet&,
                                   std::size_t, std::uint64_t, TrialSink>);
static_assert(std::is_invocable_v<decltype(&random_search), const SearchSpace&, const ObservationSet&,
                                  const ObservationSet&, std::size_t, std::uint64_t, TrialSink>);

struct Fixture {
  Rng rng{7};
  ZoneTablePtr zones = testing::random_zones(rng, 15);
  PairFeatureSet pairs = pair_features(zones, kVars);
  FlowMatrix flows = testing::random_flows(zones, rng, 0.1, 2001);
};

}  // namespace

TEST_CASE("build_observations: shape and targets") {
  SUBCASE("three zones, traditional schema") {
    const auto z = testing::zones({{"A", 0, 0, 10}, {"B", 0, 1, 5}, {"C", 0, 2, 7}});
    const auto p = pair_features(z, {"population"});
    const auto obs = build_observations(p, FlowMatrix(z, 2000, {{0, 2, 9}}), FeatureSchema::traditional());
    const auto& t = obs.table();
    CHECK(t.rows() == 6);
    CHECK(t.cols() == 4);
    CHECK(t.columns == std::vector<std::string>{"origin_population", "destination_population", "distance",
                                                "intervening_population"});
    // row order is (origin, destination); (A,C) is the second row
    CHECK(t.pairs[1] == std::pair<std::uint32_t, std::uint32_t>{0, 2});
    CHECK(t.targets[1] == 9.0);
    CHECK(t.row(1)[0] == 10.0);
    CHECK(t.row(1)[1] == 7.0);
    CHECK(t.row(1)[3] == 5.0);
    CHECK(obs.positives() == 1);
    CHECK(obs.year() == 2000);
  }
  SUBCASE("targets align with the matrix") {
    Fixture f;
    const auto obs = build_observations(f.pairs, f.flows, FeatureSchema::extended(*f.zones, f.pairs));
    const auto& t = obs.table();
    REQUIRE(t.rows() == 15 * 14);
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const auto [i, j] = t.pairs[r];
      CHECK(t.targets[r] == static_cast<double>(f.flows.at(i, j)));
      CHECK(t.row(r)[t.cols() - kVars.size() - 1] == f.pairs.distance(i, j));
    }
    CHECK(obs.truth() == to_real(f.flows));
  }
  SUBCASE("extended schema column count is 2 d1 + d2") {
    Fixture f;
    const auto s = FeatureSchema::extended(*f.zones, f.pairs);
    const std::size_t d1 = f.zones->column_names().size();
    const std::size_t d2 = f.pairs.column_names().size();
    CHECK(s.column_count() == 2 * d1 + d2);
    CHECK(s.variant == FeatureVariant::extended);
  }
  SUBCASE("unknown column") {
    Fixture f;
    FeatureSchema s = FeatureSchema::traditional();
    s.origin_features.push_back("gdp");
    try {
      build_observations(f.pairs, f.flows, s);
      FAIL("expected UnknownFeature");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::UnknownFeature);
    }
  }
}

TEST_CASE("build_observations: parallel kernel equals serial reference") {
  Fixture f;
  for (const auto& schema : {FeatureSchema::traditional(), FeatureSchema::extended(*f.zones, f.pairs)}) {
    const auto a = build_observations(f.pairs, f.flows, schema);
    const auto b = reference::build_observations(f.pairs, f.flows, schema);
    CHECK(a.table().values == b.table().values);
    CHECK(a.table().targets == b.table().targets);
    CHECK(a.table().pairs == b.table().pairs);
    CHECK(a.table().columns == b.table().columns);
  }
}

TEST_CASE("downsample: counts, positives retained, replacement") {
  Fixture f;
  const auto obs = build_observations(f.pairs, f.flows, FeatureSchema::traditional());
  const std::size_t n_t = obs.positives();
  REQUIRE(n_t > 0);
  const std::size_t zeros = obs.table().rows() - n_t;
  for (std::size_t k : {1u, 5u, 100u}) {
    const auto s = downsample(obs, k, 42 + k);
    CHECK(s.table().rows() == n_t * (1 + k));
    CHECK(s.positives() == n_t);
    CHECK(s.k() == k);
    std::set<std::pair<std::uint32_t, std::uint32_t>> before, after;
    for (std::size_t r = 0; r < obs.table().rows(); ++r)
      if (obs.table().targets[r] > 0) before.insert(obs.table().pairs[r]);
    std::size_t zero_rows = 0;
    for (std::size_t r = 0; r < s.table().rows(); ++r) {
      if (s.table().targets[r] > 0)
        after.insert(s.table().pairs[r]);
      else
        ++zero_rows;
    }
    CHECK(before == after);
    CHECK(zero_rows == n_t * k);
    if (n_t * k > zeros) CHECK(zero_rows > zeros);  // repeats
  }
}

TEST_CASE("downsample: exact example n_t = 10, k = 5") {
  const auto z = testing::zones({{"A", 0, 0, 1}, {"B", 0, 1, 1}, {"C", 0, 2, 1}, {"D", 1, 0, 1}, {"E", 1, 1, 1}});
  std::vector<FlowMatrix::Entry> e;
  for (std::uint32_t j = 1; j < 5; ++j) e.push_back({0, j, 1});
  for (std::uint32_t j = 0; j < 5; ++j)
    if (j != 1) e.push_back({1, j, 2});
  e.push_back({2, 0, 3});
  e.push_back({2, 1, 3});
  REQUIRE(e.size() == 10);
  const auto p = pair_features(z, {"population"});
  const auto obs = build_observations(p, FlowMatrix(z, 2000, e), FeatureSchema::traditional());
  CHECK(downsample(obs, 5, 1).table().rows() == 60);
}

TEST_CASE("downsample: rows are copies, deterministic in the seed") {
  Fixture f;
  const auto obs = build_observations(f.pairs, f.flows, FeatureSchema::extended(*f.zones, f.pairs));
  const auto a = downsample(obs, 3, 9), b = downsample(obs, 3, 9), c = downsample(obs, 3, 10);
  CHECK(a.table().values == b.table().values);
  CHECK(a.table().pairs == b.table().pairs);
  CHECK(a.table().pairs != c.table().pairs);
  const std::size_t n = f.zones->size();
  for (std::size_t r = 0; r < a.table().rows(); ++r) {
    const auto [i, j] = a.table().pairs[r];
    const std::size_t src = PairFeatureSet::index(i, j, n);
    const auto want = obs.table().row(src), got = a.table().row(r);
    CHECK(std::equal(want.begin(), want.end(), got.begin()));
    CHECK(a.table().targets[r] == obs.table().targets[src]);
  }
}

TEST_CASE("downsample: no positives") {
  const auto z = testing::zones({{"A", 0, 0, 1}, {"B", 0, 1, 1}});
  const auto obs = build_observations(pair_features(z, {"population"}), FlowMatrix(z, 2000, {}), FeatureSchema::traditional());
  try {
    downsample(obs, 2, 1);
    FAIL("expected NoPositives");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoPositives);
  }
}

TEST_CASE("downsample: fully dense matrix keeps the positives only") {
  const auto z = testing::zones({{"A", 0, 0, 1}, {"B", 0, 1, 1}});
  const auto obs =
      build_observations(pair_features(z, {"population"}), FlowMatrix(z, 2000, {{0, 1, 1}, {1, 0, 2}}), FeatureSchema::traditional());
  CHECK(downsample(obs, 4, 1).table().rows() == 2);
}

TEST_CASE("scaler: standardizes training columns, constant columns pass through") {
  Fixture f;
  const auto obs = build_observations(f.pairs, f.flows, FeatureSchema::extended(*f.zones, f.pairs));
  const auto sc = Scaler::fit(obs.table());
  const auto scaled = sc.apply(obs.table());
  const std::size_t rows = scaled.rows(), cols = scaled.cols();
  for (std::size_t c = 0; c < cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mean += scaled.values[r * cols + c];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) var += std::pow(scaled.values[r * cols + c] - mean, 2);
    var /= static_cast<double>(rows);
    if (sc.is_constant(c)) {
      for (std::size_t r = 0; r < rows; ++r) CHECK(scaled.values[r * cols + c] == obs.table().values[r * cols + c]);
    } else {
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-9);
    }
  }
  CHECK(scaled.targets == obs.table().targets);
  ObservationTable flat{{"c", "x"}, {3, 1, 3, 2, 3, 6}, {0, 0, 0}, {{0, 1}, {1, 0}, {1, 2}}};
  const auto fs = Scaler::fit(flat);
  CHECK(fs.is_constant(0));
  CHECK(!fs.is_constant(1));
  CHECK(fs.apply(flat).values[4] == 3.0);
}

TEST_CASE("scaler: validation rows reuse training statistics") {
  ObservationTable train{{"x"}, {1, 2, 3, 4}, {0, 0, 0, 0}, {{0, 1}, {0, 2}, {1, 0}, {1, 2}}};
  ObservationTable valid{{"x"}, {11, 12, 13, 14}, {0, 0, 0, 0}, {{0, 1}, {0, 2}, {1, 0}, {1, 2}}};
  const auto sc = Scaler::fit(train);
  CHECK(sc.means()[0] == 2.5);
  CHECK(sc.stds()[0] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  const auto v = sc.apply(valid);
  double mean = 0.0;
  for (double x : v.values) mean += x;
  CHECK(mean / 4 == doctest::Approx((12.5 - 2.5) / std::sqrt(1.25)).epsilon(1e-12));
  CHECK(mean != 0.0);
}

TEST_CASE("observation CSV and density") {
  const auto z = testing::zones({{"A", 0, 0, 10}, {"B", 0, 1, 5}, {"C", 0, 2, 7}});
  const FlowMatrix m(z, 2000, {{0, 2, 9}, {1, 0, 1}, {2, 1, 2}});
  CHECK(positive_density(m) == 0.5);
  const auto obs = build_observations(pair_features(z, {"population"}), m, FeatureSchema::traditional());
  const auto csv = observations_to_csv(obs);
  CHECK(csv.rfind("origin_population,destination_population,distance,intervening_population,origin,destination,target\n", 0) ==
        0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(parse_feature_variant("extended") == FeatureVariant::extended);
  CHECK_THROWS_AS(parse_feature_variant("full"), Error);
}
