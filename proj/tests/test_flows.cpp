#include <doctest.h>

#include "migra/error.hpp"
#include "migra/flows.hpp"
#include "migra/synth.hpp"
#include "migra/zones.hpp"
#include "support.hpp"

using namespace migra;

namespace {

ZoneTablePtr abc() { return testing::zones({{"A", 0, 0, 10}, {"B", 0, 1, 5}, {"C", 0, 2, 7}}); }

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::IoError;
}

}  // namespace

TEST_CASE("zones CSV: parse, canonical order, features") {
  const auto z = parse_zones("zone_id,lat,lon,population,area\nB,0,1,5,2.5\nA,0,0,10,1\n");
  REQUIRE(z->size() == 2);
  CHECK(z->id(0) == "A");
  CHECK(z->population(1) == 5.0);
  CHECK(z->column("area")[1] == 2.5);
  CHECK(z->column(kZoneCountColumn)[0] == 1.0);
  CHECK(z->index_of("B") == 1);
  CHECK(parse_zones(zones_to_csv(*z))->ids() == z->ids());
}

TEST_CASE("zones CSV: errors") {
  CHECK(code_of([] { parse_zones("id,lat,lon,population\nA,0,0,1\n"); }) == Errc::ParseError);
  CHECK(code_of([] { parse_zones("zone_id,lat,lon,population\nA,0,0,x\n"); }) == Errc::ParseError);
  CHECK(code_of([] { parse_zones("zone_id,lat,lon,population\nA,0,0,1\nA,1,1,2\n"); }) == Errc::InvalidConfig);
  CHECK(code_of([] { parse_zones("zone_id,lat,lon,population\nA,95,0,1\n"); }) == Errc::InvalidCentroid);
  CHECK(code_of([] { parse_zones("zone_id,lat,lon,population\nA,0,0,-1\n"); }) == Errc::ParseError);
  CHECK(code_of([] { parse_zones("zone_id,lat,lon,population,zone_count\nA,0,0,1,1\n"); }) == Errc::InvalidConfig);
  CHECK(code_of([] { abc()->index_of("Q"); }) == Errc::UnknownZone);
  CHECK(code_of([] { abc()->column("area"); }) == Errc::UnknownFeature);
}

TEST_CASE("parse error carries the line number") {
  try {
    parse_flows("year,origin_id,destination_id,count\n2000,A,B,1\n2000,A,B,abc\n", abc());
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("load_flows: examples") {
  const auto z = abc();
  SUBCASE("two rows") {
    const auto y = parse_flows("year,origin_id,destination_id,count\n2000,A,B,5\n2000,B,A,3\n", z);
    const auto& m = y.at(2000);
    CHECK(m.nnz() == 2);
    CHECK(m.total() == 8);
  }
  SUBCASE("duplicates are summed") {
    const auto y = parse_flows("year,origin_id,destination_id,count\n2000,A,B,2\n2000,A,B,3\n", z);
    CHECK(y.at(2000).nnz() == 1);
    CHECK(y.at(2000).at(0, 1) == 5);
    const std::vector<FlowMatrix> v{y.at(2000)};
    CHECK(flows_to_csv(v) == "year,origin_id,destination_id,count\n2000,A,B,5\n");
  }
  SUBCASE("zero rows dropped") {
    const auto y = parse_flows("year,origin_id,destination_id,count\n2000,A,B,0\n2000,A,C,1\n", z);
    CHECK(y.at(2000).nnz() == 1);
  }
  SUBCASE("errors") {
    CHECK(code_of([&] { parse_flows("year,origin_id,destination_id,count\n2000,A,A,1\n", z); }) == Errc::DiagonalEntry);
    CHECK(code_of([&] { parse_flows("year,origin_id,destination_id,count\n2000,A,Q,1\n", z); }) == Errc::UnknownZone);
    CHECK(code_of([&] { parse_flows("year,origin_id,destination_id,count\n2000,A,B,-2\n", z); }) == Errc::NegativeCount);
    CHECK(code_of([&] { parse_flows("year,origin_id,destination_id,count\n2000,A,B,1.5\n", z); }) == Errc::ParseError);
    CHECK(code_of([&] { parse_flows("year,origin,destination,count\n", z); }) == Errc::ParseError);
  }
  SUBCASE("several years") {
    const auto y = parse_flows("year,origin_id,destination_id,count\n2001,A,B,1\n2000,C,B,4\n", z);
    REQUIRE(y.size() == 2);
    CHECK(y.at(2000).year() == 2000);
    CHECK(y.at(2001).at(0, 1) == 1);
  }
}

TEST_CASE("flows CSV round-trips") {
  Rng rng(21);
  const auto z = testing::random_zones(rng, 30);
  std::vector<FlowMatrix> years{testing::random_flows(z, rng, 0.2, 2000), testing::random_flows(z, rng, 0.05, 2001)};
  const auto back = parse_flows(flows_to_csv(years), z);
  REQUIRE(back.size() == 2);
  CHECK(back.at(2000) == years[0]);
  CHECK(back.at(2001) == years[1]);

  std::vector<PredictedFlows> preds{testing::random_pred(z, rng, 0.3, 2002)};
  const auto pback = parse_predicted_flows(flows_to_csv(preds), z);
  CHECK(pback.at(2002) == preds[0]);
}

TEST_CASE("aggregates: examples and totals") {
  const auto z = abc();
  const FlowMatrix m(z, 2000, {{0, 1, 5}, {2, 1, 2}});
  const auto agg = aggregates(m);
  CHECK(agg.incoming[1] == 7);
  CHECK(agg.outgoing[0] == 5);
  CHECK(agg.incoming[0] == 0);

  const FlowMatrix empty(z, 2000, {});
  const auto e = aggregates(empty);
  for (std::size_t i = 0; i < 3; ++i) CHECK((e.incoming[i] == 0 && e.outgoing[i] == 0));

  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto r = testing::random_flows(testing::random_zones(rng, 15), rng, 0.3);
    const auto a = aggregates(r);
    std::int64_t in = 0, out = 0;
    for (std::size_t i = 0; i < 15; ++i) in += a.incoming[i], out += a.outgoing[i];
    CHECK(in == r.total());
    CHECK(out == r.total());
  }
}

TEST_CASE("matrix accessors") {
  const auto z = abc();
  const FlowMatrix m(z, 2003, {{2, 0, 1}, {0, 2, 4}, {0, 1, 3}});
  CHECK(m.pair_count() == 6);
  CHECK(m.row(0).size() == 2);
  CHECK(m.row(0)[0].destination == 1);
  CHECK(m.at(1, 0) == 0);
  CHECK(m.at(2, 0) == 1);
}

TEST_CASE("synth_dataset: determinism and shape") {
  SynthConfig cfg;
  cfg.n_zones = 12;
  cfg.noise = 0.2;
  const auto a = synth_dataset(cfg), b = synth_dataset(cfg);
  CHECK(zones_to_csv(*a.zones) == zones_to_csv(*b.zones));
  CHECK(flows_to_csv(a.years) == flows_to_csv(b.years));
  REQUIRE(a.years.size() == 3);
  CHECK(a.years[2].year() == 2002);

  cfg.n_zones = 2;
  for (const auto& y : synth_dataset(cfg).years) CHECK(y.nnz() <= 2);

  cfg.n_zones = 1;
  CHECK(code_of([&] { synth_dataset(cfg); }) == Errc::InvalidConfig);
}

TEST_CASE("synth_dataset: radiation generator") {
  SynthConfig cfg;
  cfg.n_zones = 20;
  cfg.generator = ClassicModelSpec{ClassicKind::radiation, std::nullopt, ProductionFn{0.05}, 0.0};
  const auto d = synth_dataset(cfg);
  CHECK(d.years[0].nnz() > 0);
}
