#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "migra/error.hpp"
#include "migra/pipeline.hpp"
#include "migra/production.hpp"
#include "migra/synth.hpp"
#include "support.hpp"

using namespace migra;

namespace {

Dataset synth(std::size_t n_zones, std::size_t n_years, ClassicModelSpec generator, double noise = 0.0,
              std::uint64_t seed = 1) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_zones = n_zones;
  cfg.n_years = n_years;
  cfg.generator = generator;
  cfg.noise = noise;
  auto d = synth_dataset(cfg);
  return Dataset::assemble(d.zones, std::move(d.years));
}

RunOptions small_options(std::uint64_t seed) {
  RunOptions o;
  o.seed = seed;
  o.n_trials = 3;
  o.search_overrides = {{"gbt", {{"n_estimators", {5, 20}}, {"max_depth", {2, 3}}}},
                        {"ann", {{"n_epochs", {1, 2}}, {"layer_width", {8, 16}}, {"n_layers", {1, 2}}}}};
  return o;
}

const ModelResult& find(const TripletReport& t, const std::string& label) {
  auto it = std::find_if(t.results.begin(), t.results.end(), [&](const ModelResult& r) { return r.label == label; });
  REQUIRE(it != t.results.end());
  return *it;
}

}  // namespace

TEST_CASE("run_triplet: radiation on self-generated radiation data") {
  const auto data = synth(40, 3, ClassicModelSpec{ClassicKind::radiation, std::nullopt, ProductionFn{0.05}, 0.0});
  const Triplet t{data.years[0], data.years[1], SealedYear(data.years[2], nullptr)};
  const auto r = run_triplet(data, parse_model_list("radiation", FeatureVariant::traditional, false), t, RunOptions{}, 1);
  REQUIRE(r.results.size() == 1);
  CHECK(r.results[0].ok);
  CHECK(r.results[0].eval.cpc >= 0.99);
  CHECK(r.results[0].eval.year == data.years[2].year());
  CHECK(r.test_year == data.years[2].year());
}

TEST_CASE("run_triplet: one result per model, production variants from the same fit") {
  const auto data = synth(20, 3, ClassicModelSpec{ClassicKind::gravity_power, 2.0, ProductionFn{0.03}, 0.0}, 0.3);
  AccessLog log;
  auto options = small_options(7);
  options.access_log = &log;
  const auto models = parse_model_list("radiation,ext_radiation,gravity_power,gravity_exp,gbt,ann", FeatureVariant::extended, true);
  const Triplet t{data.years[0], data.years[1], SealedYear(data.years[2], &log)};
  const std::uint64_t triplet_seed = 99;
  const auto r = run_triplet(data, models, t, options, triplet_seed);
  // four classic models, two learned models with and without production
  CHECK(r.results.size() == 8);
  for (const auto& m : r.results) CHECK_MESSAGE(m.ok, m.label << ": " << m.error);

  const auto& plain = find(r, "gbt/extended");
  const auto& prod = find(r, "gbt/extended+production");
  CHECK(plain.parameters == prod.parameters);
  CHECK(!plain.production_applied);
  CHECK(prod.production_applied);
  CHECK(!plain.importances.empty());

  // recompute both evaluations from a refit with the pipeline's seed
  const auto schema = FeatureSchema::extended(*data.zones, data.pairs);
  const auto valid = build_observations(data.pairs, data.years[1], schema);
  const auto test = build_observations(data.pairs, data.years[2], schema);
  LearnerSpec spec = GbtSpec{};
  const auto& js = plain.parameters.at("spec");
  spec = GbtSpec{js.at("max_depth"), js.at("n_estimators"), js.at("learning_rate"), js.at("k")};
  const std::size_t gbt_index = 4;
  const auto model = fit_learner(spec, valid, derive_seed(triplet_seed, {gbt_index, 2}));
  const auto pred = predict(model, test);
  CHECK(plain.eval.cpc == evaluate(data.years[2], pred, data.pairs).cpc);
  const auto agg = aggregates(data.years[1]);
  const std::vector<double> out(agg.outgoing.begin(), agg.outgoing.end());
  const auto production = fit_production(data.zones->population(), out);
  CHECK(prod.eval.cpc ==
        evaluate(data.years[2], apply_production(pred, production, data.zones->population()), data.pairs).cpc);
}

TEST_CASE("run_triplet: test year is opened only after every fit") {
  const auto data = synth(15, 3, ClassicModelSpec{ClassicKind::gravity_power, 2.0, ProductionFn{0.03}, 0.0}, 0.2);
  AccessLog log;
  auto options = small_options(3);
  options.access_log = &log;
  const auto models = parse_model_list("gravity_exp,gbt,radiation,ann", FeatureVariant::traditional, false);
  const Triplet t{data.years[0], data.years[1], SealedYear(data.years[2], &log)};
  run_triplet(data, models, t, options, 1);
  const auto ev = log.events();
  const auto open = std::find_if(ev.begin(), ev.end(), [](const std::string& e) { return e.rfind("open_test:", 0) == 0; });
  REQUIRE(open != ev.end());
  CHECK(*open == "open_test:2002:evaluate");
  CHECK(std::count_if(ev.begin(), ev.end(), [](const std::string& e) { return e.rfind("open_test:", 0) == 0; }) == 1);
  for (auto it = ev.begin(); it != open; ++it) CHECK(it->rfind("fit:", 0) == 0);
  CHECK(std::count_if(ev.begin(), open, [](const std::string& e) { return e.rfind("fit:", 0) == 0; }) == 4);
  for (auto it = open + 1; it != ev.end(); ++it) CHECK(it->rfind("eval:", 0) == 0);
}

TEST_CASE("run_triplet: a failing model does not abort the others") {
  // two zones share a centroid, so gravity_power hits a zero distance
  auto z = testing::zones({{"A", 0, 0, 1000}, {"B", 0, 0, 2000}, {"C", 0, 0.1, 500}, {"D", 0.1, 0, 800}});
  std::vector<FlowMatrix> years;
  for (int y = 0; y < 3; ++y) years.emplace_back(z, 2000 + y, std::vector<FlowMatrix::Entry>{{0, 2, 5}, {1, 3, 4 + y}, {2, 0, 3}, {3, 1, 2}});
  const auto data = Dataset::assemble(z, std::move(years));
  const Triplet t{data.years[0], data.years[1], SealedYear(data.years[2], nullptr)};
  const auto r = run_triplet(data, parse_model_list("gravity_power,radiation", FeatureVariant::traditional, false), t,
                             RunOptions{}, 1);
  REQUIRE(r.results.size() == 2);
  CHECK(!r.results[0].ok);
  CHECK(!r.results[0].error.empty());
  CHECK(r.results[1].ok);
}

TEST_CASE("run_all: triplet counts") {
  const ClassicModelSpec gen{ClassicKind::gravity_exp, 0.02, ProductionFn{0.03}, 0.0};
  const auto models = parse_model_list("radiation", FeatureVariant::traditional, false);
  CHECK(run_all(synth(8, 11, gen), models, RunOptions{}).triplets.size() == 9);
  const auto three = run_all(synth(8, 3, gen), models, RunOptions{});
  REQUIRE(three.triplets.size() == 1);
  CHECK(three.triplets[0].train_year == 2000);
  CHECK(three.triplets[0].valid_year == 2001);
  CHECK(three.triplets[0].test_year == 2002);
  try {
    run_all(synth(8, 2, gen), models, RunOptions{});
    FAIL("expected InsufficientYears");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientYears);
  }
}

TEST_CASE("run_all: aggregates equal a hand recomputation") {
  const auto data = synth(12, 5, ClassicModelSpec{ClassicKind::gravity_power, 1.5, ProductionFn{0.03}, 0.0}, 0.4);
  const auto report = run_all(data, parse_model_list("radiation,gravity_exp", FeatureVariant::traditional, false), RunOptions{});
  REQUIRE(report.triplets.size() == 3);
  REQUIRE(report.aggregates.size() == 2);
  for (const auto& agg : report.aggregates) {
    for (const auto& [metric, s] : agg.metrics) {
      std::vector<double> v;
      for (const auto& t : report.triplets) v.push_back(metric_value(find(t, agg.label).eval, metric));
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      CHECK(s.count == 3);
      CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
      CHECK(s.std == doctest::Approx(std::sqrt(var / 3.0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("summarize_values: population std") {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize_values(v);
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(summarize_values(std::vector<double>{}).count == 0);
}

TEST_CASE("run_all: byte-identical report for a fixed seed") {
  const auto data = synth(15, 4, ClassicModelSpec{ClassicKind::gravity_power, 2.0, ProductionFn{0.03}, 0.0}, 0.3);
  const auto models = parse_model_list("gravity_power,gbt,ann", FeatureVariant::extended, true);
  const std::string a = nlohmann::json(run_all(data, models, small_options(5))).dump();
  const std::string b = nlohmann::json(run_all(data, models, small_options(5))).dump();
  CHECK(a == b);
  const std::string c = nlohmann::json(run_all(data, models, small_options(6))).dump();
  CHECK(a != c);
  const auto j = nlohmann::json::parse(a);
  CHECK(j.at("triplets").size() == 2);
  CHECK(j.at("aggregates").size() == 5);
  CHECK(j.at("feature_importance").size() == 1);  // gbt only, reported once per fitted model
}

TEST_CASE("format_table lists every label") {
  const auto data = synth(10, 3, ClassicModelSpec{ClassicKind::gravity_power, 2.0, ProductionFn{0.03}, 0.0}, 0.3);
  const auto report = run_all(data, parse_model_list("radiation,gravity_power", FeatureVariant::traditional, false), RunOptions{});
  const auto table = format_table(report);
  CHECK(table.find("radiation") != std::string::npos);
  CHECK(table.find("gravity_power") != std::string::npos);
  CHECK(table.find("+/-") != std::string::npos);
  CHECK(table.find("CPC_d") != std::string::npos);
}

TEST_CASE("error map: examples") {
  Rng rng(3);
  const auto z = testing::random_zones(rng, 10);
  const auto truth = testing::random_flows(z, rng, 0.4);
  const auto perfect = error_map(truth, to_real(truth));
  CHECK(perfect.size() == 10);
  for (const auto& r : perfect) CHECK(r.error == 0.0);

  const auto pred = testing::random_pred(z, rng, 0.4);
  const auto rows = error_map(truth, pred);
  const auto at = aggregates(truth);
  const auto ap = aggregates(pred);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(rows[i].zone_id == z->id(i));
    CHECK(rows[i].incoming_true == static_cast<double>(at.incoming[i]));
    CHECK(rows[i].incoming_pred == doctest::Approx(ap.incoming[i]).epsilon(1e-12));
    CHECK(rows[i].error == doctest::Approx(static_cast<double>(at.incoming[i]) - ap.incoming[i]).epsilon(1e-12));
  }
}

TEST_CASE("export_error_map writes CSV and GeoJSON") {
  Rng rng(4);
  const auto z = testing::random_zones(rng, 6);
  const auto truth = testing::random_flows(z, rng, 0.5);
  const auto pred = testing::random_pred(z, rng, 0.5);
  const auto dir = std::filesystem::temp_directory_path() / "migra_test_map";
  std::filesystem::create_directories(dir);
  export_error_map(truth, pred, dir / "m.csv", dir / "m.geojson");
  const auto csv = read_text_file(dir / "m.csv");
  CHECK(csv.rfind("zone_id,lat,lon,incoming_true,incoming_pred,error\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  const auto geo = nlohmann::json::parse(read_text_file(dir / "m.geojson"));
  CHECK(geo.at("type") == "FeatureCollection");
  REQUIRE(geo.at("features").size() == 6);
  const auto& f0 = geo.at("features")[0];
  CHECK(f0.at("geometry").at("coordinates")[0] == z->centroid(0).lon());
  CHECK(f0.at("properties").at("zone_id") == z->id(0));
  std::filesystem::remove_all(dir);
  try {
    export_error_map(truth, pred, "/nonexistent/dir/m.csv", "/nonexistent/dir/m.geojson");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IoError);
  }
}

TEST_CASE("model list parsing") {
  const auto m = parse_model_list(" gbt, radiation ,ann", FeatureVariant::extended, true);
  REQUIRE(m.size() == 3);
  CHECK(m[0].label() == "gbt/extended");
  CHECK(m[1].label() == "radiation");
  CHECK_THROWS_AS(parse_model_list("gbt,xgboost", FeatureVariant::extended, false), Error);
  CHECK_THROWS_AS(parse_model_list("", FeatureVariant::extended, false), Error);
}
