#include <doctest.h>

#include <algorithm>

#include "migra/error.hpp"
#include "migra/metrics.hpp"
#include "migra/search.hpp"
#include "migra/synth.hpp"
#include "support.hpp"

using namespace migra;

namespace {

struct Data {
  SynthDataset d;
  PairFeatureSet pairs;
  ObservationSet train, valid;
};

Data make_data() {
  SynthConfig cfg;
  cfg.n_zones = 25;
  cfg.noise = 0.2;
  auto d = synth_dataset(cfg);
  auto pairs = pair_features(d.zones, {"population"});
  auto train = build_observations(pairs, d.years[0], FeatureSchema::traditional());
  auto valid = build_observations(pairs, d.years[1], FeatureSchema::traditional());
  return Data{std::move(d), std::move(pairs), std::move(train), std::move(valid)};
}

const Data& data() {
  static const Data d = make_data();
  return d;
}

SearchSpace small_space(LearnerKind kind) {
  SearchSpace s = SearchSpace::defaults(kind, 0.5);
  s.n_estimators = {5, 20};
  s.n_epochs = {1, 3};
  s.layer_width = {8, 16};
  s.n_layers = {1, 2};
  return s;
}

}  // namespace

TEST_CASE("search space defaults follow positive density") {
  CHECK(SearchSpace::defaults(LearnerKind::gbt, 0.005).k.lo == 5);
  CHECK(SearchSpace::defaults(LearnerKind::gbt, 0.005).k.hi == 100);
  CHECK(SearchSpace::defaults(LearnerKind::ann, 0.2).k.lo == 1);
  CHECK(SearchSpace::defaults(LearnerKind::ann, 0.2).k.hi == 5);
}

TEST_CASE("sampled specs stay inside the published ranges") {
  Rng rng(3);
  const auto g = SearchSpace::defaults(LearnerKind::gbt, 0.001);
  const auto a = SearchSpace::defaults(LearnerKind::ann, 0.3);
  const std::vector<int> batches{512, 1024, 2048, 4096, 8192, 16384};
  bool saw_cpc = false, saw_mse = false;
  for (int t = 0; t < 500; ++t) {
    const auto gs = std::get<GbtSpec>(g.sample(rng));
    CHECK((gs.max_depth >= 2 && gs.max_depth <= 7));
    CHECK((gs.n_estimators >= 25 && gs.n_estimators <= 275));
    CHECK((gs.learning_rate > 0.0 && gs.learning_rate <= 0.5));
    CHECK((gs.k >= 5 && gs.k <= 100));
    const auto as = std::get<AnnSpec>(a.sample(rng));
    CHECK((as.n_layers >= 1 && as.n_layers <= 5));
    CHECK((as.layer_width >= 16 && as.layer_width <= 128));
    CHECK((as.n_epochs >= 10 && as.n_epochs <= 50));
    CHECK(std::find(batches.begin(), batches.end(), as.batch_size) != batches.end());
    CHECK((as.k >= 1 && as.k <= 5));
    (as.loss == AnnLoss::cpc ? saw_cpc : saw_mse) = true;
  }
  CHECK(saw_cpc);
  CHECK(saw_mse);
}

TEST_CASE("search space overrides") {
  auto s = SearchSpace::defaults(LearnerKind::gbt, 0.5);
  s.apply_overrides({{"max_depth", {3, 3}}, {"k", {2, 2}}, {"learning_rate_max", 0.1}});
  Rng rng(1);
  const auto g = std::get<GbtSpec>(s.sample(rng));
  CHECK(g.max_depth == 3);
  CHECK(g.k == 2);
  CHECK(g.learning_rate <= 0.1);
  CHECK_THROWS_AS(s.apply_overrides({{"max_depth", {5, 2}}}), Error);
  CHECK_THROWS_AS(s.apply_overrides({{"depth", {1, 2}}}), Error);
}

TEST_CASE("random_search: single trial") {
  const auto& d = data();
  const auto r = random_search(small_space(LearnerKind::gbt), d.train, d.valid, 1, 5);
  REQUIRE(r.trials.size() == 1);
  CHECK(r.best == 0);
  CHECK(r.winner().ok);
  CHECK(r.winner().valid_cpc == doctest::Approx(cpc(d.d.years[1], predict(fit_learner(r.winner().spec, d.train, r.winner().seed), d.valid))).epsilon(1e-15));
}

TEST_CASE("random_search: deterministic under a fixed seed") {
  const auto& d = data();
  for (auto kind : {LearnerKind::gbt, LearnerKind::ann}) {
    const auto a = random_search(small_space(kind), d.train, d.valid, 6, 42);
    const auto b = random_search(small_space(kind), d.train, d.valid, 6, 42);
    REQUIRE(a.trials.size() == b.trials.size());
    CHECK(a.best == b.best);
    for (std::size_t t = 0; t < a.trials.size(); ++t) {
      CHECK(nlohmann::json(a.trials[t].spec).dump() == nlohmann::json(b.trials[t].spec).dump());
      CHECK(a.trials[t].valid_cpc == b.trials[t].valid_cpc);
      CHECK(a.trials[t].seed == derive_seed(42, {t}));
    }
    for (const auto& t : a.trials) CHECK(t.valid_cpc <= a.winner().valid_cpc);
  }
}

TEST_CASE("evaluate_trials: a known-good spec beats a degenerate one") {
  const auto& d = data();
  const std::vector<LearnerSpec> specs{GbtSpec{2, 1, 1e-9, 1}, GbtSpec{4, 80, 0.2, 3}, GbtSpec{2, 1, 1e-9, 1}};
  const auto r = evaluate_trials(specs, d.train, d.valid, 1);
  CHECK(r.best == 1);
  CHECK(r.trials[1].valid_cpc > r.trials[0].valid_cpc);
}

TEST_CASE("evaluate_trials: ties go to the first trial") {
  // every pair is positive, so downsampling keeps all rows and identical
  // specs give identical models whatever their seeds
  Rng rng(4);
  const auto z = testing::random_zones(rng, 8);
  const auto pairs = pair_features(z, {"population"});
  auto dense = [&](int year) {
    std::vector<FlowMatrix::Entry> e;
    for (std::uint32_t i = 0; i < 8; ++i)
      for (std::uint32_t j = 0; j < 8; ++j)
        if (i != j) e.push_back({i, j, rng.uniform_int(1, 30)});
    return FlowMatrix(z, year, std::move(e));
  };
  const auto train = build_observations(pairs, dense(2000), FeatureSchema::traditional());
  const auto valid = build_observations(pairs, dense(2001), FeatureSchema::traditional());
  const std::vector<LearnerSpec> specs{GbtSpec{2, 3, 0.1, 1}, GbtSpec{3, 10, 0.2, 2}, GbtSpec{3, 10, 0.2, 2}};
  const auto r = evaluate_trials(specs, train, valid, 1);
  CHECK(r.trials[1].valid_cpc == r.trials[2].valid_cpc);
  CHECK(r.trials[1].valid_cpc > r.trials[0].valid_cpc);
  CHECK(r.best == 1);
}

TEST_CASE("evaluate_trials: failures recorded, all failing throws") {
  const auto& d = data();
  const std::vector<LearnerSpec> mixed{GbtSpec{0, 10, 0.1, 1}, GbtSpec{2, 5, 0.3, 1}};
  const auto r = evaluate_trials(mixed, d.train, d.valid, 1);
  CHECK(!r.trials[0].ok);
  CHECK(!r.trials[0].error.empty());
  CHECK(r.best == 1);
  const std::vector<LearnerSpec> bad{GbtSpec{0, 10, 0.1, 1}, GbtSpec{2, 0, 0.1, 1}};
  try {
    evaluate_trials(bad, d.train, d.valid, 1);
    FAIL("expected AllTrialsFailed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::AllTrialsFailed);
  }
}

TEST_CASE("search log lines and sink") {
  const auto& d = data();
  std::vector<nlohmann::json> lines;
  random_search(small_space(LearnerKind::ann), d.train, d.valid, 3, 9,
                [&](const Trial& t) { lines.push_back(trial_json(t)); });
  REQUIRE(lines.size() == 3);
  for (const auto& l : lines) {
    CHECK(l.contains("spec"));
    CHECK(l.contains("valid_cpc"));
    CHECK(l.contains("wall_seconds"));
    CHECK(l.at("spec").at("model") == "ann");
  }
}

TEST_CASE("fit_learner downsamples with the spec's k") {
  const auto& d = data();
  const auto m = fit_learner(GbtSpec{2, 3, 0.3, 4}, d.train, 1);
  CHECK(std::holds_alternative<GbtModel>(m));
  CHECK(negative_factor(GbtSpec{2, 3, 0.3, 4}) == 4);
  AnnSpec a;
  a.k = 2;
  CHECK(negative_factor(a) == 2);
  CHECK(learner_kind(a) == LearnerKind::ann);
}
