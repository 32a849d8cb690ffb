#include "migra/search.hpp"

#include <chrono>
#include <exception>

#include "migra/error.hpp"
#include "migra/metrics.hpp"

namespace migra {

SearchSpace SearchSpace::defaults(LearnerKind kind, double positive_density) {
  SearchSpace s;
  s.kind = kind;
  s.k = positive_density < 0.01 ? IntRange{5, 100} : IntRange{1, 5};
  return s;
}

namespace {

std::int64_t draw(Rng& rng, IntRange r) {
  if (r.lo > r.hi) throw Error(Errc::InvalidConfig, "empty integer range in search space");
  return rng.uniform_int(r.lo, r.hi);
}

IntRange range_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw Error(Errc::InvalidConfig, "ranges must be [lo, hi]");
  const IntRange r{j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
  if (r.lo > r.hi) throw Error(Errc::InvalidConfig, "range [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "] is empty");
  return r;
}

}  // namespace

LearnerSpec SearchSpace::sample(Rng& rng) const {
  if (kind == LearnerKind::gbt) {
    GbtSpec s;
    s.max_depth = static_cast<int>(draw(rng, max_depth));
    s.n_estimators = static_cast<int>(draw(rng, n_estimators));
    // (0, max]: 1 - U[0,1) never returns 0.
    s.learning_rate = learning_rate_max * (1.0 - rng.uniform());
    s.k = static_cast<std::size_t>(draw(rng, k));
    return s;
  }
  if (losses.empty() || batch_sizes.empty()) throw Error(Errc::InvalidConfig, "empty choice list in search space");
  AnnSpec s;
  s.loss = losses[rng.index(losses.size())];
  s.n_layers = static_cast<int>(draw(rng, n_layers));
  s.layer_width = static_cast<int>(draw(rng, layer_width));
  s.n_epochs = static_cast<int>(draw(rng, n_epochs));
  s.batch_size = batch_sizes[rng.index(batch_sizes.size())];
  s.k = static_cast<std::size_t>(draw(rng, k));
  return s;
}

void SearchSpace::apply_overrides(const nlohmann::json& o) {
  if (o.is_null()) return;
  if (!o.is_object()) throw Error(Errc::InvalidConfig, "search space overrides must be an object");
  for (const auto& [key, value] : o.items()) {
    if (key == "k") k = range_from(value);
    else if (key == "max_depth") max_depth = range_from(value);
    else if (key == "n_estimators") n_estimators = range_from(value);
    else if (key == "learning_rate_max") {
      learning_rate_max = value.get<double>();
      if (!(learning_rate_max > 0.0)) throw Error(Errc::InvalidConfig, "learning_rate_max must be positive");
    }
    else if (key == "n_layers") n_layers = range_from(value);
    else if (key == "layer_width") layer_width = range_from(value);
    else if (key == "n_epochs") n_epochs = range_from(value);
    else if (key == "batch_sizes") batch_sizes = value.get<std::vector<int>>();
    else if (key == "losses") {
      losses.clear();
      for (const auto& l : value) losses.push_back(parse_ann_loss(l.get<std::string>()));
    } else {
      throw Error(Errc::InvalidConfig, "unknown search space key '" + key + "'");
    }
  }
}

LearnerKind learner_kind(const LearnerSpec& spec) noexcept {
  return std::holds_alternative<GbtSpec>(spec) ? LearnerKind::gbt : LearnerKind::ann;
}

std::size_t negative_factor(const LearnerSpec& spec) noexcept {
  return std::visit([](const auto& s) { return s.k; }, spec);
}

LearnedModel fit_learner(const LearnerSpec& spec, const ObservationSet& train, std::uint64_t seed) {
  const SampledSet sample = downsample(train, negative_factor(spec), derive_seed(seed, {0}));
  if (const auto* g = std::get_if<GbtSpec>(&spec)) return fit_gbt(*g, sample.table());
  return fit_ann(std::get<AnnSpec>(spec), sample.table(), derive_seed(seed, {1}));
}

PredictedFlows predict(const LearnedModel& model, const ObservationSet& obs) {
  return std::visit([&](const auto& m) { return predict(m, obs); }, model);
}

SearchResult evaluate_trials(const std::vector<LearnerSpec>& specs, const ObservationSet& train,
                             const ObservationSet& valid, std::uint64_t seed, const TrialSink& sink) {
  if (specs.empty()) throw Error(Errc::AllTrialsFailed, "no trials to run");
  const PredictedFlows truth = valid.truth();
  SearchResult result;
  result.trials.resize(specs.size());
  const auto n = static_cast<std::ptrdiff_t>(specs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    Trial& trial = result.trials[static_cast<std::size_t>(t)];
    trial.index = static_cast<std::size_t>(t);
    trial.spec = specs[static_cast<std::size_t>(t)];
    trial.seed = derive_seed(seed, {static_cast<std::uint64_t>(t)});
    const auto start = std::chrono::steady_clock::now();
    try {
      const LearnedModel model = fit_learner(trial.spec, train, trial.seed);
      trial.valid_cpc = cpc(truth, predict(model, valid));
      trial.ok = std::isfinite(trial.valid_cpc);
      if (!trial.ok) trial.error = "validation CPC is not finite";
    } catch (const std::exception& e) {
      trial.ok = false;
      trial.error = e.what();
    }
    trial.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  bool any = false;
  for (const Trial& t : result.trials) {
    if (sink) sink(t);
    if (t.ok && (!any || t.valid_cpc > result.trials[result.best].valid_cpc)) {
      result.best = t.index;
      any = true;
    }
  }
  if (!any) throw Error(Errc::AllTrialsFailed, "every trial failed; first error: " + result.trials.front().error);
  return result;
}

SearchResult random_search(const SearchSpace& space, const ObservationSet& train, const ObservationSet& valid,
                           std::size_t n_trials, std::uint64_t seed, const TrialSink& sink) {
  Rng rng(derive_seed(seed, {0x5ea4c4}));
  std::vector<LearnerSpec> specs;
  specs.reserve(n_trials);
  for (std::size_t t = 0; t < n_trials; ++t) specs.push_back(space.sample(rng));
  return evaluate_trials(specs, train, valid, seed, sink);
}

void to_json(nlohmann::json& j, const LearnerSpec& s) {
  std::visit([&](const auto& spec) { j = spec; }, s);
}

nlohmann::json trial_json(const Trial& t) {
  nlohmann::json j{{"trial", t.index}, {"spec", t.spec}, {"valid_cpc", t.ok ? nlohmann::json(t.valid_cpc) : nlohmann::json(nullptr)},
                   {"ok", t.ok}, {"wall_seconds", t.wall_seconds}};
  if (!t.ok) j["error"] = t.error;
  return j;
}

void to_json(nlohmann::json& j, const LearnedModel& m) {
  std::visit([&](const auto& model) { j = model; }, m);
}

}  // namespace migra
