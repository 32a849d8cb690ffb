#include "migra/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "migra/error.hpp"
#include "migra/production.hpp"

namespace migra {

std::vector<std::string> default_pair_variables(const ZoneTable& zones) {
  std::vector<std::string> v = zones.column_names();
  v.emplace_back(kZoneCountColumn);
  return v;
}

Dataset Dataset::assemble(ZoneTablePtr zones, std::vector<FlowMatrix> years) {
  for (const auto& y : years)
    if (!y.zones().same_universe(*zones))
      throw Error(Errc::ZoneUniverseMismatch, "flows for year " + std::to_string(y.year()) + " use another zone table");
  std::sort(years.begin(), years.end(), [](const FlowMatrix& a, const FlowMatrix& b) { return a.year() < b.year(); });
  PairFeatureSet pairs = pair_features(zones, default_pair_variables(*zones));
  return Dataset{std::move(zones), std::move(pairs), std::move(years)};
}

void AccessLog::record(std::string event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
}

std::vector<std::string> AccessLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

const FlowMatrix& SealedYear::open(std::string_view reason) const {
  if (log_) log_->record("open_test:" + std::to_string(flows_->year()) + ":" + std::string(reason));
  return *flows_;
}

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::radiation: return "radiation";
    case ModelKind::ext_radiation: return "ext_radiation";
    case ModelKind::gravity_power: return "gravity_power";
    case ModelKind::gravity_exp: return "gravity_exp";
    case ModelKind::gbt: return "gbt";
    case ModelKind::ann: return "ann";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  for (auto k : {ModelKind::radiation, ModelKind::ext_radiation, ModelKind::gravity_power, ModelKind::gravity_exp,
                 ModelKind::gbt, ModelKind::ann})
    if (to_string(k) == name) return k;
  throw Error(Errc::InvalidConfig, "unknown model '" + std::string(name) + "'");
}

bool is_learned(ModelKind kind) noexcept { return kind == ModelKind::gbt || kind == ModelKind::ann; }

std::string ModelConfig::label() const {
  std::string l(to_string(kind));
  if (is_learned(kind)) l += "/" + std::string(to_string(features));
  return l;
}

std::vector<ModelConfig> parse_model_list(std::string_view csv, FeatureVariant features, bool production) {
  std::vector<ModelConfig> out;
  while (!csv.empty()) {
    const auto comma = csv.find(',');
    std::string_view name = csv.substr(0, comma);
    csv = comma == std::string_view::npos ? std::string_view{} : csv.substr(comma + 1);
    while (!name.empty() && name.front() == ' ') name.remove_prefix(1);
    while (!name.empty() && name.back() == ' ') name.remove_suffix(1);
    if (name.empty()) continue;
    out.push_back({parse_model_kind(name), features, production});
  }
  if (out.empty()) throw Error(Errc::InvalidConfig, "no models requested");
  return out;
}

namespace {

ClassicKind classic_of(ModelKind k) {
  switch (k) {
    case ModelKind::radiation: return ClassicKind::radiation;
    case ModelKind::ext_radiation: return ClassicKind::ext_radiation;
    case ModelKind::gravity_power: return ClassicKind::gravity_power;
    case ModelKind::gravity_exp: return ClassicKind::gravity_exp;
    default: break;
  }
  throw Error(Errc::InvalidConfig, "not a classic model");
}

struct Fitted {
  ModelConfig config;
  std::optional<ClassicModelSpec> classic;
  std::optional<LearnedModel> learned;
  nlohmann::json parameters = nlohmann::json::object();
  std::string error;
};

FeatureSchema schema_for(FeatureVariant v, const Dataset& data) {
  return v == FeatureVariant::traditional ? FeatureSchema::traditional() : FeatureSchema::extended(*data.zones, data.pairs);
}

ModelResult failed(const std::string& label, const ModelConfig& cfg, const std::string& error) {
  ModelResult r;
  r.label = label;
  r.config = cfg;
  r.error = error;
  return r;
}

}  // namespace

TripletReport run_triplet(const Dataset& data, const std::vector<ModelConfig>& models, const Triplet& triplet,
                          const RunOptions& options, std::uint64_t triplet_seed) {
  TripletReport report;
  report.train_year = triplet.train.year();
  report.valid_year = triplet.valid.year();
  report.test_year = triplet.test.year();
  auto log = [&](std::string event) {
    if (options.access_log) options.access_log->record(std::move(event));
  };

  // Production function for the year preceding the test year.
  std::optional<ProductionFn> production;
  std::string production_error;
  try {
    const auto agg = aggregates(triplet.valid);
    std::vector<double> outgoing(agg.outgoing.begin(), agg.outgoing.end());
    production = fit_production(data.zones->population(), outgoing);
  } catch (const Error& e) {
    production_error = e.what();
  }

  std::map<FeatureVariant, ObservationSet> train_obs, valid_obs;
  auto observations = [&](std::map<FeatureVariant, ObservationSet>& cache, const FlowMatrix& flows, FeatureVariant v)
      -> const ObservationSet& {
    auto it = cache.find(v);
    if (it == cache.end()) it = cache.emplace(v, build_observations(data.pairs, flows, schema_for(v, data))).first;
    return it->second;
  };

  // Phase 1: everything that learns from data. The test year stays sealed.
  std::vector<Fitted> fitted;
  for (std::size_t mi = 0; mi < models.size(); ++mi) {
    const ModelConfig& cfg = models[mi];
    Fitted f;
    f.config = cfg;
    log("fit:" + cfg.label());
    try {
      if (!is_learned(cfg.kind)) {
        if (!production) throw Error(Errc::AllZeroPopulations, production_error);
        const ClassicKind kind = classic_of(cfg.kind);
        if (needs_beta(kind)) {
          const Calibration cal = calibrate_beta(kind, data.pairs, triplet.valid, *production, options.calibration);
          f.classic = cal.spec;
          f.parameters = cal.spec;
          f.parameters["train_cpc"] = cal.train_cpc;
          f.parameters["grid_fallback"] = cal.used_grid_fallback;
        } else {
          f.classic = ClassicModelSpec{kind, std::nullopt, *production, 0.0};
          f.parameters = *f.classic;
        }
      } else {
        const ObservationSet& train = observations(train_obs, triplet.train, cfg.features);
        const ObservationSet& valid = observations(valid_obs, triplet.valid, cfg.features);
        const LearnerKind lk = cfg.kind == ModelKind::gbt ? LearnerKind::gbt : LearnerKind::ann;
        SearchSpace space = SearchSpace::defaults(lk, positive_density(triplet.train));
        const char* key = lk == LearnerKind::gbt ? "gbt" : "ann";
        if (options.search_overrides.contains(key)) space.apply_overrides(options.search_overrides.at(key));
        if (options.search_overrides.contains("k")) space.apply_overrides({{"k", options.search_overrides.at("k")}});
        TrialSink sink;
        if (options.search_log) {
          sink = [&](const Trial& t) {
            nlohmann::json j = trial_json(t);
            j["model"] = cfg.label();
            j["train_year"] = report.train_year;
            j["valid_year"] = report.valid_year;
            options.search_log(j);
          };
        }
        const SearchResult search = random_search(space, train, valid, options.n_trials, derive_seed(triplet_seed, {mi, 1}), sink);
        const Trial& win = search.winner();
        f.learned = fit_learner(win.spec, valid, derive_seed(triplet_seed, {mi, 2}));
        f.parameters = nlohmann::json{{"spec", win.spec}, {"valid_cpc", win.valid_cpc}, {"trial", win.index}};
        if (production) f.parameters["alpha"] = production->alpha;
      }
    } catch (const std::exception& e) {
      f.error = e.what();
    }
    fitted.push_back(std::move(f));
  }

  // Phase 2: open the test year and score every fitted model on it.
  const FlowMatrix& test = triplet.test.open("evaluate");
  std::map<FeatureVariant, ObservationSet> test_obs;
  for (const Fitted& f : fitted) {
    const std::string label = f.config.label();
    log("eval:" + label);
    if (!f.error.empty()) {
      report.results.push_back(failed(label, f.config, f.error));
      continue;
    }
    auto finish = [&](std::string name, bool with_production, const PredictedFlows& pred) {
      ModelResult r;
      r.label = std::move(name);
      r.config = f.config;
      r.production_applied = with_production;
      r.parameters = f.parameters;
      try {
        r.eval = evaluate(test, pred, data.pairs);
        r.eval.model = r.label;
        r.eval.features = std::string(to_string(f.config.features));
        r.ok = true;
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      return r;
    };
    try {
      if (f.classic) {
        report.results.push_back(finish(label, true, predict_matrix(*f.classic, data.pairs, test.year())));
        report.results.back().eval.features = "traditional";
      } else {
        const ObservationSet& obs = observations(test_obs, test, f.config.features);
        const PredictedFlows pred = predict(*f.learned, obs);
        ModelResult plain = finish(label, false, pred);
        if (const auto* g = std::get_if<GbtModel>(&*f.learned)) {
          plain.importance_columns = g->columns();
          plain.importances = g->importances();
        }
        report.results.push_back(std::move(plain));
        if (f.config.production) {
          if (production)
            report.results.push_back(finish(label + "+production", true,
                                            apply_production(pred, *production, data.zones->population())));
          else
            report.results.push_back(failed(label + "+production", f.config, production_error));
        }
      }
    } catch (const std::exception& e) {
      report.results.push_back(failed(label, f.config, e.what()));
    }
  }
  return report;
}

MetricSummary summarize_values(std::span<const double> values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  CompensatedSum sum;
  for (double v : values) sum += v;
  s.mean = sum.value() / static_cast<double>(values.size());
  CompensatedSum var;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var.value() / static_cast<double>(values.size()));
  return s;
}

std::vector<ModelSummary> summarize(const std::vector<TripletReport>& triplets) {
  std::vector<std::string> labels;
  for (const auto& t : triplets)
    for (const auto& r : t.results)
      if (std::find(labels.begin(), labels.end(), r.label) == labels.end()) labels.push_back(r.label);
  std::vector<ModelSummary> out;
  for (const auto& label : labels) {
    ModelSummary s{label, {}};
    for (const char* metric : kMetricNames) {
      std::vector<double> values;
      for (const auto& t : triplets)
        for (const auto& r : t.results)
          if (r.label == label && r.ok) values.push_back(metric_value(r.eval, metric));
      s.metrics.emplace_back(metric, summarize_values(values));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<ImportanceSummary> summarize_importances(const std::vector<TripletReport>& triplets) {
  std::vector<ImportanceSummary> out;
  std::vector<std::string> labels;
  for (const auto& t : triplets)
    for (const auto& r : t.results)
      if (r.ok && !r.importances.empty() && std::find(labels.begin(), labels.end(), r.label) == labels.end())
        labels.push_back(r.label);
  for (const auto& label : labels) {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;
    for (const auto& t : triplets)
      for (const auto& r : t.results) {
        if (r.label != label || !r.ok || r.importances.empty()) continue;
        if (columns.empty()) {
          columns = r.importance_columns;
          values.resize(columns.size());
        }
        for (std::size_t c = 0; c < columns.size() && c < r.importances.size(); ++c) values[c].push_back(r.importances[c]);
      }
    ImportanceSummary s{label, {}};
    for (std::size_t c = 0; c < columns.size(); ++c) s.rows.push_back({columns[c], summarize_values(values[c])});
    std::stable_sort(s.rows.begin(), s.rows.end(),
                     [](const ImportanceRow& a, const ImportanceRow& b) { return a.share.mean > b.share.mean; });
    out.push_back(std::move(s));
  }
  return out;
}

RunReport run_all(const Dataset& data, const std::vector<ModelConfig>& models, const RunOptions& options) {
  if (data.years.size() < 3)
    throw Error(Errc::InsufficientYears, "need at least 3 years of flows, got " + std::to_string(data.years.size()));
  RunReport report;
  report.seed = options.seed;
  for (std::size_t t = 2; t < data.years.size(); ++t) {
    const Triplet triplet{data.years[t - 2], data.years[t - 1], SealedYear(data.years[t], options.access_log)};
    report.triplets.push_back(run_triplet(data, models, triplet, options, derive_seed(options.seed, {t})));
  }
  report.aggregates = summarize(report.triplets);
  report.importances = summarize_importances(report.triplets);
  return report;
}

std::vector<ErrorMapRow> error_map(const FlowMatrix& truth, const PredictedFlows& pred) {
  if (!truth.zones().same_universe(pred.zones()))
    throw Error(Errc::ZoneUniverseMismatch, "matrices are defined over different zone tables");
  const auto at = aggregates(truth);
  const auto ap = aggregates(pred);
  std::vector<ErrorMapRow> rows;
  for (std::size_t i = 0; i < truth.zone_count(); ++i) {
    const double t = static_cast<double>(at.incoming[i]);
    rows.push_back({truth.zones().id(i), truth.zones().centroid(i).lat(), truth.zones().centroid(i).lon(), t,
                    ap.incoming[i], t - ap.incoming[i]});
  }
  return rows;
}

}  // namespace migra
