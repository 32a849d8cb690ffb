#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "migra/classic.hpp"
#include "migra/error.hpp"
#include "migra/flows.hpp"
#include "migra/pipeline.hpp"
#include "migra/search.hpp"
#include "migra/synth.hpp"
#include "migra/zones.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Inputs {
  std::string zones;
  std::string flows;
};

void add_inputs(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--zones", in.zones, "zones CSV (zone_id,lat,lon,population,...)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--flows", in.flows, "flows CSV (year,origin_id,destination_id,count)")->required()->check(CLI::ExistingFile);
}

struct Loaded {
  migra::ZoneTablePtr zones;
  std::map<int, migra::FlowMatrix> years;

  const migra::FlowMatrix& year(int y) const {
    auto it = years.find(y);
    if (it == years.end()) throw migra::Error(migra::Errc::InvalidConfig, "no flows for year " + std::to_string(y));
    return it->second;
  }
};

Loaded load(const std::string& zones_path, const std::string& flows_path) {
  Loaded l;
  l.zones = migra::load_zones(zones_path);
  l.years = migra::load_flows(flows_path, l.zones);
  return l;
}

migra::Dataset assemble(const Loaded& l) {
  std::vector<migra::FlowMatrix> years;
  for (const auto& [y, m] : l.years) years.push_back(m);
  return migra::Dataset::assemble(l.zones, std::move(years));
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    std::cout << text;
  else
    migra::write_text_file(path, text);
}

std::uint64_t env_seed(std::uint64_t fallback) {
  const char* s = std::getenv("MIGRA_SEED");
  if (!s || !*s) return fallback;
  try {
    return std::stoull(s);
  } catch (const std::exception&) {
    throw migra::Error(migra::Errc::InvalidConfig, std::string("MIGRA_SEED is not an integer: ") + s);
  }
}

bool parse_on_off(const std::string& v) {
  if (v == "on") return true;
  if (v == "off") return false;
  throw migra::Error(migra::Errc::InvalidConfig, "expected on|off, got '" + v + "'");
}

int cmd_ingest(const Inputs& in, const std::string& out) {
  const Loaded l = load(in.zones, in.flows);
  std::printf("zones: %zu\n", l.zones->size());
  std::printf("features: ");
  for (const auto& f : l.zones->feature_names()) std::printf("%s ", f.c_str());
  std::printf("\n");
  for (const auto& [y, m] : l.years)
    std::printf("year %d: %zu non-zero pairs (density %.4f), total %lld\n", y, m.nnz(), migra::positive_density(m),
                static_cast<long long>(m.total()));
  if (!out.empty()) {
    std::vector<migra::FlowMatrix> years;
    for (const auto& [y, m] : l.years) years.push_back(m);
    migra::save_flows(years, out);
  }
  return 0;
}

int cmd_synth(const migra::SynthConfig& cfg, const std::string& out_dir) {
  const auto data = migra::synth_dataset(cfg);
  fs::create_directories(out_dir);
  migra::save_zones(*data.zones, fs::path(out_dir) / "zones.csv");
  migra::save_flows(data.years, fs::path(out_dir) / "flows.csv");
  std::printf("wrote %zu zones and %zu years to %s\n", data.zones->size(), data.years.size(), out_dir.c_str());
  return 0;
}

int cmd_fit_classic(const Inputs& in, const std::string& kind_name, int train_year, std::optional<int> test_year,
                    const std::string& predictions) {
  const Loaded l = load(in.zones, in.flows);
  const auto pairs = migra::pair_features(l.zones, migra::default_pair_variables(*l.zones));
  const auto& train = l.year(train_year);
  const auto agg = migra::aggregates(train);
  const std::vector<double> outgoing(agg.outgoing.begin(), agg.outgoing.end());
  const auto production = migra::fit_production(l.zones->population(), outgoing);
  const auto kind = migra::parse_classic_kind(kind_name);

  json out;
  migra::ClassicModelSpec spec{kind, std::nullopt, production, 0.0};
  if (migra::needs_beta(kind)) {
    const auto cal = migra::calibrate_beta(kind, pairs, train, production);
    spec = cal.spec;
    out["train_cpc"] = cal.train_cpc;
  }
  out["spec"] = spec;
  if (test_year) {
    const auto& truth = l.year(*test_year);
    const auto pred = migra::predict_matrix(spec, pairs, *test_year);
    auto report = migra::evaluate(truth, pred, pairs);
    report.model = std::string(migra::to_string(kind));
    out["eval"] = report;
    if (!predictions.empty()) migra::save_flows(std::span<const migra::PredictedFlows>(&pred, 1), predictions);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_search(const Inputs& in, const std::string& model, const std::string& features, int train_year, int valid_year,
               std::size_t trials, std::uint64_t seed, const std::string& log_path) {
  const Loaded l = load(in.zones, in.flows);
  const auto data = assemble(l);
  const auto variant = migra::parse_feature_variant(features);
  const auto schema = variant == migra::FeatureVariant::traditional ? migra::FeatureSchema::traditional()
                                                                     : migra::FeatureSchema::extended(*data.zones, data.pairs);
  const auto train = migra::build_observations(data.pairs, l.year(train_year), schema);
  const auto valid = migra::build_observations(data.pairs, l.year(valid_year), schema);
  const auto kind = model == "gbt" ? migra::LearnerKind::gbt
                    : model == "ann"
                        ? migra::LearnerKind::ann
                        : throw migra::Error(migra::Errc::InvalidConfig, "search needs --model gbt|ann");
  const auto space = migra::SearchSpace::defaults(kind, migra::positive_density(l.year(train_year)));

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw migra::Error(migra::Errc::IoError, "cannot write " + log_path);
  }
  const auto result = migra::random_search(space, train, valid, trials, env_seed(seed), [&](const migra::Trial& t) {
    if (log) log << migra::trial_json(t).dump() << "\n";
  });
  json out = migra::trial_json(result.winner());
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct RunArgs {
  std::string config;
  Inputs in;
  std::optional<std::string> models, features, production;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::string out_json;
  std::string trials_log;
};

int cmd_run(RunArgs a) {
  json cfg = json::object();
  fs::path base;
  if (!a.config.empty()) {
    cfg = json::parse(migra::read_text_file(a.config));
    base = fs::path(a.config).parent_path();
  }
  auto resolve = [&](const std::string& key, const std::string& cli) -> std::string {
    if (!cli.empty()) return cli;
    if (!cfg.contains(key)) throw migra::Error(migra::Errc::InvalidConfig, "missing --" + key + " (or \"" + key + "\" in config)");
    const fs::path p = cfg.at(key).get<std::string>();
    return (p.is_absolute() ? p : base / p).string();
  };
  const Loaded l = load(resolve("zones", a.in.zones), resolve("flows", a.in.flows));
  const auto data = assemble(l);

  // Flags win over the config file.
  std::string model_list = "radiation,ext_radiation,gravity_power,gravity_exp,gbt,ann";
  if (a.models)
    model_list = *a.models;
  else if (cfg.contains("models")) {
    model_list.clear();
    for (const auto& m : cfg.at("models")) model_list += m.get<std::string>() + ",";
  }
  const std::string features = a.features.value_or(cfg.value("features", std::string("traditional")));
  const bool production = a.production ? parse_on_off(*a.production) : cfg.value("production", false);
  const auto models = migra::parse_model_list(model_list, migra::parse_feature_variant(features), production);

  migra::RunOptions options;
  options.seed = a.seed.value_or(cfg.value("seed", std::uint64_t{0}));
  options.seed = env_seed(options.seed);
  options.n_trials = a.trials.value_or(cfg.value("n_trials", std::size_t{50}));
  if (cfg.contains("search")) options.search_overrides = cfg.at("search");
  std::ofstream log;
  if (!a.trials_log.empty()) {
    log.open(a.trials_log);
    if (!log) throw migra::Error(migra::Errc::IoError, "cannot write " + a.trials_log);
    options.search_log = [&](const json& j) { log << j.dump() << "\n"; };
  }

  const auto report = migra::run_all(data, models, options);
  for (const auto& t : report.triplets)
    for (const auto& r : t.results)
      if (!r.ok) std::fprintf(stderr, "warning: %s failed on test year %d: %s\n", r.label.c_str(), t.test_year, r.error.c_str());
  std::cout << migra::format_table(report);
  if (!a.out_json.empty()) write_or_print(a.out_json, json(report).dump(2) + "\n");
  return 0;
}

int cmd_export_map(const Inputs& in, const std::string& predicted, int year, const std::string& csv, const std::string& geojson) {
  const Loaded l = load(in.zones, in.flows);
  const auto preds = migra::load_predicted_flows(predicted, l.zones);
  auto it = preds.find(year);
  if (it == preds.end()) throw migra::Error(migra::Errc::InvalidConfig, "no predictions for year " + std::to_string(year));
  migra::export_error_map(l.year(year), it->second, csv, geojson);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Origin/destination migration flow prediction"};
  app.require_subcommand(1);

  Inputs ingest_in;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "validate zones and flows, print a summary");
  add_inputs(ingest, ingest_in);
  ingest->add_option("--out", ingest_out, "write the normalized flows CSV here");

  migra::SynthConfig synth_cfg;
  std::string synth_dir, synth_kind = "gravity_power";
  double synth_beta = 2.0, synth_alpha = 0.03;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--out-dir", synth_dir, "directory for zones.csv and flows.csv")->required();
  synth->add_option("--seed", synth_cfg.seed);
  synth->add_option("--zones", synth_cfg.n_zones);
  synth->add_option("--years", synth_cfg.n_years);
  synth->add_option("--first-year", synth_cfg.first_year);
  synth->add_option("--generator", synth_kind, "radiation|ext_radiation|gravity_power|gravity_exp");
  synth->add_option("--beta", synth_beta);
  synth->add_option("--alpha", synth_alpha);
  synth->add_option("--noise", synth_cfg.noise, "std of log-normal multiplicative noise");

  Inputs fit_in;
  std::string fit_kind, fit_pred;
  int fit_train = 0;
  std::optional<int> fit_test;
  auto* fit = app.add_subcommand("fit-classic", "fit alpha (and beta) of a classic model on one year");
  add_inputs(fit, fit_in);
  fit->add_option("--kind", fit_kind, "radiation|ext_radiation|gravity_power|gravity_exp")->required();
  fit->add_option("--train", fit_train, "year to fit on")->required();
  fit->add_option("--test", fit_test, "year to evaluate on");
  fit->add_option("--predictions", fit_pred, "write test-year predicted flows CSV");

  Inputs search_in;
  std::string search_model, search_features = "traditional", search_log;
  int search_train = 0, search_valid = 0;
  std::size_t search_trials = 50;
  std::uint64_t search_seed = 0;
  auto* search = app.add_subcommand("search", "random hyperparameter search for gbt or ann");
  add_inputs(search, search_in);
  search->add_option("--model", search_model, "gbt|ann")->required();
  search->add_option("--features", search_features, "traditional|extended");
  search->add_option("--train", search_train)->required();
  search->add_option("--valid", search_valid)->required();
  search->add_option("--trials", search_trials);
  search->add_option("--seed", search_seed);
  search->add_option("--log", search_log, "write one JSON line per trial");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "full protocol over all year triplets");
  run->add_option("--config", run_args.config, "JSON config: zones, flows, models, features, production, seed, n_trials, search");
  run->add_option("--zones", run_args.in.zones);
  run->add_option("--flows", run_args.in.flows);
  run->add_option("--models", run_args.models);
  run->add_option("--features", run_args.features, "traditional|extended");
  run->add_option("--production", run_args.production, "on|off");
  run->add_option("--trials", run_args.trials);
  run->add_option("--seed", run_args.seed);
  run->add_option("--out", run_args.out_json, "write the JSON report here");
  run->add_option("--trials-log", run_args.trials_log, "write one JSON line per search trial");

  Inputs map_in;
  std::string map_pred, map_csv, map_geojson;
  int map_year = 0;
  auto* map = app.add_subcommand("export-map", "per-zone incoming-flow error map");
  add_inputs(map, map_in);
  map->add_option("--predicted", map_pred, "predicted flows CSV")->required()->check(CLI::ExistingFile);
  map->add_option("--year", map_year)->required();
  map->add_option("--csv", map_csv)->required();
  map->add_option("--geojson", map_geojson)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(ingest_in, ingest_out);
    if (*synth) {
      const auto kind = migra::parse_classic_kind(synth_kind);
      synth_cfg.generator = migra::ClassicModelSpec{kind, migra::needs_beta(kind) ? std::optional(synth_beta) : std::nullopt,
                                                    migra::ProductionFn{synth_alpha}, 0.0};
      return cmd_synth(synth_cfg, synth_dir);
    }
    if (*fit) return cmd_fit_classic(fit_in, fit_kind, fit_train, fit_test, fit_pred);
    if (*search)
      return cmd_search(search_in, search_model, search_features, search_train, search_valid, search_trials, search_seed,
                        search_log);
    if (*run) return cmd_run(run_args);
    if (*map) return cmd_export_map(map_in, map_pred, map_year, map_csv, map_geojson);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
