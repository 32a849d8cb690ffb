#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "migra/classic.hpp"
#include "migra/dataset.hpp"
#include "migra/metrics.hpp"
#include "migra/search.hpp"

namespace migra {

/// Zones, their pair features and consecutive yearly flow matrices.
struct Dataset {
  ZoneTablePtr zones;
  PairFeatureSet pairs;
  std::vector<FlowMatrix> years;  // ordered by year

  /// Computes pair features for default_pair_variables(). Errors:
  /// ZoneUniverseMismatch when a matrix uses another zone table.
  static Dataset assemble(ZoneTablePtr zones, std::vector<FlowMatrix> years);
};

/// population, every zone feature, and the built-in zone count.
std::vector<std::string> default_pair_variables(const ZoneTable& zones);

/// Append-only, thread-safe event log used to audit data access order.
class AccessLog {
 public:
  void record(std::string event);
  std::vector<std::string> events() const;

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> events_;
};

/// The test year of a triplet. The only way to its flows is open(), which
/// leaves a trace in the access log.
class SealedYear {
 public:
  SealedYear(const FlowMatrix& flows, AccessLog* log) : flows_(&flows), log_(log) {}
  int year() const noexcept { return flows_->year(); }
  const FlowMatrix& open(std::string_view reason) const;

 private:
  const FlowMatrix* flows_;
  AccessLog* log_;
};

struct Triplet {
  const FlowMatrix& train;
  const FlowMatrix& valid;
  SealedYear test;
};

enum class ModelKind { radiation, ext_radiation, gravity_power, gravity_exp, gbt, ann };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);
bool is_learned(ModelKind kind) noexcept;

struct ModelConfig {
  ModelKind kind = ModelKind::radiation;
  FeatureVariant features = FeatureVariant::traditional;
  /// For learned models: also evaluate the production-rescaled variant.
  bool production = false;

  std::string label() const;
};

/// "radiation,gbt,..." -> configs sharing the feature variant and
/// production switch.
std::vector<ModelConfig> parse_model_list(std::string_view csv, FeatureVariant features, bool production);

struct RunOptions {
  std::uint64_t seed = 0;
  std::size_t n_trials = 50;
  /// {"gbt": {...}, "ann": {...}} applied over SearchSpace::defaults.
  nlohmann::json search_overrides = nlohmann::json::object();
  CalibrationOptions calibration;
  AccessLog* access_log = nullptr;
  /// Receives one JSON object per search trial.
  std::function<void(const nlohmann::json&)> search_log;
};

struct ModelResult {
  std::string label;
  ModelConfig config;
  bool production_applied = false;
  bool ok = false;
  std::string error;
  EvalReport eval;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::string> importance_columns;
  std::vector<double> importances;
};

struct TripletReport {
  int train_year = 0;
  int valid_year = 0;
  int test_year = 0;
  std::vector<ModelResult> results;
};

/// Classic models: alpha and beta fitted on the validation year. Learned
/// models: search on (train, valid), refit the winner on valid. Everything
/// is fitted before the test year is opened; a failing model is recorded
/// and the others continue.
TripletReport run_triplet(const Dataset& data, const std::vector<ModelConfig>& models, const Triplet& triplet,
                          const RunOptions& options, std::uint64_t triplet_seed);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

MetricSummary summarize_values(std::span<const double> values);

struct ModelSummary {
  std::string label;
  std::vector<std::pair<std::string, MetricSummary>> metrics;  // kMetricNames order
};

struct ImportanceRow {
  std::string feature;
  MetricSummary share;
};

struct ImportanceSummary {
  std::string label;
  std::vector<ImportanceRow> rows;  // sorted by mean share, descending
};

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<TripletReport> triplets;
  std::vector<ModelSummary> aggregates;
  std::vector<ImportanceSummary> importances;
};

/// Mean and std per model label and metric over successful triplets.
std::vector<ModelSummary> summarize(const std::vector<TripletReport>& triplets);
std::vector<ImportanceSummary> summarize_importances(const std::vector<TripletReport>& triplets);

/// Slides (t-2, t-1, t) over all years. Errors: InsufficientYears.
RunReport run_all(const Dataset& data, const std::vector<ModelConfig>& models, const RunOptions& options);

void to_json(nlohmann::json& j, const ModelResult& r);
void to_json(nlohmann::json& j, const RunReport& r);
/// Aligned text table, one row per model label, "mean +/- std" cells.
std::string format_table(const RunReport& report);

struct ErrorMapRow {
  std::string zone_id;
  double lat = 0.0;
  double lon = 0.0;
  double incoming_true = 0.0;
  double incoming_pred = 0.0;
  double error = 0.0;  // true - predicted
};

std::vector<ErrorMapRow> error_map(const FlowMatrix& truth, const PredictedFlows& pred);

/// Writes `csv_path` (zone_id,lat,lon,incoming_true,incoming_pred,error)
/// and a GeoJSON point collection with the same properties. Errors: IoError.
void export_error_map(const FlowMatrix& truth, const PredictedFlows& pred, const std::filesystem::path& csv_path,
                      const std::filesystem::path& geojson_path);

}  // namespace migra
