#include <cstdio>

#include "csv.hpp"
#include "migra/error.hpp"
#include "migra/pipeline.hpp"

namespace migra {

void to_json(nlohmann::json& j, const ModelResult& r) {
  j = nlohmann::json{{"label", r.label},
                     {"model", to_string(r.config.kind)},
                     {"features", to_string(r.config.features)},
                     {"production", r.production_applied},
                     {"ok", r.ok},
                     {"parameters", r.parameters}};
  if (r.ok) j["eval"] = r.eval;
  if (!r.error.empty()) j["error"] = r.error;
  if (!r.importances.empty()) {
    nlohmann::json imp = nlohmann::json::object();
    for (std::size_t c = 0; c < r.importances.size(); ++c) imp[r.importance_columns[c]] = r.importances[c];
    j["importances"] = imp;
  }
}

namespace {

nlohmann::json summary_json(const MetricSummary& s) { return {{"mean", s.mean}, {"std", s.std}, {"count", s.count}}; }

}  // namespace

void to_json(nlohmann::json& j, const RunReport& r) {
  nlohmann::json triplets = nlohmann::json::array();
  for (const auto& t : r.triplets)
    triplets.push_back({{"train_year", t.train_year},
                        {"valid_year", t.valid_year},
                        {"test_year", t.test_year},
                        {"results", t.results}});
  nlohmann::json aggregates = nlohmann::json::array();
  for (const auto& m : r.aggregates) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [name, s] : m.metrics) metrics[name] = summary_json(s);
    aggregates.push_back({{"label", m.label}, {"metrics", metrics}});
  }
  nlohmann::json importances = nlohmann::json::array();
  for (const auto& s : r.importances) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : s.rows) rows.push_back({{"feature", row.feature}, {"mean", row.share.mean}, {"std", row.share.std}});
    importances.push_back({{"label", s.label}, {"features", rows}});
  }
  j = nlohmann::json{{"seed", r.seed}, {"triplets", triplets}, {"aggregates", aggregates}, {"feature_importance", importances}};
}

std::string format_table(const RunReport& report) {
  static constexpr const char* kHeaders[] = {"CPC", "CPC_d", "RMSE", "r2", "MAE(in)", "r2(in)"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Model"});
  for (const char* h : kHeaders) cells.back().push_back(h);
  for (const auto& m : report.aggregates) {
    std::vector<std::string> row{m.label};
    for (const auto& [name, s] : m.metrics) {
      char buf[96];
      if (s.count == 0)
        std::snprintf(buf, sizeof buf, "n/a");
      else if (name == "rmse" || name == "incoming_mae")
        std::snprintf(buf, sizeof buf, "%.1f +/- %.1f", s.mean, s.std);
      else
        std::snprintf(buf, sizeof buf, "%.3f +/- %.3f", s.mean, s.std);
      row.emplace_back(buf);
    }
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::string out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      const std::string& s = cells[r][c];
      if (c == 0)
        out += s + std::string(width[c] - s.size(), ' ');
      else
        out += "  " + std::string(width[c] - s.size(), ' ') + s;
    }
    out += "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  if (!report.importances.empty()) {
    for (const auto& s : report.importances) {
      out += "\nTop features (" + s.label + ")\n";
      for (std::size_t i = 0; i < s.rows.size() && i < 10; ++i) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "  %-36s %5.1f%% +/- %4.1f%%\n", s.rows[i].feature.c_str(), 100.0 * s.rows[i].share.mean,
                      100.0 * s.rows[i].share.std);
        out += buf;
      }
    }
  }
  return out;
}

void export_error_map(const FlowMatrix& truth, const PredictedFlows& pred, const std::filesystem::path& csv_path,
                      const std::filesystem::path& geojson_path) {
  const auto rows = error_map(truth, pred);
  std::string out = "zone_id,lat,lon,incoming_true,incoming_pred,error\n";
  nlohmann::json features = nlohmann::json::array();
  for (const auto& r : rows) {
    out += csv::quote(r.zone_id) + "," + csv::format_double(r.lat) + "," + csv::format_double(r.lon) + "," +
           csv::format_double(r.incoming_true) + "," + csv::format_double(r.incoming_pred) + "," +
           csv::format_double(r.error) + "\n";
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {r.lon, r.lat}}}},
                        {"properties",
                         {{"zone_id", r.zone_id},
                          {"lat", r.lat},
                          {"lon", r.lon},
                          {"incoming_true", r.incoming_true},
                          {"incoming_pred", r.incoming_pred},
                          {"error", r.error}}}});
  }
  write_text_file(csv_path, out);
  const nlohmann::json geo{{"type", "FeatureCollection"}, {"features", features}};
  write_text_file(geojson_path, geo.dump(2) + "\n");
}

}  // namespace migra
