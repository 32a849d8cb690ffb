#include "migra/metrics.hpp"

#include <algorithm>

namespace migra {

double mean_absolute_error(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) throw Error(Errc::SchemaMismatch, "vector lengths differ");
  if (truth.empty()) return 0.0;
  CompensatedSum s;
  for (std::size_t i = 0; i < truth.size(); ++i) s += std::abs(truth[i] - pred[i]);
  return s.value() / static_cast<double>(truth.size());
}

double r2_score(std::span<const double> truth, std::span<const double> pred) {
  if (truth.size() != pred.size()) throw Error(Errc::SchemaMismatch, "vector lengths differ");
  if (truth.empty() || std::all_of(truth.begin(), truth.end(), [&](double v) { return v == truth.front(); }))
    throw Error(Errc::DegenerateTruth, "truth vector is constant");
  const double mean = compensated_sum(truth) / static_cast<double>(truth.size());
  CompensatedSum ss_res, ss_tot;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  return 1.0 - ss_res.value() / ss_tot.value();
}

double metric_value(const EvalReport& r, std::string_view metric) {
  if (metric == "cpc") return r.cpc;
  if (metric == "cpc_d") return r.cpc_d;
  if (metric == "rmse") return r.rmse;
  if (metric == "r2") return r.r2;
  if (metric == "incoming_mae") return r.incoming_mae;
  if (metric == "incoming_r2") return r.incoming_r2;
  throw Error(Errc::InvalidConfig, "unknown metric '" + std::string(metric) + "'");
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"model", r.model},   {"year", r.year}, {"features", r.features},
                     {"cpc", r.cpc},       {"cpc_d", r.cpc_d}, {"rmse", r.rmse},
                     {"r2", r.r2},         {"incoming_mae", r.incoming_mae},
                     {"incoming_r2", r.incoming_r2}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  j.at("model").get_to(r.model);
  j.at("year").get_to(r.year);
  j.at("features").get_to(r.features);
  j.at("cpc").get_to(r.cpc);
  j.at("cpc_d").get_to(r.cpc_d);
  j.at("rmse").get_to(r.rmse);
  j.at("r2").get_to(r.r2);
  j.at("incoming_mae").get_to(r.incoming_mae);
  j.at("incoming_r2").get_to(r.incoming_r2);
}

}  // namespace migra
