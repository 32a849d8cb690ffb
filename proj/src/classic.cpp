#include "migra/classic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "migra/error.hpp"
#include "migra/metrics.hpp"
#include "migra/numeric.hpp"

namespace migra {

ProductionFn fit_production(std::span<const double> populations, std::span<const double> outgoing) {
  if (populations.size() != outgoing.size())
    throw Error(Errc::InvalidConfig, "population and outgoing vectors differ in length");
  CompensatedSum mo, mm;
  for (std::size_t i = 0; i < populations.size(); ++i) {
    mo += populations[i] * outgoing[i];
    mm += populations[i] * populations[i];
  }
  if (!(mm.value() > 0.0)) throw Error(Errc::AllZeroPopulations, "every population is zero");
  return ProductionFn{std::max(0.0, mo.value() / mm.value())};
}

std::string_view to_string(ClassicKind kind) noexcept {
  switch (kind) {
    case ClassicKind::radiation: return "radiation";
    case ClassicKind::ext_radiation: return "ext_radiation";
    case ClassicKind::gravity_power: return "gravity_power";
    case ClassicKind::gravity_exp: return "gravity_exp";
  }
  return "?";
}

ClassicKind parse_classic_kind(std::string_view name) {
  for (auto k : {ClassicKind::radiation, ClassicKind::ext_radiation, ClassicKind::gravity_power, ClassicKind::gravity_exp})
    if (to_string(k) == name) return k;
  throw Error(Errc::InvalidConfig, "unknown classic model '" + std::string(name) + "'");
}

bool needs_beta(ClassicKind kind) noexcept { return kind != ClassicKind::radiation; }

void ClassicModelSpec::validate() const {
  if (!(production.alpha >= 0.0)) throw Error(Errc::InvalidConfig, "alpha must be >= 0");
  if (needs_beta(kind) && !(beta && *beta > 0.0 && std::isfinite(*beta)))
    throw Error(Errc::InvalidConfig, std::string(to_string(kind)) + " needs beta > 0");
  if (!(distance_floor_km >= 0.0)) throw Error(Errc::InvalidConfig, "distance floor must be >= 0");
}

void to_json(nlohmann::json& j, const ClassicModelSpec& s) {
  j = nlohmann::json{{"kind", to_string(s.kind)}, {"alpha", s.production.alpha}};
  j["beta"] = s.beta ? nlohmann::json(*s.beta) : nlohmann::json(nullptr);
  if (s.distance_floor_km > 0.0) j["distance_floor_km"] = s.distance_floor_km;
}

void from_json(const nlohmann::json& j, ClassicModelSpec& s) {
  s.kind = parse_classic_kind(j.at("kind").get<std::string>());
  s.production.alpha = j.at("alpha").get<double>();
  if (j.contains("beta") && !j["beta"].is_null())
    s.beta = j["beta"].get<double>();
  else
    s.beta.reset();
  s.distance_floor_km = j.value("distance_floor_km", 0.0);
}

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// log(x^beta) with log(0) = -inf.
double log_pow(double x, double beta) {
  return x > 0.0 ? beta * std::log(x) : -std::numeric_limits<double>::infinity();
}

double radiation_kernel(double mi, double mj, double s) {
  if (mi <= 0.0 || mj <= 0.0) return 0.0;
  return mi * mj / ((mi + s) * (mi + mj + s));
}

// [(A^b - B^b)(m^b + 1)] / [(B^b + 1)(A^b + 1)], A = m_i + m_j + s,
// B = m_i + s, evaluated in ratio/log form so large populations and large
// beta neither overflow nor cancel.
double ext_radiation_kernel(double beta, double mi, double mj, double s) {
  const double a = mi + mj + s;
  const double b = mi + s;
  if (mj <= 0.0 || a <= 0.0) return 0.0;
  const double head = b > 0.0 ? -std::expm1(beta * std::log1p(-mj / a)) : 1.0;  // 1 - (B/A)^b
  const double first = head / (1.0 + std::exp(-log_pow(a, beta)));                // (A^b - B^b) / (A^b + 1)
  const double second = std::exp(softplus(log_pow(mi, beta)) - softplus(log_pow(b, beta)));
  return first * second;
}

double gravity_log_kernel(ClassicKind kind, double beta, double mj, double d, double floor_km) {
  if (mj <= 0.0) return -std::numeric_limits<double>::infinity();
  if (kind == ClassicKind::gravity_power) {
    const double dd = std::max(d, floor_km);
    if (!(dd > 0.0)) throw Error(Errc::ZeroDistance, "gravity_power kernel at zero distance");
    return std::log(mj) - beta * std::log(dd);
  }
  return std::log(mj) - beta * d;
}

}  // namespace

double classic_kernel(ClassicKind kind, double beta, double m_i, double m_j, double s, double d) {
  switch (kind) {
    case ClassicKind::radiation: return radiation_kernel(m_i, m_j, s);
    case ClassicKind::ext_radiation: return ext_radiation_kernel(beta, m_i, m_j, s);
    case ClassicKind::gravity_power:
    case ClassicKind::gravity_exp: return std::exp(gravity_log_kernel(kind, beta, m_j, d, 0.0));
  }
  return 0.0;
}

std::vector<double> predict_row_probs(const ClassicModelSpec& spec, const PairFeatureSet& pairs, std::size_t origin) {
  spec.validate();
  const ZoneTable& zones = pairs.zones();
  const std::size_t n = zones.size();
  if (origin >= n) throw Error(Errc::UnknownZone, "origin index out of range");
  const double beta = spec.beta.value_or(0.0);
  const double mi = zones.population(origin);
  std::vector<double> p(n, 0.0);

  if (spec.kind == ClassicKind::gravity_power || spec.kind == ClassicKind::gravity_exp) {
    // Softmax over log kernels keeps rows finite for steep decay.
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == origin) continue;
      p[j] = gravity_log_kernel(spec.kind, beta, zones.population(j), pairs.distance(origin, j), spec.distance_floor_km);
      top = std::max(top, p[j]);
    }
    if (!std::isfinite(top)) {
      throw Error(Errc::ZeroRow, "all kernels zero for origin '" + zones.id(origin) + "'");
    }
    for (std::size_t j = 0; j < n; ++j) p[j] = j == origin ? 0.0 : std::exp(p[j] - top);
  } else {
    const std::size_t s_var = pairs.variable_index(kPopulationColumn);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == origin) continue;
      p[j] = classic_kernel(spec.kind, beta, mi, zones.population(j), pairs.intervening(s_var, origin, j), 0.0);
    }
  }

  const double total = compensated_sum(p);
  if (!(total > 0.0) || !std::isfinite(total))
    throw Error(Errc::ZeroRow, "all kernels zero for origin '" + zones.id(origin) + "'");
  for (double& v : p) v /= total;
  return p;
}

PredictedFlows predict_matrix(const ClassicModelSpec& spec, const PairFeatureSet& pairs, int year,
                              std::vector<std::size_t>* zero_rows) {
  spec.validate();
  const ZoneTable& zones = pairs.zones();
  const std::size_t n = zones.size();
  if (spec.kind != ClassicKind::gravity_power && spec.kind != ClassicKind::gravity_exp)
    (void)pairs.variable_index(kPopulationColumn);

  std::vector<std::vector<PredictedFlows::Entry>> rows(n);
  std::vector<char> zero(n, 0);
  std::vector<std::exception_ptr> failures(n);
  const auto n_signed = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t io = 0; io < n_signed; ++io) {
    const auto i = static_cast<std::size_t>(io);
    const double g = spec.production(zones.population(i));
    if (g == 0.0) continue;
    try {
      const auto p = predict_row_probs(spec, pairs, i);
      for (std::size_t j = 0; j < n; ++j)
        if (p[j] > 0.0) rows[i].push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), g * p[j]});
    } catch (const Error& e) {
      if (e.code() == Errc::ZeroRow)
        zero[i] = 1;
      else
        failures[i] = std::current_exception();
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  std::vector<PredictedFlows::Entry> entries;
  entries.reserve(total);
  for (auto& r : rows) entries.insert(entries.end(), r.begin(), r.end());
  if (zero_rows) {
    zero_rows->clear();
    for (std::size_t i = 0; i < n; ++i)
      if (zero[i]) zero_rows->push_back(i);
  }
  return PredictedFlows(pairs.zones_ptr(), year, std::move(entries));
}

Calibration calibrate_beta(ClassicKind kind, const PairFeatureSet& pairs, const FlowMatrix& train,
                           const ProductionFn& production, const CalibrationOptions& options) {
  if (!needs_beta(kind)) throw Error(Errc::InvalidConfig, "the radiation model has no beta to calibrate");
  if (!(options.log_beta_min < options.log_beta_max) || options.grid_points < 2 || !(options.relative_tolerance > 0.0))
    throw Error(Errc::InvalidConfig, "invalid calibration options");

  ClassicModelSpec spec{kind, 1.0, production, 0.0};
  auto objective = [&](double log_beta) {
    spec.beta = std::exp(log_beta);
    const double score = cpc(train, predict_matrix(spec, pairs, train.year()));
    return std::isfinite(score) ? score : -std::numeric_limits<double>::infinity();
  };

  double best_x = options.log_beta_min;
  double best_f = -std::numeric_limits<double>::infinity();
  auto consider = [&](double x, double f) {
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  };

  const double tol = std::log1p(options.relative_tolerance);
  auto golden = [&](double a, double b) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    consider(c, fc);
    consider(d, fd);
    while (b - a > tol) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = objective(c);
        consider(c, fc);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = objective(d);
        consider(d, fd);
      }
    }
  };

  golden(options.log_beta_min, options.log_beta_max);
  const double golden_f = best_f;

  // Unimodality check against a log-spaced grid.
  const int g = options.grid_points;
  const double step = (options.log_beta_max - options.log_beta_min) / (g - 1);
  double grid_best_f = -std::numeric_limits<double>::infinity();
  int grid_best = 0;
  for (int k = 0; k < g; ++k) {
    const double f = objective(options.log_beta_min + k * step);
    if (f > grid_best_f) {
      grid_best_f = f;
      grid_best = k;
    }
  }
  Calibration out;
  if (grid_best_f > golden_f) {
    out.used_grid_fallback = true;
    consider(options.log_beta_min + grid_best * step, grid_best_f);
    const double lo = options.log_beta_min + std::max(0, grid_best - 1) * step;
    const double hi = options.log_beta_min + std::min(g - 1, grid_best + 1) * step;
    golden(lo, hi);
  }
  if (!std::isfinite(best_f))
    throw Error(Errc::CalibrationFailed, "CPC is undefined over the whole beta range for " + std::string(to_string(kind)));

  out.spec = ClassicModelSpec{kind, std::exp(best_x), production, 0.0};
  out.train_cpc = best_f;
  return out;
}

}  // namespace migra
