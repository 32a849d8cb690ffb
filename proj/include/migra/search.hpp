#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "migra/ann.hpp"
#include "migra/dataset.hpp"
#include "migra/gbt.hpp"
#include "migra/numeric.hpp"

namespace migra {

enum class LearnerKind { gbt, ann };

using LearnerSpec = std::variant<GbtSpec, AnnSpec>;
using LearnedModel = std::variant<GbtModel, AnnModel>;

struct IntRange {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

/// Hyperparameter distributions. Defaults follow the published protocol;
/// every field can be overridden from a config file.
struct SearchSpace {
  LearnerKind kind = LearnerKind::gbt;
  IntRange k{5, 100};
  // gradient boosting
  IntRange max_depth{2, 7};
  IntRange n_estimators{25, 275};
  double learning_rate_max = 0.5;  // sampled from (0, max]
  // network
  std::vector<AnnLoss> losses{AnnLoss::cpc, AnnLoss::mse};
  IntRange n_layers{1, 5};
  IntRange layer_width{16, 128};
  IntRange n_epochs{10, 50};
  std::vector<int> batch_sizes{512, 1024, 2048, 4096, 8192, 16384};

  /// k is U{5,100} below 1% positive pairs (sparse), U{1,5} otherwise.
  static SearchSpace defaults(LearnerKind kind, double positive_density);

  LearnerSpec sample(Rng& rng) const;
  /// Applies the keys present in `overrides` (same names as the fields,
  /// ranges as two-element arrays).
  void apply_overrides(const nlohmann::json& overrides);
};

struct Trial {
  std::size_t index = 0;
  LearnerSpec spec;
  std::uint64_t seed = 0;
  double valid_cpc = 0.0;
  bool ok = false;
  std::string error;
  double wall_seconds = 0.0;
};

struct SearchResult {
  std::vector<Trial> trials;
  std::size_t best = 0;

  const Trial& winner() const { return trials.at(best); }
};

LearnerKind learner_kind(const LearnerSpec& spec) noexcept;
std::size_t negative_factor(const LearnerSpec& spec) noexcept;

/// Downsamples `train` with the spec's k and fits. Seeds for sampling and
/// initialization are derived from `seed`.
LearnedModel fit_learner(const LearnerSpec& spec, const ObservationSet& train, std::uint64_t seed);
PredictedFlows predict(const LearnedModel& model, const ObservationSet& obs);

using TrialSink = std::function<void(const Trial&)>;

/// Fits every spec on `train` and scores CPC on the full `valid` set.
/// Trials run in parallel; trial t uses derive_seed(seed, {t}) so results
/// do not depend on scheduling. Best = highest CPC, first wins ties.
/// Errors: AllTrialsFailed.
SearchResult evaluate_trials(const std::vector<LearnerSpec>& specs, const ObservationSet& train,
                             const ObservationSet& valid, std::uint64_t seed, const TrialSink& sink = {});

/// Samples `n_trials` specs from `space` and evaluates them.
SearchResult random_search(const SearchSpace& space, const ObservationSet& train, const ObservationSet& valid,
                           std::size_t n_trials, std::uint64_t seed, const TrialSink& sink = {});

void to_json(nlohmann::json& j, const LearnerSpec& s);
/// One search-log line: spec, validation CPC, wall time.
nlohmann::json trial_json(const Trial& t);
void to_json(nlohmann::json& j, const LearnedModel& m);

}  // namespace migra
