#pragma once

// Serial reference implementations of the OpenMP kernels. They are kept
// deliberately simple and are what the parallel kernels are tested and
// benchmarked against.

#include <string>
#include <vector>

#include "migra/classic.hpp"
#include "migra/dataset.hpp"
#include "migra/pairs.hpp"

namespace migra::reference {

/// O(n^3): one brute-force intervening_sum scan per ordered pair.
PairFeatureSet pair_features(const ZoneTablePtr& zones, const std::vector<std::string>& variables);

/// Row-by-row, single thread.
PredictedFlows predict_matrix(const ClassicModelSpec& spec, const PairFeatureSet& pairs, int year);

/// Single thread, targets looked up pair by pair.
ObservationSet build_observations(const PairFeatureSet& pairs, const FlowMatrix& next, const FeatureSchema& schema);

}  // namespace migra::reference
