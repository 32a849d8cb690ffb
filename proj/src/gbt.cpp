#include "migra/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "migra/error.hpp"
#include "migra/numeric.hpp"

namespace migra {

void GbtSpec::validate() const {
  if (max_depth < 1) throw Error(Errc::InvalidConfig, "max_depth must be >= 1");
  if (n_estimators < 1) throw Error(Errc::InvalidConfig, "n_estimators must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw Error(Errc::InvalidConfig, "learning_rate must be > 0");
  if (k < 1) throw Error(Errc::InvalidConfig, "k must be >= 1");
}

double RegressionTree::predict(std::span<const double> x) const noexcept {
  std::size_t at = 0;
  while (!nodes[at].is_leaf()) {
    const TreeNode& n = nodes[at];
    at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return nodes[at].value;
}

double GbtModel::predict_raw(std::span<const double> x) const noexcept {
  double y = base_score_;
  for (const auto& t : trees_) y += t.predict(x);
  return y;
}

std::vector<double> GbtModel::importances() const {
  std::vector<double> out(gains_.size(), 0.0);
  const double total = compensated_sum(gains_);
  if (total > 0.0)
    for (std::size_t f = 0; f < gains_.size(); ++f) out[f] = gains_[f] / total;
  return out;
}

namespace {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

struct NodeStats {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t count = 0;
};

double rmse_of(std::span<const double> residual) {
  CompensatedSum s;
  for (double r : residual) s += r * r;
  return std::sqrt(s.value() / static_cast<double>(residual.size()));
}

// One tree grown level by level. Each level makes a single pass over every
// feature's presorted row order and scores all open nodes at once.
RegressionTree grow_tree(const std::vector<std::vector<double>>& xcol, const std::vector<std::vector<std::size_t>>& sorted,
                         std::span<const double> residual, int max_depth, double learning_rate,
                         std::vector<double>& gains, std::vector<int>& node_of_row) {
  const std::size_t n_rows = residual.size();
  RegressionTree tree;
  tree.nodes.emplace_back();
  std::fill(node_of_row.begin(), node_of_row.end(), 0);
  std::vector<int> open{0};

  std::vector<NodeStats> stats;
  std::vector<SplitCandidate> best;
  std::vector<double> left_sum;
  std::vector<std::size_t> left_count;
  std::vector<double> last_value;

  auto collect_stats = [&] {
    stats.assign(tree.nodes.size(), {});
    for (std::size_t r = 0; r < n_rows; ++r) {
      NodeStats& s = stats[static_cast<std::size_t>(node_of_row[r])];
      s.sum += residual[r];
      s.sum_sq += residual[r] * residual[r];
      ++s.count;
    }
  };

  for (int depth = 0; depth < max_depth && !open.empty(); ++depth) {
    collect_stats();
    const std::size_t n_nodes = tree.nodes.size();
    std::vector<char> is_open(n_nodes, 0);
    for (int id : open) is_open[static_cast<std::size_t>(id)] = 1;
    best.assign(n_nodes, {});

    for (std::size_t f = 0; f < xcol.size(); ++f) {
      left_sum.assign(n_nodes, 0.0);
      left_count.assign(n_nodes, 0);
      last_value.assign(n_nodes, 0.0);
      const auto& x = xcol[f];
      for (std::size_t r : sorted[f]) {
        const auto node = static_cast<std::size_t>(node_of_row[r]);
        if (!is_open[node]) continue;
        const double v = x[r];
        if (left_count[node] > 0 && v != last_value[node]) {
          const NodeStats& s = stats[node];
          const double nl = static_cast<double>(left_count[node]);
          const double nr = static_cast<double>(s.count - left_count[node]);
          const double sl = left_sum[node];
          const double sr = s.sum - sl;
          const double gain = sl * sl / nl + sr * sr / nr - s.sum * s.sum / static_cast<double>(s.count);
          if (gain > best[node].gain) {
            double threshold = last_value[node] + (v - last_value[node]) / 2.0;
            if (!(threshold > last_value[node])) threshold = v;
            best[node] = {gain, static_cast<int>(f), threshold};
          }
        }
        left_sum[node] += residual[r];
        ++left_count[node];
        last_value[node] = v;
      }
    }

    std::vector<int> next_open;
    std::vector<int> left_child(n_nodes, -1), right_child(n_nodes, -1);
    for (int id : open) {
      const auto node = static_cast<std::size_t>(id);
      const NodeStats& s = stats[node];
      // Ignore splits whose gain is rounding noise relative to the node.
      if (best[node].feature < 0 || !(best[node].gain > 1e-12 * s.sum_sq)) continue;
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      TreeNode& parent = tree.nodes[node];
      parent.feature = best[node].feature;
      parent.threshold = best[node].threshold;
      parent.left = l;
      parent.right = l + 1;
      gains[static_cast<std::size_t>(best[node].feature)] += best[node].gain;
      left_child[node] = l;
      right_child[node] = l + 1;
      next_open.push_back(l);
      next_open.push_back(l + 1);
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
      const auto node = static_cast<std::size_t>(node_of_row[r]);
      if (left_child[node] < 0) continue;
      const TreeNode& p = tree.nodes[node];
      node_of_row[r] = xcol[static_cast<std::size_t>(p.feature)][r] < p.threshold ? left_child[node] : right_child[node];
    }
    open = std::move(next_open);
  }

  collect_stats();
  for (std::size_t id = 0; id < tree.nodes.size(); ++id) {
    TreeNode& node = tree.nodes[id];
    if (!node.is_leaf()) continue;
    const NodeStats& s = stats[id];
    node.value = s.count == 0 ? 0.0 : learning_rate * s.sum / static_cast<double>(s.count);
  }
  return tree;
}

}  // namespace

GbtModel fit_gbt(const GbtSpec& spec, const ObservationTable& train) {
  spec.validate();
  const std::size_t n_rows = train.rows();
  const std::size_t n_cols = train.cols();
  if (n_rows == 0) throw Error(Errc::EmptyBatch, "no training rows");

  std::vector<std::vector<double>> xcol(n_cols, std::vector<double>(n_rows));
  for (std::size_t r = 0; r < n_rows; ++r)
    for (std::size_t c = 0; c < n_cols; ++c) xcol[c][r] = train.values[r * n_cols + c];
  std::vector<std::vector<std::size_t>> sorted(n_cols, std::vector<std::size_t>(n_rows));
  for (std::size_t c = 0; c < n_cols; ++c) {
    std::iota(sorted[c].begin(), sorted[c].end(), 0);
    std::stable_sort(sorted[c].begin(), sorted[c].end(),
                     [&](std::size_t a, std::size_t b) { return xcol[c][a] < xcol[c][b]; });
  }

  const double base = compensated_sum(train.targets) / static_cast<double>(n_rows);
  std::vector<double> pred(n_rows, base);
  std::vector<double> residual(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) residual[r] = train.targets[r] - base;

  std::vector<double> gains(n_cols, 0.0);
  std::vector<double> curve{rmse_of(residual)};
  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(spec.n_estimators));
  std::vector<int> node_of_row(n_rows, 0);
  for (int t = 0; t < spec.n_estimators; ++t) {
    RegressionTree tree = grow_tree(xcol, sorted, residual, spec.max_depth, spec.learning_rate, gains, node_of_row);
    for (std::size_t r = 0; r < n_rows; ++r) {
      const double step = tree.nodes[static_cast<std::size_t>(node_of_row[r])].value;
      pred[r] += step;
      residual[r] = train.targets[r] - pred[r];
    }
    curve.push_back(rmse_of(residual));
    trees.push_back(std::move(tree));
  }
  return GbtModel(train.columns, base, std::move(trees), std::move(gains), std::move(curve));
}

PredictedFlows predict(const GbtModel& model, const ObservationSet& obs) {
  const ObservationTable& t = obs.table();
  if (t.columns != model.columns()) throw Error(Errc::SchemaMismatch, "model was trained on different feature columns");
  std::vector<double> y(t.rows());
  const auto rows = static_cast<std::ptrdiff_t>(t.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    y[static_cast<std::size_t>(r)] = std::max(0.0, model.predict_raw(t.row(static_cast<std::size_t>(r))));
  }
  std::vector<PredictedFlows::Entry> entries;
  for (std::size_t r = 0; r < t.rows(); ++r)
    if (y[r] > 0.0) entries.push_back({t.pairs[r].first, t.pairs[r].second, y[r]});
  return PredictedFlows(obs.zones_ptr(), obs.year(), std::move(entries));
}

void to_json(nlohmann::json& j, const GbtSpec& s) {
  j = nlohmann::json{{"model", "gbt"},
                     {"max_depth", s.max_depth},
                     {"n_estimators", s.n_estimators},
                     {"learning_rate", s.learning_rate},
                     {"k", s.k}};
}

void from_json(const nlohmann::json& j, GbtSpec& s) {
  j.at("max_depth").get_to(s.max_depth);
  j.at("n_estimators").get_to(s.n_estimators);
  j.at("learning_rate").get_to(s.learning_rate);
  j.at("k").get_to(s.k);
}

namespace {

nlohmann::json node_json(const RegressionTree& tree, std::size_t id, const std::vector<std::string>& columns) {
  const TreeNode& n = tree.nodes[id];
  if (n.is_leaf()) return nlohmann::json{{"leaf", n.value}};
  const auto f = static_cast<std::size_t>(n.feature);
  return nlohmann::json{{"feature", n.feature},
                        {"feature_name", f < columns.size() ? columns[f] : std::string()},
                        {"threshold", n.threshold},
                        {"left", node_json(tree, static_cast<std::size_t>(n.left), columns)},
                        {"right", node_json(tree, static_cast<std::size_t>(n.right), columns)}};
}

int node_from_json(const nlohmann::json& j, RegressionTree& tree) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (j.contains("leaf")) {
    tree.nodes[static_cast<std::size_t>(id)].value = j.at("leaf").get<double>();
    return id;
  }
  const int feature = j.at("feature").get<int>();
  const double threshold = j.at("threshold").get<double>();
  const int left = node_from_json(j.at("left"), tree);
  const int right = node_from_json(j.at("right"), tree);
  TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  return id;
}

}  // namespace

void to_json(nlohmann::json& j, const GbtModel& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees()) trees.push_back(node_json(t, 0, m.columns()));
  j = nlohmann::json{{"model", "gbt"},   {"columns", m.columns()}, {"base_score", m.base_score()},
                     {"trees", trees},   {"gains", m.gains()},     {"train_rmse", m.train_rmse()}};
}

void from_json(const nlohmann::json& j, GbtModel& m) {
  std::vector<RegressionTree> trees;
  for (const auto& t : j.at("trees")) {
    RegressionTree tree;
    node_from_json(t, tree);
    trees.push_back(std::move(tree));
  }
  m = GbtModel(j.at("columns").get<std::vector<std::string>>(), j.at("base_score").get<double>(), std::move(trees),
               j.at("gains").get<std::vector<double>>(), j.at("train_rmse").get<std::vector<double>>());
}

}  // namespace migra
