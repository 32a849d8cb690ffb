#include "migra/ann.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "migra/cpc_loss.hpp"
#include "migra/error.hpp"
#include "migra/numeric.hpp"

namespace migra {

std::string_view to_string(AnnLoss loss) noexcept { return loss == AnnLoss::cpc ? "cpc_loss" : "mse"; }

AnnLoss parse_ann_loss(std::string_view name) {
  if (name == "cpc_loss" || name == "cpc") return AnnLoss::cpc;
  if (name == "mse") return AnnLoss::mse;
  throw Error(Errc::InvalidConfig, "unknown loss '" + std::string(name) + "'");
}

void AnnSpec::validate() const {
  if (n_layers < 1) throw Error(Errc::InvalidConfig, "n_layers must be >= 1");
  if (layer_width < 1) throw Error(Errc::InvalidConfig, "layer_width must be >= 1");
  if (n_epochs < 0) throw Error(Errc::InvalidConfig, "n_epochs must be >= 0");
  if (batch_size < 1 || (batch_size & (batch_size - 1)) != 0)
    throw Error(Errc::InvalidConfig, "batch_size must be a power of two");
  if (k < 1) throw Error(Errc::InvalidConfig, "k must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(Errc::InvalidConfig, "learning_rate must be > 0");
}

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct Layer {
  Matrix w;  // out x in
  Vector b;
};

struct AdamState {
  Matrix mw, vw;
  Vector mb, vb;
};

// Columns of the result are the (already standardized) rows of `x`.
Matrix gather(const std::vector<double>& x, std::size_t cols, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (std::size_t f = 0; f < cols; ++f) out(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(c)) = x[rows[c] * cols + f];
  return out;
}

// Forward pass keeping every pre-activation; returns clamped outputs.
Eigen::RowVectorXd forward(const std::vector<Layer>& net, const Matrix& x, std::vector<Matrix>* acts,
                           std::vector<Matrix>* pre) {
  Matrix a = x;
  if (acts) acts->assign(1, a);
  if (pre) pre->clear();
  for (std::size_t l = 0; l < net.size(); ++l) {
    Matrix z = net[l].w * a;
    z.colwise() += net[l].b;
    if (pre) pre->push_back(z);
    a = z.cwiseMax(0.0);
    if (acts && l + 1 < net.size()) acts->push_back(a);
  }
  return a.row(0);
}

double batch_loss(AnnLoss loss, std::span<const double> y, std::span<const double> y_hat) {
  if (loss == AnnLoss::cpc) return cpc_loss(y, y_hat);
  CompensatedSum s;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y_hat[i] - y[i]) * (y_hat[i] - y[i]);
  return s.value() / static_cast<double>(y.size());
}

void loss_grad(AnnLoss loss, std::span<const double> y, std::span<const double> y_hat, std::span<double> g) {
  if (loss == AnnLoss::cpc) {
    cpc_loss_grad(y, y_hat, g);
    return;
  }
  const double scale = 2.0 / static_cast<double>(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) g[i] = scale * (y_hat[i] - y[i]);
}

std::vector<Layer> to_layers(const std::vector<DenseLayer>& layers) {
  std::vector<Layer> out;
  for (const auto& d : layers) {
    Layer l;
    l.w = RowMajorMap(d.weights.data(), static_cast<Eigen::Index>(d.out), static_cast<Eigen::Index>(d.in));
    l.b = Eigen::Map<const Vector>(d.bias.data(), static_cast<Eigen::Index>(d.out));
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<DenseLayer> from_layers(const std::vector<Layer>& layers) {
  std::vector<DenseLayer> out;
  for (const auto& l : layers) {
    DenseLayer d;
    d.in = static_cast<std::size_t>(l.w.cols());
    d.out = static_cast<std::size_t>(l.w.rows());
    d.weights.resize(d.in * d.out);
    for (std::size_t r = 0; r < d.out; ++r)
      for (std::size_t c = 0; c < d.in; ++c)
        d.weights[r * d.in + c] = l.w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    d.bias.assign(l.b.data(), l.b.data() + l.b.size());
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<double> predict_scaled(const std::vector<Layer>& net, const std::vector<double>& x, std::size_t cols,
                                   std::size_t rows) {
  std::vector<double> out(rows);
  constexpr std::size_t kChunk = 4096;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < rows; start += kChunk) {
    const std::size_t stop = std::min(rows, start + kChunk);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto y = forward(net, gather(x, cols, idx), nullptr, nullptr);
    for (std::size_t i = 0; i < idx.size(); ++i) out[start + i] = y(static_cast<Eigen::Index>(i));
  }
  return out;
}

}  // namespace

AnnModel fit_ann(const AnnSpec& spec, const ObservationTable& train, std::uint64_t seed) {
  spec.validate();
  const std::size_t n_rows = train.rows();
  const std::size_t n_cols = train.cols();
  if (n_rows == 0) throw Error(Errc::EmptyBatch, "no training rows");

  Scaler scaler = Scaler::fit(train);
  const ObservationTable scaled = scaler.apply(train);
  const std::vector<double>& y = train.targets;

  Rng rng(seed);
  std::vector<Layer> net;
  std::size_t fan_in = n_cols;
  for (int l = 0; l <= spec.n_layers; ++l) {
    const std::size_t out = l == spec.n_layers ? 1 : static_cast<std::size_t>(spec.layer_width);
    const double limit = std::sqrt(6.0 / static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    Layer layer{Matrix(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in)),
                Vector::Zero(static_cast<Eigen::Index>(out))};
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.w.cols(); ++c) layer.w(r, c) = rng.uniform(-limit, limit);
    net.push_back(std::move(layer));
    fan_in = out;
  }
  net.back().b(0) = compensated_sum(y) / static_cast<double>(n_rows);

  std::vector<AdamState> adam;
  for (const auto& l : net)
    adam.push_back({Matrix::Zero(l.w.rows(), l.w.cols()), Matrix::Zero(l.w.rows(), l.w.cols()),
                    Vector::Zero(l.b.size()), Vector::Zero(l.b.size())});
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-7;
  long step = 0;

  auto full_loss = [&] {
    const auto pred = predict_scaled(net, scaled.values, n_cols, n_rows);
    return batch_loss(spec.loss, y, pred);
  };

  std::vector<double> curve{full_loss()};
  std::vector<std::size_t> order(n_rows);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Matrix> acts, pre;
  std::vector<double> yb, yhat, g;
  const auto batch = static_cast<std::size_t>(spec.batch_size);

  for (int epoch = 0; epoch < spec.n_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n_rows; start += batch) {
      const std::size_t stop = std::min(n_rows, start + batch);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const Matrix xb = gather(scaled.values, n_cols, rows);
      const auto out = forward(net, xb, &acts, &pre);

      yb.resize(rows.size());
      yhat.resize(rows.size());
      g.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        yb[i] = y[rows[i]];
        yhat[i] = out(static_cast<Eigen::Index>(i));
      }
      const double loss = batch_loss(spec.loss, yb, yhat);
      if (!std::isfinite(loss))
        throw Error(Errc::NonFiniteLoss, "loss is " + std::to_string(loss) + " at epoch " + std::to_string(epoch) +
                                             ", batch starting at row " + std::to_string(start));
      loss_grad(spec.loss, yb, yhat, g);

      // Backpropagate through the clamped output and the ReLU stack.
      Matrix delta(1, static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i)
        delta(0, static_cast<Eigen::Index>(i)) = pre.back()(0, static_cast<Eigen::Index>(i)) > 0.0 ? g[i] : 0.0;
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t l = net.size(); l-- > 0;) {
        const Matrix gw = delta * acts[l].transpose();
        const Vector gb = delta.rowwise().sum();
        if (l > 0) {
          Matrix back = net[l].w.transpose() * delta;
          delta = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        }
        AdamState& s = adam[l];
        s.mw = kBeta1 * s.mw + (1.0 - kBeta1) * gw;
        s.vw = kBeta2 * s.vw + (1.0 - kBeta2) * gw.cwiseProduct(gw);
        s.mb = kBeta1 * s.mb + (1.0 - kBeta1) * gb;
        s.vb = kBeta2 * s.vb + (1.0 - kBeta2) * gb.cwiseProduct(gb);
        net[l].w.array() -= spec.learning_rate * (s.mw.array() / c1) / ((s.vw.array() / c2).sqrt() + kEps);
        net[l].b.array() -= spec.learning_rate * (s.mb.array() / c1) / ((s.vb.array() / c2).sqrt() + kEps);
      }
    }
    const double epoch_loss = full_loss();
    if (!std::isfinite(epoch_loss))
      throw Error(Errc::NonFiniteLoss, "training loss is " + std::to_string(epoch_loss) + " after epoch " +
                                           std::to_string(epoch));
    curve.push_back(epoch_loss);
  }
  return AnnModel(train.columns, std::move(scaler), from_layers(net), spec.loss, std::move(curve));
}

double AnnModel::predict_row(std::span<const double> x) const {
  std::vector<double> scaled(x.size());
  scaler_.apply_row(x, scaled);
  return predict_scaled(to_layers(layers_), scaled, x.size(), 1).front();
}

std::vector<double> AnnModel::predict_rows(const ObservationTable& table) const {
  const ObservationTable scaled = scaler_.apply(table);
  const auto net = to_layers(layers_);
  const std::size_t rows = table.rows();
  const std::size_t cols = table.cols();
  std::vector<double> out(rows);
  constexpr std::size_t kChunk = 4096;
  const auto chunks = static_cast<std::ptrdiff_t>((rows + kChunk - 1) / kChunk);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t start = static_cast<std::size_t>(c) * kChunk;
    const std::size_t stop = std::min(rows, start + kChunk);
    std::vector<std::size_t> idx(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    const auto y = forward(net, gather(scaled.values, cols, idx), nullptr, nullptr);
    for (std::size_t i = 0; i < idx.size(); ++i) out[start + i] = y(static_cast<Eigen::Index>(i));
  }
  return out;
}

PredictedFlows predict(const AnnModel& model, const ObservationSet& obs) {
  const ObservationTable& t = obs.table();
  if (t.columns != model.columns()) throw Error(Errc::SchemaMismatch, "model was trained on different feature columns");
  const auto y = model.predict_rows(t);
  std::vector<PredictedFlows::Entry> entries;
  for (std::size_t r = 0; r < t.rows(); ++r)
    if (y[r] > 0.0) entries.push_back({t.pairs[r].first, t.pairs[r].second, y[r]});
  return PredictedFlows(obs.zones_ptr(), obs.year(), std::move(entries));
}

void to_json(nlohmann::json& j, const AnnSpec& s) {
  j = nlohmann::json{{"model", "ann"},
                     {"loss", to_string(s.loss)},
                     {"n_layers", s.n_layers},
                     {"layer_width", s.layer_width},
                     {"n_epochs", s.n_epochs},
                     {"batch_size", s.batch_size},
                     {"k", s.k},
                     {"learning_rate", s.learning_rate}};
}

void from_json(const nlohmann::json& j, AnnSpec& s) {
  s.loss = parse_ann_loss(j.at("loss").get<std::string>());
  j.at("n_layers").get_to(s.n_layers);
  j.at("layer_width").get_to(s.layer_width);
  j.at("n_epochs").get_to(s.n_epochs);
  j.at("batch_size").get_to(s.batch_size);
  j.at("k").get_to(s.k);
  s.learning_rate = j.value("learning_rate", 1e-3);
}

void to_json(nlohmann::json& j, const AnnModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers())
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
  j = nlohmann::json{{"model", "ann"},
                     {"columns", m.columns()},
                     {"loss", to_string(m.loss())},
                     {"scaler", {{"mean", m.scaler().means()}, {"std", m.scaler().stds()}}},
                     {"layers", layers},
                     {"loss_curve", m.loss_curve()}};
}

void from_json(const nlohmann::json& j, AnnModel& m) {
  std::vector<DenseLayer> layers;
  for (const auto& l : j.at("layers")) {
    DenseLayer d;
    l.at("in").get_to(d.in);
    l.at("out").get_to(d.out);
    l.at("weights").get_to(d.weights);
    l.at("bias").get_to(d.bias);
    if (d.weights.size() != d.in * d.out || d.bias.size() != d.out)
      throw Error(Errc::SchemaMismatch, "layer arrays do not match their shape");
    layers.push_back(std::move(d));
  }
  const auto& sc = j.at("scaler");
  m = AnnModel(j.at("columns").get<std::vector<std::string>>(),
               Scaler(sc.at("mean").get<std::vector<double>>(), sc.at("std").get<std::vector<double>>()),
               std::move(layers), parse_ann_loss(j.at("loss").get<std::string>()),
               j.at("loss_curve").get<std::vector<double>>());
}

}  // namespace migra
