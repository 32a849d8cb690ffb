#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "migra/dataset.hpp"
#include "migra/flows.hpp"

namespace migra {

enum class AnnLoss { cpc, mse };

std::string_view to_string(AnnLoss loss) noexcept;
AnnLoss parse_ann_loss(std::string_view name);

struct AnnSpec {
  AnnLoss loss = AnnLoss::cpc;
  int n_layers = 2;     // hidden layers
  int layer_width = 32;
  int n_epochs = 10;
  int batch_size = 512;  // power of two
  std::size_t k = 5;
  double learning_rate = 1e-3;

  void validate() const;
};

/// Dense layer, weights row-major (out x in).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;
};

/// ReLU hidden layers, linear output clamped at 0. Inputs are
/// standardized with the scaler fitted on the training rows.
class AnnModel {
 public:
  AnnModel() = default;
  AnnModel(std::vector<std::string> columns, Scaler scaler, std::vector<DenseLayer> layers, AnnLoss loss,
           std::vector<double> loss_curve)
      : columns_(std::move(columns)),
        scaler_(std::move(scaler)),
        layers_(std::move(layers)),
        loss_(loss),
        loss_curve_(std::move(loss_curve)) {}

  /// `x` in raw (unscaled) feature units.
  double predict_row(std::span<const double> x) const;
  std::vector<double> predict_rows(const ObservationTable& table) const;

  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const Scaler& scaler() const noexcept { return scaler_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  AnnLoss loss() const noexcept { return loss_; }
  /// Training-set loss before training and after each epoch.
  const std::vector<double>& loss_curve() const noexcept { return loss_curve_; }

 private:
  std::vector<std::string> columns_;
  Scaler scaler_;
  std::vector<DenseLayer> layers_;
  AnnLoss loss_ = AnnLoss::cpc;
  std::vector<double> loss_curve_;
};

/// Mini-batch Adam (beta1 0.9, beta2 0.999, eps 1e-7) over shuffled
/// batches, fan-in scaled uniform init, output bias started at the mean
/// target. Deterministic for a fixed seed. Errors: NonFiniteLoss,
/// InvalidConfig, EmptyBatch.
AnnModel fit_ann(const AnnSpec& spec, const ObservationTable& train, std::uint64_t seed);

/// Errors: SchemaMismatch.
PredictedFlows predict(const AnnModel& model, const ObservationSet& obs);

void to_json(nlohmann::json& j, const AnnSpec& s);
void from_json(const nlohmann::json& j, AnnSpec& s);
void to_json(nlohmann::json& j, const AnnModel& m);
void from_json(const nlohmann::json& j, AnnModel& m);

}  // namespace migra
