#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "arlp/grid.hpp"
#include "arlp/temporal.hpp"

// Optimization: summed squared error, Adam/SGD, the mini-batch training loop
// with time-ordered validation, a finite-difference gradient check, and the
// checkpoint file format.

namespace arlp {

/// Summed (not averaged) squared error over a batch.
double sse_loss(std::span<const double> pred, std::span<const double> truth);

struct TrainConfig {
  int batch_size = 64;
  double learning_rate = 0.001;
  int max_epochs = 50;
  std::uint64_t seed = 42;
  std::string optimizer = "adam";  // "adam" or "sgd"
  int patience = 10;               // 0 disables the validation split entirely
  int samples_per_epoch = 0;       // 0 = all training samples each epoch
  int ratio_train = 5;             // day split used by the train command
  int ratio_test = 3;

  bool operator==(const TrainConfig&) const = default;
};

/// Adam with bias correction; plain SGD when cfg.optimizer is "sgd".
class Optimizer {
 public:
  Optimizer(ParamSet& params, const TrainConfig& cfg);
  void step();
  long steps() const { return steps_; }

 private:
  ParamSet& params_;
  double lr_;
  bool adam_;
  long steps_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct EpochLog {
  int epoch = 0;
  double train_sse = 0.0;
  double train_mse = 0.0;
  double val_mae = 0.0;  // NaN when no validation split is active
};

struct TrainOutcome {
  std::vector<EpochLog> epochs;
  long steps = 0;
  int best_epoch = -1;      // epoch with the lowest validation MAE
  double best_val_mae = 0;  // NaN when no validation split is active
};

/// All supervised positions on days [first_day, last_day) of the cube.
/// Multi-day models need day >= history-1; min_day lifts the lower bound.
std::vector<SampleWindow> sample_positions(const GridSpec& grid, int first_day,
                                           int last_day, int min_day);

/// Trains in place on the normalized cube, using days [0, train_days).
/// With patience > 0 the last fifth of the training days becomes a
/// validation split, training stops after `patience` epochs without a new
/// best validation MAE, and the best parameters are restored. A non-finite
/// batch loss aborts with NumericError.
TrainOutcome train_model(GapModel& model, const CityCube& normalized, int train_days,
                         const TrainConfig& cfg);

/// One tensor's worth of finite-difference comparison.
struct GradCheckGroup {
  std::string tensor;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckGroup> groups;
  double max_rel_error = 0.0;
};

/// Compares analytic gradients against central differences on a random
/// subsample of each tensor. compute_grads must leave d(loss)/d(param) in
/// the grad buffers; loss re-evaluates the objective at the current values.
GradCheckReport numeric_gradient_check(ParamSet& params,
                                       const std::function<double()>& loss,
                                       const std::function<void()>& compute_grads,
                                       double eps, std::size_t per_tensor,
                                       std::uint64_t seed);

/// Adds uniform noise from (-half_width, half_width) to every parameter.
/// Run this before a finite-difference check: a freshly initialized model
/// holds zero biases, which park entire pre-activation channels exactly on
/// the relu corner where a central difference straddles the kink and no
/// one-sided slope can match it. A generic nearby point restores agreement.
void perturb_params(ParamSet& params, double half_width, std::uint64_t seed);

/// Gradient check of a full model on a handful of sample windows.
GradCheckReport model_gradient_check(GapModel& model, const CityCube& normalized,
                                     const std::vector<SampleWindow>& batch, double eps,
                                     std::size_t per_tensor, std::uint64_t seed);

/// Everything a checkpoint stores besides the parameters themselves.
struct CheckpointMeta {
  ModelKind kind = ModelKind::CurrentDay;
  GridSpec grid;
  ModelConfig model;
  TrainConfig train;
  std::uint64_t steps = 0;
  int train_days = 0;
  std::uint64_t config_hash = 0;
  NormalizationStats stats;
};

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::unique_ptr<GapModel> model;
};

void save_checkpoint(const std::string& path, const GapModel& model,
                     const CheckpointMeta& meta);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace arlp
