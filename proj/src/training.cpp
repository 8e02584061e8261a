#include "arlp/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include "arlp/binio.hpp"
#include "arlp/errors.hpp"

namespace arlp {

double sse_loss(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("loss inputs must have equal length");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    acc += d * d;
  }
  return acc;
}

Optimizer::Optimizer(ParamSet& params, const TrainConfig& cfg)
    : params_(params), lr_(cfg.learning_rate) {
  if (cfg.optimizer == "adam")
    adam_ = true;
  else if (cfg.optimizer == "sgd")
    adam_ = false;
  else
    throw ConfigError("unknown optimizer '" + cfg.optimizer + "' (expected adam or sgd)");
  if (!(lr_ > 0.0)) throw ConfigError("learning rate must be positive");
  if (adam_) {
    m_.reserve(params.tensors().size());
    v_.reserve(params.tensors().size());
    for (const Tensor* t : params.tensors()) {
      m_.emplace_back(t->size(), 0.0);
      v_.emplace_back(t->size(), 0.0);
    }
  }
}

void Optimizer::step() {
  ++steps_;
  if (!adam_) {
    for (Tensor* t : params_.tensors())
      for (std::size_t i = 0; i < t->size(); ++i) t->value[i] -= lr_ * t->grad[i];
    return;
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
  const auto& tensors = params_.tensors();
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    Tensor* t = tensors[ti];
    double* m = m_[ti].data();
    double* v = v_[ti].data();
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double g = t->grad[i];
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      t->value[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

std::vector<SampleWindow> sample_positions(const GridSpec& grid, int first_day,
                                           int last_day, int min_day) {
  std::vector<SampleWindow> out;
  const int t0_count = grid.intervals_per_day() - grid.window;  // t0 in [0, P-T-1]
  for (int day = std::max(first_day, min_day); day < last_day; ++day)
    for (int t0 = 0; t0 < t0_count; ++t0)
      for (int region = 0; region < grid.cells(); ++region)
        out.push_back({day, t0, region});
  return out;
}

namespace {

double label_of(const CityCube& cube, const GridSpec& grid, const SampleWindow& s) {
  return cube.at_cell(Channel::Gap, s.day, s.t0 + grid.window, s.region);
}

std::vector<double> snapshot(const ParamSet& params) {
  std::vector<double> out;
  out.reserve(params.total_size());
  for (const Tensor* t : params.tensors())
    out.insert(out.end(), t->value.begin(), t->value.end());
  return out;
}

void restore(ParamSet& params, const std::vector<double>& snap) {
  std::size_t off = 0;
  for (Tensor* t : params.tensors()) {
    std::copy(snap.begin() + off, snap.begin() + off + t->size(), t->value.begin());
    off += t->size();
  }
}

}  // namespace

TrainOutcome train_model(GapModel& model, const CityCube& normalized, int train_days,
                         const TrainConfig& cfg) {
  const GridSpec& grid = model.grid();
  if (train_days < 1 || train_days > normalized.days())
    throw ConfigError("train_days outside the cube day range");

  const int min_day = model.kind() == ModelKind::MultiDay ? grid.history - 1 : 0;
  int val_start = train_days;
  if (cfg.patience > 0) {
    const int val_days = std::max(1, train_days / 5);
    val_start = train_days - val_days;
  }

  std::vector<SampleWindow> train_set =
      sample_positions(grid, 0, val_start, min_day);
  if (train_set.empty())
    throw ConfigError("no usable training windows: too few days for this model");
  std::vector<SampleWindow> val_set =
      cfg.patience > 0 ? sample_positions(grid, val_start, train_days, min_day)
                       : std::vector<SampleWindow>{};

  if (cfg.batch_size < 1) throw ConfigError("batch size must be positive");
  if (cfg.max_epochs < 1) throw ConfigError("epoch count must be positive");

  Optimizer opt(model.params(), cfg);
  std::mt19937_64 rng(cfg.seed);
  GapModel::SampleCache cache;
  TrainOutcome outcome;
  outcome.best_val_mae = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> best_params;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(train_set.begin(), train_set.end(), rng);
    const std::size_t epoch_samples =
        cfg.samples_per_epoch > 0
            ? std::min<std::size_t>(cfg.samples_per_epoch, train_set.size())
            : train_set.size();

    double epoch_sse = 0.0;
    for (std::size_t start = 0; start < epoch_samples; start += cfg.batch_size) {
      const std::size_t end = std::min(epoch_samples, start + cfg.batch_size);
      model.params().zero_grad();
      double batch_sse = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const SampleWindow& s = train_set[i];
        const double pred = model.forward(normalized, s, cache);
        const double y = label_of(normalized, grid, s);
        const double diff = pred - y;
        batch_sse += diff * diff;
        model.backward(cache, 2.0 * diff);
      }
      if (!std::isfinite(batch_sse))
        throw NumericError("training diverged: non-finite batch loss at epoch " +
                           std::to_string(epoch));
      epoch_sse += batch_sse;
      opt.step();
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_sse = epoch_sse;
    log.train_mse = epoch_sse / static_cast<double>(epoch_samples);
    log.val_mae = std::numeric_limits<double>::quiet_NaN();

    if (!val_set.empty()) {
      double abs_acc = 0.0;
      for (const SampleWindow& s : val_set) {
        const double pred = model.forward(normalized, s, cache);
        abs_acc += std::abs(pred - label_of(normalized, grid, s));
      }
      log.val_mae = abs_acc / static_cast<double>(val_set.size());
      if (!std::isfinite(log.val_mae))
        throw NumericError("training diverged: non-finite validation error");

      if (outcome.best_epoch < 0 || log.val_mae < outcome.best_val_mae) {
        outcome.best_epoch = epoch;
        outcome.best_val_mae = log.val_mae;
        best_params = snapshot(model.params());
        epochs_since_best = 0;
      } else if (++epochs_since_best >= cfg.patience) {
        outcome.epochs.push_back(log);
        break;
      }
    }
    outcome.epochs.push_back(log);
  }

  if (!best_params.empty()) restore(model.params(), best_params);
  outcome.steps = opt.steps();
  return outcome;
}

GradCheckReport numeric_gradient_check(ParamSet& params,
                                       const std::function<double()>& loss,
                                       const std::function<void()>& compute_grads,
                                       double eps, std::size_t per_tensor,
                                       std::uint64_t seed) {
  compute_grads();

  // Copy the analytic gradients before probing: loss() re-runs forward
  // passes and must not disturb them.
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.tensors().size());
  for (const Tensor* t : params.tensors()) analytic.push_back(t->grad);

  // Loss at the unperturbed point, for the smoothness correction below.
  const double center = loss();

  std::mt19937_64 rng(seed);
  GradCheckReport report;
  const auto& tensors = params.tensors();
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    Tensor* t = tensors[ti];
    GradCheckGroup group;
    group.tensor = t->name;

    const std::size_t probes = std::min<std::size_t>(per_tensor, t->size());
    // sample distinct indices
    std::vector<std::size_t> idx(t->size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);

    for (std::size_t p = 0; p < probes; ++p) {
      const std::size_t i = idx[p];
      const double saved = t->value[i];
      t->value[i] = saved + eps;
      const double up = loss();
      t->value[i] = saved - eps;
      const double down = loss();
      t->value[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[ti][i];
      // A relu kink between the stencil points biases the central difference
      // by (to first order) exactly the stencil's second difference in
      // gradient units; a wrong analytic gradient leaves the loss smooth and
      // this term near zero. Discounting it keeps the comparison meaningful
      // on a network full of corners without excusing real disagreements.
      const double curvature = std::abs(up + down - 2.0 * center) / (2.0 * eps);
      const double rel = std::max(0.0, std::abs(a - numeric) - curvature) /
                         std::max({std::abs(a), std::abs(numeric), 1e-6});
      group.max_rel_error = std::max(group.max_rel_error, rel);
      ++group.checked;
    }
    report.max_rel_error = std::max(report.max_rel_error, group.max_rel_error);
    report.groups.push_back(std::move(group));
  }
  return report;
}

void perturb_params(ParamSet& params, double half_width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight_dist(-half_width, half_width);
  // Biases move strictly up: a channel whose inputs are all zero sits at
  // pre-activation == bias, and a positive offset keeps that away from the
  // relu corner no matter which bias the check perturbs.
  std::uniform_real_distribution<double> bias_dist(half_width, 3.0 * half_width);
  for (Tensor* t : params.tensors())
    for (double& v : t->value) v += t->is_bias ? bias_dist(rng) : weight_dist(rng);
}

GradCheckReport model_gradient_check(GapModel& model, const CityCube& normalized,
                                     const std::vector<SampleWindow>& batch, double eps,
                                     std::size_t per_tensor, std::uint64_t seed) {
  if (batch.empty()) throw std::invalid_argument("gradient check needs samples");
  GapModel::SampleCache cache;
  const GridSpec& grid = model.grid();

  auto loss = [&]() {
    double acc = 0.0;
    for (const SampleWindow& s : batch) {
      const double pred = model.forward(normalized, s, cache);
      const double d = pred - label_of(normalized, grid, s);
      acc += d * d;
    }
    return acc;
  };
  auto compute = [&]() {
    model.params().zero_grad();
    for (const SampleWindow& s : batch) {
      const double pred = model.forward(normalized, s, cache);
      model.backward(cache, 2.0 * (pred - label_of(normalized, grid, s)));
    }
  };
  return numeric_gradient_check(model.params(), loss, compute, eps, per_tensor, seed);
}

namespace {
constexpr char kCkptMagic[] = "ARLPCKPT1";

void put_grid(std::ostream& out, const GridSpec& g) {
  io::put_u32(out, static_cast<std::uint32_t>(g.rows));
  io::put_u32(out, static_cast<std::uint32_t>(g.cols));
  io::put_u32(out, static_cast<std::uint32_t>(g.interval_minutes));
  io::put_u32(out, static_cast<std::uint32_t>(g.neighborhood));
  io::put_u32(out, static_cast<std::uint32_t>(g.window));
  io::put_u32(out, static_cast<std::uint32_t>(g.history));
  io::put_u32(out, static_cast<std::uint32_t>(g.acf_lags));
}

GridSpec get_grid(std::istream& in) {
  GridSpec g;
  g.rows = static_cast<int>(io::get_u32(in));
  g.cols = static_cast<int>(io::get_u32(in));
  g.interval_minutes = static_cast<int>(io::get_u32(in));
  g.neighborhood = static_cast<int>(io::get_u32(in));
  g.window = static_cast<int>(io::get_u32(in));
  g.history = static_cast<int>(io::get_u32(in));
  g.acf_lags = static_cast<int>(io::get_u32(in));
  return g;
}

}  // namespace

void save_checkpoint(const std::string& path, const GapModel& model,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(kCkptMagic, 9);
  io::put_u32(out, 1);  // format version
  io::put_u32(out, static_cast<std::uint32_t>(meta.kind));
  put_grid(out, meta.grid);
  io::put_u32(out, static_cast<std::uint32_t>(meta.model.conv_hidden));
  io::put_u32(out, static_cast<std::uint32_t>(meta.model.spatial_dim));
  io::put_u32(out, static_cast<std::uint32_t>(meta.model.lstm_hidden));
  io::put_f64(out, meta.model.beta);
  io::put_u8(out, meta.model.renormalize_synth ? 1 : 0);
  io::put_u32(out, static_cast<std::uint32_t>(meta.train.batch_size));
  io::put_f64(out, meta.train.learning_rate);
  io::put_u32(out, static_cast<std::uint32_t>(meta.train.max_epochs));
  io::put_u64(out, meta.train.seed);
  io::put_string(out, meta.train.optimizer);
  io::put_u32(out, static_cast<std::uint32_t>(meta.train.patience));
  io::put_u32(out, static_cast<std::uint32_t>(meta.train.samples_per_epoch));
  io::put_u32(out, static_cast<std::uint32_t>(meta.train.ratio_train));
  io::put_u32(out, static_cast<std::uint32_t>(meta.train.ratio_test));
  io::put_u64(out, meta.steps);
  io::put_u32(out, static_cast<std::uint32_t>(meta.train_days));
  io::put_u64(out, meta.config_hash);
  for (const ChannelStats& cs : meta.stats.channel) {
    io::put_f64(out, cs.min);
    io::put_f64(out, cs.max);
  }
  const auto& tensors = model.params().tensors();
  io::put_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor* t : tensors) {
    io::put_string(out, t->name);
    io::put_u32(out, static_cast<std::uint32_t>(t->size()));
    for (double v : t->value) io::put_f64(out, v);
  }
  if (!out) throw DataError("short write while saving checkpoint '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint file '" + path + "'");
  io::expect_magic(in, kCkptMagic, "checkpoint file");
  const std::uint32_t version = io::get_u32(in);
  if (version != 1)
    throw DataError("checkpoint format version " + std::to_string(version) +
                    " is not supported");
  LoadedCheckpoint lc;
  const std::uint32_t kind_code = io::get_u32(in);
  if (kind_code > 2) throw DataError("checkpoint holds an unknown model kind");
  lc.meta.kind = static_cast<ModelKind>(kind_code);
  lc.meta.grid = get_grid(in);
  lc.meta.model.conv_hidden = static_cast<int>(io::get_u32(in));
  lc.meta.model.spatial_dim = static_cast<int>(io::get_u32(in));
  lc.meta.model.lstm_hidden = static_cast<int>(io::get_u32(in));
  lc.meta.model.beta = io::get_f64(in);
  lc.meta.model.renormalize_synth = io::get_u8(in) != 0;
  lc.meta.train.batch_size = static_cast<int>(io::get_u32(in));
  lc.meta.train.learning_rate = io::get_f64(in);
  lc.meta.train.max_epochs = static_cast<int>(io::get_u32(in));
  lc.meta.train.seed = io::get_u64(in);
  lc.meta.train.optimizer = io::get_string(in);
  lc.meta.train.patience = static_cast<int>(io::get_u32(in));
  lc.meta.train.samples_per_epoch = static_cast<int>(io::get_u32(in));
  lc.meta.train.ratio_train = static_cast<int>(io::get_u32(in));
  lc.meta.train.ratio_test = static_cast<int>(io::get_u32(in));
  lc.meta.steps = io::get_u64(in);
  lc.meta.train_days = static_cast<int>(io::get_u32(in));
  lc.meta.config_hash = io::get_u64(in);
  for (ChannelStats& cs : lc.meta.stats.channel) {
    cs.min = io::get_f64(in);
    cs.max = io::get_f64(in);
  }

  try {
    lc.model = std::make_unique<GapModel>(lc.meta.kind, lc.meta.grid, lc.meta.model);
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint carries an invalid model setup: ") +
                    e.what());
  }

  const std::uint32_t count = io::get_u32(in);
  const auto& tensors = lc.model->params().tensors();
  if (count != tensors.size())
    throw DataError("checkpoint parameter block count disagrees with the model");
  for (Tensor* t : tensors) {
    const std::string name = io::get_string(in);
    const std::uint32_t n = io::get_u32(in);
    if (name != t->name || n != t->size())
      throw DataError("checkpoint parameter block '" + name +
                      "' does not match expected '" + t->name + "'");
    for (double& v : t->value) v = io::get_f64(in);
  }
  return lc;
}

}  // namespace arlp
