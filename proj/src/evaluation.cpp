#include "arlp/evaluation.hpp"

#include <cmath>
#include <stdexcept>

#include "arlp/errors.hpp"

namespace arlp {

namespace {
void check_lengths(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("metric inputs must be equally long and non-empty");
}
}  // namespace

double mean_absolute_error(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - truth[i]);
  return acc / static_cast<double>(pred.size());
}

double root_mean_squared_error(std::span<const double> pred,
                               std::span<const double> truth) {
  check_lengths(pred, truth);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

MapeOutcome mean_absolute_percentage_error(std::span<const double> pred,
                                           std::span<const double> truth) {
  check_lengths(pred, truth);
  MapeOutcome out;
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (std::abs(truth[i]) <= 1e-8) {
      ++out.excluded;
      continue;
    }
    acc += std::abs(pred[i] - truth[i]) / std::abs(truth[i]);
    ++out.included;
  }
  if (out.included == 0)
    throw NumericError("every target is numerically zero; MAPE is undefined");
  out.percent = 100.0 * acc / static_cast<double>(out.included);
  return out;
}

std::vector<SampleWindow> evaluation_positions(const GridSpec& grid, int train_days,
                                               int days, int min_day) {
  std::vector<SampleWindow> out;
  const int t0_count = grid.intervals_per_day() - grid.window;
  const int first = std::max(train_days, min_day);
  for (int day = first; day < days; ++day)
    for (int t0 = 0; t0 < t0_count; ++t0)
      for (int region = 0; region < grid.cells(); ++region)
        out.push_back({day, t0, region});
  if (out.empty()) throw ConfigError("the test day range holds no usable windows");
  return out;
}

EvalOutcome evaluate_predictor(const std::string& name,
                               const std::vector<SampleWindow>& positions,
                               const std::function<double(const SampleWindow&)>& predict,
                               const std::function<double(const SampleWindow&)>& truth,
                               int cells) {
  if (positions.empty()) throw std::invalid_argument("no positions to evaluate");
  std::vector<double> preds(positions.size()), truths(positions.size());
  std::vector<double> abs_sum(cells, 0.0);
  std::vector<std::size_t> count(cells, 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    preds[i] = predict(positions[i]);
    truths[i] = truth(positions[i]);
    abs_sum[positions[i].region] += std::abs(preds[i] - truths[i]);
    count[positions[i].region] += 1;
  }

  EvalOutcome out;
  out.row.model = name;
  out.row.mae = mean_absolute_error(preds, truths);
  out.row.rmse = root_mean_squared_error(preds, truths);
  const MapeOutcome mape = mean_absolute_percentage_error(preds, truths);
  out.row.mape_percent = mape.percent;
  out.row.n = positions.size();
  out.row.excluded_zero_targets = mape.excluded;

  if (out.row.rmse + 1e-12 < out.row.mae)
    throw NumericError("rmse fell below mae; metric computation is corrupted");

  out.region_mae.assign(cells, 0.0);
  for (int r = 0; r < cells; ++r)
    if (count[r] > 0) out.region_mae[r] = abs_sum[r] / static_cast<double>(count[r]);
  return out;
}

double persistence_forecast(const CityCube& cube, const SampleWindow& s) {
  const int last = s.t0 + cube.grid().window - 1;
  return cube.at_cell(Channel::Gap, s.day, last, s.region);
}

namespace {

/// Gaussian elimination with partial pivoting; returns false on a pivot too
/// small to trust.
bool solve_linear(std::vector<double> a, std::vector<double> rhs, int n,
                  std::vector<double>& x) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  const double tiny = std::max(scale, 1.0) * 1e-12;

  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) pivot = r;
    if (std::abs(a[pivot * n + col]) < tiny) return false;
    if (pivot != col) {
      for (int c = 0; c < n; ++c) std::swap(a[col * n + c], a[pivot * n + c]);
      std::swap(rhs[col], rhs[pivot]);
    }
    for (int r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      rhs[r] -= f * rhs[col];
    }
  }
  x.assign(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = rhs[r];
    for (int c = r + 1; c < n; ++c) acc -= a[r * n + c] * x[c];
    x[r] = acc / a[r * n + r];
  }
  return true;
}

}  // namespace

ArBaseline fit_ar_baseline(const CityCube& cube, int train_days, int region, int order,
                           bool difference, const GridSpec& grid) {
  if (order < 0) throw ConfigError("autoregression order must be non-negative");
  const int max_order = grid.window - 1;
  if (order > max_order)
    throw ConfigError("autoregression order " + std::to_string(order) +
                      " cannot be fed from a window of " + std::to_string(grid.window));
  if (train_days < 1 || train_days > cube.days())
    throw ConfigError("train day range outside the cube");

  ArBaseline model;
  model.order = order;
  model.differenced = difference;
  if (order == 0) return model;

  // training series: the region's gap over all training days, in time order
  const int p = grid.intervals_per_day();
  std::vector<double> series;
  series.reserve(static_cast<std::size_t>(train_days) * p);
  for (int d = 0; d < train_days; ++d)
    for (int t = 0; t < p; ++t)
      series.push_back(cube.at_cell(Channel::Gap, d, t, region));

  std::vector<double> z;
  if (difference) {
    z.resize(series.size() - 1);
    for (std::size_t i = 0; i + 1 < series.size(); ++i) z[i] = series[i + 1] - series[i];
  } else {
    z = series;
  }
  if (static_cast<int>(z.size()) <= order)
    throw ConfigError("too little training data for the requested order");

  // normal equations for z_t = sum_i coef_i * z_{t-i}, no intercept
  const int n = order;
  std::vector<double> ata(static_cast<std::size_t>(n) * n, 0.0);
  std::vector<double> aty(n, 0.0);
  for (std::size_t t = static_cast<std::size_t>(n); t < z.size(); ++t) {
    for (int i = 0; i < n; ++i) {
      const double xi = z[t - 1 - i];
      aty[i] += xi * z[t];
      for (int j = 0; j < n; ++j) ata[i * n + j] += xi * z[t - 1 - j];
    }
  }

  if (!solve_linear(ata, aty, n, model.coef)) {
    // ridge fallback keeps the baseline usable on degenerate series
    for (int i = 0; i < n; ++i) ata[i * n + i] += 1e-6;
    if (!solve_linear(ata, aty, n, model.coef))
      throw NumericError("autoregression normal equations stayed singular under ridge");
    model.ridge_fallback = true;
  }
  return model;
}

double ar_forecast(const ArBaseline& model, const CityCube& cube, const SampleWindow& s) {
  const GridSpec& grid = cube.grid();
  const int last = s.t0 + grid.window - 1;  // last observed interval
  const double last_value = cube.at_cell(Channel::Gap, s.day, last, s.region);

  if (model.differenced) {
    double dz = 0.0;
    for (int i = 0; i < model.order; ++i) {
      const int t_hi = last - i;      // z_{t} = x_{t} - x_{t-1}
      const double z = cube.at_cell(Channel::Gap, s.day, t_hi, s.region) -
                       cube.at_cell(Channel::Gap, s.day, t_hi - 1, s.region);
      dz += model.coef[i] * z;
    }
    return last_value + dz;
  }

  double x = 0.0;
  for (int i = 0; i < model.order; ++i)
    x += model.coef[i] * cube.at_cell(Channel::Gap, s.day, last - i, s.region);
  return x;
}

}  // namespace arlp
