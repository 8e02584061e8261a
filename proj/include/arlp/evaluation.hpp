#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "arlp/grid.hpp"

// Test-set evaluation: error metrics, the two non-learned baselines
// (persistence and a least-squares autoregression), and a harness that runs
// any predictor over the shared test positions.

namespace arlp {

double mean_absolute_error(std::span<const double> pred, std::span<const double> truth);
double root_mean_squared_error(std::span<const double> pred,
                               std::span<const double> truth);

struct MapeOutcome {
  double percent = 0.0;
  std::size_t included = 0;
  std::size_t excluded = 0;  // |target| below the zero cutoff
};

/// Mean absolute percentage error; targets with |y| <= 1e-8 are excluded and
/// counted. Throws NumericError when nothing remains.
MapeOutcome mean_absolute_percentage_error(std::span<const double> pred,
                                           std::span<const double> truth);

/// One metrics.csv row.
struct MetricsRow {
  std::string model;
  double mae = 0.0;
  double rmse = 0.0;
  double mape_percent = 0.0;
  std::size_t n = 0;
  std::size_t excluded_zero_targets = 0;
};

struct EvalOutcome {
  MetricsRow row;
  std::vector<double> region_mae;  // per-cell MAE, drives the error heatmap
};

/// All test positions: days [train_days, days), every cell, every window
/// start that leaves a target inside the day. min_day guards models whose
/// history reaches back before the test range begins.
std::vector<SampleWindow> evaluation_positions(const GridSpec& grid, int train_days,
                                               int days, int min_day = 0);

/// Runs `predict` against `truth` over the positions and aggregates the
/// metrics. Both callbacks see the same SampleWindow; units are whatever the
/// callbacks produce (raw by default, normalized when the caller wants it).
EvalOutcome evaluate_predictor(const std::string& name,
                               const std::vector<SampleWindow>& positions,
                               const std::function<double(const SampleWindow&)>& predict,
                               const std::function<double(const SampleWindow&)>& truth,
                               int cells);

/// Last observed gap of the window carries forward as the forecast.
double persistence_forecast(const CityCube& cube, const SampleWindow& s);

/// Per-region autoregression fitted on the training days by least squares.
struct ArBaseline {
  int order = 0;
  bool differenced = false;
  std::vector<double> coef;
  bool ridge_fallback = false;  // normal equations were singular
};

/// Fits gap[region] on days [0, train_days). order may be 0 (always predicts
/// zero change / zero level). Throws ConfigError when the order exceeds what
/// a sample window can feed.
ArBaseline fit_ar_baseline(const CityCube& cube, int train_days, int region, int order,
                           bool difference, const GridSpec& grid);

/// Forecast for the interval after the sample window, using only values
/// inside the window.
double ar_forecast(const ArBaseline& model, const CityCube& cube, const SampleWindow& s);

}  // namespace arlp
