#pragma once

#include <string>
#include <vector>

#include "arlp/evaluation.hpp"

// Evaluation artifacts on disk: the metrics table and simple binary-PPM
// images (a per-cell error heatmap and the training loss curve). Output is
// byte-for-byte deterministic unless a stamp comment is requested.

namespace arlp {

/// Header: model,mae,rmse,mape_percent,n,excluded_zero_targets
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

/// Cell grid rendered as scaled pixels, cold blue (low) to warm red (high).
/// stamp, when non-empty, is embedded as a PPM comment.
void write_heatmap_ppm(const std::string& path, const std::vector<double>& cell_values,
                       int rows, int cols, int cell_px = 16,
                       const std::string& stamp = "");

/// Per-epoch series rendered as a polyline on a fixed canvas.
void write_loss_curve_ppm(const std::string& path, const std::vector<double>& losses,
                          int width = 640, int height = 320,
                          const std::string& stamp = "");

}  // namespace arlp
