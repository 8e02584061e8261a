#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "arlp/grid.hpp"

// Semantic component: describes every cell by the autocorrelation shape of
// its recent series, scores cells against the prediction target, keeps the
// strong matches, and blends their gap series into one synthesized series.

namespace arlp {

/// Normalized autocorrelation (r_0 .. r_lags). r_0 is 1 by definition; a
/// constant window yields (1, 0, ..., 0). Invariant under affine rescaling
/// of the series.
std::vector<double> acf_vector(std::span<const double> series, int lags);

/// Dot product of two equally long ACF vectors: the per-channel similarity
/// score between two cells.
double acf_similarity(std::span<const double> a, std::span<const double> b);

/// One sample window of the four descriptor channels plus the gap channel,
/// for every cell: row i of each matrix is cell i's series of length len.
struct WindowSeries {
  int cells = 0;
  int len = 0;
  std::vector<double> demand;
  std::vector<double> supply;
  std::vector<double> journey_up;
  std::vector<double> journey_down;
  std::vector<double> gap;

  const double* row(const std::vector<double>& ch, int cell) const {
    return ch.data() + static_cast<std::size_t>(cell) * len;
  }
};

/// Copies the window [t0, t0+len) of one day out of the cube.
WindowSeries extract_window(const CityCube& cube, int day, int t0, int len);

/// Per-cell similarity against the target cell, one map per descriptor
/// channel (demand, supply, journey up, journey down).
struct SimilarityMaps {
  int target = 0;
  std::vector<double> demand;
  std::vector<double> supply;
  std::vector<double> journey_up;
  std::vector<double> journey_down;
};

SimilarityMaps similarity_maps(const WindowSeries& win, int target, int lags);

/// sd_i = w . (four similarity scores of cell i) + b, the learned scalar
/// closeness of cell i to the target.
std::vector<double> similarity_distance(const SimilarityMaps& maps, const double w[4],
                                        double b);

/// Keep cells strictly closer than beta times the target's own score.
std::vector<std::uint8_t> hard_attention(std::span<const double> sd, int target,
                                         double beta);

/// sa_i = sd_i / sd_k. Throws NumericError when |sd_k| <= 1e-8.
std::vector<double> sample_attention(std::span<const double> sd, int target);

/// Full forward pass of the semantic component for one window, with every
/// intermediate kept for the backward pass.
struct SemanticOutcome {
  SimilarityMaps maps;
  std::vector<double> distance;           // sd
  std::vector<std::uint8_t> hard_mask;    // ha
  std::vector<double> sample_weights;     // sa
  std::vector<double> final_weights;      // fa = ha * sa
  double weight_sum = 0.0;                // sum of fa
  std::vector<double> synthesized;        // blended gap series, length len
};

SemanticOutcome semantic_forward(const WindowSeries& win, int target, const double w[4],
                                 double b, double beta, bool renormalize, int lags);

/// Backward through sd -> sa -> fa -> synthesized series. The hard mask is
/// treated as a constant. g_series is d(loss)/d(synthesized); gradients for
/// the channel mix accumulate into gw[4] and gb.
void semantic_backward(const SemanticOutcome& fwd, const WindowSeries& win, int target,
                       std::span<const double> g_series, bool renormalize, double gw[4],
                       double& gb);

}  // namespace arlp
