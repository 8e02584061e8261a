#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "arlp/grid.hpp"
#include "arlp/layers.hpp"
#include "arlp/semantic.hpp"
#include "arlp/spatial.hpp"

// Temporal component and the assembled forecasting models: an LSTM over the
// per-interval features, the cross-day attention of the multi-day variant,
// and the regression head.

namespace arlp {

/// Single-layer LSTM returning the final hidden state. Gate order in the
/// packed parameters is input, forget, cell, output.
struct LstmLayer {
  int in_dim = 0;
  int hidden = 0;
  Tensor wx;  // [4*hidden][in_dim]
  Tensor wh;  // [4*hidden][hidden]
  Tensor b;   // [4*hidden]

  LstmLayer() = default;
  LstmLayer(const std::string& name, int in, int hidden);

  struct StepCache {
    std::vector<double> x, h_prev, c_prev;
    std::vector<double> gates;   // post-activation, 4*hidden
    std::vector<double> c, tanh_c;
  };
  struct Cache {
    std::vector<StepCache> steps;
    std::vector<double> h_last;
  };

  void forward(const std::vector<std::vector<double>>& xs, Cache& cache) const;
  /// g_h_last is d(loss)/d(final hidden state). Parameter gradients
  /// accumulate; g_xs (nullable) receives per-step input gradients (+=).
  void backward(const Cache& cache, const double* g_h_last,
                std::vector<std::vector<double>>* g_xs);

  void register_params(ParamSet& set);
};

/// Ratio attention over the day hidden states: alpha_k proportional to
/// h_k . h_last, normalized by the sum. When the normalizer is numerically
/// zero the weights fall back to uniform and `fallback` is set.
struct DayAttentionOutcome {
  std::vector<double> alpha;
  std::vector<double> numerators;  // h_k . h_last
  double normalizer = 0.0;
  bool fallback = false;
};

DayAttentionOutcome day_attention(const std::vector<std::vector<double>>& h);

/// Accumulates d(loss)/d(h_k) given d(loss)/d(alpha). A fallback outcome
/// contributes no gradient (the uniform weights are constants).
void day_attention_backward(const std::vector<std::vector<double>>& h,
                            const DayAttentionOutcome& att,
                            std::span<const double> g_alpha,
                            std::vector<std::vector<double>>& g_h);

/// Three fully connected layers with relu activations; the final relu keeps
/// the predicted gap non-negative.
struct MlpHead {
  DenseLayer l1, l2, l3;
  int in_dim = 0, hidden = 0;

  MlpHead() = default;
  MlpHead(const std::string& name, int in, int hidden);

  struct Cache {
    std::vector<double> in, pre1, act1, pre2, act2;
    double pre3 = 0.0;
  };

  double forward(const double* x, Cache& cache) const;
  /// g_pred is d(loss)/d(prediction); g_in (nullable) receives += d/d(input).
  void backward(const Cache& cache, double g_pred, double* g_in);

  void register_params(ParamSet& set);
};

enum class ModelKind : int {
  CurrentDay = 0,  // single-window model
  MultiDay = 1,    // aligned windows over `history` days with day attention
  GapLstm = 2,     // ablation: plain LSTM over the target's own gap series
};

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct ModelConfig {
  int conv_hidden = 8;    // channels inside a residual block
  int spatial_dim = 32;   // per-encoder representation width
  int lstm_hidden = 64;   // LSTM state width
  double beta = 0.9;      // hard attention threshold factor
  bool renormalize_synth = false;  // divide synthesized series by weight sum

  bool operator==(const ModelConfig&) const = default;
};

/// The assembled supply-demand gap forecaster.
class GapModel {
 public:
  GapModel(ModelKind kind, const GridSpec& grid, const ModelConfig& cfg);

  // the parameter registry points into the object; pin it in place
  GapModel(const GapModel&) = delete;
  GapModel& operator=(const GapModel&) = delete;

  ModelKind kind() const { return kind_; }
  const GridSpec& grid() const { return grid_; }
  const ModelConfig& config() const { return cfg_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }

  /// Seeded parameter initialization (uniform fan-in weights, zero biases,
  /// plus the documented non-zero starts for the similarity mix and the
  /// final head bias).
  void init(std::uint64_t seed);

  /// Everything one forward pass computes, kept for backward and for
  /// attention inspection.
  struct SampleCache {
    struct DayPass {
      int day = 0;
      WindowSeries window;
      SemanticOutcome semantic;
      std::vector<SpatialStage::Cache> spatial;     // one per interval
      std::vector<std::vector<double>> lstm_inputs; // F_j per interval
      LstmLayer::Cache lstm;
    };
    std::vector<DayPass> days;
    DayAttentionOutcome attention;       // multi-day only
    std::vector<double> head_in;
    MlpHead::Cache head;
    SampleWindow sample;
  };

  /// Predicted normalized gap for the sample window; expects a normalized
  /// cube. Throws std::invalid_argument when the window does not fit the
  /// day or the multi-day history would start before day zero.
  double forward(const CityCube& cube, const SampleWindow& s, SampleCache& cache) const;

  /// Accumulates parameter gradients for d(loss)/d(prediction) = g_pred.
  void backward(const SampleCache& cache, double g_pred);

  /// How many day-attention evaluations fell back to uniform weights.
  long attention_fallbacks() const { return attention_fallbacks_; }

  int lstm_input_dim() const;
  int head_input_dim() const;

  // components are public for the unit tests; everyday use goes through
  // forward/backward
  Tensor mix_w{"semantic.mix.w", {4}};
  Tensor mix_b{"semantic.mix.b", {1}, true};
  SpatialStage spatial;
  LstmLayer lstm;
  MlpHead head;

 private:
  void run_day(const CityCube& cube, int day, int t0, int region,
               SampleCache::DayPass& pass) const;

  ModelKind kind_;
  GridSpec grid_;
  ModelConfig cfg_;
  ParamSet params_;
  mutable long attention_fallbacks_ = 0;
};

}  // namespace arlp
