#pragma once

#include <array>
#include <vector>

#include "arlp/grid.hpp"
#include "arlp/layers.hpp"

// Spatial component: encodes the S x S neighborhood of the target cell at one
// interval. Six per-channel residual encoders (weather one-hot, speed,
// volume, journey up, journey down, gap) feed a fused representation vector.

namespace arlp {

/// One-hot weather patch, channel-last [row][col][code], 4 codes per cell.
/// Cells outside the grid stay all-zero (distinct from any real code).
void weather_patch_onehot(const CityCube& cube, int day, int t, int region, double* out);

/// Residual stack over an S x S map: four blocks of
///   y = relu(conv_b(relu(conv_a(x)))) + x
/// followed by a linear projection of the flattened map. With all conv
/// parameters zero the stack is an identity and the output is the projected
/// raw patch.
struct ResidualEncoder {
  static constexpr int kBlocks = 4;

  int side = 0;
  int channels = 0;   // map channels (1, or 4 for one-hot weather)
  int hidden = 0;     // conv_a output channels inside a block
  int out_dim = 0;    // projection width

  struct Block {
    ConvLayer conv_a;  // channels -> hidden
    ConvLayer conv_b;  // hidden -> channels
  };
  std::array<Block, kBlocks> blocks;
  DenseLayer proj;  // side*side*channels -> out_dim

  ResidualEncoder() = default;
  ResidualEncoder(const std::string& name, int side, int channels, int hidden,
                  int out_dim);

  struct Cache {
    // x[0] is the input patch, x[i+1] the output of block i.
    std::vector<std::vector<double>> x;
    std::vector<std::vector<double>> a;       // conv_a pre-activation
    std::vector<std::vector<double>> a_act;   // relu(a)
    std::vector<std::vector<double>> b_pre;   // conv_b pre-activation
  };

  void forward(const double* patch, double* out, Cache& cache) const;
  /// g_out is d(loss)/d(projection output); parameter gradients accumulate.
  void backward(const Cache& cache, const double* g_out);

  void register_params(ParamSet& set);
};

/// Full spatial stage for one interval: six encoders plus the two pairwise
/// fusion layers (speed+volume, journey up+down). Output layout:
///   [weather | fused speed/volume | fused journeys | gap], 4 * out_dim wide.
struct SpatialStage {
  int side = 0;
  int hidden = 0;
  int out_dim = 0;

  ResidualEncoder weather;   // 4-channel one-hot map
  ResidualEncoder speed;
  ResidualEncoder volume;
  ResidualEncoder journey_up;
  ResidualEncoder journey_down;
  ResidualEncoder gap;
  DenseLayer fuse_traffic;   // [speed|volume] -> out_dim, relu
  DenseLayer fuse_journey;   // [up|down] -> out_dim, relu

  SpatialStage() = default;
  SpatialStage(int side, int hidden, int out_dim);

  int output_dim() const { return 4 * out_dim; }

  struct Cache {
    std::vector<double> weather_patch;  // side*side*4
    std::array<std::vector<double>, 5> patches;  // speed, volume, ju, jd, gap
    ResidualEncoder::Cache enc[6];
    std::vector<double> enc_out[6];
    std::vector<double> traffic_pre, journey_pre;  // fusion pre-activations
  };

  void forward(const CityCube& cube, int day, int t, int region, double* out,
               Cache& cache) const;
  void backward(const Cache& cache, const double* g_out);

  void register_params(ParamSet& set);
};

}  // namespace arlp
