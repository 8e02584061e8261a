#include "arlp/spatial.hpp"

#include <cstring>

#include "arlp/errors.hpp"
#include "arlp/kernels.hpp"

namespace arlp {

void weather_patch_onehot(const CityCube& cube, int day, int t, int region, double* out) {
  const GridSpec& g = cube.grid();
  const auto [row, col] = region_row_col(g, region);
  const int s = g.neighborhood;
  const int half = s / 2;
  std::memset(out, 0, sizeof(double) * s * s * kWeatherCodes);
  for (int dr = 0; dr < s; ++dr) {
    const int rr = row + dr - half;
    if (rr < 0 || rr >= g.rows) continue;
    for (int dc = 0; dc < s; ++dc) {
      const int cc = col + dc - half;
      if (cc < 0 || cc >= g.cols) continue;
      const int code = static_cast<int>(cube.at(Channel::Weather, day, t, rr, cc));
      if (code < 0 || code >= kWeatherCodes)
        throw DataError("weather channel holds code " + std::to_string(code) +
                        ", outside the known set");
      out[(dr * s + dc) * kWeatherCodes + code] = 1.0;
    }
  }
}

ResidualEncoder::ResidualEncoder(const std::string& name, int side_, int channels_,
                                 int hidden_, int out_dim_)
    : side(side_), channels(channels_), hidden(hidden_), out_dim(out_dim_) {
  for (int i = 0; i < kBlocks; ++i) {
    const std::string base = name + ".block" + std::to_string(i);
    blocks[i].conv_a = ConvLayer(base + ".a", side, channels, hidden);
    blocks[i].conv_b = ConvLayer(base + ".b", side, hidden, channels);
  }
  proj = DenseLayer(name + ".proj", side * side * channels, out_dim);
}

void ResidualEncoder::forward(const double* patch, double* out, Cache& cache) const {
  const auto& k = kernels::active();
  const std::size_t map = static_cast<std::size_t>(side) * side * channels;
  const std::size_t hmap = static_cast<std::size_t>(side) * side * hidden;

  cache.x.resize(kBlocks + 1);
  cache.a.resize(kBlocks);
  cache.a_act.resize(kBlocks);
  cache.b_pre.resize(kBlocks);
  cache.x[0].assign(patch, patch + map);

  for (int i = 0; i < kBlocks; ++i) {
    const std::vector<double>& x = cache.x[i];
    cache.a[i].resize(hmap);
    blocks[i].conv_a.forward(x.data(), cache.a[i].data());
    cache.a_act[i].resize(hmap);
    k.relu(cache.a[i].data(), cache.a_act[i].data(), hmap);
    cache.b_pre[i].resize(map);
    blocks[i].conv_b.forward(cache.a_act[i].data(), cache.b_pre[i].data());
    cache.x[i + 1].resize(map);
    k.relu(cache.b_pre[i].data(), cache.x[i + 1].data(), map);
    k.vadd(cache.x[i + 1].data(), x.data(), cache.x[i + 1].data(), map);
  }
  proj.forward(cache.x[kBlocks].data(), out);
}

void ResidualEncoder::backward(const Cache& cache, const double* g_out) {
  const auto& k = kernels::active();
  const std::size_t map = static_cast<std::size_t>(side) * side * channels;
  const std::size_t hmap = static_cast<std::size_t>(side) * side * hidden;

  std::vector<double> gx(map, 0.0);
  proj.backward(cache.x[kBlocks].data(), g_out, gx.data());

  std::vector<double> g_b_pre(map), g_a_act(hmap), g_a(hmap);
  for (int i = kBlocks - 1; i >= 0; --i) {
    // y = relu(b_pre) + x: the skip passes gx through untouched, the branch
    // sees it gated by the relu.
    std::fill(g_b_pre.begin(), g_b_pre.end(), 0.0);
    k.relu_mask_acc(gx.data(), cache.b_pre[i].data(), g_b_pre.data(), map);

    std::fill(g_a_act.begin(), g_a_act.end(), 0.0);
    blocks[i].conv_b.backward(cache.a_act[i].data(), g_b_pre.data(), g_a_act.data());

    std::fill(g_a.begin(), g_a.end(), 0.0);
    k.relu_mask_acc(g_a_act.data(), cache.a[i].data(), g_a.data(), hmap);

    // gx for the layer below = skip gradient + conv path gradient
    blocks[i].conv_a.backward(cache.x[i].data(), g_a.data(), gx.data());
  }
}

void ResidualEncoder::register_params(ParamSet& set) {
  for (auto& blk : blocks) {
    blk.conv_a.register_params(set);
    blk.conv_b.register_params(set);
  }
  proj.register_params(set);
}

SpatialStage::SpatialStage(int side_, int hidden_, int out_dim_)
    : side(side_), hidden(hidden_), out_dim(out_dim_) {
  weather = ResidualEncoder("spatial.weather", side, kWeatherCodes, hidden, out_dim);
  speed = ResidualEncoder("spatial.speed", side, 1, hidden, out_dim);
  volume = ResidualEncoder("spatial.volume", side, 1, hidden, out_dim);
  journey_up = ResidualEncoder("spatial.journey_up", side, 1, hidden, out_dim);
  journey_down = ResidualEncoder("spatial.journey_down", side, 1, hidden, out_dim);
  gap = ResidualEncoder("spatial.gap", side, 1, hidden, out_dim);
  fuse_traffic = DenseLayer("spatial.fuse_traffic", 2 * out_dim, out_dim);
  fuse_journey = DenseLayer("spatial.fuse_journey", 2 * out_dim, out_dim);
}

void SpatialStage::forward(const CityCube& cube, int day, int t, int region, double* out,
                           Cache& cache) const {
  const auto& k = kernels::active();
  const int s = cube.grid().neighborhood;
  if (s != side) throw std::invalid_argument("cube neighborhood disagrees with encoder");

  cache.weather_patch.resize(static_cast<std::size_t>(s) * s * kWeatherCodes);
  weather_patch_onehot(cube, day, t, region, cache.weather_patch.data());
  static constexpr Channel kScalarChannels[5] = {Channel::Speed, Channel::Volume,
                                                 Channel::JourneyUp, Channel::JourneyDown,
                                                 Channel::Gap};
  for (int i = 0; i < 5; ++i) {
    cache.patches[i].resize(static_cast<std::size_t>(s) * s);
    extract_patch(cube, kScalarChannels[i], day, t, region, cache.patches[i].data());
  }

  const ResidualEncoder* encs[6] = {&weather, &speed, &volume, &journey_up,
                                    &journey_down, &gap};
  const double* inputs[6] = {cache.weather_patch.data(), cache.patches[0].data(),
                             cache.patches[1].data(),   cache.patches[2].data(),
                             cache.patches[3].data(),   cache.patches[4].data()};
  for (int i = 0; i < 6; ++i) {
    cache.enc_out[i].resize(out_dim);
    encs[i]->forward(inputs[i], cache.enc_out[i].data(), cache.enc[i]);
  }

  // pairwise fusion with relu
  std::vector<double> cat(2 * out_dim);
  std::copy(cache.enc_out[1].begin(), cache.enc_out[1].end(), cat.begin());
  std::copy(cache.enc_out[2].begin(), cache.enc_out[2].end(), cat.begin() + out_dim);
  cache.traffic_pre.resize(out_dim);
  fuse_traffic.forward(cat.data(), cache.traffic_pre.data());

  std::copy(cache.enc_out[3].begin(), cache.enc_out[3].end(), cat.begin());
  std::copy(cache.enc_out[4].begin(), cache.enc_out[4].end(), cat.begin() + out_dim);
  cache.journey_pre.resize(out_dim);
  fuse_journey.forward(cat.data(), cache.journey_pre.data());

  std::copy(cache.enc_out[0].begin(), cache.enc_out[0].end(), out);
  k.relu(cache.traffic_pre.data(), out + out_dim, out_dim);
  k.relu(cache.journey_pre.data(), out + 2 * out_dim, out_dim);
  std::copy(cache.enc_out[5].begin(), cache.enc_out[5].end(), out + 3 * out_dim);
}

void SpatialStage::backward(const Cache& cache, const double* g_out) {
  const auto& k = kernels::active();

  // weather and gap pass straight through the concatenation
  weather.backward(cache.enc[0], g_out);
  gap.backward(cache.enc[5], g_out + 3 * out_dim);

  // fused pairs: relu gate, dense, then split to the two encoders
  std::vector<double> g_pre(out_dim, 0.0), g_cat(2 * out_dim, 0.0);
  std::vector<double> cat(2 * out_dim);

  std::fill(g_pre.begin(), g_pre.end(), 0.0);
  k.relu_mask_acc(g_out + out_dim, cache.traffic_pre.data(), g_pre.data(), out_dim);
  std::copy(cache.enc_out[1].begin(), cache.enc_out[1].end(), cat.begin());
  std::copy(cache.enc_out[2].begin(), cache.enc_out[2].end(), cat.begin() + out_dim);
  std::fill(g_cat.begin(), g_cat.end(), 0.0);
  fuse_traffic.backward(cat.data(), g_pre.data(), g_cat.data());
  speed.backward(cache.enc[1], g_cat.data());
  volume.backward(cache.enc[2], g_cat.data() + out_dim);

  std::fill(g_pre.begin(), g_pre.end(), 0.0);
  k.relu_mask_acc(g_out + 2 * out_dim, cache.journey_pre.data(), g_pre.data(), out_dim);
  std::copy(cache.enc_out[3].begin(), cache.enc_out[3].end(), cat.begin());
  std::copy(cache.enc_out[4].begin(), cache.enc_out[4].end(), cat.begin() + out_dim);
  std::fill(g_cat.begin(), g_cat.end(), 0.0);
  fuse_journey.backward(cat.data(), g_pre.data(), g_cat.data());
  journey_up.backward(cache.enc[3], g_cat.data());
  journey_down.backward(cache.enc[4], g_cat.data() + out_dim);
}

void SpatialStage::register_params(ParamSet& set) {
  weather.register_params(set);
  speed.register_params(set);
  volume.register_params(set);
  journey_up.register_params(set);
  journey_down.register_params(set);
  gap.register_params(set);
  fuse_traffic.register_params(set);
  fuse_journey.register_params(set);
}

}  // namespace arlp
