#include "arlp/semantic.hpp"

#include <cmath>
#include <stdexcept>

#include "arlp/errors.hpp"
#include "arlp/kernels.hpp"

namespace arlp {

std::vector<double> acf_vector(std::span<const double> series, int lags) {
  const int n = static_cast<int>(series.size());
  if (n < 2) throw std::invalid_argument("acf needs at least 2 points");
  if (lags < 0 || lags > n - 2)
    throw std::invalid_argument("acf lag count must lie in [0, n-2]");

  std::vector<double> r(static_cast<std::size_t>(lags) + 1, 0.0);
  r[0] = 1.0;

  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= n;

  double denom = 0.0;
  for (double v : series) denom += (v - mean) * (v - mean);
  if (denom <= 0.0) return r;  // constant window: (1, 0, ..., 0)

  for (int h = 1; h <= lags; ++h) {
    double num = 0.0;
    for (int t = 0; t + h < n; ++t) num += (series[t] - mean) * (series[t + h] - mean);
    r[h] = num / denom;
  }
  return r;
}

double acf_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("acf vectors must have equal length");
  return kernels::active().dot(a.data(), b.data(), a.size());
}

WindowSeries extract_window(const CityCube& cube, int day, int t0, int len) {
  WindowSeries win;
  win.cells = cube.grid().cells();
  win.len = len;
  const std::size_t total = static_cast<std::size_t>(win.cells) * len;
  win.demand.resize(total);
  win.supply.resize(total);
  win.journey_up.resize(total);
  win.journey_down.resize(total);
  win.gap.resize(total);
  for (int cell = 0; cell < win.cells; ++cell) {
    const std::size_t off = static_cast<std::size_t>(cell) * len;
    cube.series(Channel::Demand, day, t0, len, cell, win.demand.data() + off);
    cube.series(Channel::Supply, day, t0, len, cell, win.supply.data() + off);
    cube.series(Channel::JourneyUp, day, t0, len, cell, win.journey_up.data() + off);
    cube.series(Channel::JourneyDown, day, t0, len, cell, win.journey_down.data() + off);
    cube.series(Channel::Gap, day, t0, len, cell, win.gap.data() + off);
  }
  return win;
}

SimilarityMaps similarity_maps(const WindowSeries& win, int target, int lags) {
  if (target < 0 || target >= win.cells)
    throw std::out_of_range("similarity target cell outside the grid");
  SimilarityMaps maps;
  maps.target = target;
  maps.demand.resize(win.cells);
  maps.supply.resize(win.cells);
  maps.journey_up.resize(win.cells);
  maps.journey_down.resize(win.cells);

  // ACF vectors per channel for every cell, then one dot per cell against
  // the target's vector.
  const int width = lags + 1;
  const std::vector<double>* chans[4] = {&win.demand, &win.supply, &win.journey_up,
                                         &win.journey_down};
  std::vector<double>* outs[4] = {&maps.demand, &maps.supply, &maps.journey_up,
                                  &maps.journey_down};
  std::vector<double> acfs(static_cast<std::size_t>(win.cells) * width);
  for (int c = 0; c < 4; ++c) {
    for (int cell = 0; cell < win.cells; ++cell) {
      const auto r = acf_vector({win.row(*chans[c], cell), static_cast<std::size_t>(win.len)}, lags);
      std::copy(r.begin(), r.end(), acfs.begin() + static_cast<std::size_t>(cell) * width);
    }
    const double* target_acf = acfs.data() + static_cast<std::size_t>(target) * width;
    for (int cell = 0; cell < win.cells; ++cell)
      (*outs[c])[cell] = kernels::active().dot(
          acfs.data() + static_cast<std::size_t>(cell) * width, target_acf, width);
  }
  return maps;
}

std::vector<double> similarity_distance(const SimilarityMaps& maps, const double w[4],
                                        double b) {
  const std::size_t n = maps.demand.size();
  std::vector<double> sd(n);
  for (std::size_t i = 0; i < n; ++i)
    sd[i] = w[0] * maps.demand[i] + w[1] * maps.supply[i] + w[2] * maps.journey_up[i] +
            w[3] * maps.journey_down[i] + b;
  return sd;
}

std::vector<std::uint8_t> hard_attention(std::span<const double> sd, int target,
                                         double beta) {
  if (target < 0 || static_cast<std::size_t>(target) >= sd.size())
    throw std::out_of_range("hard attention target outside the map");
  const double cut = beta * sd[target];
  std::vector<std::uint8_t> keep(sd.size());
  for (std::size_t i = 0; i < sd.size(); ++i) keep[i] = sd[i] > cut ? 1 : 0;
  return keep;
}

std::vector<double> sample_attention(std::span<const double> sd, int target) {
  if (target < 0 || static_cast<std::size_t>(target) >= sd.size())
    throw std::out_of_range("sample attention target outside the map");
  const double anchor = sd[target];
  if (std::abs(anchor) <= 1e-8)
    throw NumericError("sample attention anchor is numerically zero");
  std::vector<double> sa(sd.size());
  for (std::size_t i = 0; i < sd.size(); ++i) sa[i] = sd[i] / anchor;
  return sa;
}

SemanticOutcome semantic_forward(const WindowSeries& win, int target, const double w[4],
                                 double b, double beta, bool renormalize, int lags) {
  SemanticOutcome out;
  out.maps = similarity_maps(win, target, lags);
  out.distance = similarity_distance(out.maps, w, b);
  out.hard_mask = hard_attention(out.distance, target, beta);
  out.sample_weights = sample_attention(out.distance, target);

  const int cells = win.cells;
  out.final_weights.resize(cells);
  out.weight_sum = 0.0;
  for (int i = 0; i < cells; ++i) {
    out.final_weights[i] = out.hard_mask[i] ? out.sample_weights[i] : 0.0;
    out.weight_sum += out.final_weights[i];
  }

  out.synthesized.assign(win.len, 0.0);
  for (int i = 0; i < cells; ++i) {
    const double fa = out.final_weights[i];
    if (fa == 0.0) continue;
    kernels::active().axpy(fa, win.row(win.gap, i), out.synthesized.data(), win.len);
  }
  if (renormalize) {
    if (std::abs(out.weight_sum) <= 1e-8)
      throw NumericError("synthesized series renormalization weight is zero");
    kernels::active().scale(1.0 / out.weight_sum, out.synthesized.data(), win.len);
  }
  return out;
}

void semantic_backward(const SemanticOutcome& fwd, const WindowSeries& win, int target,
                       std::span<const double> g_series, bool renormalize, double gw[4],
                       double& gb) {
  const int cells = win.cells;
  const int len = win.len;
  if (static_cast<int>(g_series.size()) != len)
    throw std::invalid_argument("series gradient length mismatch");

  // d(loss)/d(fa_i); with renormalization s_j = (sum fa ds_j) / F the
  // quotient rule gives (ds_ij - s_j) / F.
  std::vector<double> gfa(cells, 0.0);
  for (int i = 0; i < cells; ++i) {
    if (!fwd.hard_mask[i]) continue;  // fa pinned at zero by the constant mask
    const double* ds = win.row(win.gap, i);
    double acc = 0.0;
    if (renormalize) {
      for (int j = 0; j < len; ++j)
        acc += g_series[j] * (ds[j] - fwd.synthesized[j]) / fwd.weight_sum;
    } else {
      acc = kernels::active().dot(g_series.data(), ds, len);
    }
    gfa[i] = acc;
  }

  // fa = ha * sa with ha constant; sa_i = sd_i / sd_k.
  const double anchor = fwd.distance[target];
  std::vector<double> gsd(cells, 0.0);
  double anchor_acc = 0.0;
  for (int i = 0; i < cells; ++i) {
    const double gsa = fwd.hard_mask[i] ? gfa[i] : 0.0;
    gsd[i] += gsa / anchor;
    anchor_acc += gsa * fwd.distance[i];
  }
  gsd[target] -= anchor_acc / (anchor * anchor);

  // sd_i = w . maps_i + b
  for (int i = 0; i < cells; ++i) {
    const double g = gsd[i];
    if (g == 0.0) continue;
    gw[0] += g * fwd.maps.demand[i];
    gw[1] += g * fwd.maps.supply[i];
    gw[2] += g * fwd.maps.journey_up[i];
    gw[3] += g * fwd.maps.journey_down[i];
    gb += g;
  }
}

}  // namespace arlp
