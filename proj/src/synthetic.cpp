#include "arlp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "arlp/errors.hpp"

namespace arlp {

void SyntheticConfig::validate() const {
  if (clusters < 1) throw ConfigError("cluster count must be positive");
  if (days < 1) throw ConfigError("synthetic horizon must cover at least one day");
  if (noise_std < 0.0 || region_offset_std < 0.0)
    throw ConfigError("noise levels must be non-negative");
  if (!wavelets.empty() && static_cast<int>(wavelets.size()) != clusters)
    throw ConfigError("wavelet parameter list must match the cluster count");
  for (const WaveletParams& w : wavelets)
    if (w.harmonics < 1) throw ConfigError("wavelet harmonics must be positive");
}

std::vector<WaveletParams> SyntheticConfig::resolved_wavelets() const {
  if (!wavelets.empty()) return wavelets;
  std::vector<WaveletParams> out(clusters);
  for (int c = 0; c < clusters; ++c) {
    out[c].amplitude = 1.0;
    out[c].phase = 0.6 * c;
    out[c].harmonics = 2;
    out[c].cycles = static_cast<double>(c + 1);  // distinct daily periodicity
  }
  return out;
}

namespace {

// Wavelet value at within-day slot tau of 0..P-1. Evaluated modulo the day
// so noise-free channels are bitwise periodic.
double wavelet_value(const WaveletParams& w, int tau, int intervals_per_day) {
  const double frac = static_cast<double>(tau) / intervals_per_day;
  double acc = 0.0;
  for (int m = 1; m <= w.harmonics; ++m)
    acc += std::sin(2.0 * std::numbers::pi * w.cycles * m * frac + w.phase) /
           static_cast<double>(m);
  return w.amplitude * acc;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& cfg, const GridSpec& grid) {
  cfg.validate();
  grid.validate();
  const std::vector<WaveletParams> wavelets = cfg.resolved_wavelets();
  const int cells = grid.cells();
  const int p = grid.intervals_per_day();

  SyntheticData data{CityCube(grid, cfg.days), {}};
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // balanced cluster labels, then shuffled
  data.labels.resize(cells);
  for (int r = 0; r < cells; ++r) data.labels[r] = r % cfg.clusters;
  std::shuffle(data.labels.begin(), data.labels.end(), rng);

  std::vector<double> offset(cells);
  for (int r = 0; r < cells; ++r) offset[r] = cfg.region_offset_std * gauss(rng);

  auto demand_det = [&](int region, int tau) {
    const int wrapped = ((tau % p) + p) % p;
    return cfg.base_level + offset[region] +
           wavelet_value(wavelets[data.labels[region]], wrapped, p);
  };

  CityCube& cube = data.cube;

  // pass 1: realized demand
  for (int d = 0; d < cfg.days; ++d)
    for (int t = 0; t < p; ++t)
      for (int r = 0; r < cells; ++r)
        cube.at_cell(Channel::Demand, d, t, r) =
            demand_det(r, t) + cfg.noise_std * gauss(rng);

  // pass 2: supply trails realized demand by one interval; before the first
  // recorded interval the deterministic curve stands in
  for (int d = 0; d < cfg.days; ++d)
    for (int t = 0; t < p; ++t)
      for (int r = 0; r < cells; ++r) {
        double lagged;
        if (t > 0)
          lagged = cube.at_cell(Channel::Demand, d, t - 1, r);
        else if (d > 0)
          lagged = cube.at_cell(Channel::Demand, d - 1, p - 1, r);
        else
          lagged = demand_det(r, -1);
        cube.at_cell(Channel::Supply, d, t, r) = lagged + cfg.noise_std * gauss(rng);
      }

  // gap is exact, never re-noised
  for (int d = 0; d < cfg.days; ++d)
    for (int t = 0; t < p; ++t)
      for (int r = 0; r < cells; ++r)
        cube.at_cell(Channel::Gap, d, t, r) =
            cube.at_cell(Channel::Demand, d, t, r) -
            cube.at_cell(Channel::Supply, d, t, r);

  // pass 3: traffic and journey channels as affine images of realized demand
  // (affine keeps the autocorrelation shape that identifies a cluster)
  for (int d = 0; d < cfg.days; ++d)
    for (int t = 0; t < p; ++t)
      for (int r = 0; r < cells; ++r) {
        const double dem = cube.at_cell(Channel::Demand, d, t, r);
        cube.at_cell(Channel::Speed, d, t, r) =
            40.0 - 2.0 * dem + cfg.noise_std * gauss(rng);
        cube.at_cell(Channel::Volume, d, t, r) =
            2.0 + 1.5 * dem + cfg.noise_std * gauss(rng);
        cube.at_cell(Channel::JourneyUp, d, t, r) =
            1.0 + 0.8 * dem + cfg.noise_std * gauss(rng);
        cube.at_cell(Channel::JourneyDown, d, t, r) =
            1.2 + 0.6 * dem + cfg.noise_std * gauss(rng);
      }

  // pass 4: one weather code per interval, shared by the whole city
  std::uniform_int_distribution<int> code(0, kWeatherCodes - 1);
  for (int d = 0; d < cfg.days; ++d)
    for (int t = 0; t < p; ++t) {
      const double w = static_cast<double>(code(rng));
      for (int r = 0; r < cells; ++r) cube.at_cell(Channel::Weather, d, t, r) = w;
    }

  if (cfg.daily_shift_minutes != 0.0)
    inject_daily_shift(cube, cfg.daily_shift_minutes);
  return data;
}

void inject_daily_shift(CityCube& cube, double minutes) {
  const GridSpec& grid = cube.grid();
  const int p = grid.intervals_per_day();
  const int cells = grid.cells();
  const long slots = std::lround(minutes / grid.interval_minutes);

  std::vector<double> day_series(p);
  for (int c = 0; c < kChannelCount; ++c)
    for (int d = 1; d < cube.days(); ++d) {
      const int rot = static_cast<int>(((d * slots) % p + p) % p);
      if (rot == 0) continue;
      for (int r = 0; r < cells; ++r) {
        for (int t = 0; t < p; ++t)
          day_series[t] = cube.at_cell(static_cast<Channel>(c), d, t, r);
        for (int t = 0; t < p; ++t)
          cube.at_cell(static_cast<Channel>(c), d, t, r) =
              day_series[((t - rot) % p + p) % p];
      }
    }
}

}  // namespace arlp
