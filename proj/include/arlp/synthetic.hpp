#pragma once

#include <cstdint>
#include <vector>

#include "arlp/grid.hpp"

// Synthetic city generator: regions belong to hidden clusters, each cluster
// follows its own daily wavelet, and every channel derives from the demand
// process so the similarity stages have real structure to recover.

namespace arlp {

/// Daily demand wavelet of one cluster: a short harmonic series evaluated on
/// the within-day slot, so zero-noise channels repeat exactly day after day.
struct WaveletParams {
  double amplitude = 1.0;
  double phase = 0.0;
  int harmonics = 2;
  double cycles = 1.0;  // full periods per day; distinct values separate clusters
};

struct SyntheticConfig {
  int clusters = 3;
  int days = 8;
  double noise_std = 0.05;
  double region_offset_std = 0.1;     // per-region constant demand offset
  double daily_shift_minutes = 0.0;   // day k lags by k * this many minutes
  std::uint64_t seed = 7;
  double base_level = 6.0;            // demand baseline
  std::vector<WaveletParams> wavelets;  // empty: defaults, one per cluster

  void validate() const;
  /// Wavelets with per-cluster defaults filled in.
  std::vector<WaveletParams> resolved_wavelets() const;
};

struct SyntheticData {
  CityCube cube;
  std::vector<int> labels;  // cluster id per region
};

/// Deterministic for a fixed (config, grid) pair. Demand follows the cluster
/// wavelet plus region offset plus noise; supply is the realized demand one
/// interval earlier plus its own noise; gap is exactly demand - supply;
/// traffic and journey channels are affine images of realized demand with
/// independent noise; weather is a random per-interval code.
SyntheticData generate_synthetic(const SyntheticConfig& cfg, const GridSpec& grid);

/// Rotates every channel of day k circularly by k * round(minutes/interval)
/// slots, so later days repeat the pattern with a growing delay. A full-day
/// shift is an exact identity.
void inject_daily_shift(CityCube& cube, double minutes);

}  // namespace arlp
