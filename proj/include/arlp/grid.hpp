#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

// Spatio-temporal city grid: the 8-channel tensor every other module reads
// from, plus normalization and the time-based train/test split.

namespace arlp {

/// Feature channels stored per (day, interval, cell). The order is part of
/// the cube file format.
enum class Channel : int {
  Weather = 0,      // categorical code, see WeatherCode
  Speed,            // mean traffic speed
  Volume,           // traffic volume (distinct vehicles)
  JourneyUp,        // mean distance of served trips starting in the cell
  JourneyDown,      // mean distance of served trips ending in the cell
  Demand,           // ride requests
  Supply,           // available vehicles
  Gap,              // demand - supply, the prediction target
};

inline constexpr int kChannelCount = 8;

/// Categorical weather codes stored in the Weather channel.
enum class WeatherCode : int { Sunny = 0, Rainy = 1, Cloudy = 2, Other = 3 };

inline constexpr int kWeatherCodes = 4;

const char* channel_name(Channel c);

/// Geometry and windowing hyperparameters shared by the whole pipeline.
struct GridSpec {
  int rows = 20;              // north-south cell count
  int cols = 10;              // east-west cell count
  int interval_minutes = 30;  // time discretization; must divide 24h
  int neighborhood = 5;       // S: patch side length, odd
  int window = 5;             // T_w: input intervals per sample window
  int history = 5;            // D: day windows used by the multi-day model
  int acf_lags = 3;           // H: autocorrelation lags beyond lag zero

  int cells() const { return rows * cols; }
  int intervals_per_day() const { return 1440 / interval_minutes; }

  /// Throws ConfigError when any field is out of its documented domain.
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// Row-major linear cell id; throws std::out_of_range off the grid.
int region_index(const GridSpec& grid, int row, int col);

/// Inverse of region_index.
std::pair<int, int> region_row_col(const GridSpec& grid, int region);

/// Dense [channel][day][interval][row][col] tensor over the whole horizon.
class CityCube {
 public:
  CityCube() = default;
  CityCube(GridSpec grid, int days);  // zero-filled

  const GridSpec& grid() const { return grid_; }
  int days() const { return days_; }
  int intervals_per_day() const { return grid_.intervals_per_day(); }

  double at(Channel c, int day, int t, int row, int col) const;
  double& at(Channel c, int day, int t, int row, int col);
  double at_cell(Channel c, int day, int t, int region) const;
  double& at_cell(Channel c, int day, int t, int region);

  /// Copies len values of one cell's series starting at interval t0 into out.
  void series(Channel c, int day, int t0, int len, int region, double* out) const;

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  std::size_t index(Channel c, int day, int t, int row, int col) const;

  GridSpec grid_;
  int days_ = 0;
  std::vector<double> values_;
};

/// S x S patch of one channel centered on a cell; cells outside the grid are
/// zero. out must hold grid.neighborhood^2 doubles, row-major.
void extract_patch(const CityCube& cube, Channel c, int day, int t, int region,
                   double* out);

/// Per-channel min/max observed on the training day range.
struct ChannelStats {
  double min = 0.0;
  double max = 0.0;
};

struct NormalizationStats {
  std::array<ChannelStats, kChannelCount> channel{};

  /// Min-max maps into [0,1]; a constant channel maps to 0. The categorical
  /// weather channel passes through unscaled.
  double normalize_value(Channel c, double v) const;

  /// Inverse map back to raw units; a constant channel recovers its value.
  double denormalize(Channel c, double v) const;
};

/// Scans days [day_begin, day_end) of the cube.
NormalizationStats compute_stats(const CityCube& cube, int day_begin, int day_end);

/// Applies normalize_value to every stored value.
CityCube apply_normalization(const CityCube& cube, const NormalizationStats& stats);

/// Whole-day train/test split. ratio 5:3 over 8 days keeps 5 for training.
/// Throws ConfigError when either side would be empty.
int split_train_days(int days, int ratio_train, int ratio_test);

/// Materialized day split, train first.
std::pair<CityCube, CityCube> split_by_time(const CityCube& cube, int ratio_train,
                                            int ratio_test);

/// Cube file round trip ("ARLPCUBE1", little-endian).
void write_cube(const CityCube& cube, const std::string& path);
CityCube read_cube(const std::string& path);

/// One supervised position: input window [t0, t0 + window) on `day`, target
/// gap at interval t0 + window of the same day and cell.
struct SampleWindow {
  int day = 0;
  int t0 = 0;
  int region = 0;
};

}  // namespace arlp
