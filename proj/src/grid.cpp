#include "arlp/grid.hpp"

#include <fstream>
#include <stdexcept>

#include "arlp/binio.hpp"
#include "arlp/errors.hpp"

namespace arlp {

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::Weather: return "weather";
    case Channel::Speed: return "speed";
    case Channel::Volume: return "volume";
    case Channel::JourneyUp: return "journey_up";
    case Channel::JourneyDown: return "journey_down";
    case Channel::Demand: return "demand";
    case Channel::Supply: return "supply";
    case Channel::Gap: return "gap";
  }
  return "?";
}

void GridSpec::validate() const {
  if (rows < 1 || cols < 1)
    throw ConfigError("grid dimensions must be at least 1x1");
  if (interval_minutes < 1 || 1440 % interval_minutes != 0)
    throw ConfigError("interval_minutes must divide a 24h day");
  if (neighborhood < 1 || neighborhood % 2 == 0)
    throw ConfigError("neighborhood side must be odd and positive");
  if (window < 2)
    throw ConfigError("sample window must cover at least 2 intervals");
  if (window >= intervals_per_day())
    throw ConfigError("sample window must fit inside one day with a target left over");
  if (history < 1)
    throw ConfigError("history day count must be positive");
  if (acf_lags < 0 || acf_lags > window - 2)
    throw ConfigError("acf_lags must lie in [0, window-2]");
}

int region_index(const GridSpec& grid, int row, int col) {
  if (row < 0 || row >= grid.rows || col < 0 || col >= grid.cols)
    throw std::out_of_range("cell (" + std::to_string(row) + "," + std::to_string(col) +
                            ") outside the grid");
  return row * grid.cols + col;
}

std::pair<int, int> region_row_col(const GridSpec& grid, int region) {
  if (region < 0 || region >= grid.cells())
    throw std::out_of_range("region id " + std::to_string(region) + " outside the grid");
  return {region / grid.cols, region % grid.cols};
}

CityCube::CityCube(GridSpec grid, int days) : grid_(grid), days_(days) {
  grid_.validate();
  if (days < 1) throw ConfigError("cube must span at least one day");
  values_.assign(static_cast<std::size_t>(kChannelCount) * days_ *
                     grid_.intervals_per_day() * grid_.cells(),
                 0.0);
}

std::size_t CityCube::index(Channel c, int day, int t, int row, int col) const {
  if (day < 0 || day >= days_) throw std::out_of_range("day index outside the cube");
  if (t < 0 || t >= grid_.intervals_per_day())
    throw std::out_of_range("interval index outside the day");
  const int region = region_index(grid_, row, col);
  return ((static_cast<std::size_t>(c) * days_ + day) * grid_.intervals_per_day() + t) *
             grid_.cells() +
         region;
}

double CityCube::at(Channel c, int day, int t, int row, int col) const {
  return values_[index(c, day, t, row, col)];
}

double& CityCube::at(Channel c, int day, int t, int row, int col) {
  return values_[index(c, day, t, row, col)];
}

double CityCube::at_cell(Channel c, int day, int t, int region) const {
  const auto [row, col] = region_row_col(grid_, region);
  return values_[index(c, day, t, row, col)];
}

double& CityCube::at_cell(Channel c, int day, int t, int region) {
  const auto [row, col] = region_row_col(grid_, region);
  return values_[index(c, day, t, row, col)];
}

void CityCube::series(Channel c, int day, int t0, int len, int region, double* out) const {
  if (t0 < 0 || len < 0 || t0 + len > grid_.intervals_per_day())
    throw std::out_of_range("series window outside the day");
  const auto [row, col] = region_row_col(grid_, region);
  const std::size_t base = index(c, day, t0, row, col);
  const std::size_t stride = static_cast<std::size_t>(grid_.cells());
  for (int i = 0; i < len; ++i) out[i] = values_[base + stride * i];
}

void extract_patch(const CityCube& cube, Channel c, int day, int t, int region,
                   double* out) {
  const GridSpec& g = cube.grid();
  const auto [row, col] = region_row_col(g, region);
  const int s = g.neighborhood;
  const int half = s / 2;
  for (int dr = 0; dr < s; ++dr) {
    const int rr = row + dr - half;
    for (int dc = 0; dc < s; ++dc) {
      const int cc = col + dc - half;
      const bool inside = rr >= 0 && rr < g.rows && cc >= 0 && cc < g.cols;
      out[dr * s + dc] = inside ? cube.at(c, day, t, rr, cc) : 0.0;
    }
  }
}

double NormalizationStats::normalize_value(Channel c, double v) const {
  if (c == Channel::Weather) return v;
  const ChannelStats& s = channel[static_cast<int>(c)];
  const double span = s.max - s.min;
  if (span <= 0.0) return 0.0;
  return (v - s.min) / span;
}

double NormalizationStats::denormalize(Channel c, double v) const {
  if (c == Channel::Weather) return v;
  const ChannelStats& s = channel[static_cast<int>(c)];
  const double span = s.max - s.min;
  if (span <= 0.0) return s.min;
  return v * span + s.min;
}

NormalizationStats compute_stats(const CityCube& cube, int day_begin, int day_end) {
  if (day_begin < 0 || day_end > cube.days() || day_begin >= day_end)
    throw ConfigError("empty or out-of-range day window for statistics");
  NormalizationStats stats;
  const GridSpec& g = cube.grid();
  for (int c = 0; c < kChannelCount; ++c) {
    double lo = cube.at_cell(static_cast<Channel>(c), day_begin, 0, 0);
    double hi = lo;
    for (int d = day_begin; d < day_end; ++d)
      for (int t = 0; t < g.intervals_per_day(); ++t)
        for (int r = 0; r < g.cells(); ++r) {
          const double v = cube.at_cell(static_cast<Channel>(c), d, t, r);
          lo = v < lo ? v : lo;
          hi = v > hi ? v : hi;
        }
    stats.channel[c] = {lo, hi};
  }
  return stats;
}

CityCube apply_normalization(const CityCube& cube, const NormalizationStats& stats) {
  CityCube out(cube.grid(), cube.days());
  const GridSpec& g = cube.grid();
  for (int c = 0; c < kChannelCount; ++c)
    for (int d = 0; d < cube.days(); ++d)
      for (int t = 0; t < g.intervals_per_day(); ++t)
        for (int r = 0; r < g.cells(); ++r)
          out.at_cell(static_cast<Channel>(c), d, t, r) = stats.normalize_value(
              static_cast<Channel>(c), cube.at_cell(static_cast<Channel>(c), d, t, r));
  return out;
}

int split_train_days(int days, int ratio_train, int ratio_test) {
  if (ratio_train < 1 || ratio_test < 1)
    throw ConfigError("split ratio must keep both sides non-empty");
  if (days < 2) throw ConfigError("need at least 2 days to split");
  int train = static_cast<int>(
      (static_cast<long long>(days) * ratio_train + (ratio_train + ratio_test) / 2) /
      (ratio_train + ratio_test));
  if (train < 1) train = 1;
  if (train > days - 1) train = days - 1;
  return train;
}

std::pair<CityCube, CityCube> split_by_time(const CityCube& cube, int ratio_train,
                                            int ratio_test) {
  const int train_days = split_train_days(cube.days(), ratio_train, ratio_test);
  CityCube train(cube.grid(), train_days);
  CityCube test(cube.grid(), cube.days() - train_days);
  const GridSpec& g = cube.grid();
  for (int c = 0; c < kChannelCount; ++c)
    for (int d = 0; d < cube.days(); ++d)
      for (int t = 0; t < g.intervals_per_day(); ++t)
        for (int r = 0; r < g.cells(); ++r) {
          const double v = cube.at_cell(static_cast<Channel>(c), d, t, r);
          if (d < train_days)
            train.at_cell(static_cast<Channel>(c), d, t, r) = v;
          else
            test.at_cell(static_cast<Channel>(c), d - train_days, t, r) = v;
        }
  return {std::move(train), std::move(test)};
}

namespace {
constexpr char kCubeMagic[] = "ARLPCUBE1";
}

void write_cube(const CityCube& cube, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out.write(kCubeMagic, 9);
  const GridSpec& g = cube.grid();
  io::put_u32(out, static_cast<std::uint32_t>(g.rows));
  io::put_u32(out, static_cast<std::uint32_t>(g.cols));
  io::put_u32(out, static_cast<std::uint32_t>(g.interval_minutes));
  io::put_u32(out, static_cast<std::uint32_t>(g.neighborhood));
  io::put_u32(out, static_cast<std::uint32_t>(g.window));
  io::put_u32(out, static_cast<std::uint32_t>(g.history));
  io::put_u32(out, static_cast<std::uint32_t>(g.acf_lags));
  io::put_u32(out, static_cast<std::uint32_t>(cube.days()));
  io::put_u32(out, static_cast<std::uint32_t>(g.intervals_per_day()));
  io::put_u32(out, kChannelCount);
  for (double v : cube.values()) io::put_f64(out, v);
  if (!out) throw DataError("short write while saving cube '" + path + "'");
}

CityCube read_cube(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open cube file '" + path + "'");
  io::expect_magic(in, kCubeMagic, "cube file");
  GridSpec g;
  g.rows = static_cast<int>(io::get_u32(in));
  g.cols = static_cast<int>(io::get_u32(in));
  g.interval_minutes = static_cast<int>(io::get_u32(in));
  g.neighborhood = static_cast<int>(io::get_u32(in));
  g.window = static_cast<int>(io::get_u32(in));
  g.history = static_cast<int>(io::get_u32(in));
  g.acf_lags = static_cast<int>(io::get_u32(in));
  const int days = static_cast<int>(io::get_u32(in));
  const int intervals = static_cast<int>(io::get_u32(in));
  const int channels = static_cast<int>(io::get_u32(in));
  try {
    g.validate();
  } catch (const ConfigError& e) {
    throw DataError("cube file '" + path + "' carries an invalid grid: " + e.what());
  }
  if (channels != kChannelCount)
    throw DataError("cube file '" + path + "' has " + std::to_string(channels) +
                    " channels, expected " + std::to_string(kChannelCount));
  if (intervals != g.intervals_per_day())
    throw DataError("cube file '" + path + "' interval count disagrees with its grid");
  CityCube cube(g, days);
  for (double& v : cube.values()) v = io::get_f64(in);
  return cube;
}

}  // namespace arlp
