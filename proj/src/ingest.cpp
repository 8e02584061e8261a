#include "arlp/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "arlp/errors.hpp"

namespace arlp {

std::int64_t days_from_civil(int year, int month, int day) {
  // Howard Hinnant's civil-days algorithm
  year -= month <= 2;
  const int era_base = year >= 0 ? year : year - 399;
  const std::int64_t era = era_base / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2u) / 5u + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

int to_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError("expected an integer, got '" + std::string(s) + "'");
  return v;
}

double to_double(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw DataError("expected a number, got '" + std::string(s) + "'");
  return v;
}

bool to_bool(std::string_view s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw DataError("expected a boolean (0/1/true/false), got '" + std::string(s) + "'");
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
    s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

/// Line-oriented CSV with a mandatory exact header.
class CsvReader {
 public:
  CsvReader(const std::string& path, const std::string& header) : path_(path), in_(path) {
    if (!in_) throw DataError("cannot open '" + path + "'");
    std::string first;
    if (!std::getline(in_, first))
      throw DataError("'" + path + "' is empty, expected header '" + header + "'");
    if (std::string(trim(first)) != header)
      throw DataError("'" + path + "' header mismatch: expected '" + header + "'");
    line_no_ = 1;
  }

  bool next(std::vector<std::string_view>& fields, std::size_t expect) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (trim(line_).empty()) continue;
      fields = split_csv(line_);
      if (fields.size() != expect)
        throw DataError(path_ + ":" + std::to_string(line_no_) + ": expected " +
                        std::to_string(expect) + " fields, got " +
                        std::to_string(fields.size()));
      return true;
    }
    return false;
  }

  std::string where() const { return path_ + ":" + std::to_string(line_no_); }

 private:
  std::string path_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

}  // namespace

std::int64_t parse_iso_minutes(const std::string& text) {
  // YYYY-MM-DD[T ]HH:MM[:SS][Z]
  std::string_view s = trim(text);
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
  if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':')
    throw DataError("malformed timestamp '" + text + "'");
  const std::string_view ys = s.substr(0, 4), mos = s.substr(5, 2), ds = s.substr(8, 2);
  const std::string_view hs = s.substr(11, 2), mins = s.substr(14, 2);
  if (!all_digits(ys) || !all_digits(mos) || !all_digits(ds) || !all_digits(hs) ||
      !all_digits(mins))
    throw DataError("malformed timestamp '" + text + "'");
  if (s.size() > 16) {
    if (s.size() != 19 || s[16] != ':' || !all_digits(s.substr(17, 2)))
      throw DataError("malformed timestamp '" + text + "'");
    const int sec = to_int(s.substr(17, 2));
    if (sec > 59) throw DataError("malformed timestamp '" + text + "'");
  }
  const int year = to_int(ys), month = to_int(mos), day = to_int(ds);
  const int hour = to_int(hs), minute = to_int(mins);
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59)
    throw DataError("timestamp '" + text + "' has out-of-range components");
  return days_from_civil(year, month, day) * 1440 + hour * 60 + minute;
}

namespace {

struct OrderRow {
  std::int64_t start, end;
  int srow, scol, erow, ecol;
  double distance;
  bool served;
};

struct TrajRow {
  std::string vehicle;
  std::int64_t time;
  int row, col;
  double speed;
  bool available;
};

struct WeatherRow {
  std::int64_t time;
  WeatherCode code;
};

}  // namespace

IngestResult ingest_csv(const std::string& orders_path,
                        const std::string& trajectories_path,
                        const std::string& weather_path, const GridSpec& grid) {
  grid.validate();
  IngestStats stats;

  std::vector<OrderRow> orders;
  {
    CsvReader csv(orders_path,
                  "start_time,end_time,start_row,start_col,end_row,end_col,"
                  "distance_km,served");
    std::vector<std::string_view> f;
    while (csv.next(f, 8)) {
      OrderRow row;
      try {
        row.start = parse_iso_minutes(std::string(f[0]));
        row.end = parse_iso_minutes(std::string(f[1]));
        row.srow = to_int(f[2]);
        row.scol = to_int(f[3]);
        row.erow = to_int(f[4]);
        row.ecol = to_int(f[5]);
        row.distance = to_double(f[6]);
        row.served = to_bool(f[7]);
      } catch (const DataError& e) {
        throw DataError(csv.where() + ": " + e.what());
      }
      if (row.end < row.start)
        throw DataError(csv.where() + ": order ends before it starts");
      if (row.distance < 0.0)
        throw DataError(csv.where() + ": negative trip distance");
      orders.push_back(std::move(row));
    }
  }

  std::vector<TrajRow> trajectories;
  {
    CsvReader csv(trajectories_path, "vehicle_id,time,row,col,speed_kmh,available");
    std::vector<std::string_view> f;
    while (csv.next(f, 6)) {
      TrajRow row;
      try {
        row.vehicle = std::string(f[0]);
        row.time = parse_iso_minutes(std::string(f[1]));
        row.row = to_int(f[2]);
        row.col = to_int(f[3]);
        row.speed = to_double(f[4]);
        row.available = to_bool(f[5]);
      } catch (const DataError& e) {
        throw DataError(csv.where() + ": " + e.what());
      }
      if (row.vehicle.empty()) throw DataError(csv.where() + ": empty vehicle id");
      if (row.speed < 0.0) throw DataError(csv.where() + ": negative speed");
      trajectories.push_back(std::move(row));
    }
  }

  std::vector<WeatherRow> weather;
  {
    CsvReader csv(weather_path, "time,condition");
    std::vector<std::string_view> f;
    while (csv.next(f, 2)) {
      WeatherRow row;
      try {
        row.time = parse_iso_minutes(std::string(f[0]));
      } catch (const DataError& e) {
        throw DataError(csv.where() + ": " + e.what());
      }
      const std::string cond = lower(f[1]);
      if (cond == "sunny")
        row.code = WeatherCode::Sunny;
      else if (cond == "rainy")
        row.code = WeatherCode::Rainy;
      else if (cond == "cloudy")
        row.code = WeatherCode::Cloudy;
      else {
        row.code = WeatherCode::Other;
        ++stats.unknown_weather;
      }
      weather.push_back(row);
    }
  }

  if (orders.empty()) throw DataError("'" + orders_path + "' holds no order records");
  if (trajectories.empty())
    throw DataError("'" + trajectories_path + "' holds no trajectory records");
  if (weather.empty())
    throw DataError("'" + weather_path + "' holds no weather records");

  stats.order_rows = orders.size();
  stats.trajectory_rows = trajectories.size();
  stats.weather_rows = weather.size();

  // horizon: midnight of the earliest day through the latest referenced time
  std::int64_t lo = orders[0].start, hi = orders[0].start;
  auto widen = [&](std::int64_t t) {
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  };
  for (const OrderRow& o : orders) {
    widen(o.start);
    widen(o.end);
  }
  for (const TrajRow& t : trajectories) widen(t.time);
  for (const WeatherRow& w : weather) widen(w.time);

  const std::int64_t start_minute = (lo / 1440) * 1440;
  const int days = static_cast<int>(hi / 1440 - lo / 1440 + 1);
  if (days > 3700)
    throw DataError("input spans " + std::to_string(days) +
                    " days; timestamps look corrupted");

  CityCube cube(grid, days);
  const int p = grid.intervals_per_day();

  auto slot_of = [&](std::int64_t minute) {
    return static_cast<int>((minute - start_minute) / grid.interval_minutes);
  };
  auto in_grid = [&](int r, int c) {
    return r >= 0 && r < grid.rows && c >= 0 && c < grid.cols;
  };

  // demand, plus served-trip distance sums for the journey means:
  // journeys starting in a cell feed journey_up, journeys ending there feed
  // journey_down
  const int total_slots = days * p;
  std::vector<double> ju_sum(static_cast<std::size_t>(total_slots) * grid.cells(), 0.0);
  std::vector<int> ju_cnt(ju_sum.size(), 0);
  std::vector<double> jd_sum(ju_sum.size(), 0.0);
  std::vector<int> jd_cnt(ju_sum.size(), 0);
  auto flat = [&](int slot, int region) {
    return static_cast<std::size_t>(slot) * grid.cells() + region;
  };

  for (const OrderRow& o : orders) {
    bool oob = false;
    if (in_grid(o.srow, o.scol)) {
      const int slot = slot_of(o.start);
      const int region = o.srow * grid.cols + o.scol;
      cube.at_cell(Channel::Demand, slot / p, slot % p, region) += 1.0;
      if (o.served) {
        ju_sum[flat(slot, region)] += o.distance;
        ju_cnt[flat(slot, region)] += 1;
      }
    } else {
      oob = true;
    }
    if (o.served) {
      if (in_grid(o.erow, o.ecol)) {
        const int slot = slot_of(o.end);
        const int region = o.erow * grid.cols + o.ecol;
        jd_sum[flat(slot, region)] += o.distance;
        jd_cnt[flat(slot, region)] += 1;
      } else {
        oob = true;
      }
    }
    if (oob) ++stats.out_of_bounds;
  }

  // trajectory aggregation: distinct vehicles, availability, mean speed
  struct SlotAgg {
    std::unordered_set<std::string> vehicles;
    std::unordered_set<std::string> available;
    double speed_sum = 0.0;
    int speed_cnt = 0;
  };
  std::unordered_map<std::size_t, SlotAgg> agg;
  for (const TrajRow& t : trajectories) {
    if (!in_grid(t.row, t.col)) {
      ++stats.out_of_bounds;
      continue;
    }
    const int slot = slot_of(t.time);
    const int region = t.row * grid.cols + t.col;
    SlotAgg& a = agg[flat(slot, region)];
    a.vehicles.insert(t.vehicle);
    if (t.available) a.available.insert(t.vehicle);
    a.speed_sum += t.speed;
    a.speed_cnt += 1;
  }
  for (const auto& [key, a] : agg) {
    const int slot = static_cast<int>(key / grid.cells());
    const int region = static_cast<int>(key % grid.cells());
    const int day = slot / p, t = slot % p;
    cube.at_cell(Channel::Volume, day, t, region) =
        static_cast<double>(a.vehicles.size());
    cube.at_cell(Channel::Supply, day, t, region) =
        static_cast<double>(a.available.size());
    cube.at_cell(Channel::Speed, day, t, region) =
        a.speed_cnt > 0 ? a.speed_sum / a.speed_cnt : 0.0;
  }

  // journey means
  for (int slot = 0; slot < total_slots; ++slot)
    for (int region = 0; region < grid.cells(); ++region) {
      const std::size_t k = flat(slot, region);
      if (ju_cnt[k] > 0)
        cube.at_cell(Channel::JourneyUp, slot / p, slot % p, region) =
            ju_sum[k] / ju_cnt[k];
      if (jd_cnt[k] > 0)
        cube.at_cell(Channel::JourneyDown, slot / p, slot % p, region) =
            jd_sum[k] / jd_cnt[k];
    }

  // gap, exactly demand - supply
  for (int d = 0; d < days; ++d)
    for (int t = 0; t < p; ++t)
      for (int r = 0; r < grid.cells(); ++r)
        cube.at_cell(Channel::Gap, d, t, r) = cube.at_cell(Channel::Demand, d, t, r) -
                                              cube.at_cell(Channel::Supply, d, t, r);

  // weather: latest report inside each slot, forward-filled afterwards
  std::vector<int> slot_code(total_slots, -1);
  std::vector<std::int64_t> slot_time(total_slots, -1);
  for (const WeatherRow& w : weather) {
    const int slot = slot_of(w.time);
    if (w.time >= slot_time[slot]) {
      slot_time[slot] = w.time;
      slot_code[slot] = static_cast<int>(w.code);
    }
  }
  if (slot_code[0] < 0)
    throw DataError("no weather report covers the first interval; cannot backfill");
  int current = slot_code[0];
  for (int slot = 0; slot < total_slots; ++slot) {
    if (slot_code[slot] >= 0) current = slot_code[slot];
    const double code = static_cast<double>(current);
    for (int r = 0; r < grid.cells(); ++r)
      cube.at_cell(Channel::Weather, slot / p, slot % p, r) = code;
  }

  return {std::move(cube), stats, start_minute};
}

}  // namespace arlp
