#pragma once

#include <cstdint>
#include <string>

#include "arlp/grid.hpp"

// Raw-event ingestion: ride orders, vehicle trajectory points and weather
// logs come in as CSV and leave as a city cube aligned to civil days.
//
//   orders.csv:       start_time,end_time,start_row,start_col,end_row,end_col,distance_km,served
//   trajectories.csv: vehicle_id,time,row,col,speed_kmh,available
//   weather.csv:      time,condition
//
// Timestamps are ISO-8601 ("2026-03-01T08:30" or with a space; seconds and a
// trailing Z are accepted). The horizon runs from midnight of the earliest
// referenced day through the latest, so intervals line up with civil days.

namespace arlp {

struct IngestStats {
  std::size_t order_rows = 0;
  std::size_t trajectory_rows = 0;
  std::size_t weather_rows = 0;
  std::size_t out_of_bounds = 0;    // records referencing cells off the grid
  std::size_t unknown_weather = 0;  // conditions coerced to "other"
};

struct IngestResult {
  CityCube cube;
  IngestStats stats;
  std::int64_t start_minute = 0;  // epoch minutes of day 0, 00:00
};

/// Civil-date day number for the proleptic Gregorian calendar (1970-01-01
/// is day 0).
std::int64_t days_from_civil(int year, int month, int day);

/// Minutes since the 1970 epoch; throws DataError on malformed timestamps.
std::int64_t parse_iso_minutes(const std::string& text);

/// Reads the three CSV files and assembles the cube:
///   demand   = all order starts per cell/interval
///   supply   = distinct available vehicles per cell/interval
///   gap      = demand - supply, exactly
///   speed    = mean reported speed
///   volume   = distinct vehicles regardless of availability
///   journeys = mean served trip distance: journey_up at the start cell,
///              journey_down at the end cell
///   weather  = per-interval city-wide code, forward-filled between reports
IngestResult ingest_csv(const std::string& orders_path,
                        const std::string& trajectories_path,
                        const std::string& weather_path, const GridSpec& grid);

}  // namespace arlp
