#pragma once

// Run configuration read from an INI file.
//
//   [data]      observations, nwp, sites, start, end
//   [backtest]  training_steps, horizon, stride, threshold, models, mle_steps,
//               subhourly_cutoff, max_evaluations, max_rolls, chain_length,
//               intercept
//   [run]       seed, jobs, out, continue_on_error
//   [simulate]  see SimulationConfig
//   [map]       lat_min, lat_max, lon_min, lon_max, n_lat, n_lon
//   [power]     curve, records, speed_column, power_column
//
// Relative paths are resolved against the directory of the config file.

#include <cstdint>
#include <optional>
#include <string>

#include "windcast/backtest.hpp"
#include "windcast/forecast_map.hpp"
#include "windcast/synthetic.hpp"

namespace windcast::config {

struct DataPaths {
  std::string observations;
  std::string nwp;
  std::string sites;
  std::optional<Timestamp> start;
  std::optional<Timestamp> end;
};

struct PowerInputs {
  std::string curve;    // CSV with speed and normalized power columns
  std::string records;  // records CSV to score; empty = none
  std::string speed_column = "speed";
  std::string power_column = "power";
};

struct RunConfig {
  DataPaths data;
  evaluation::BacktestConfig backtest;
  synthetic::SimulationConfig simulate;
  evaluation::Mesh mesh;
  bool has_mesh = false;
  PowerInputs power;
  std::uint64_t seed = 1;
  bool simulate_seed_pinned = false;  // [simulate] seed given explicitly
  std::string out = "out";
  std::optional<std::size_t> jobs;
  bool continue_on_error = false;
};

// Throws Error(Config) on syntax errors, unknown sections or keys, and bad
// values.
RunConfig load(const std::string& path);
RunConfig parse(const std::string& text, const std::string& base_dir = ".");

}  // namespace windcast::config
