#pragma once

// Rolling-origin backtest over an aligned dataset.

#include <optional>
#include <string>
#include <vector>

#include "windcast/metrics.hpp"
#include "windcast/pipeline.hpp"

namespace windcast::evaluation {

struct BacktestConfig {
  pipeline::ModelSettings model;  // T, H, threshold and GP settings
  std::size_t stride = 36;
  std::vector<std::string> models{kModelMain, kModelGop, kModelNwp, kModelPersistence};
  std::size_t jobs = 1;
  bool continue_on_error = false;
  std::optional<std::size_t> max_rolls;
  // Rolls are processed in fixed-length chains; within a chain each GP fit
  // starts from the previous roll's optimum. Chains run concurrently, so the
  // output does not depend on `jobs`.
  std::size_t chain_length = 8;

  void validate() const;
};

struct RollAudit {
  std::size_t roll = 0;
  Timestamp issue = 0;
  std::vector<features::FeatureSpec> specs;
  std::vector<features::FamilyDiagnostics> families;
  int lag_order = 0;
  calibration::CalibrationModel calibration;
  kernels::AdvectionParams advection;
  std::optional<kernels::KernelParams> main_params;
  std::optional<kernels::KernelParams> subhourly_params;
  std::optional<kernels::KernelParams> gop_params;
  double seconds = 0.0;  // wall time of the roll, all models
  std::vector<std::string> warnings;
  std::optional<std::string> error;
};

struct BacktestResult {
  std::vector<ForecastRecord> records;  // sorted by (model, site, issue, horizon)
  std::vector<RollAudit> audits;        // by roll
  std::size_t rolls = 0;
  std::size_t failed_rolls = 0;
};

// Grid step of roll r's forecast origin.
std::size_t issue_step(const BacktestConfig& cfg, std::size_t roll);

// Throws Coverage naming the first roll that does not fit when the data are
// too short for a single roll.
BacktestResult run_backtest(const AlignedDataset& ds, const BacktestConfig& cfg);

}  // namespace windcast::evaluation
