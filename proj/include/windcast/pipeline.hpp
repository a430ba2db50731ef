#pragma once

// One forecasting roll: feature selection, mean calibration, advection
// estimation, residual GP fitting and prediction, plus the baselines.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windcast/calibration.hpp"
#include "windcast/features.hpp"
#include "windcast/gp.hpp"

namespace windcast::pipeline {

struct ModelSettings {
  std::size_t training_steps = 720;  // T
  std::size_t horizon = 36;          // H
  double threshold = features::kDefaultThreshold;
  // The likelihood is maximised on the trailing `mle_steps` of each site; the
  // fitted GP is then conditioned on the whole training window.
  std::size_t mle_steps = 144;
  // Horizons below the cutoff drop the calibrated mean and use a GP on
  // y - mean(y) instead. 0 disables the rule.
  int subhourly_cutoff = 6;
  int max_evaluations = 400;
  bool intercept = true;

  // Restrictions, used to express the GOP baseline as a special case.
  std::optional<std::vector<features::FeatureSpec>> fixed_specs;
  std::optional<int> fixed_lag_order;
  bool temporal = true;
  std::optional<double> fixed_lambda;
};

// Index of a training or target row in the residual GP.
struct TrainingPoint {
  std::size_t site = 0;
  std::size_t step = 0;
};

struct RollState {
  std::size_t issue = 0;  // grid step of the forecast origin t_c
  ModelSettings settings;
  features::Selection selection;
  features::LagOrder lag_order;
  calibration::CalibrationModel calibration;
  std::size_t calibration_excluded = 0;
  kernels::AdvectionParams advection;
  gp::FittedGP main;
  std::optional<gp::FittedGP> subhourly;
  double training_mean = 0.0;
  std::vector<std::string> warnings;
};

struct PreviousOptimum {
  std::optional<kernels::KernelParams> main;
  std::optional<kernels::KernelParams> subhourly;
};

// Training window: steps issue - T + 1 .. issue.
RollState fit_roll(const features::FeatureContext& ctx, std::size_t issue, const ModelSettings& settings,
                   const PreviousOptimum& previous = {});

// A prediction target. `gp_site` keys the nugget: it must equal the training
// site index when the target sits on an observation site, and be unique and
// negative otherwise.
struct Target {
  features::Location location;
  int gp_site = 0;
  std::size_t horizon = 1;  // steps after the issue; 0 is the issue itself
};

std::vector<Target> site_targets(const features::FeatureContext& ctx, std::size_t horizon);

// Joint covariance blocks between the mean-calibrated and sub-hourly GPs are
// zero.
gp::ForecastDistribution predict_targets(const RollState& state, const features::FeatureContext& ctx,
                                         std::span<const Target> targets, bool joint = false);

// ---------------------------------------------------------------------------
// Baselines

struct PersistenceForecast {
  double value = 0.0;
  bool stale = false;
};

// Latest observation at or before `issue`, searching back to `earliest`.
PersistenceForecast persistence_forecast(const AlignedDataset& ds, std::size_t site, std::size_t issue,
                                         std::size_t earliest);

double nwp_forecast(const AlignedDataset& ds, std::size_t site, std::size_t issue, std::size_t horizon);

// Lag-0 pressure, temperature, gust, humidity, U, V (those present).
std::vector<features::FeatureSpec> gop_specs(const features::FeatureContext& ctx);

// Settings of the main model reduced to the GOP structure.
ModelSettings gop_restriction(const features::FeatureContext& ctx, ModelSettings base);

struct GopState {
  std::size_t issue = 0;
  std::vector<features::FeatureSpec> specs;
  calibration::CalibrationModel calibration;
  gp::FittedGP gp;
};

// Least-squares mu = a'[1, H] + (b'[1, H]) Y with a purely spatial GP on the
// residuals.
GopState fit_gop(const features::FeatureContext& ctx, std::size_t issue, const ModelSettings& settings,
                 const std::optional<kernels::KernelParams>& previous = {});

gp::ForecastDistribution predict_gop(const GopState& state, const features::FeatureContext& ctx,
                                     std::span<const Target> targets);

}  // namespace windcast::pipeline
