#pragma once

// Synthetic observation/NWP datasets with an advected mesoscale signal, a
// simulated space-time residual and a deliberately biased NWP.

#include <cstdint>
#include <string>
#include <vector>

#include "windcast/core_data.hpp"
#include "windcast/kernels.hpp"

namespace windcast::synthetic {

struct SiteSpec {
  std::string id;
  LatLon position;
};

struct NwpBias {
  double additive = 0.0;        // m/s
  double multiplicative = 1.0;
  int shift_steps = 0;          // NWP at t reproduces truth at t - shift
  double drift_amplitude = 0.0;  // m/s, slow sinusoidal bias
  double drift_period_hours = 48.0;
  // Extra multiplicative bias per unit of the normalized temperature anomaly
  // (a stability proxy), so part of the bias is explained by NWP temperature.
  double stability_coupling = 0.0;

  bool is_zero() const {
    return additive == 0.0 && multiplicative == 1.0 && shift_steps == 0 && drift_amplitude == 0.0 &&
           stability_coupling == 0.0;
  }
};

struct SimulationConfig {
  Timestamp start = 1577836800;  // 2020-01-01T00:00:00Z
  std::size_t days = 30;
  std::vector<SiteSpec> sites{{"S1", {39.50, -74.00}}, {"S2", {39.75, -73.40}}};
  // NWP grid points besides the ones placed on each site.
  std::vector<SiteSpec> extra_grid{{"G3", {40.10, -74.20}}, {"G4", {39.20, -73.10}}};

  double base_speed = 8.0;          // m/s
  double synoptic_amplitude = 2.5;  // m/s standard deviation of the slow signal
  double diurnal_amplitude = 1.0;   // m/s
  double flow_speed = 8.0;          // m/s, mean transport
  double flow_direction_deg = 30.0;  // direction of travel, counter-clockwise from east
  double direction_swing_deg = 20.0;

  // Residual field; its advection is derived from the flow.
  kernels::KernelParams residual{1.0, 0.8, 40.0, 18.0, 0.02, 0.0, {}, true};
  double advection_spread = 0.2;  // (km per step)^2 on each axis

  std::size_t smoothing_steps = 37;  // centred moving average defining the NWP signal
  NwpBias bias{0.8, 0.85, 3, 0.6, 48.0, 0.1};

  std::size_t block_steps = 600;
  std::size_t overlap_steps = 72;
  std::size_t dense_limit = 3000;
  std::uint64_t seed = 20240601;

  void validate() const;
};

struct SyntheticDataset {
  std::vector<ObservationSeries> observations;
  std::vector<NwpSeries> nwp;
  SiteCatalog catalog;
  // 10-minute diagnostics per observation site (length days * 144 + 1).
  std::vector<std::vector<double>> truth;
  std::vector<std::vector<double>> smoothed_truth;
  std::vector<std::vector<double>> nwp_fine;  // biased, before hourly sampling
};

SyntheticDataset simulate_dataset(const SimulationConfig& cfg);

// Block-wise draw of the residual at sites x steps; each block is conditioned
// on the trailing `overlap_steps` of the previous one.
std::vector<std::vector<double>> simulate_residual(const std::vector<PlanarKm>& sites, std::size_t steps,
                                                   const kernels::KernelParams& params, std::size_t block_steps,
                                                   std::size_t overlap_steps, std::size_t dense_limit,
                                                   std::uint64_t seed);

// observations.csv, nwp.csv and sites.csv in `dir`.
void write_dataset(const SyntheticDataset& data, const std::string& dir);

}  // namespace windcast::synthetic
