#pragma once

// Derived physical predictors and per-roll dynamic feature selection.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windcast/core_data.hpp"

namespace windcast::features {

// Family names of the derived predictors.
inline constexpr const char* kPressureDifferential = "STPD";
inline constexpr const char* kGeostrophic = "GW";

inline constexpr int kMaxLag = 24;            // 4 hours of 10-minute steps
inline constexpr int kMaxPressureLag = 6;     // lags d of the pressure differential family
inline constexpr double kDefaultThreshold = 0.6;

// ---------------------------------------------------------------------------
// Pressure differentials

// P_i(t) - P_j(t + d); entries where t + d leaves the series are nullopt.
std::vector<std::optional<double>> pressure_differential(std::span<const double> pressure_i,
                                                         std::span<const double> pressure_j, int d);

// Same, on the NWP pressure at two grid points of an aligned dataset.
std::vector<std::optional<double>> pressure_differential(const AlignedDataset& ds, const std::string& nwp_site_i,
                                                         const std::string& nwp_site_j, int d);

// ---------------------------------------------------------------------------
// Geostrophic wind

struct GeostrophicConstants {
  double gravity = 9.80665;         // m s^-2
  double earth_rotation = 7.2921e-5;  // rad s^-1
  double gas_constant = 287.0;      // J K^-1 kg^-1
  double reference_pressure = 850.0;  // hPa
  double min_abs_latitude = 5.0;    // degrees
};

struct Barometer {
  PlanarKm xy;
  double latitude = 0.0;        // degrees
  double pressure = 0.0;        // hPa
  double temperature = 0.0;     // K, stands in for the layer mean
  double baseline_height = 0.0;  // m
};

struct PlaneFit {
  double c0 = 0.0;  // m
  double c1 = 0.0;  // m per km eastward
  double c2 = 0.0;  // m per km northward
  double residual_rms = 0.0;
};

struct GeostrophicComponents {
  double u = 0.0;
  double v = 0.0;
  double speed() const;
};

// Hydrostatic height of the reference pressure surface above a barometer.
double geopotential_height(const Barometer& b, const GeostrophicConstants& k = {});

// Least-squares plane H = c0 + c1 x + c2 y. Throws DegenerateFit for fewer
// than 3 or collinear stations.
PlaneFit fit_plane(std::span<const PlanarKm> xy, std::span<const double> height);

GeostrophicComponents geostrophic_from_plane(const PlaneFit& plane, double latitude_deg,
                                             const GeostrophicConstants& k = {});

// Geostrophic speed at each requested latitude from one snapshot of
// barometer readings.
std::vector<double> geostrophic_wind(std::span<const Barometer> stations, std::span<const double> latitudes_deg,
                                     const GeostrophicConstants& k = {});

// ---------------------------------------------------------------------------
// Feature specification and evaluation context

struct FeatureSpec {
  std::string variable;
  int lag = 0;               // 10-minute steps; value at t reads t + lag
  double correlation = 0.0;  // Pearson correlation with the target at selection time

  bool operator==(const FeatureSpec& o) const { return variable == o.variable && lag == o.lag; }
};

// Where a feature is evaluated: the NWP grid point feeding it and the latitude
// used by the geostrophic term.
struct Location {
  std::string nwp_source;
  double latitude = 0.0;
  PlanarKm xy;
};

Location site_location(const AlignedDataset& ds, std::size_t site);
// Nearest NWP grid point to an arbitrary position.
Location location_at(const AlignedDataset& ds, const LatLon& position);

// Precomputed regional series shared by every location.
class FeatureContext {
 public:
  explicit FeatureContext(const AlignedDataset& ds, const GeostrophicConstants& k = {});

  const AlignedDataset& dataset() const { return *ds_; }
  bool has_family(const std::string& family) const;
  std::vector<std::string> available_families() const;

  // Value of `variable` lagged by `lag` at grid step `step`, nullopt when the
  // lagged step falls outside the grid.
  std::optional<double> value(const std::string& variable, int lag, const Location& where,
                              std::size_t step) const;

  const std::string& pressure_pair_first() const { return pair_i_; }
  const std::string& pressure_pair_second() const { return pair_j_; }

 private:
  const AlignedDataset* ds_;
  GeostrophicConstants constants_;
  std::string pair_i_, pair_j_;
  std::vector<double> gradient_;  // |grad H| in m per m, per step; empty if unavailable
};

// ---------------------------------------------------------------------------
// Candidate pool and selection

struct CandidateFamily {
  std::string name;
  std::vector<int> lags;
};

struct CandidatePool {
  std::vector<CandidateFamily> families;
  std::vector<std::string> warnings;
};

// Families: the six NWP predictors, the pressure differential and the
// geostrophic wind. Lags run over [-24, 24] (pressure differential [-6, 6]),
// keeping only those whose lagged step stays on the grid for every step up
// to `last_needed_step`. Missing inputs downgrade the pool with a warning.
CandidatePool build_candidates(const FeatureContext& ctx, std::size_t last_needed_step);

// One family's lagged versions, evaluated on the training rows.
struct CandidateColumn {
  int lag = 0;
  std::vector<std::optional<double>> values;
};

struct CandidateData {
  std::string name;
  std::vector<CandidateColumn> columns;
};

struct TrainingRow {
  std::size_t site = 0;
  std::size_t step = 0;
};

std::vector<CandidateData> materialize(const CandidatePool& pool, const FeatureContext& ctx,
                                       std::span<const TrainingRow> rows);

struct FamilyDiagnostics {
  std::string name;
  int best_lag = 0;
  double best_correlation = 0.0;  // signed
  bool admitted = false;
  bool excluded = false;  // zero variance or too few samples everywhere
  std::vector<std::pair<int, double>> correlations;
};

struct Selection {
  std::vector<FeatureSpec> specs;
  std::vector<FamilyDiagnostics> families;
  std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinOverlap = 30;

// Pearson correlation over pairs where both sides are present; nullopt if
// fewer than `min_pairs` or either side has zero variance.
std::optional<double> pearson(std::span<const std::optional<double>> x, std::span<const double> y,
                              std::size_t min_pairs = kMinOverlap);

// Keeps, per family, the lag of maximal |correlation| and admits the family
// when that maximum reaches `threshold`.
Selection select_features(std::span<const CandidateData> candidates, std::span<const double> target,
                          double threshold = kDefaultThreshold);

// Sample partial autocorrelations for lags 1..max_lag (Durbin-Levinson).
// Missing entries are skipped pairwise.
std::vector<double> pacf(std::span<const std::optional<double>> series, int max_lag);

struct LagOrder {
  int lag = 1;
  bool fallback = false;
};

inline constexpr std::size_t kMinPacfSamples = 100;
inline constexpr int kFallbackLagOrder = 6;

// Length of the run of significant partial autocorrelations starting at
// lag 1 (|pacf| > 1.96 / sqrt(N)), floored at 1. Short series fall back to 6.
LagOrder pacf_lag_order(std::span<const std::optional<double>> series, int max_lag = kMaxLag);

}  // namespace windcast::features
