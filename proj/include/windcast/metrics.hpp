#pragma once

// Forecast records and the scores computed from them.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "windcast/timeutil.hpp"

namespace windcast::evaluation {

// Model identifiers.
inline constexpr const char* kModelMain = "stgp";
inline constexpr const char* kModelGop = "gop";
inline constexpr const char* kModelNwp = "nwp";
inline constexpr const char* kModelPersistence = "persistence";

struct ForecastRecord {
  std::string model;
  std::string site;
  Timestamp issue = 0;
  int horizon = 0;                    // 10-minute steps, 1..H
  double forecast = 0.0;              // reported point forecast, >= 0
  std::optional<double> mean;         // unclamped predictive mean
  std::optional<double> sd;
  std::optional<double> observed;
  bool stale = false;                 // persistence fell back to an older observation

  double center() const { return mean.value_or(forecast); }
};

// Sort key (model, site, issue, horizon).
bool record_less(const ForecastRecord& a, const ForecastRecord& b);

// Bucket b covers horizons 6(b - 1) + 1 .. 6b.
int hour_bucket(int horizon);

double crps_gaussian(double mean, double sd, double observed);

// (baseline - model) / baseline, in percent.
double improvement_percent(double baseline, double model);

inline long long record_count(long long rolls, long long horizon, long long sites) { return rolls * horizon * sites; }

// Issue times that fit in `length` grid steps: floor((length - T - H) / stride) + 1.
std::size_t roll_count(std::size_t length, std::size_t training, std::size_t horizon, std::size_t stride);

// Rows are hour buckets, columns models. `average` is the mean of a model's
// bucket values.
struct MetricTable {
  std::string metric;
  std::vector<std::string> models;
  std::vector<int> buckets;
  std::map<std::string, std::map<int, double>> values;
  std::map<std::string, double> average;
  std::vector<std::string> notes;

  std::optional<double> get(const std::string& model, int bucket) const;
};

struct TableFilter {
  std::optional<std::string> site;
};

// Mean |forecast - observed|.
MetricTable mae_table(std::span<const ForecastRecord> records, const std::vector<std::string>& models,
                      const TableFilter& filter = {});
// Mean Gaussian CRPS; models without predictive sd are omitted with a note.
MetricTable crps_table(std::span<const ForecastRecord> records, const std::vector<std::string>& models,
                       const TableFilter& filter = {});
// Mean signed error (forecast - observed) per model.
std::map<std::string, double> mean_signed_error(std::span<const ForecastRecord> records);

// Improvement of `model` over every other model of the table.
std::map<std::string, double> improvements(const MetricTable& table, const std::string& model);

}  // namespace windcast::evaluation
