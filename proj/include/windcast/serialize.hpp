#pragma once

// JSON and CSV emission of the pipeline's artifacts.

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

#include "windcast/backtest.hpp"
#include "windcast/forecast_map.hpp"
#include "windcast/power.hpp"

namespace windcast::serialize {

using nlohmann::json;

json to_json(const features::FeatureSpec& spec);
json to_json(const std::vector<features::FeatureSpec>& specs);
json to_json(const calibration::CalibrationModel& model);
json to_json(const kernels::AdvectionParams& adv);
json to_json(const kernels::KernelParams& params);
json to_json(const evaluation::RollAudit& audit);
// Keys sorted, NWP series in grid-point order.
json to_json(const AlignedDataset& ds);

struct DistributionLabel {
  std::string site;
  Timestamp issue = 0;
  int horizon = 0;
};
json to_json(const gp::ForecastDistribution& d, const std::vector<DistributionLabel>& labels);
// site,issue_time,horizon_min,mean,sd
std::string distribution_csv(const gp::ForecastDistribution& d, const std::vector<DistributionLabel>& labels);

// model,site,issue_time,horizon_min,forecast,sd,observed
std::string records_csv(const std::vector<evaluation::ForecastRecord>& records);
std::vector<evaluation::ForecastRecord> read_records_csv(const std::string& path);

// Buckets as rows, then Average and the improvement of `reference` over each
// other model.
std::string metric_csv(const evaluation::MetricTable& table, const std::string& reference);
std::string pce_csv(const std::map<double, std::map<std::string, double>>& table,
                    const std::vector<std::string>& models);
std::string power_curve_csv(const evaluation::PowerCurve& curve);
// lat,lon,mean,sd
std::string map_csv(const std::vector<evaluation::MapCell>& cells);

void write_text(const std::string& path, const std::string& text);

}  // namespace windcast::serialize
