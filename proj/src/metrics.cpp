#include "windcast/metrics.hpp"

#include <cmath>
#include <numbers>
#include <tuple>

#include "windcast/error.hpp"

namespace windcast::evaluation {

bool record_less(const ForecastRecord& a, const ForecastRecord& b) {
  return std::tie(a.model, a.site, a.issue, a.horizon) < std::tie(b.model, b.site, b.issue, b.horizon);
}

int hour_bucket(int horizon) {
  if (horizon < 1) throw Error(ErrorKind::Validation, "horizon must be >= 1");
  return (horizon + 5) / 6;
}

double crps_gaussian(double mean, double sd, double observed) {
  if (sd < 0.0) throw Error(ErrorKind::Validation, "negative predictive sd");
  if (sd == 0.0) return std::abs(observed - mean);
  const double z = (observed - mean) / sd;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return sd * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(std::numbers::pi));
}

double improvement_percent(double baseline, double model) {
  if (baseline == 0.0) throw Error(ErrorKind::Validation, "baseline error is zero");
  return (baseline - model) / baseline * 100.0;
}

std::size_t roll_count(std::size_t length, std::size_t training, std::size_t horizon, std::size_t stride) {
  if (stride == 0) throw Error(ErrorKind::Config, "stride must be positive");
  if (length < training + horizon) return 0;
  return (length - training - horizon) / stride + 1;
}

std::optional<double> MetricTable::get(const std::string& model, int bucket) const {
  auto m = values.find(model);
  if (m == values.end()) return std::nullopt;
  auto b = m->second.find(bucket);
  if (b == m->second.end()) return std::nullopt;
  return b->second;
}

namespace {

template <typename Score>
MetricTable score_table(const std::string& name, std::span<const ForecastRecord> records,
                        const std::vector<std::string>& models, const TableFilter& filter, Score score) {
  MetricTable t;
  t.metric = name;
  std::map<std::string, std::map<int, std::pair<double, std::size_t>>> acc;
  std::set<int> buckets;
  for (const auto& r : records) {
    if (!r.observed) continue;
    if (filter.site && r.site != *filter.site) continue;
    const auto s = score(r);
    if (!s) continue;
    auto& cell = acc[r.model][hour_bucket(r.horizon)];
    cell.first += *s;
    ++cell.second;
    buckets.insert(hour_bucket(r.horizon));
  }
  t.buckets.assign(buckets.begin(), buckets.end());
  for (const auto& m : models) {
    auto it = acc.find(m);
    if (it == acc.end()) {
      t.notes.push_back(m + ": no scored records");
      continue;
    }
    t.models.push_back(m);
    double sum = 0.0;
    for (int b : t.buckets) {
      auto cell = it->second.find(b);
      if (cell == it->second.end()) {
        t.notes.push_back(m + ": bucket " + std::to_string(b) + " empty");
        continue;
      }
      const double v = cell->second.first / static_cast<double>(cell->second.second);
      t.values[m][b] = v;
      sum += v;
    }
    if (!t.values[m].empty()) t.average[m] = sum / static_cast<double>(t.values[m].size());
  }
  return t;
}

}  // namespace

MetricTable mae_table(std::span<const ForecastRecord> records, const std::vector<std::string>& models,
                      const TableFilter& filter) {
  return score_table("MAE", records, models, filter,
                     [](const ForecastRecord& r) -> std::optional<double> { return std::abs(r.forecast - *r.observed); });
}

MetricTable crps_table(std::span<const ForecastRecord> records, const std::vector<std::string>& models,
                       const TableFilter& filter) {
  return score_table("CRPS", records, models, filter, [](const ForecastRecord& r) -> std::optional<double> {
    if (!r.sd) return std::nullopt;
    return crps_gaussian(r.center(), *r.sd, *r.observed);
  });
}

std::map<std::string, double> mean_signed_error(std::span<const ForecastRecord> records) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& r : records) {
    if (!r.observed) continue;
    auto& a = acc[r.model];
    a.first += r.forecast - *r.observed;
    ++a.second;
  }
  std::map<std::string, double> out;
  for (const auto& [m, a] : acc) out[m] = a.first / static_cast<double>(a.second);
  return out;
}

std::map<std::string, double> improvements(const MetricTable& table, const std::string& model) {
  std::map<std::string, double> out;
  auto self = table.average.find(model);
  if (self == table.average.end()) return out;
  for (const auto& [m, avg] : table.average) {
    if (m == model || avg == 0.0) continue;
    out[m] = improvement_percent(avg, self->second);
  }
  return out;
}

}  // namespace windcast::evaluation
