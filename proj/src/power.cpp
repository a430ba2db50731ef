#include "windcast/power.hpp"

#include <algorithm>
#include <cmath>

#include "windcast/error.hpp"

namespace windcast::evaluation {

double PowerCurve::operator()(double speed) const {
  if (smoothed.empty()) throw Error(ErrorKind::Validation, "empty power curve");
  if (speed <= center(0)) return smoothed.front();
  const std::size_t last = smoothed.size() - 1;
  if (speed >= center(last)) return smoothed.back();
  std::size_t hi = 1;
  while (center(hi) < speed) ++hi;
  const double x0 = center(hi - 1), x1 = center(hi);
  const double t = (speed - x0) / (x1 - x0);
  return smoothed[hi - 1] + t * (smoothed[hi] - smoothed[hi - 1]);
}

PowerCurve power_curve_from_bins(std::span<const std::pair<double, double>> pairs, double bin_width) {
  if (pairs.empty()) throw Error(ErrorKind::InsufficientData, "no speed-power pairs");
  if (!(bin_width > 0.0)) throw Error(ErrorKind::Validation, "bin width must be positive");
  std::map<long, std::pair<double, std::size_t>> bins;
  for (const auto& [speed, power] : pairs) {
    if (!std::isfinite(speed) || speed < 0.0) throw Error(ErrorKind::Validation, "invalid wind speed in power data");
    if (!(power >= 0.0 && power <= 1.0)) {
      throw Error(ErrorKind::Validation, "normalized power " + std::to_string(power) + " outside [0, 1]");
    }
    auto& b = bins[static_cast<long>(std::floor(speed / bin_width))];
    b.first += power;
    ++b.second;
  }
  PowerCurve c;
  c.bin_width = bin_width;
  for (const auto& [k, b] : bins) {
    c.lower_edges.push_back(static_cast<double>(k) * bin_width);
    c.bin_means.push_back(b.first / static_cast<double>(b.second));
    c.counts.push_back(b.second);
  }
  // Pool adjacent violators, weighted by bin counts.
  struct Block {
    double sum;
    double weight;
    std::size_t size;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < c.bin_means.size(); ++i) {
    const auto w = static_cast<double>(c.counts[i]);
    blocks.push_back({c.bin_means[i] * w, w, 1});
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / a.weight <= b.sum / b.weight) break;
      const Block merged{a.sum + b.sum, a.weight + b.weight, a.size + b.size};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  for (const auto& b : blocks) c.smoothed.insert(c.smoothed.end(), b.size, b.sum / b.weight);
  return c;
}

double pce_weighted(double power_obs, double power_fcst, double speed_fcst, double speed_obs, double w_under,
                    double w_over) {
  if (speed_fcst <= speed_obs) return w_under * (power_obs - power_fcst);
  return w_over * (power_fcst - power_obs);
}

double pce(double power_obs, double power_fcst, double speed_fcst, double speed_obs, double g) {
  return pce_weighted(power_obs, power_fcst, speed_fcst, speed_obs, g, 1.0 - g);
}

std::map<double, std::map<std::string, double>> pce_table(std::span<const ForecastRecord> records,
                                                          const PowerCurve& curve,
                                                          const std::vector<std::string>& models,
                                                          const std::vector<double>& weights) {
  std::map<double, std::map<std::string, double>> out;
  for (double g : weights) {
    if (!(g > 0.0 && g < 1.0)) throw Error(ErrorKind::Validation, "PCE weight must lie in (0, 1)");
    for (const auto& m : models) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& r : records) {
        if (r.model != m || !r.observed) continue;
        sum += pce(curve(*r.observed), curve(r.forecast), r.forecast, *r.observed, g);
        ++n;
      }
      if (n > 0) out[g][m] = sum / static_cast<double>(n);
    }
  }
  return out;
}

}  // namespace windcast::evaluation
