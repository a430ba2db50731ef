#pragma once

// Power curve by the method of bins and the asymmetric power curve error.

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "windcast/metrics.hpp"

namespace windcast::evaluation {

struct PowerCurve {
  double bin_width = 0.5;
  std::vector<double> lower_edges;   // occupied bins only, increasing
  std::vector<double> bin_means;     // raw per-bin mean power
  std::vector<double> smoothed;      // isotonic (non-decreasing) version of bin_means
  std::vector<std::size_t> counts;

  double center(std::size_t i) const { return lower_edges[i] + 0.5 * bin_width; }
  // Linear between bin centres, constant outside.
  double operator()(double speed) const;
};

// (speed m/s, power in [0, 1]) pairs.
PowerCurve power_curve_from_bins(std::span<const std::pair<double, double>> pairs, double bin_width = 0.5);

// g (P - P_hat) when the speed forecast does not exceed the observed speed,
// otherwise (1 - g)(P_hat - P).
double pce(double power_obs, double power_fcst, double speed_fcst, double speed_obs, double g);
// Same with explicit under/over weights.
double pce_weighted(double power_obs, double power_fcst, double speed_fcst, double speed_obs, double w_under,
                    double w_over);

inline const std::vector<double>& pce_weights() {
  static const std::vector<double> g{0.5, 0.6, 0.7, 0.73, 0.8};
  return g;
}

// Mean PCE per (g, model) over records with an observation.
std::map<double, std::map<std::string, double>> pce_table(std::span<const ForecastRecord> records,
                                                          const PowerCurve& curve,
                                                          const std::vector<std::string>& models,
                                                          const std::vector<double>& weights = pce_weights());

}  // namespace windcast::evaluation
