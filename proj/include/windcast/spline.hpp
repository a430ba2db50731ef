#pragma once

#include <span>
#include <vector>

namespace windcast {

// Natural cubic spline (zero second derivative at both ends) through
// strictly increasing knots.
class NaturalCubicSpline {
 public:
  NaturalCubicSpline(std::span<const double> knots, std::span<const double> values);

  double operator()(double x) const;
  double second_derivative_at_knot(std::size_t i) const { return m_[i]; }

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at knots
};

// Resamples a uniformly spaced series onto a grid `factor` times finer,
// e.g. hourly -> 10 min with factor 6. Output has (n - 1) * factor + 1
// points and reproduces the knots exactly. Requires >= 4 knots.
std::vector<double> spline_downscale(std::span<const double> coarse, int factor = 6);

}  // namespace windcast
