#include "windcast/spline.hpp"

#include <algorithm>
#include <cmath>

#include "windcast/error.hpp"

namespace windcast {

NaturalCubicSpline::NaturalCubicSpline(std::span<const double> knots, std::span<const double> values)
    : x_(knots.begin(), knots.end()), y_(values.begin(), values.end()), m_(knots.size(), 0.0) {
  const std::size_t n = x_.size();
  if (n != y_.size()) throw Error(ErrorKind::Validation, "spline knots and values differ in length");
  if (n < 4) throw Error(ErrorKind::InsufficientData, "cubic spline needs at least 4 knots");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(y_[i])) throw Error(ErrorKind::InsufficientData, "missing value at spline knot");
    if (i > 0 && !(x_[i] > x_[i - 1])) throw Error(ErrorKind::Grid, "spline knots must increase");
  }

  // Tridiagonal system for interior second derivatives (Thomas algorithm).
  const std::size_t k = n - 2;
  std::vector<double> diag(k), upper(k), rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    diag[i - 1] = 2.0 * (h0 + h1);
    upper[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double lower = x_[i + 1] - x_[i];  // h_{i} of row i
    const double w = lower / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  for (std::size_t i = k; i-- > 0;) {
    const double next = (i + 1 < k) ? m_[i + 2] : 0.0;
    m_[i + 1] = (rhs[i] - upper[i] * next) / diag[i];
  }
}

double NaturalCubicSpline::operator()(double x) const {
  const std::size_t n = x_.size();
  std::size_t i;
  if (x <= x_.front()) {
    i = 0;
  } else if (x >= x_.back()) {
    i = n - 2;
  } else {
    i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
  }
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h) / 6.0;
}

std::vector<double> spline_downscale(std::span<const double> coarse, int factor) {
  if (factor < 1) throw Error(ErrorKind::Validation, "downscale factor must be >= 1");
  if (coarse.size() < 4) {
    throw Error(ErrorKind::InsufficientData, "spline downscaling needs at least 4 hourly knots");
  }
  std::vector<double> knots(coarse.size());
  for (std::size_t i = 0; i < knots.size(); ++i) knots[i] = static_cast<double>(i);
  const NaturalCubicSpline spline(knots, coarse);

  const std::size_t out_len = (coarse.size() - 1) * static_cast<std::size_t>(factor) + 1;
  std::vector<double> fine(out_len);
  for (std::size_t j = 0; j < out_len; ++j) {
    if (j % static_cast<std::size_t>(factor) == 0) {
      fine[j] = coarse[j / static_cast<std::size_t>(factor)];
    } else {
      fine[j] = spline(static_cast<double>(j) / factor);
    }
  }
  return fine;
}

}  // namespace windcast
