#pragma once

// Space-time covariance: separable squared exponential, the Gaussian-advection
// Lagrangian kernel in closed form, and their convex combination.

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace windcast::kernels {

// m/s of wind -> km travelled per 10-minute lag (600 s / 1000 m).
inline constexpr double kSpeedToKmPerLag = 0.6;

struct AdvectionParams {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();  // km per lag
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();   // (km per lag)^2, symmetric PSD

  // Symmetrised copy with negative eigenvalues clipped to zero.
  AdvectionParams clipped() const;
};

struct KernelParams {
  double alpha = 1.0;   // marginal variance
  double lambda = 0.5;  // weight of the separable part
  double r_s = 50.0;    // km
  double r_t = 6.0;     // lags
  double delta = 0.1;   // nugget variance
  double beta0 = 0.0;   // GP mean
  AdvectionParams advection{};
  // When false the temporal correlation is identically 1 (purely spatial
  // model).
  bool temporal = true;

  void validate() const;
};

// Sample mean/covariance of NWP wind components, scaled to km per lag.
AdvectionParams estimate_advection(std::span<const double> u, std::span<const double> v,
                                   double scale = kSpeedToKmPerLag);

double separable_kernel(const Eigen::Vector2d& gamma, double w, double r_s, double r_t);

// |F|^{-1/2} exp(-(g - mu w)' F^{-1} (g - mu w)), F = I + 2 Sigma w^2.
double lagrangian_kernel(const Eigen::Vector2d& gamma, double w, const AdvectionParams& adv);

// alpha [lambda K_s K_t + (1 - lambda) K_LG] + delta 1{gamma = 0, w = 0}.
double combined_kernel(const Eigen::Vector2d& gamma, double w, const KernelParams& p);

// A training or target location in space-time. `site` identifies the
// location for the nugget: it applies only to pairs sharing site and step.
struct SpaceTimePoint {
  int site = 0;
  double x = 0.0;  // km
  double y = 0.0;  // km
  long step = 0;   // 10-minute grid index
};

// Entry (p, q) = K(s_p - s_q, t_p - t_q), nugget on exact coincidence.
Eigen::MatrixXd covariance_matrix(std::span<const SpaceTimePoint> points, const KernelParams& p);
Eigen::MatrixXd cross_covariance(std::span<const SpaceTimePoint> rows, std::span<const SpaceTimePoint> cols,
                                 const KernelParams& p);

}  // namespace windcast::kernels
