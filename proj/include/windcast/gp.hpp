#pragma once

// Residual Gaussian process: profiled likelihood, hyperparameter fitting,
// universal-kriging prediction and Gaussian sampling.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "windcast/kernels.hpp"

namespace windcast::gp {

using kernels::KernelParams;
using kernels::SpaceTimePoint;

// Cholesky factor of K + jitter*I. Jitter starts at 1e-10 * mean(diag K) and
// grows by 10x up to 1e-4 * mean(diag K) when the factorization fails.
struct Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};

Factor factorize(const Eigen::MatrixXd& K, const char* context);

// Profiled log-likelihood terms shared by the likelihood and the fitted model.
struct Profile {
  double beta0 = 0.0;
  double one_kinv_one = 0.0;
  Eigen::VectorXd kinv_one;       // K^{-1} 1
  Eigen::VectorXd kinv_centered;  // K^{-1} (z - beta0 1)
  double log_likelihood = 0.0;
};

Profile profile(const Factor& factor, const Eigen::VectorXd& z);

// Gaussian log-density of z with mean beta0*1, beta0 replaced by its GLS
// estimate, covariance from `params`.
double log_marginal_likelihood(const Eigen::VectorXd& z, std::span<const SpaceTimePoint> points,
                               const KernelParams& params);

struct FittedGP {
  KernelParams params;  // beta0 holds the GLS estimate
  std::vector<SpaceTimePoint> points;
  Eigen::VectorXd z;
  Factor factor;
  Profile prof;

  double log_likelihood() const { return prof.log_likelihood; }
  // Recomputes the likelihood from the stored factor and residuals.
  double recompute_log_likelihood() const;
};

// Conditions on (points, z) with fixed kernel parameters.
FittedGP condition(const Eigen::VectorXd& z, std::vector<SpaceTimePoint> points, const KernelParams& params);

struct FitOptions {
  bool fit_lambda = true;  // false keeps params.lambda of the start
  bool temporal = true;    // false drops the temporal factor and r_t
  std::optional<KernelParams> previous;  // previous roll's optimum
  int max_evaluations = 400;             // per start
};

struct FitReport {
  std::vector<double> start_log_likelihoods;
  std::vector<double> final_log_likelihoods;
  int evaluations = 0;
};

// Box constraints of the search.
struct Bounds {
  double alpha_min = 1e-4, alpha_max = 1e4;
  double r_s_min = 0.1, r_s_max = 1e4;
  double r_t_min = 0.1, r_t_max = 1e3;
  double delta_min = 1e-6, delta_max = 1e4;
};

// Maximises the profiled likelihood over (alpha, lambda, r_s, r_t, delta)
// with Nelder-Mead from three starts: a data-driven guess, the previous roll's
// optimum (or a variance-scaled default) and the fixed default. The advection
// parameters are taken from `init` and held fixed.
FittedGP fit_gp(const Eigen::VectorXd& z, std::vector<SpaceTimePoint> points, const KernelParams& init,
                const FitOptions& options = {}, FitReport* report = nullptr);

struct ForecastDistribution {
  std::vector<SpaceTimePoint> points;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
  std::optional<Eigen::MatrixXd> covariance;

  Eigen::VectorXd sd() const { return variance.cwiseSqrt(); }
};

// mean = mu + beta0 + k' K^{-1} (z - beta0 1)
// var  = (alpha + delta) - k' K^{-1} k + (1 - k' K^{-1} 1)^2 / (1' K^{-1} 1)
ForecastDistribution predict(const FittedGP& fitted, std::span<const SpaceTimePoint> targets,
                             std::span<const double> mu, bool joint = false);

// `count` joint Gaussian draws, one per row.
Eigen::MatrixXd sample_trajectories(const ForecastDistribution& dist, std::size_t count, std::uint64_t seed);

inline constexpr std::size_t kDenseLimit = 3000;

// One exact draw from N(beta0 1, K).
Eigen::VectorXd simulate_field(std::span<const SpaceTimePoint> points, const KernelParams& params,
                               std::uint64_t seed, std::size_t limit = kDenseLimit);

// Draw x = mean + L sqrt(D) e from a pivoted LDL' factor; exact for PSD input.
Eigen::MatrixXd gaussian_draws(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::size_t count,
                               std::uint64_t seed, const char* context);

}  // namespace windcast::gp
