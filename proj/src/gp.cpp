#include "windcast/gp.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "windcast/error.hpp"
#include "windcast/optim.hpp"

namespace windcast::gp {
namespace {

constexpr double kJitterStart = 1e-10;
constexpr double kJitterMax = 1e-4;

double condition_estimate(const Eigen::MatrixXd& K) {
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
  const double rc = ldlt.rcond();
  return rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity();
}

// Box transform: each positive parameter lives on [lo, hi] through
// log p = log lo + (log hi - log lo) * sigmoid(u); lambda = sigmoid(u).
double sigmoid(double u) { return 1.0 / (1.0 + std::exp(-u)); }

double logit(double p) {
  p = std::clamp(p, 1e-9, 1.0 - 1e-9);
  return std::log(p / (1.0 - p));
}

double to_box(double u, double lo, double hi) {
  return std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * sigmoid(u));
}

double from_box(double p, double lo, double hi) {
  p = std::clamp(p, lo, hi);
  return logit((std::log(p) - std::log(lo)) / (std::log(hi) - std::log(lo)));
}

struct Codec {
  bool fit_lambda;
  bool temporal;
  Bounds bounds;
  KernelParams base;

  Eigen::Index size() const { return 3 + (fit_lambda ? 1 : 0) + (temporal ? 1 : 0); }

  Eigen::VectorXd encode(const KernelParams& p) const {
    Eigen::VectorXd u(size());
    Eigen::Index i = 0;
    u(i++) = from_box(p.alpha, bounds.alpha_min, bounds.alpha_max);
    if (fit_lambda) u(i++) = logit(p.lambda);
    u(i++) = from_box(p.r_s, bounds.r_s_min, bounds.r_s_max);
    if (temporal) u(i++) = from_box(p.r_t, bounds.r_t_min, bounds.r_t_max);
    u(i++) = from_box(p.delta, bounds.delta_min, bounds.delta_max);
    return u;
  }

  KernelParams decode(const Eigen::VectorXd& u) const {
    KernelParams p = base;
    Eigen::Index i = 0;
    p.alpha = to_box(u(i++), bounds.alpha_min, bounds.alpha_max);
    if (fit_lambda) p.lambda = sigmoid(u(i++));
    p.r_s = to_box(u(i++), bounds.r_s_min, bounds.r_s_max);
    if (temporal) p.r_t = to_box(u(i++), bounds.r_t_min, bounds.r_t_max);
    p.delta = to_box(u(i++), bounds.delta_min, bounds.delta_max);
    p.temporal = temporal;
    return p;
  }
};

// Moment-based start: variance split 90/10 between signal and nugget, r_s
// from the median site separation, r_t from the lag-1 autocorrelation.
KernelParams heuristic_start(const Eigen::VectorXd& z, std::span<const SpaceTimePoint> points,
                             const KernelParams& base) {
  KernelParams p = base;
  const double mean = z.mean();
  const double var = z.size() > 1 ? (z.array() - mean).square().sum() / static_cast<double>(z.size() - 1) : 1.0;
  const double v = var > 0.0 ? var : 1.0;
  p.alpha = 0.9 * v;
  p.delta = 0.1 * v;

  std::map<int, std::pair<double, double>> site_xy;
  std::map<std::pair<int, long>, double> value;
  for (std::size_t i = 0; i < points.size(); ++i) {
    site_xy[points[i].site] = {points[i].x, points[i].y};
    value[{points[i].site, points[i].step}] = z(static_cast<Eigen::Index>(i));
  }
  std::vector<double> dists;
  for (auto a = site_xy.begin(); a != site_xy.end(); ++a) {
    for (auto b = std::next(a); b != site_xy.end(); ++b) {
      dists.push_back(std::hypot(a->second.first - b->second.first, a->second.second - b->second.second));
    }
  }
  if (!dists.empty()) {
    std::nth_element(dists.begin(), dists.begin() + static_cast<long>(dists.size() / 2), dists.end());
    const double d = dists[dists.size() / 2];
    if (d > 0.0) p.r_s = std::clamp(2.0 * d, 1.0, 1e3);
  }

  double num = 0.0, den = 0.0;
  for (const auto& [key, zi] : value) {
    auto it = value.find({key.first, key.second + 1});
    if (it == value.end()) continue;
    num += (zi - mean) * (it->second - mean);
    den += 0.5 * ((zi - mean) * (zi - mean) + (it->second - mean) * (it->second - mean));
  }
  if (den > 0.0) {
    const double rho = std::clamp(num / den, 0.05, 0.995);
    p.r_t = std::clamp(1.0 / std::sqrt(-std::log(rho)), 0.5, 200.0);
  }
  return p;
}

}  // namespace

Factor factorize(const Eigen::MatrixXd& K, const char* context) {
  Factor f;
  f.llt.compute(K);
  if (f.llt.info() == Eigen::Success) return f;
  const double scale = K.diagonal().mean();
  for (double level = kJitterStart; level <= kJitterMax * 1.0000001; level *= 10.0) {
    f.jitter = level * scale;
    spdlog::debug("{}: Cholesky failed, adding jitter {:.3g}", context, f.jitter);
    Eigen::MatrixXd Kj = K;
    Kj.diagonal().array() += f.jitter;
    f.llt.compute(Kj);
    if (f.llt.info() == Eigen::Success) return f;
  }
  throw Error(ErrorKind::Numerical, std::string(context) + ": covariance not positive definite after jitter " +
                                        std::to_string(f.jitter) + " (condition estimate " +
                                        std::to_string(condition_estimate(K)) + ")");
}

Profile profile(const Factor& factor, const Eigen::VectorXd& z) {
  const auto n = z.size();
  Profile p;
  p.kinv_one = factor.llt.solve(Eigen::VectorXd::Ones(n));
  p.one_kinv_one = p.kinv_one.sum();
  p.beta0 = p.kinv_one.dot(z) / p.one_kinv_one;
  const Eigen::VectorXd centered = z.array() - p.beta0;
  p.kinv_centered = factor.llt.solve(centered);
  const Eigen::MatrixXd& L = factor.llt.matrixLLT();
  const double log_det = 2.0 * L.diagonal().array().log().sum();
  p.log_likelihood = -0.5 * centered.dot(p.kinv_centered) - 0.5 * log_det -
                     0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return p;
}

double log_marginal_likelihood(const Eigen::VectorXd& z, std::span<const SpaceTimePoint> points,
                               const KernelParams& params) {
  if (static_cast<std::size_t>(z.size()) != points.size()) {
    throw Error(ErrorKind::Validation, "residual and point counts differ");
  }
  if (z.size() == 0) throw Error(ErrorKind::Validation, "empty residual vector");
  const Eigen::MatrixXd K = kernels::covariance_matrix(points, params);
  return profile(factorize(K, "likelihood"), z).log_likelihood;
}

double FittedGP::recompute_log_likelihood() const { return profile(factor, z).log_likelihood; }

FittedGP condition(const Eigen::VectorXd& z, std::vector<SpaceTimePoint> points, const KernelParams& params) {
  if (static_cast<std::size_t>(z.size()) != points.size()) {
    throw Error(ErrorKind::Validation, "residual and point counts differ");
  }
  if (z.size() == 0) throw Error(ErrorKind::Validation, "cannot condition on zero points");
  params.validate();
  FittedGP g;
  g.params = params;
  g.points = std::move(points);
  g.z = z;
  g.factor = factorize(kernels::covariance_matrix(g.points, params), "conditioning");
  if (g.factor.jitter > 0.0) spdlog::info("conditioning used jitter {:.3g}", g.factor.jitter);
  g.prof = profile(g.factor, z);
  g.params.beta0 = g.prof.beta0;
  return g;
}

FittedGP fit_gp(const Eigen::VectorXd& z, std::vector<SpaceTimePoint> points, const KernelParams& init,
                const FitOptions& options, FitReport* report) {
  if (z.size() == 0) throw Error(ErrorKind::Fit, "no residuals to fit");
  if (static_cast<std::size_t>(z.size()) != points.size()) {
    throw Error(ErrorKind::Validation, "residual and point counts differ");
  }
  Codec codec{options.fit_lambda, options.temporal, Bounds{}, init};
  codec.base.temporal = options.temporal;

  auto objective = [&](const Eigen::VectorXd& u) {
    try {
      return -log_marginal_likelihood(z, points, codec.decode(u));
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  KernelParams fixed_default = codec.base;
  fixed_default.alpha = 1.0;
  fixed_default.r_s = 50.0;
  fixed_default.r_t = 6.0;
  fixed_default.delta = 0.1;
  if (options.fit_lambda) fixed_default.lambda = 0.5;

  std::vector<KernelParams> starts;
  starts.push_back(heuristic_start(z, points, codec.base));
  if (options.previous) {
    KernelParams prev = *options.previous;
    prev.advection = codec.base.advection;
    prev.temporal = codec.base.temporal;
    if (!options.fit_lambda) prev.lambda = codec.base.lambda;
    starts.push_back(prev);
  } else {
    KernelParams scaled = fixed_default;
    const double v = starts.front().alpha + starts.front().delta;
    scaled.alpha = 0.9 * v;
    scaled.delta = 0.1 * v;
    starts.push_back(scaled);
  }
  starts.push_back(fixed_default);

  optim::NelderMeadOptions nm;
  nm.max_evaluations = options.max_evaluations;
  double best_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_u;
  FitReport local;
  for (const auto& s : starts) {
    const Eigen::VectorXd u0 = codec.encode(s);
    const auto result = optim::nelder_mead(objective, u0, nm);
    local.start_log_likelihoods.push_back(-objective(u0));
    local.final_log_likelihoods.push_back(-result.value);
    local.evaluations += result.evaluations + 1;
    if (result.value < best_value) {
      best_value = result.value;
      best_u = result.x;
    }
  }
  if (report != nullptr) *report = local;
  if (!std::isfinite(best_value)) {
    throw Error(ErrorKind::Fit, "likelihood could not be evaluated from any of " + std::to_string(starts.size()) +
                                    " starts (" + std::to_string(z.size()) + " points)");
  }
  return condition(z, std::move(points), codec.decode(best_u));
}

ForecastDistribution predict(const FittedGP& fitted, std::span<const SpaceTimePoint> targets,
                             std::span<const double> mu, bool joint) {
  if (mu.size() != targets.size()) throw Error(ErrorKind::Validation, "mu and target counts differ");
  const auto m = static_cast<Eigen::Index>(targets.size());
  const Eigen::MatrixXd k = kernels::cross_covariance(fitted.points, targets, fitted.params);
  const Eigen::MatrixXd kinv_k = fitted.factor.llt.solve(k);
  const Eigen::VectorXd u = Eigen::VectorXd::Ones(m) - k.transpose() * fitted.prof.kinv_one;
  const double prior = fitted.params.alpha + fitted.params.delta;

  ForecastDistribution d;
  d.points.assign(targets.begin(), targets.end());
  d.mean = Eigen::Map<const Eigen::VectorXd>(mu.data(), m).array() + fitted.prof.beta0;
  d.mean += k.transpose() * fitted.prof.kinv_centered;
  d.variance.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double v = prior - k.col(j).dot(kinv_k.col(j)) + u(j) * u(j) / fitted.prof.one_kinv_one;
    d.variance(j) = std::max(v, 0.0);
  }
  if (joint) {
    Eigen::MatrixXd C = kernels::covariance_matrix(targets, fitted.params);
    C.noalias() -= k.transpose() * kinv_k;
    C.noalias() += u * u.transpose() / fitted.prof.one_kinv_one;
    C = 0.5 * (C + C.transpose()).eval();
    d.covariance = std::move(C);
  }
  return d;
}

Eigen::MatrixXd gaussian_draws(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov, std::size_t count,
                               std::uint64_t seed, const char* context) {
  const auto n = mean.size();
  if (cov.rows() != n || cov.cols() != n) throw Error(ErrorKind::Sampling, std::string(context) + ": size mismatch");
  if (!cov.allFinite()) throw Error(ErrorKind::Sampling, std::string(context) + ": non-finite covariance");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(count), n);
  Eigen::VectorXd e(n);

  // Blocked Cholesky when the matrix is definite, pivoted LDL' otherwise.
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    const Eigen::MatrixXd L = llt.matrixL();
    for (std::size_t r = 0; r < count; ++r) {
      for (Eigen::Index i = 0; i < n; ++i) e(i) = normal(rng);
      out.row(static_cast<Eigen::Index>(r)) = (mean + L.triangularView<Eigen::Lower>() * e).transpose();
    }
    return out;
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Sampling, std::string(context) + ": LDL' failed");
  const Eigen::VectorXd D = ldlt.vectorD();
  const double tol = 1e-10 * std::max(1.0, cov.diagonal().cwiseAbs().maxCoeff());
  if (n > 0 && D.minCoeff() < -tol) {
    throw Error(ErrorKind::Sampling, std::string(context) + ": covariance not positive semidefinite (pivot " +
                                         std::to_string(D.minCoeff()) + ")");
  }
  const Eigen::VectorXd sqrt_d = D.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd L = ldlt.matrixL();
  for (std::size_t r = 0; r < count; ++r) {
    for (Eigen::Index i = 0; i < n; ++i) e(i) = normal(rng);
    const Eigen::VectorXd w = L * sqrt_d.cwiseProduct(e);
    out.row(static_cast<Eigen::Index>(r)) = (mean + ldlt.transpositionsP().transpose() * w).transpose();
  }
  return out;
}

Eigen::MatrixXd sample_trajectories(const ForecastDistribution& dist, std::size_t count, std::uint64_t seed) {
  if (!dist.covariance) throw Error(ErrorKind::Sampling, "trajectory sampling needs the joint covariance");
  return gaussian_draws(dist.mean, *dist.covariance, count, seed, "trajectory sampling");
}

Eigen::VectorXd simulate_field(std::span<const SpaceTimePoint> points, const KernelParams& params,
                               std::uint64_t seed, std::size_t limit) {
  if (points.size() > limit) {
    throw Error(ErrorKind::Size, std::to_string(points.size()) + " points exceed the dense limit of " +
                                     std::to_string(limit));
  }
  params.validate();
  const auto n = static_cast<Eigen::Index>(points.size());
  const Eigen::MatrixXd K = kernels::covariance_matrix(points, params);
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(n, params.beta0);
  return gaussian_draws(mean, K, 1, seed, "field simulation").row(0).transpose();
}

}  // namespace windcast::gp
