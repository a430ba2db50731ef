#include "windcast/kernels.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include "windcast/error.hpp"

namespace windcast::kernels {
namespace {

// Per-lag pieces of the Lagrangian kernel; F depends on w only.
struct LagTerms {
  Eigen::Matrix2d f_inv;
  double det_scale;  // |F|^{-1/2}
  double temporal;   // separable temporal factor
};

LagTerms lag_terms(double w, const AdvectionParams& adv, const KernelParams* p) {
  const Eigen::Matrix2d F = Eigen::Matrix2d::Identity() + 2.0 * adv.cov * (w * w);
  LagTerms t;
  const double det = F.determinant();
  t.f_inv = F.inverse();
  t.det_scale = 1.0 / std::sqrt(det);
  t.temporal = 1.0;
  if (p != nullptr && p->temporal) t.temporal = std::exp(-(w * w) / (p->r_t * p->r_t));
  return t;
}

double lagrangian_from_terms(const Eigen::Vector2d& gamma, double w, const AdvectionParams& adv,
                             const LagTerms& t) {
  const Eigen::Vector2d d = gamma - adv.mean * w;
  return t.det_scale * std::exp(-d.dot(t.f_inv * d));
}

class LagCache {
 public:
  LagCache(const KernelParams& p, const AdvectionParams& adv) : p_(p), adv_(adv) {}

  const LagTerms& get(long w) {
    auto it = cache_.find(w);
    if (it == cache_.end()) it = cache_.emplace(w, lag_terms(static_cast<double>(w), adv_, &p_)).first;
    return it->second;
  }

 private:
  const KernelParams& p_;
  const AdvectionParams& adv_;
  std::unordered_map<long, LagTerms> cache_;
};

double entry(const SpaceTimePoint& a, const SpaceTimePoint& b, const KernelParams& p,
             const AdvectionParams& adv, LagCache& cache) {
  const long lag = a.step - b.step;
  const Eigen::Vector2d gamma(a.x - b.x, a.y - b.y);
  const LagTerms& t = cache.get(lag);
  const double w = static_cast<double>(lag);
  const double ks = std::exp(-gamma.squaredNorm() / (p.r_s * p.r_s));
  double k = p.alpha * (p.lambda * (ks * t.temporal) + (1.0 - p.lambda) * lagrangian_from_terms(gamma, w, adv, t));
  if (a.site == b.site && a.step == b.step) k += p.delta;
  return k;
}

}  // namespace

AdvectionParams AdvectionParams::clipped() const {
  AdvectionParams out = *this;
  Eigen::Matrix2d sym = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(sym);
  Eigen::Vector2d ev = eig.eigenvalues().cwiseMax(0.0);
  out.cov = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
  out.cov(1, 0) = out.cov(0, 1);
  return out;
}

void KernelParams::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::Validation, "kernel parameter " + what); };
  if (!(alpha > 0.0) || !std::isfinite(alpha)) bad("alpha must be > 0");
  if (!(lambda >= 0.0 && lambda <= 1.0)) bad("lambda must lie in [0, 1]");
  if (!(r_s > 0.0) || !std::isfinite(r_s)) bad("r_s must be > 0");
  if (temporal && (!(r_t > 0.0) || !std::isfinite(r_t))) bad("r_t must be > 0");
  if (!(delta >= 0.0) || !std::isfinite(delta)) bad("delta must be >= 0");
  if (!std::isfinite(beta0)) bad("beta0 must be finite");
  if (!advection.mean.allFinite() || !advection.cov.allFinite()) bad("advection must be finite");
  if (std::abs(advection.cov(0, 1) - advection.cov(1, 0)) > 1e-12) bad("advection covariance must be symmetric");
}

AdvectionParams estimate_advection(std::span<const double> u, std::span<const double> v, double scale) {
  if (u.size() != v.size()) throw Error(ErrorKind::Estimation, "u and v differ in length");
  if (u.empty()) throw Error(ErrorKind::Estimation, "empty advection window");
  if (u.size() < 10) throw Error(ErrorKind::Estimation, "advection needs at least 10 (u, v) samples");
  const auto n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double cuu = 0.0, cvv = 0.0, cuv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double du = u[i] - mu;
    const double dv = v[i] - mv;
    cuu += du * du;
    cvv += dv * dv;
    cuv += du * dv;
  }
  AdvectionParams adv;
  adv.mean = Eigen::Vector2d(mu, mv) * scale;
  const double s2 = scale * scale / (n - 1.0);
  adv.cov << cuu * s2, cuv * s2, cuv * s2, cvv * s2;
  return adv.clipped();
}

double separable_kernel(const Eigen::Vector2d& gamma, double w, double r_s, double r_t) {
  return std::exp(-gamma.squaredNorm() / (r_s * r_s)) * std::exp(-(w * w) / (r_t * r_t));
}

double lagrangian_kernel(const Eigen::Vector2d& gamma, double w, const AdvectionParams& adv) {
  const AdvectionParams a = adv.clipped();
  return lagrangian_from_terms(gamma, w, a, lag_terms(w, a, nullptr));
}

double combined_kernel(const Eigen::Vector2d& gamma, double w, const KernelParams& p) {
  const AdvectionParams adv = p.advection.clipped();
  const LagTerms t = lag_terms(w, adv, &p);
  const double ks = std::exp(-gamma.squaredNorm() / (p.r_s * p.r_s));
  double k = p.alpha * (p.lambda * (ks * t.temporal) + (1.0 - p.lambda) * lagrangian_from_terms(gamma, w, adv, t));
  if (gamma.squaredNorm() == 0.0 && w == 0.0) k += p.delta;
  return k;
}

Eigen::MatrixXd covariance_matrix(std::span<const SpaceTimePoint> points, const KernelParams& p) {
  const AdvectionParams adv = p.advection.clipped();
  LagCache cache(p, adv);
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j; i < n; ++i) {
      const double k = entry(points[static_cast<std::size_t>(i)], points[static_cast<std::size_t>(j)], p, adv, cache);
      K(i, j) = k;
      K(j, i) = k;
    }
  }
  return K;
}

Eigen::MatrixXd cross_covariance(std::span<const SpaceTimePoint> rows, std::span<const SpaceTimePoint> cols,
                                 const KernelParams& p) {
  const AdvectionParams adv = p.advection.clipped();
  LagCache cache(p, adv);
  Eigen::MatrixXd K(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      K(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = entry(rows[i], cols[j], p, adv, cache);
    }
  }
  return K;
}

}  // namespace windcast::kernels
