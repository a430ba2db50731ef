// Acceptance run: each criterion prints one PASS/FAIL line with its measured
// quantities; the exit status is nonzero when any criterion fails.
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "windcast/backtest.hpp"
#include "windcast/calibration.hpp"
#include "windcast/cli.hpp"
#include "windcast/gp.hpp"
#include "windcast/kernels.hpp"
#include "windcast/metrics.hpp"
#include "windcast/pipeline.hpp"
#include "windcast/power.hpp"
#include "windcast/synthetic.hpp"

using namespace windcast;
using kernels::AdvectionParams;
using kernels::KernelParams;
using kernels::SpaceTimePoint;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int number;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

// Scratch directory removed on exit.
struct Scratch {
  std::filesystem::path path;
  explicit Scratch(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / fmt::format("windcast_accept_{}_{}", tag, std::random_device{}());
    std::filesystem::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

KernelParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  KernelParams p;
  p.alpha = 0.1 + 5.0 * u(rng);
  p.lambda = u(rng);
  p.r_s = 1.0 + 100.0 * u(rng);
  p.r_t = 0.5 + 20.0 * u(rng);
  p.delta = 1e-4 + 0.5 * u(rng);
  p.temporal = u(rng) < 0.9;
  p.advection.mean = Eigen::Vector2d(16.0 * u(rng) - 8.0, 16.0 * u(rng) - 8.0);
  const Eigen::Matrix2d A = Eigen::Matrix2d::Random();
  p.advection.cov = A * A.transpose() * u(rng) + 1e-3 * Eigen::Matrix2d::Identity();
  return p;
}

std::vector<SpaceTimePoint> random_points(std::mt19937_64& rng, int n, int sites, int steps) {
  std::uniform_real_distribution<double> x(-50.0, 50.0);
  std::uniform_int_distribution<int> s(0, sites - 1), t(0, steps - 1);
  std::vector<Eigen::Vector2d> loc(static_cast<std::size_t>(sites));
  for (auto& l : loc) l = Eigen::Vector2d(x(rng), x(rng));
  std::vector<SpaceTimePoint> pts;
  for (int i = 0; i < n; ++i) {
    const int k = s(rng);
    pts.push_back({k, loc[static_cast<std::size_t>(k)].x(), loc[static_cast<std::size_t>(k)].y(), t(rng)});
  }
  return pts;
}

// Covariance written out from the two component kernels.
double kernel_between(const SpaceTimePoint& a, const SpaceTimePoint& b, const KernelParams& p) {
  const Eigen::Vector2d gamma(a.x - b.x, a.y - b.y);
  const double w = static_cast<double>(a.step - b.step);
  const double sep = kernels::separable_kernel(gamma, p.temporal ? w : 0.0, p.r_s, p.temporal ? p.r_t : 1.0);
  double k = p.alpha * (p.lambda * sep + (1.0 - p.lambda) * kernels::lagrangian_kernel(gamma, w, p.advection));
  if (a.site == b.site && a.step == b.step) k += p.delta;
  return k;
}

// ---------------------------------------------------------------------------

Outcome kernel_validity() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(2, 50);
  double worst = 0.0;
  int failures = 0;
  for (int c = 0; c < 100; ++c) {
    const auto p = random_params(rng);
    const auto pts = random_points(rng, size(rng), 6, 12);
    const auto K = kernels::covariance_matrix(pts, p);
    if (!(K - K.transpose()).isZero(0.0)) ++failures;
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K, Eigen::EigenvaluesOnly).eigenvalues();
    const double ratio = ev.minCoeff() / ev.maxCoeff();
    worst = std::min(worst, ratio);
    if (ev.minCoeff() < -1e-8 * ev.maxCoeff()) ++failures;
  }
  std::uniform_real_distribution<double> g(-60.0, 60.0), w(-20.0, 20.0);
  double max_asym = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto p = random_params(rng);
    const Eigen::Vector2d gamma(g(rng), g(rng));
    const double lag = w(rng);
    max_asym = std::max(max_asym, std::abs(kernels::combined_kernel(gamma, lag, p) - kernels::combined_kernel(-gamma, -lag, p)));
  }
  return {failures == 0 && max_asym <= 1e-12,
          fmt::format("min eig/max eig = {:.3g}, max |K(g,w) - K(-g,-w)| = {:.3g}", worst, max_asym)};
}

Outcome lagrangian_closed_form() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int inside = 0;
  double worst_z = 0.0;
  for (int c = 0; c < 50; ++c) {
    AdvectionParams a;
    a.mean = Eigen::Vector2d(6.0 * u(rng) - 3.0, 6.0 * u(rng) - 3.0);
    const Eigen::Matrix2d A = Eigen::Matrix2d::Random();
    a.cov = 0.3 * A * A.transpose() + 0.05 * Eigen::Matrix2d::Identity();
    const double w = (u(rng) < 0.5 ? -1.0 : 1.0) * std::ceil(3.0 * u(rng) + 1e-9);
    const Eigen::Vector2d gamma = a.mean * w + Eigen::Vector2d(2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0);
    const Eigen::Matrix2d L = a.cov.llt().matrixL();
    const int N = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < N; ++i) {
      const Eigen::Vector2d theta = a.mean + L * Eigen::Vector2d(n(rng), n(rng));
      const double v = std::exp(-(gamma - theta * w).squaredNorm());
      sum += v;
      sum2 += v * v;
    }
    const double mean = sum / N;
    const double se = std::sqrt(std::max(sum2 / N - mean * mean, 0.0) / N);
    const double diff = std::abs(kernels::lagrangian_kernel(gamma, w, a) - mean);
    const double z = se > 0.0 ? diff / se : (diff <= 1e-12 ? 0.0 : INFINITY);
    if (z > 3.0) spdlog::warn("case {}: w = {}, closed form {:.6g}, Monte Carlo {:.6g}, SE {:.3g}", c, w, kernels::lagrangian_kernel(gamma, w, a), mean, se);
    worst_z = std::max(worst_z, z);
    if (z <= 3.0) ++inside;
  }
  return {inside == 50, fmt::format("{}/50 cases within 3 SE, largest |diff|/SE = {:.2f}", inside, worst_z)};
}

Outcome asymmetry() {
  KernelParams p;
  p.alpha = 1.0;
  p.lambda = 0.0;
  p.delta = 0.01;
  p.advection.mean = Eigen::Vector2d(6.0, 0.0);
  p.advection.cov = 0.1 * Eigen::Matrix2d::Identity();
  const double down = kernels::combined_kernel(Eigen::Vector2d(6.0, 0.0), 1.0, p);
  const double up = kernels::combined_kernel(Eigen::Vector2d(-6.0, 0.0), 1.0, p);

  // Site B sits 6 km downstream of site A; 1000 steps each.
  std::vector<SpaceTimePoint> pts;
  const long steps = 1000;
  for (long t = 0; t < steps; ++t) {
    pts.push_back({0, 0.0, 0.0, t});
    pts.push_back({1, 6.0, 0.0, t});
  }
  int ordered = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Eigen::VectorXd z = gp::simulate_field(pts, p, seed, 4000);
    std::vector<double> a(steps), b(steps);
    for (long t = 0; t < steps; ++t) {
      a[static_cast<std::size_t>(t)] = z(2 * t);
      b[static_cast<std::size_t>(t)] = z(2 * t + 1);
    }
    auto lag1 = [&](const std::vector<double>& x, const std::vector<double>& y) {
      // corr(y(t + 1), x(t))
      const std::size_t m = x.size() - 1;
      double mx = 0, my = 0;
      for (std::size_t t = 0; t < m; ++t) mx += x[t], my += y[t + 1];
      mx /= m;
      my /= m;
      double sxy = 0, sxx = 0, syy = 0;
      for (std::size_t t = 0; t < m; ++t) {
        sxy += (x[t] - mx) * (y[t + 1] - my);
        sxx += (x[t] - mx) * (x[t] - mx);
        syy += (y[t + 1] - my) * (y[t + 1] - my);
      }
      return sxy / std::sqrt(sxx * syy);
    };
    if (lag1(a, b) > lag1(b, a)) ++ordered;
  }
  return {down > up && ordered >= 18,
          fmt::format("K((6,0),1) = {:.4g} > K((-6,0),1) = {:.4g}; ordering in {}/20 seeds", down, up, ordered)};
}

Outcome gp_exactness() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> size(3, 20);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    auto p = random_params(rng);
    p.delta = 0.05 + 0.2 * std::abs(n(rng));
    const int m = size(rng);
    // Distinct (site, step) pairs: 4 sites over m steps.
    std::uniform_real_distribution<double> x(-30.0, 30.0);
    std::vector<Eigen::Vector2d> loc(4);
    for (auto& l : loc) l = Eigen::Vector2d(x(rng), x(rng));
    std::vector<SpaceTimePoint> pts, targets;
    for (int i = 0; i < m; ++i) pts.push_back({i % 4, loc[i % 4].x(), loc[i % 4].y(), i / 4});
    for (int j = 0; j < 5; ++j) targets.push_back({j % 4, loc[j % 4].x(), loc[j % 4].y(), m / 4 + 1 + j});
    targets.push_back({-1, 3.0, 4.0, 1});
    Eigen::VectorXd z(m);
    for (int i = 0; i < m; ++i) z(i) = 2.0 + n(rng);
    Eigen::VectorXd mu(static_cast<Eigen::Index>(targets.size()));
    for (Eigen::Index j = 0; j < mu.size(); ++j) mu(j) = n(rng);

    Eigen::MatrixXd K(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) K(i, j) = kernel_between(pts[i], pts[j], p);
    const Eigen::MatrixXd Ki = K.inverse();
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(m);
    const double s = one.dot(Ki * one);
    const double beta0 = one.dot(Ki * z) / s;

    const auto fitted = gp::condition(z, pts, p);
    const std::vector<double> muv(mu.data(), mu.data() + mu.size());
    const auto d = gp::predict(fitted, targets, muv);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      Eigen::VectorXd k(m);
      for (int i = 0; i < m; ++i) k(i) = kernel_between(pts[i], targets[j], p);
      const double u = 1.0 - k.dot(Ki * one);
      const double mean = mu(j) + beta0 + k.dot(Ki * (z - beta0 * one));
      const double var = p.alpha + p.delta - k.dot(Ki * k) + u * u / s;
      worst = std::max({worst, std::abs(mean - d.mean(j)), std::abs(var - d.variance(j))});
    }
  }

  // Noise-free kriging reproduces the training values.
  double interp = 0.0;
  for (int c = 0; c < 20; ++c) {
    auto p = random_params(rng);
    p.delta = 0.0;
    p.lambda = 1.0;
    p.r_s = 10.0;
    std::vector<SpaceTimePoint> pts;
    for (int i = 0; i < 12; ++i) pts.push_back({i, 15.0 * i, -7.0 * (i % 3), i % 2});
    Eigen::VectorXd z(12);
    for (auto& v : z) v = n(rng);
    const auto fitted = gp::condition(z, pts, p);
    const std::vector<double> mu(12, 0.0);
    const auto d = gp::predict(fitted, pts, mu);
    interp = std::max(interp, (d.mean - z).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-8 && interp <= 1e-6,
          fmt::format("max |predict - oracle| = {:.3g}, max interpolation error = {:.3g}", worst, interp)};
}

Outcome hyperparameter_recovery() {
  KernelParams truth;
  truth.alpha = 1.0;
  truth.lambda = 0.3;
  truth.r_s = 20.0;
  truth.r_t = 6.0;
  truth.delta = 0.01;
  truth.advection.mean = Eigen::Vector2d(3.0, 1.0);
  truth.advection.cov = 0.3 * Eigen::Matrix2d::Identity();

  std::vector<double> rs, rt;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    std::mt19937_64 rng(5000 + rep);
    std::uniform_real_distribution<double> x(0.0, 60.0);
    std::vector<SpaceTimePoint> pts;
    std::vector<Eigen::Vector2d> loc(10);
    for (auto& l : loc) l = Eigen::Vector2d(x(rng), x(rng));
    for (long t = 0; t < 50; ++t)
      for (int s = 0; s < 10; ++s) pts.push_back({s, loc[s].x(), loc[s].y(), t});
    const Eigen::VectorXd z = gp::simulate_field(pts, truth, 7000 + rep, 1000);
    KernelParams init;
    init.advection = truth.advection;
    const auto fit = gp::fit_gp(z, pts, init, gp::FitOptions{});
    rs.push_back(fit.params.r_s);
    rt.push_back(fit.params.r_t);
  }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const double mrs = median(rs), mrt = median(rt);
  const double ers = std::abs(mrs - 20.0) / 20.0, ert = std::abs(mrt - 6.0) / 6.0;
  return {ers <= 0.3 && ert <= 0.3,
          fmt::format("median r_s = {:.2f} ({:.0f}% off), median r_t = {:.2f} ({:.0f}% off)", mrs, 100 * ers, mrt,
                      100 * ert)};
}

Outcome calibration_recovery(const AlignedDataset& ds) {
  const features::FeatureContext ctx(ds);
  // Well-scaled regressors: raw pressure (~1000 hPa) and several 10-minute
  // lags of the interpolated hourly NWP are nearly collinear with the
  // intercept and with each other, which no solver can separate at this noise.
  const std::vector<features::FeatureSpec> specs{{var::kU, 0, 0}, {var::kV, -2, 0}};
  std::vector<calibration::Point> pts;
  for (std::size_t s = 0; s < ds.site_count(); ++s) {
    const auto loc = features::site_location(ds, s);
    for (std::size_t t = 30; t + 30 < ds.length(); ++t) pts.push_back({loc, t});
  }
  const auto d = calibration::build_design(ctx, specs, 1, pts);
  // Columns: 1, Y~(0..1), then H_j and H_j * Y~ per spec.
  const std::vector<double> a{0.6, 0.3}, b{1.5, -0.8}, c{0.2, -0.05};
  const double intercept = 1.0;
  std::mt19937_64 rng(606);
  std::normal_distribution<double> noise(0.0, 0.01);
  Eigen::VectorXd truth(d.X.cols());
  truth << intercept, a[0], a[1], b[0], b[1], c[0], c[1];
  Eigen::VectorXd y = d.X * truth;
  for (auto& v : y) v += noise(rng);
  const auto model = calibration::fit_mu(d, y);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(model.a[i] - a[i]));
  for (std::size_t j = 0; j < b.size(); ++j) {
    worst = std::max({worst, std::abs(model.b[j] - b[j]), std::abs(model.c[j] - c[j])});
  }
  return {worst <= 0.05 && model.rank_deficient.empty(),
          fmt::format("max |a, b, c error| = {:.3g} over {} rows, intercept {:.4f}", worst, d.X.rows(),
                      model.intercept)};
}

Outcome published_arithmetic() {
  const double ours = 1.360;
  const std::vector<std::pair<double, double>> rows{{1.668, 18.5}, {1.631, 16.6}, {1.653, 17.7}, {1.873, 27.4},
                                                    {1.866, 27.1}};
  double worst = 0.0;
  std::string got;
  for (const auto& [base, published] : rows) {
    const double imp = evaluation::improvement_percent(base, ours);
    worst = std::max(worst, std::abs(imp - published));
    got += fmt::format("{:.2f} ", imp);
  }
  const auto n1 = evaluation::record_count(451, 36, 2), n2 = evaluation::record_count(216, 36, 2);
  return {worst <= 0.05 && n1 == 32472 && n2 == 15552,
          fmt::format("improvements {}(max dev {:.3f} pp); record counts {} and {}", got, worst, n1, n2)};
}

Outcome crps_correctness() {
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    // The Monte Carlo standard error is about 0.6 sd / 1000 at 1e6 samples, so
    // sd is kept where a 1e-3 tolerance resolves the difference.
    const double mean = 10.0 * u(rng), sd = 0.1 + 0.4 * u(rng), obs = mean + 3.0 * sd * (2.0 * u(rng) - 1.0);
    // CRPS = E|X - y| - E|X - X'| / 2
    const int N = 1000000;
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
      const double x1 = mean + sd * n(rng), x2 = mean + sd * n(rng);
      sum += std::abs(x1 - obs) - 0.5 * std::abs(x1 - x2);
    }
    worst = std::max(worst, std::abs(evaluation::crps_gaussian(mean, sd, obs) - sum / N));
  }
  double limit = 0.0;
  for (int c = 0; c < 100; ++c) {
    const double mean = 20.0 * u(rng), obs = 20.0 * u(rng);
    limit = std::max(limit, std::abs(evaluation::crps_gaussian(mean, 1e-12, obs) - std::abs(mean - obs)));
  }
  return {worst <= 1e-3 && limit <= 1e-9,
          fmt::format("max |closed form - Monte Carlo| = {:.3g}, sd -> 0 error = {:.3g}", worst, limit)};
}

Outcome pce_properties() {
  std::vector<std::pair<double, double>> bins;
  for (int i = 0; i <= 2500; ++i) {
    const double s = 0.01 * i;
    bins.emplace_back(s, 1.0 / (1.0 + std::exp(-(s - 9.0))));
  }
  const auto curve = evaluation::power_curve_from_bins(bins);
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> v(0.0, 25.0), gu(0.01, 0.99);
  int half = 0, swapped = 0;
  for (int i = 0; i < 10000; ++i) {
    const double y = v(rng), f = v(rng), g = gu(rng);
    const double P = curve(y), Ph = curve(f);
    if (evaluation::pce(P, Ph, f, y, 0.5) == 0.5 * std::abs(P - Ph)) ++half;
    // Exchanging the roles of forecast and observation and of the two
    // branch weights leaves the error unchanged.
    if (evaluation::pce_weighted(P, Ph, f, y, g, 1.0 - g) == evaluation::pce_weighted(Ph, P, y, f, 1.0 - g, g)) {
      ++swapped;
    }
  }
  return {half == 10000 && swapped == 10000,
          fmt::format("g = 0.5 identity {}/10000, branch swap {}/10000", half, swapped)};
}

Outcome end_to_end(const AlignedDataset& ds) {
  evaluation::BacktestConfig cfg;
  cfg.jobs = 1;
  const auto result = evaluation::run_backtest(ds, cfg);
  const auto mae = evaluation::mae_table(result.records, cfg.models);
  double slowest = 0.0;
  for (const auto& a : result.audits) slowest = std::max(slowest, a.seconds);
  bool ok = result.failed_rolls == 0 && result.rolls == 100;
  std::string row;
  for (int b = 1; b <= 6; ++b) {
    auto at = [&](const char* m) { return mae.get(m, b).value_or(NAN); };
    const double st = at(evaluation::kModelMain), pe = at(evaluation::kModelPersistence), nw = at(evaluation::kModelNwp),
                 go = at(evaluation::kModelGop);
    if (b >= 4 && !(st < pe)) ok = false;
    if (b <= 2 && !(st < nw)) ok = false;
    row += fmt::format(" h{}: stgp {:.3f} pers {:.3f} nwp {:.3f} gop {:.3f};", b, st, pe, nw, go);
  }
  ok = ok && slowest < 151.2;
  return {ok, fmt::format("{} rolls, slowest roll {:.1f} s;{}", result.rolls, slowest, row)};
}

Outcome gop_identity(const AlignedDataset& ds) {
  const features::FeatureContext ctx(ds);
  pipeline::ModelSettings settings;
  const std::size_t issue = 1439;
  const auto restricted = pipeline::fit_roll(ctx, issue, pipeline::gop_restriction(ctx, settings));
  const auto gop = pipeline::fit_gop(ctx, issue, settings);
  const auto targets = pipeline::site_targets(ctx, settings.horizon);
  const auto a = pipeline::predict_targets(restricted, ctx, targets);
  const auto b = pipeline::predict_gop(gop, ctx, targets);
  const double dm = (a.mean - b.mean).cwiseAbs().maxCoeff();
  const double dv = (a.variance - b.variance).cwiseAbs().maxCoeff();
  return {dm <= 1e-8 && dv <= 1e-8, fmt::format("max |mean diff| = {:.3g}, max |variance diff| = {:.3g}", dm, dv)};
}

AlignedDataset simulate_through_cli(const Scratch& dir) {
  const auto ini = (dir.path / "simulate.ini").string();
  {
    std::FILE* f = std::fopen(ini.c_str(), "w");
    std::fputs("[run]\nseed = 2024\n[simulate]\ndays = 30\n", f);
    std::fclose(f);
  }
  const int code = cli::run({"--config", ini, "--out", dir.path.string(), "-q", "simulate"});
  if (code != 0) throw std::runtime_error(fmt::format("simulate exited with {}", code));
  const auto catalog = load_site_catalog((dir.path / "sites.csv").string());
  return align_full(load_observations((dir.path / "observations.csv").string()),
                    load_nwp((dir.path / "nwp.csv").string()), catalog);
}

}  // namespace

// Optional arguments select criteria by number; none runs them all.
int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  spdlog::set_level(spdlog::level::warn);
  Scratch scratch("data");
  std::optional<AlignedDataset> ds;
  auto dataset = [&]() -> const AlignedDataset& {
    if (!ds) ds = simulate_through_cli(scratch);
    return *ds;
  };

  const std::vector<Criterion> criteria{
      {1, "kernel validity", 30, kernel_validity},
      {2, "Lagrangian closed form vs expectation", 120, lagrangian_closed_form},
      {3, "asymmetry along the flow", 300, asymmetry},
      {4, "GP exactness", 30, gp_exactness},
      {5, "hyperparameter recovery", 900, hyperparameter_recovery},
      {6, "calibration recovery", 10, [&] { return calibration_recovery(dataset()); }},
      {7, "published arithmetic", 1, published_arithmetic},
      {8, "CRPS correctness", 60, crps_correctness},
      {9, "PCE properties", 5, pce_properties},
      {10, "end-to-end synthetic backtest", 1800, [&] { return end_to_end(dataset()); }},
      {11, "GOP as a restriction", 60, [&] { return gop_identity(dataset()); }},
  };

  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end()) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs <= c.budget_seconds;
    const bool pass = o.pass && in_budget;
    if (!pass) ++failed;
    fmt::print("[{}] criterion {:2d} {}: {} ({:.1f} s of {:.0f} s){}\n", pass ? "PASS" : "FAIL", c.number, c.name,
               o.detail, secs, c.budget_seconds, in_budget ? "" : " over budget");
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
