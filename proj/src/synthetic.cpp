#include "windcast/synthetic.hpp"

#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "windcast/error.hpp"
#include "windcast/features.hpp"
#include "windcast/gp.hpp"
#include "windcast/seed.hpp"

namespace windcast::synthetic {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kStepsPerDay = 144.0;

// Sum of slow sinusoids with unit standard deviation.
struct SlowSignal {
  std::vector<double> amplitude, period, phase;

  SlowSignal(std::uint64_t seed, int terms, double min_days, double max_days) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double power = 0.0;
    for (int k = 0; k < terms; ++k) {
      amplitude.push_back(0.5 + u(rng));
      period.push_back(kStepsPerDay * (min_days + (max_days - min_days) * u(rng)));
      phase.push_back(kTwoPi * u(rng));
      power += 0.5 * amplitude.back() * amplitude.back();
    }
    for (double& a : amplitude) a /= std::sqrt(power);
  }

  double operator()(double t) const {
    double s = 0.0;
    for (std::size_t k = 0; k < amplitude.size(); ++k) s += amplitude[k] * std::sin(kTwoPi * t / period[k] + phase[k]);
    return s;
  }
};

std::vector<double> moving_average(const std::vector<double>& x, std::size_t window) {
  const std::size_t half = window / 2;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size() - 1, i + half);
    double s = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) s += x[j];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

}  // namespace

void SimulationConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorKind::Config, "simulate: " + m); };
  if (days == 0) bad("days must be positive");
  if (sites.empty()) bad("at least one site is required");
  if (smoothing_steps == 0) bad("smoothing window must be positive");
  if (block_steps == 0) bad("block length must be positive");
  if (overlap_steps >= block_steps) bad("overlap must be shorter than a block");
  if (!(flow_speed >= 0.0)) bad("flow speed must be non-negative");
  if (!(bias.multiplicative > 0.0)) bad("multiplicative bias must be positive");
  if (bias.shift_steps < 0) bad("temporal shift must be non-negative");
  if (!(advection_spread >= 0.0)) bad("advection spread must be non-negative");
  residual.validate();
}

std::vector<std::vector<double>> simulate_residual(const std::vector<PlanarKm>& sites, std::size_t steps,
                                                   const kernels::KernelParams& params, std::size_t block_steps,
                                                   std::size_t overlap_steps, std::size_t dense_limit,
                                                   std::uint64_t seed) {
  const std::size_t ns = sites.size();
  if ((block_steps + overlap_steps) * ns > dense_limit) {
    throw Error(ErrorKind::Size, "simulation block of " + std::to_string((block_steps + overlap_steps) * ns) +
                                     " points exceeds the dense limit of " + std::to_string(dense_limit));
  }
  auto points_for = [&](std::size_t lo, std::size_t hi) {
    std::vector<gp::SpaceTimePoint> p;
    for (std::size_t t = lo; t < hi; ++t) {
      for (std::size_t s = 0; s < ns; ++s) {
        p.push_back({static_cast<int>(s), sites[s].x, sites[s].y, static_cast<long>(t)});
      }
    }
    return p;
  };

  std::vector<std::vector<double>> out(ns, std::vector<double>(steps, 0.0));
  std::size_t block = 0;
  for (std::size_t lo = 0; lo < steps; lo += block_steps, ++block) {
    const std::size_t hi = std::min(steps, lo + block_steps);
    const auto target = points_for(lo, hi);
    const std::uint64_t block_seed = derive_seed(seed, "residual-block", block);
    Eigen::VectorXd draw;
    if (lo == 0) {
      draw = gp::simulate_field(target, params, block_seed, dense_limit);
    } else {
      const std::size_t olo = lo >= overlap_steps ? lo - overlap_steps : 0;
      const auto cond = points_for(olo, lo);
      Eigen::VectorXd zc(static_cast<Eigen::Index>(cond.size()));
      for (std::size_t i = 0; i < cond.size(); ++i) {
        zc(static_cast<Eigen::Index>(i)) =
            out[static_cast<std::size_t>(cond[i].site)][static_cast<std::size_t>(cond[i].step)] - params.beta0;
      }
      const Eigen::MatrixXd Kcc = kernels::covariance_matrix(cond, params);
      const Eigen::MatrixXd Kct = kernels::cross_covariance(cond, target, params);
      const Eigen::MatrixXd Ktt = kernels::covariance_matrix(target, params);
      const auto f = gp::factorize(Kcc, "residual simulation");
      const Eigen::MatrixXd A = f.llt.solve(Kct);
      const Eigen::VectorXd mean = (Kct.transpose() * f.llt.solve(zc)).array() + params.beta0;
      Eigen::MatrixXd cov = Ktt - Kct.transpose() * A;
      cov = 0.5 * (cov + cov.transpose()).eval();
      draw = gp::gaussian_draws(mean, cov, 1, block_seed, "residual simulation").row(0).transpose();
    }
    for (std::size_t i = 0; i < target.size(); ++i) {
      out[static_cast<std::size_t>(target[i].site)][static_cast<std::size_t>(target[i].step)] =
          draw(static_cast<Eigen::Index>(i));
    }
  }
  return out;
}

SyntheticDataset simulate_dataset(const SimulationConfig& cfg) {
  cfg.validate();
  const std::size_t steps = cfg.days * 144 + 1;
  const std::size_t ns = cfg.sites.size();

  std::vector<LatLon> all;
  for (const auto& s : cfg.sites) all.push_back(s.position);
  for (const auto& s : cfg.extra_grid) all.push_back(s.position);
  const Projection proj = Projection::about_centroid(all);
  std::vector<PlanarKm> xy;
  for (const auto& s : cfg.sites) xy.push_back(proj.forward(s.position));

  const double theta0 = cfg.flow_direction_deg * std::numbers::pi / 180.0;
  const double swing = cfg.direction_swing_deg * std::numbers::pi / 180.0;
  const double km_per_step = kernels::kSpeedToKmPerLag * cfg.flow_speed;

  // Residual field, advected with the mean flow.
  kernels::KernelParams residual = cfg.residual;
  residual.advection.mean = km_per_step * Eigen::Vector2d(std::cos(theta0), std::sin(theta0));
  residual.advection.cov = cfg.advection_spread * Eigen::Matrix2d::Identity();
  const auto eta = simulate_residual(xy, steps, residual, cfg.block_steps, cfg.overlap_steps, cfg.dense_limit,
                                     derive_seed(cfg.seed, "residual"));

  const SlowSignal synoptic(derive_seed(cfg.seed, "synoptic"), 4, 1.0, 6.0);
  const SlowSignal pressure_drift(derive_seed(cfg.seed, "pressure"), 3, 2.0, 8.0);
  const SlowSignal humidity(derive_seed(cfg.seed, "humidity"), 3, 1.0, 4.0);
  const SlowSignal gust_factor(derive_seed(cfg.seed, "gust"), 3, 0.5, 3.0);
  std::mt19937_64 phase_rng(derive_seed(cfg.seed, "phases"));
  const double diurnal_phase = std::uniform_real_distribution<double>(0.0, kTwoPi)(phase_rng);
  const double swing_period = kStepsPerDay * 3.0;

  SyntheticDataset out;
  out.truth.assign(ns, std::vector<double>(steps));
  for (std::size_t s = 0; s < ns; ++s) {
    // A site downstream along the mean flow sees the mesoscale signal later.
    const double along = xy[s].x * std::cos(theta0) + xy[s].y * std::sin(theta0);
    const double delay = km_per_step > 0.0 ? along / km_per_step : 0.0;
    for (std::size_t t = 0; t < steps; ++t) {
      const double tt = static_cast<double>(t) - delay;
      const double meso = cfg.base_speed + cfg.synoptic_amplitude * synoptic(tt) +
                          cfg.diurnal_amplitude * std::sin(kTwoPi * tt / kStepsPerDay + diurnal_phase);
      out.truth[s][t] = std::max(0.0, meso + eta[s][t]);
    }
  }

  // Normalized temperature anomaly in [-1, 1]: diurnal cycle plus a slow term.
  const SlowSignal thermal(derive_seed(cfg.seed, "thermal"), 3, 1.5, 5.0);
  auto temperature_anomaly = [&](double t) {
    return std::clamp(0.6 * std::sin(kTwoPi * t / kStepsPerDay + diurnal_phase - 1.0) + 0.4 * thermal(t) / 1.5, -1.0,
                      1.0);
  };

  out.smoothed_truth.resize(ns);
  out.nwp_fine.resize(ns);
  const NwpBias& b = cfg.bias;
  for (std::size_t s = 0; s < ns; ++s) {
    out.smoothed_truth[s] = moving_average(out.truth[s], cfg.smoothing_steps);
    out.nwp_fine[s].resize(steps);
    for (std::size_t t = 0; t < steps; ++t) {
      const std::size_t src = t >= static_cast<std::size_t>(b.shift_steps) ? t - static_cast<std::size_t>(b.shift_steps) : 0;
      double v = out.smoothed_truth[s][src];
      if (!b.is_zero()) {
        const double td = static_cast<double>(t);
        const double mult = b.multiplicative + b.stability_coupling * temperature_anomaly(td);
        v = mult * v + b.additive + b.drift_amplitude * std::sin(kTwoPi * td / (6.0 * b.drift_period_hours));
        v = std::max(0.0, v);
      }
      out.nwp_fine[s][t] = v;
    }
  }

  // Observations on the 10-minute grid.
  const std::size_t obs_steps = cfg.days * 144;
  for (std::size_t s = 0; s < ns; ++s) {
    ObservationSeries o;
    o.site = Site{cfg.sites[s].id, cfg.sites[s].position, xy[s]};
    o.grid = TimeGrid(cfg.start, kTenMinutes, obs_steps);
    o.values.assign(out.truth[s].begin(), out.truth[s].begin() + static_cast<long>(obs_steps));
    out.observations.push_back(std::move(o));
  }

  // Hourly NWP at a grid point on each site plus the extra points. Heights of
  // the 850 hPa surface follow a plane whose gradient is in geostrophic
  // balance with the NWP wind.
  const features::GeostrophicConstants k;
  double mean_lat = 0.0;
  for (const auto& p : all) mean_lat += p.lat;
  mean_lat /= static_cast<double>(all.size());
  const double f = 2.0 * k.earth_rotation * std::sin(mean_lat * std::numbers::pi / 180.0);
  const std::size_t hours = cfg.days * 24 + 1;

  std::vector<SiteSpec> grid;
  for (std::size_t s = 0; s < ns; ++s) grid.push_back({"G" + std::to_string(s + 1), cfg.sites[s].position});
  for (const auto& g : cfg.extra_grid) grid.push_back(g);

  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    NwpSeries n;
    const PlanarKm gxy = proj.forward(grid[gi].position);
    n.site = Site{grid[gi].id, grid[gi].position, gxy};
    n.grid = TimeGrid(cfg.start, kOneHour, hours);
    std::vector<double> speed(hours), u(hours), v(hours), pres(hours), temp(hours), gust(hours), rh(hours);
    for (std::size_t h = 0; h < hours; ++h) {
      const std::size_t t = h * 6;
      double own = 0.0;
      if (gi < ns) {
        own = out.nwp_fine[gi][t];
      } else {
        for (std::size_t s = 0; s < ns; ++s) own += out.nwp_fine[s][t];
        own /= static_cast<double>(ns);
      }
      double regional = 0.0;
      for (std::size_t s = 0; s < ns; ++s) regional += out.nwp_fine[s][t];
      regional /= static_cast<double>(ns);

      const double td = static_cast<double>(t);
      const double dir = theta0 + swing * std::sin(kTwoPi * td / swing_period);
      speed[h] = own;
      u[h] = own * std::cos(dir);
      v[h] = own * std::sin(dir);
      temp[h] = 278.0 + 4.0 * temperature_anomaly(td);
      const double ug = regional * std::cos(dir);
      const double vg = regional * std::sin(dir);
      const double c1 = vg * f * 1000.0 / k.gravity;
      const double c2 = -ug * f * 1000.0 / k.gravity;
      const double height = 1440.0 + 30.0 * pressure_drift(td) + c1 * gxy.x + c2 * gxy.y;
      pres[h] = k.reference_pressure * std::exp(k.gravity * height / (k.gas_constant * temp[h]));
      gust[h] = own * (1.35 + 0.1 * gust_factor(td)) + 0.5;
      rh[h] = std::clamp(75.0 + 10.0 * humidity(td) - 0.5 * (own - cfg.base_speed), 5.0, 100.0);
    }
    n.variables[var::kWindSpeed] = {"m/s", speed, true};
    n.variables[var::kU] = {"m/s", u, true};
    n.variables[var::kV] = {"m/s", v, true};
    n.variables[var::kPressure] = {"hPa", pres, true};
    n.variables[var::kTemperature] = {"K", temp, true};
    n.variables[var::kGust] = {"m/s", gust, true};
    n.variables[var::kHumidity] = {"%", rh, true};
    out.nwp.push_back(std::move(n));
  }

  for (std::size_t s = 0; s < ns; ++s) out.catalog[cfg.sites[s].id] = cfg.sites[s].position;
  for (const auto& g : grid) out.catalog[g.id] = g.position;
  return out;
}

void write_dataset(const SyntheticDataset& data, const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(std::filesystem::path(dir) / name);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + name + " in " + dir);
    return f;
  };
  {
    auto f = open("sites.csv");
    f << "site_id,lat,lon\n";
    for (const auto& [id, p] : data.catalog) f << fmt::format("{},{:.6f},{:.6f}\n", id, p.lat, p.lon);
  }
  {
    auto f = open("observations.csv");
    f << "timestamp,site_id,wind_speed_ms\n";
    for (const auto& o : data.observations) {
      for (std::size_t i = 0; i < o.values.size(); ++i) {
        f << format_iso8601(o.grid.at(i)) << ',' << o.site.id << ',';
        if (o.values[i]) f << fmt::format("{:.17g}", *o.values[i]);
        f << '\n';
      }
    }
  }
  {
    auto f = open("nwp.csv");
    if (data.nwp.empty()) return;
    std::vector<std::string> names;
    for (const auto& [name, _] : data.nwp.front().variables) names.push_back(name);
    f << "timestamp,site_id";
    for (const auto& n : names) f << ',' << n;
    f << '\n';
    for (const auto& n : data.nwp) {
      for (std::size_t i = 0; i < n.grid.length(); ++i) {
        f << format_iso8601(n.grid.at(i)) << ',' << n.site.id;
        for (const auto& name : names) f << fmt::format(",{:.17g}", n.variables.at(name).values[i]);
        f << '\n';
      }
    }
  }
}

}  // namespace windcast::synthetic
