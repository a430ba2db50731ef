#include "windcast/features.hpp"

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "windcast/error.hpp"

namespace windcast::features {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

const std::vector<std::string>& nwp_families() {
  static const std::vector<std::string> names = {var::kGust,     var::kPressure, var::kTemperature,
                                                 var::kHumidity, var::kU,        var::kV};
  return names;
}

double coriolis_factor(double latitude_deg, const GeostrophicConstants& k) {
  if (std::abs(latitude_deg) < k.min_abs_latitude) {
    throw Error(ErrorKind::EquatorSingularity,
                "latitude " + std::to_string(latitude_deg) + " too close to the equator");
  }
  return k.gravity / (2.0 * k.earth_rotation * std::sin(latitude_deg * kDegToRad));
}

}  // namespace

std::vector<std::optional<double>> pressure_differential(std::span<const double> pressure_i,
                                                         std::span<const double> pressure_j, int d) {
  if (pressure_i.size() != pressure_j.size()) {
    throw Error(ErrorKind::FeatureInput, "pressure series differ in length");
  }
  const auto n = static_cast<std::ptrdiff_t>(pressure_i.size());
  std::vector<std::optional<double>> out(pressure_i.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    const std::ptrdiff_t shifted = t + d;
    if (shifted >= 0 && shifted < n) out[t] = pressure_i[t] - pressure_j[shifted];
  }
  return out;
}

std::vector<std::optional<double>> pressure_differential(const AlignedDataset& ds, const std::string& nwp_site_i,
                                                         const std::string& nwp_site_j, int d) {
  if (!ds.nwp_interp.count(nwp_site_i) || !ds.nwp_interp.count(nwp_site_j)) {
    throw Error(ErrorKind::FeatureInput, "pressure differential between unknown grid points");
  }
  return pressure_differential(ds.nwp_at(nwp_site_i, var::kPressure), ds.nwp_at(nwp_site_j, var::kPressure), d);
}

double GeostrophicComponents::speed() const { return std::hypot(u, v); }

double geopotential_height(const Barometer& b, const GeostrophicConstants& k) {
  if (!(b.pressure > 0.0) || !(b.temperature > 0.0)) {
    throw Error(ErrorKind::FeatureInput, "barometer pressure and temperature must be positive");
  }
  return b.baseline_height + k.gas_constant * b.temperature / k.gravity * std::log(b.pressure / k.reference_pressure);
}

PlaneFit fit_plane(std::span<const PlanarKm> xy, std::span<const double> height) {
  const auto n = static_cast<Eigen::Index>(xy.size());
  if (n < 3 || xy.size() != height.size()) {
    throw Error(ErrorKind::DegenerateFit, "plane fit needs at least 3 stations");
  }
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd h(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = xy[i].x;
    A(i, 2) = xy[i].y;
    h(i) = height[i];
  }
  // Collinearity shows up as a vanishing singular value of the centred
  // coordinate block.
  Eigen::MatrixXd centred = A.rightCols(2).rowwise() - A.rightCols(2).colwise().mean();
  const Eigen::JacobiSVD<Eigen::MatrixXd> geometry(centred);
  const auto sv = geometry.singularValues();
  if (sv(0) == 0.0 || sv(1) <= 1e-9 * sv(0)) {
    throw Error(ErrorKind::DegenerateFit, "barometer stations are collinear");
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(h);
  const Eigen::VectorXd r = h - A * c;
  return PlaneFit{c(0), c(1), c(2), std::sqrt(r.squaredNorm() / static_cast<double>(n))};
}

GeostrophicComponents geostrophic_from_plane(const PlaneFit& plane, double latitude_deg,
                                             const GeostrophicConstants& k) {
  const double factor = coriolis_factor(latitude_deg, k);
  // Plane slopes are per km; the balance needs per metre.
  const double dh_dx = plane.c1 / 1000.0;
  const double dh_dy = plane.c2 / 1000.0;
  return GeostrophicComponents{-factor * dh_dy, factor * dh_dx};
}

std::vector<double> geostrophic_wind(std::span<const Barometer> stations, std::span<const double> latitudes_deg,
                                     const GeostrophicConstants& k) {
  std::vector<PlanarKm> xy;
  std::vector<double> height;
  for (const auto& b : stations) {
    xy.push_back(b.xy);
    height.push_back(geopotential_height(b, k));
  }
  const PlaneFit plane = fit_plane(xy, height);
  std::vector<double> out;
  out.reserve(latitudes_deg.size());
  for (double lat : latitudes_deg) out.push_back(geostrophic_from_plane(plane, lat, k).speed());
  return out;
}

Location site_location(const AlignedDataset& ds, std::size_t site) {
  const Site& s = ds.sites.at(site);
  return Location{ds.nwp_source.at(s.id), s.position.lat, s.xy};
}

Location location_at(const AlignedDataset& ds, const LatLon& position) {
  const PlanarKm xy = ds.projection.forward(position);
  const Site* best = nullptr;
  double best_d = 0.0;
  for (const auto& g : ds.nwp_sites) {
    const double d = std::hypot(g.xy.x - xy.x, g.xy.y - xy.y);
    if (best == nullptr || d < best_d) {
      best = &g;
      best_d = d;
    }
  }
  if (best == nullptr) throw Error(ErrorKind::FeatureInput, "dataset has no NWP grid points");
  return Location{best->id, position.lat, xy};
}

FeatureContext::FeatureContext(const AlignedDataset& ds, const GeostrophicConstants& k)
    : ds_(&ds), constants_(k) {
  std::vector<const Site*> barometers;
  for (const auto& g : ds.nwp_sites) {
    const auto& vars = ds.nwp_interp.at(g.id);
    if (vars.count(var::kPressure)) barometers.push_back(&g);
  }
  // Pressure differential pair: the two most distant grid points.
  double widest = -1.0;
  for (std::size_t a = 0; a < barometers.size(); ++a) {
    for (std::size_t b = a + 1; b < barometers.size(); ++b) {
      const double d = distance_km(*barometers[a], *barometers[b]);
      if (d > widest) {
        widest = d;
        pair_i_ = barometers[a]->id;
        pair_j_ = barometers[b]->id;
      }
    }
  }

  std::vector<const Site*> with_temp;
  for (const Site* g : barometers) {
    if (ds.nwp_interp.at(g->id).count(var::kTemperature)) with_temp.push_back(g);
  }
  if (with_temp.size() >= 3) {
    std::vector<PlanarKm> xy;
    for (const Site* g : with_temp) xy.push_back(g->xy);
    try {
      std::vector<double> probe(with_temp.size(), 0.0);
      for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = static_cast<double>(i);
      fit_plane(xy, probe);  // geometry check only
      gradient_.resize(ds.length());
      std::vector<double> height(with_temp.size());
      for (std::size_t t = 0; t < ds.length(); ++t) {
        for (std::size_t i = 0; i < with_temp.size(); ++i) {
          const Barometer b{with_temp[i]->xy, with_temp[i]->position.lat,
                            ds.nwp_at(with_temp[i]->id, var::kPressure)[t],
                            ds.nwp_at(with_temp[i]->id, var::kTemperature)[t], 0.0};
          height[i] = geopotential_height(b, constants_);
        }
        const PlaneFit plane = fit_plane(xy, height);
        gradient_[t] = std::hypot(plane.c1, plane.c2) / 1000.0;
      }
    } catch (const Error& e) {
      spdlog::warn("geostrophic wind unavailable: {}", e.what());
      gradient_.clear();
    }
  }
}

bool FeatureContext::has_family(const std::string& family) const {
  if (family == kPressureDifferential) return !pair_i_.empty();
  if (family == kGeostrophic) return !gradient_.empty();
  return ds_->has_variable(family);
}

std::vector<std::string> FeatureContext::available_families() const {
  std::vector<std::string> out;
  for (const auto& name : nwp_families()) {
    if (has_family(name)) out.push_back(name);
  }
  if (has_family(kPressureDifferential)) out.emplace_back(kPressureDifferential);
  if (has_family(kGeostrophic)) out.emplace_back(kGeostrophic);
  return out;
}

std::optional<double> FeatureContext::value(const std::string& variable, int lag, const Location& where,
                                            std::size_t step) const {
  const auto shifted = static_cast<std::ptrdiff_t>(step) + lag;
  if (shifted < 0 || shifted >= static_cast<std::ptrdiff_t>(ds_->length())) return std::nullopt;
  const auto s = static_cast<std::size_t>(shifted);
  if (variable == kPressureDifferential) {
    if (pair_i_.empty()) throw Error(ErrorKind::FeatureInput, "pressure differential unavailable");
    return ds_->nwp_at(pair_i_, var::kPressure)[step] - ds_->nwp_at(pair_j_, var::kPressure)[s];
  }
  if (variable == kGeostrophic) {
    if (gradient_.empty()) throw Error(ErrorKind::FeatureInput, "geostrophic wind unavailable");
    return std::abs(coriolis_factor(where.latitude, constants_)) * gradient_[s];
  }
  return ds_->nwp_at(where.nwp_source, variable)[s];
}

CandidatePool build_candidates(const FeatureContext& ctx, std::size_t last_needed_step) {
  CandidatePool pool;
  const auto len = static_cast<int>(ctx.dataset().length());
  const int max_forward = len - 1 - static_cast<int>(last_needed_step);
  std::vector<std::string> all = nwp_families();
  all.emplace_back(kPressureDifferential);
  all.emplace_back(kGeostrophic);
  for (const auto& name : all) {
    if (!ctx.has_family(name)) {
      const std::string alias = name == var::kHumidity ? " (RH)" : "";
      pool.warnings.push_back("candidate family " + name + alias + " unavailable; pool downgraded");
      spdlog::warn("{}", pool.warnings.back());
      continue;
    }
    const int reach = name == kPressureDifferential ? kMaxPressureLag : kMaxLag;
    CandidateFamily family{name, {}};
    for (int lag = -reach; lag <= reach; ++lag) {
      if (lag <= max_forward) family.lags.push_back(lag);
    }
    if (family.lags.empty()) {
      pool.warnings.push_back("no usable lags for " + name);
      continue;
    }
    pool.families.push_back(std::move(family));
  }
  return pool;
}

std::vector<CandidateData> materialize(const CandidatePool& pool, const FeatureContext& ctx,
                                       std::span<const TrainingRow> rows) {
  std::vector<Location> locations;
  for (std::size_t s = 0; s < ctx.dataset().site_count(); ++s) locations.push_back(site_location(ctx.dataset(), s));
  std::vector<CandidateData> out;
  for (const auto& family : pool.families) {
    CandidateData data{family.name, {}};
    for (int lag : family.lags) {
      CandidateColumn col{lag, {}};
      col.values.reserve(rows.size());
      for (const auto& row : rows) col.values.push_back(ctx.value(family.name, lag, locations[row.site], row.step));
      data.columns.push_back(std::move(col));
    }
    out.push_back(std::move(data));
  }
  return out;
}

std::optional<double> pearson(std::span<const std::optional<double>> x, std::span<const double> y,
                              std::size_t min_pairs) {
  if (x.size() != y.size()) throw Error(ErrorKind::Validation, "correlation inputs differ in length");
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) continue;
    sx += *x[i];
    sy += y[i];
    ++n;
  }
  if (n < min_pairs || n < 2) return std::nullopt;
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!x[i]) continue;
    const double dx = *x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Selection select_features(std::span<const CandidateData> candidates, std::span<const double> target,
                          double threshold) {
  Selection sel;
  for (const auto& family : candidates) {
    FamilyDiagnostics diag{family.name, 0, 0.0, false, true, {}};
    bool have = false;
    for (const auto& col : family.columns) {
      const auto r = pearson(col.values, target);
      if (!r) continue;
      diag.correlations.emplace_back(col.lag, *r);
      const double mag = std::abs(*r);
      const double best = std::abs(diag.best_correlation);
      if (!have || mag > best || (mag == best && std::abs(col.lag) < std::abs(diag.best_lag))) {
        diag.best_lag = col.lag;
        diag.best_correlation = *r;
        have = true;
      }
    }
    if (!have) {
      sel.warnings.push_back("family " + family.name + " excluded: correlation undefined");
      spdlog::warn("{}", sel.warnings.back());
    } else {
      diag.excluded = false;
      diag.admitted = std::abs(diag.best_correlation) >= threshold;
      if (diag.admitted) sel.specs.push_back(FeatureSpec{family.name, diag.best_lag, diag.best_correlation});
    }
    sel.families.push_back(std::move(diag));
  }
  return sel;
}

std::vector<double> pacf(std::span<const std::optional<double>> series, int max_lag) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : series) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n < 2 || max_lag < 1) return {};
  const double mean = sum / static_cast<double>(n);
  std::vector<double> acov(static_cast<std::size_t>(max_lag) + 1, 0.0);
  for (int k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t t = 0; t + static_cast<std::size_t>(k) < series.size(); ++t) {
      const auto& a = series[t];
      const auto& b = series[t + static_cast<std::size_t>(k)];
      if (a && b) acc += (*a - mean) * (*b - mean);
    }
    acov[static_cast<std::size_t>(k)] = acc / static_cast<double>(n);
  }
  if (acov[0] <= 0.0) return std::vector<double>(static_cast<std::size_t>(max_lag), 0.0);
  std::vector<double> r(acov.size());
  for (std::size_t k = 0; k < acov.size(); ++k) r[k] = acov[k] / acov[0];

  std::vector<double> out;
  std::vector<double> phi(static_cast<std::size_t>(max_lag) + 1, 0.0), prev = phi;
  for (int k = 1; k <= max_lag; ++k) {
    double num = r[static_cast<std::size_t>(k)];
    double den = 1.0;
    for (int j = 1; j < k; ++j) {
      num -= prev[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(k - j)];
      den -= prev[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(j)];
    }
    const double pkk = den != 0.0 ? num / den : 0.0;
    phi[static_cast<std::size_t>(k)] = pkk;
    for (int j = 1; j < k; ++j) {
      phi[static_cast<std::size_t>(j)] = prev[static_cast<std::size_t>(j)] - pkk * prev[static_cast<std::size_t>(k - j)];
    }
    out.push_back(pkk);
    prev = phi;
  }
  return out;
}

LagOrder pacf_lag_order(std::span<const std::optional<double>> series, int max_lag) {
  const auto n = static_cast<std::size_t>(std::count_if(series.begin(), series.end(), [](const auto& v) {
    return v.has_value();
  }));
  if (n < kMinPacfSamples) {
    spdlog::warn("PACF needs {} samples, have {}; using lag order {}", kMinPacfSamples, n, kFallbackLagOrder);
    return LagOrder{kFallbackLagOrder, true};
  }
  const auto partial = pacf(series, max_lag);
  const double band = 1.96 / std::sqrt(static_cast<double>(n));
  int order = 0;
  while (order < static_cast<int>(partial.size()) && std::abs(partial[static_cast<std::size_t>(order)]) > band) {
    ++order;
  }
  return LagOrder{std::max(order, 1), false};
}

}  // namespace windcast::features
