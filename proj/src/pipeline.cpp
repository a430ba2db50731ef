#include "windcast/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <set>

#include "windcast/error.hpp"

namespace windcast::pipeline {
namespace {

struct TrainingSet {
  std::vector<TrainingPoint> rows;  // observed (site, step) in site-major order
  std::vector<double> y;
};

std::size_t window_start(const AlignedDataset& ds, std::size_t issue, const ModelSettings& s) {
  if (s.training_steps == 0 || s.horizon == 0) throw Error(ErrorKind::Config, "training length and horizon must be positive");
  if (issue + 1 < s.training_steps) {
    throw Error(ErrorKind::Coverage, "issue step " + std::to_string(issue) + " leaves fewer than " +
                                         std::to_string(s.training_steps) + " training steps");
  }
  if (issue + s.horizon >= ds.length()) {
    throw Error(ErrorKind::Coverage, "horizon of issue step " + std::to_string(issue) + " runs past the data");
  }
  return issue + 1 - s.training_steps;
}

TrainingSet training_set(const AlignedDataset& ds, std::size_t first, std::size_t issue) {
  TrainingSet t;
  for (std::size_t s = 0; s < ds.site_count(); ++s) {
    for (std::size_t step = first; step <= issue; ++step) {
      if (auto y = ds.observation(s, step)) {
        t.rows.push_back({s, step});
        t.y.push_back(*y);
      }
    }
  }
  if (t.y.empty()) throw Error(ErrorKind::InsufficientData, "no observations in the training window");
  return t;
}

gp::SpaceTimePoint gp_point(const AlignedDataset& ds, std::size_t site, std::size_t step) {
  const Site& s = ds.sites[site];
  return gp::SpaceTimePoint{static_cast<int>(site), s.xy.x, s.xy.y, static_cast<long>(step)};
}

std::vector<calibration::Point> design_points(const AlignedDataset& ds, const std::vector<TrainingPoint>& rows) {
  std::vector<calibration::Point> pts;
  pts.reserve(rows.size());
  for (const auto& r : rows) pts.push_back({features::site_location(ds, r.site), r.step});
  return pts;
}

// Fits on the trailing `mle_steps` of the window, then conditions on all rows.
gp::FittedGP fit_residual_gp(const Eigen::VectorXd& z, std::vector<gp::SpaceTimePoint> pts, std::size_t issue,
                             const ModelSettings& s, const kernels::AdvectionParams& adv,
                             const std::optional<kernels::KernelParams>& previous) {
  kernels::KernelParams init;
  init.advection = adv;
  init.temporal = s.temporal;
  if (s.fixed_lambda) init.lambda = *s.fixed_lambda;
  gp::FitOptions opts;
  opts.fit_lambda = !s.fixed_lambda.has_value();
  opts.temporal = s.temporal;
  opts.previous = previous;
  opts.max_evaluations = s.max_evaluations;

  std::vector<Eigen::Index> subset;
  if (s.mle_steps > 0 && s.mle_steps < s.training_steps) {
    const long first = static_cast<long>(issue) + 1 - static_cast<long>(s.mle_steps);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (pts[i].step >= first) subset.push_back(static_cast<Eigen::Index>(i));
    }
  }
  if (subset.empty() || subset.size() == pts.size()) return gp::fit_gp(z, std::move(pts), init, opts);

  Eigen::VectorXd z_sub(static_cast<Eigen::Index>(subset.size()));
  std::vector<gp::SpaceTimePoint> p_sub;
  p_sub.reserve(subset.size());
  for (std::size_t k = 0; k < subset.size(); ++k) {
    z_sub(static_cast<Eigen::Index>(k)) = z(subset[k]);
    p_sub.push_back(pts[static_cast<std::size_t>(subset[k])]);
  }
  const gp::FittedGP sub = gp::fit_gp(z_sub, std::move(p_sub), init, opts);
  return gp::condition(z, std::move(pts), sub.params);
}

kernels::AdvectionParams advection_for(const AlignedDataset& ds, std::size_t issue, const ModelSettings& s) {
  const std::size_t lo = issue >= s.training_steps ? issue - s.training_steps : 0;
  const std::size_t hi = std::min(ds.length() - 1, issue + s.horizon);
  std::set<std::string> sources;
  for (const auto& site : ds.sites) sources.insert(ds.nwp_source.at(site.id));
  std::vector<double> u, v;
  for (const auto& src : sources) {
    const auto& us = ds.nwp_at(src, var::kU);
    const auto& vs = ds.nwp_at(src, var::kV);
    for (std::size_t t = lo; t <= hi; ++t) {
      u.push_back(us[t]);
      v.push_back(vs[t]);
    }
  }
  return kernels::estimate_advection(u, v);
}

std::vector<features::FeatureSpec> selected_specs(const features::FeatureContext& ctx, const TrainingSet& train,
                                                  std::size_t issue, const ModelSettings& s, RollState& state) {
  if (s.fixed_specs) return *s.fixed_specs;
  const auto pool = features::build_candidates(ctx, issue + s.horizon);
  for (const auto& w : pool.warnings) state.warnings.push_back(w);
  std::vector<features::TrainingRow> rows;
  rows.reserve(train.rows.size());
  for (const auto& r : train.rows) rows.push_back({r.site, r.step});
  const auto data = features::materialize(pool, ctx, rows);
  state.selection = features::select_features(data, train.y, s.threshold);
  for (const auto& w : state.selection.warnings) state.warnings.push_back(w);
  return state.selection.specs;
}

features::LagOrder lag_order_for(const AlignedDataset& ds, std::size_t first, std::size_t issue,
                                 const ModelSettings& s, RollState& state) {
  if (s.fixed_lag_order) return features::LagOrder{*s.fixed_lag_order, false};
  // Sites are concatenated with a gap longer than any lag so no pair crosses sites.
  std::vector<std::optional<double>> series;
  for (std::size_t site = 0; site < ds.site_count(); ++site) {
    if (site > 0) series.insert(series.end(), features::kMaxLag + 1, std::nullopt);
    for (std::size_t t = first; t <= issue; ++t) series.push_back(ds.observation(site, t));
  }
  const auto order = features::pacf_lag_order(series);
  if (order.fallback) state.warnings.push_back("lag order fell back to " + std::to_string(order.lag));
  return order;
}

}  // namespace

RollState fit_roll(const features::FeatureContext& ctx, std::size_t issue, const ModelSettings& settings,
                   const PreviousOptimum& previous) {
  const AlignedDataset& ds = ctx.dataset();
  const std::size_t first = window_start(ds, issue, settings);
  RollState state;
  state.issue = issue;
  state.settings = settings;
  const TrainingSet train = training_set(ds, first, issue);

  const auto specs = selected_specs(ctx, train, issue, settings, state);
  state.lag_order = lag_order_for(ds, first, issue, settings, state);

  const auto design =
      calibration::build_design(ctx, specs, state.lag_order.lag, design_points(ds, train.rows), settings.intercept);
  state.calibration_excluded = design.excluded;
  Eigen::VectorXd y(static_cast<Eigen::Index>(design.kept.size()));
  for (std::size_t i = 0; i < design.kept.size(); ++i) y(static_cast<Eigen::Index>(i)) = train.y[design.kept[i]];
  state.calibration = calibration::fit_mu(design, y);

  const Eigen::VectorXd beta = state.calibration.coefficient_vector();
  Eigen::VectorXd z(y.size());
  std::vector<gp::SpaceTimePoint> pts;
  pts.reserve(design.kept.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    z(i) = y(i) - design.X.row(i).dot(beta);
    const auto& r = train.rows[design.kept[static_cast<std::size_t>(i)]];
    pts.push_back(gp_point(ds, r.site, r.step));
  }

  state.advection = advection_for(ds, issue, settings);
  state.main = fit_residual_gp(z, pts, issue, settings, state.advection, previous.main);

  if (settings.subhourly_cutoff > 0) {
    double sum = 0.0;
    for (double v : train.y) sum += v;
    state.training_mean = sum / static_cast<double>(train.y.size());
    Eigen::VectorXd zs(static_cast<Eigen::Index>(train.y.size()));
    std::vector<gp::SpaceTimePoint> spts;
    spts.reserve(train.rows.size());
    for (std::size_t i = 0; i < train.rows.size(); ++i) {
      zs(static_cast<Eigen::Index>(i)) = train.y[i] - state.training_mean;
      spts.push_back(gp_point(ds, train.rows[i].site, train.rows[i].step));
    }
    state.subhourly = fit_residual_gp(zs, std::move(spts), issue, settings, state.advection, previous.subhourly);
  }
  return state;
}

std::vector<Target> site_targets(const features::FeatureContext& ctx, std::size_t horizon) {
  const AlignedDataset& ds = ctx.dataset();
  std::vector<Target> out;
  for (std::size_t s = 0; s < ds.site_count(); ++s) {
    const auto loc = features::site_location(ds, s);
    for (std::size_t h = 1; h <= horizon; ++h) out.push_back({loc, static_cast<int>(s), h});
  }
  return out;
}

gp::ForecastDistribution predict_targets(const RollState& state, const features::FeatureContext& ctx,
                                         std::span<const Target> targets, bool joint) {
  const auto n = static_cast<Eigen::Index>(targets.size());
  std::vector<std::size_t> main_idx, sub_idx;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const bool sub = state.subhourly && static_cast<int>(targets[i].horizon) < state.settings.subhourly_cutoff;
    (sub ? sub_idx : main_idx).push_back(i);
  }

  gp::ForecastDistribution out;
  out.mean.resize(n);
  out.variance.resize(n);
  if (joint) out.covariance = Eigen::MatrixXd::Zero(n, n);
  for (const auto& t : targets) {
    out.points.push_back({t.gp_site, t.location.xy.x, t.location.xy.y,
                          static_cast<long>(state.issue + t.horizon)});
  }

  auto run = [&](const std::vector<std::size_t>& idx, const gp::FittedGP& fitted, bool calibrated) {
    if (idx.empty()) return;
    std::vector<gp::SpaceTimePoint> pts;
    std::vector<calibration::Point> mu_pts;
    for (std::size_t i : idx) {
      pts.push_back(out.points[i]);
      mu_pts.push_back({targets[i].location, state.issue + targets[i].horizon});
    }
    const std::vector<double> mu = calibrated ? calibration::eval_mu(state.calibration, ctx, mu_pts)
                                              : std::vector<double>(idx.size(), state.training_mean);
    const auto d = gp::predict(fitted, pts, mu, joint);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto i = static_cast<Eigen::Index>(idx[k]);
      out.mean(i) = d.mean(static_cast<Eigen::Index>(k));
      out.variance(i) = d.variance(static_cast<Eigen::Index>(k));
      if (joint) {
        for (std::size_t l = 0; l < idx.size(); ++l) {
          (*out.covariance)(i, static_cast<Eigen::Index>(idx[l])) =
              (*d.covariance)(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l));
        }
      }
    }
  };
  run(main_idx, state.main, true);
  if (state.subhourly) run(sub_idx, *state.subhourly, false);
  return out;
}

PersistenceForecast persistence_forecast(const AlignedDataset& ds, std::size_t site, std::size_t issue,
                                         std::size_t earliest) {
  for (std::size_t t = issue + 1; t-- > earliest;) {
    if (auto y = ds.observation(site, t)) return PersistenceForecast{*y, t != issue};
  }
  throw Error(ErrorKind::InsufficientData, "no observation at site " + ds.sites[site].id + " before step " +
                                               std::to_string(issue));
}

double nwp_forecast(const AlignedDataset& ds, std::size_t site, std::size_t issue, std::size_t horizon) {
  return ds.nwp(site, var::kWindSpeed).at(issue + horizon);
}

std::vector<features::FeatureSpec> gop_specs(const features::FeatureContext& ctx) {
  std::vector<features::FeatureSpec> out;
  for (const char* v : {var::kPressure, var::kTemperature, var::kGust, var::kHumidity, var::kU, var::kV}) {
    if (ctx.has_family(v)) out.push_back({v, 0, 0.0});
  }
  return out;
}

ModelSettings gop_restriction(const features::FeatureContext& ctx, ModelSettings base) {
  base.fixed_specs = gop_specs(ctx);
  base.fixed_lag_order = 0;
  base.temporal = false;
  base.fixed_lambda = 1.0;
  base.subhourly_cutoff = 0;
  base.intercept = true;
  return base;
}

namespace {

// Row [1, Y, H_1..H_m, H_1 Y..H_m Y]; false if an input is missing.
bool gop_row(const features::FeatureContext& ctx, const std::vector<features::FeatureSpec>& specs,
             const features::Location& loc, std::size_t step, Eigen::Ref<Eigen::RowVectorXd> row) {
  const auto y = ctx.value(var::kWindSpeed, 0, loc, step);
  if (!y) return false;
  const auto m = static_cast<Eigen::Index>(specs.size());
  row(0) = 1.0;
  row(1) = *y;
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto h = ctx.value(specs[static_cast<std::size_t>(j)].variable, 0, loc, step);
    if (!h) return false;
    row(2 + j) = *h;
    row(2 + m + j) = *h * *y;
  }
  return true;
}

}  // namespace

GopState fit_gop(const features::FeatureContext& ctx, std::size_t issue, const ModelSettings& settings,
                 const std::optional<kernels::KernelParams>& previous) {
  const AlignedDataset& ds = ctx.dataset();
  const std::size_t first = window_start(ds, issue, settings);
  const TrainingSet train = training_set(ds, first, issue);
  GopState state;
  state.issue = issue;
  state.specs = gop_specs(ctx);
  const auto m = state.specs.size();

  calibration::DesignMatrix d;
  d.specs = state.specs;
  d.lag_order = 0;
  d.intercept = true;
  d.column_names = {"intercept", "a[0]"};
  for (const auto& s : state.specs) d.column_names.push_back("b:" + s.variable + "@0");
  for (const auto& s : state.specs) d.column_names.push_back("c:" + s.variable + "@0");
  const auto cols = static_cast<Eigen::Index>(2 + 2 * m);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(train.rows.size()), cols);
  Eigen::RowVectorXd row(cols);
  Eigen::Index kept = 0;
  for (std::size_t i = 0; i < train.rows.size(); ++i) {
    const auto loc = features::site_location(ds, train.rows[i].site);
    if (!gop_row(ctx, state.specs, loc, train.rows[i].step, row)) {
      ++d.excluded;
      continue;
    }
    X.row(kept++) = row;
    d.kept.push_back(i);
  }
  d.X = X.topRows(kept);
  Eigen::VectorXd y(kept);
  for (Eigen::Index i = 0; i < kept; ++i) y(i) = train.y[d.kept[static_cast<std::size_t>(i)]];
  state.calibration = calibration::fit_mu(d, y);

  const Eigen::VectorXd beta = state.calibration.coefficient_vector();
  Eigen::VectorXd z(kept);
  std::vector<gp::SpaceTimePoint> pts;
  for (Eigen::Index i = 0; i < kept; ++i) {
    z(i) = y(i) - d.X.row(i).dot(beta);
    const auto& r = train.rows[d.kept[static_cast<std::size_t>(i)]];
    pts.push_back(gp_point(ds, r.site, r.step));
  }

  ModelSettings s = settings;
  s.temporal = false;
  s.fixed_lambda = 1.0;
  state.gp = fit_residual_gp(z, std::move(pts), issue, s, kernels::AdvectionParams{}, previous);
  return state;
}

gp::ForecastDistribution predict_gop(const GopState& state, const features::FeatureContext& ctx,
                                     std::span<const Target> targets) {
  const Eigen::VectorXd beta = state.calibration.coefficient_vector();
  Eigen::RowVectorXd row(beta.size());
  std::vector<double> mu;
  std::vector<gp::SpaceTimePoint> pts;
  for (const auto& t : targets) {
    const std::size_t step = state.issue + t.horizon;
    if (!gop_row(ctx, state.specs, t.location, step, row)) {
      throw Error(ErrorKind::Evaluation, "GOP inputs missing at step " + std::to_string(step));
    }
    mu.push_back(row.dot(beta));
    pts.push_back({t.gp_site, t.location.xy.x, t.location.xy.y, static_cast<long>(step)});
  }
  return gp::predict(state.gp, pts, mu);
}

}  // namespace windcast::pipeline
