#include "windcast/calibration.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

#include "windcast/error.hpp"

namespace windcast::calibration {
namespace {

// Fills one design row; on failure returns the name of the missing input.
std::optional<std::string> fill_row(const features::FeatureContext& ctx,
                                    const std::vector<features::FeatureSpec>& specs, int lag_order,
                                    bool intercept, const Point& p, Eigen::Ref<Eigen::RowVectorXd> row) {
  Eigen::Index col = 0;
  if (intercept) row(col++) = 1.0;
  std::optional<double> y_now;
  for (int k = 0; k <= lag_order; ++k) {
    const auto y = ctx.value(var::kWindSpeed, -k, p.location, p.step);
    if (!y) return std::string(var::kWindSpeed) + "[lag " + std::to_string(-k) + "]";
    if (k == 0) y_now = y;
    row(col++) = *y;
  }
  const auto m = static_cast<Eigen::Index>(specs.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& spec = specs[static_cast<std::size_t>(j)];
    const auto g = ctx.value(spec.variable, spec.lag, p.location, p.step);
    if (!g) return spec.variable + "[lag " + std::to_string(spec.lag) + "]";
    row(col + j) = *g;
    row(col + m + j) = *g * *y_now;
  }
  return std::nullopt;
}

}  // namespace

std::size_t design_column_count(int lag_order, std::size_t m, bool intercept) {
  return (intercept ? 1u : 0u) + static_cast<std::size_t>(lag_order + 1) + 2 * m;
}

DesignMatrix build_design(const features::FeatureContext& ctx, const std::vector<features::FeatureSpec>& specs,
                          int lag_order, const std::vector<Point>& points, bool intercept) {
  if (lag_order < 0) throw Error(ErrorKind::Validation, "lag order must be >= 0");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    for (std::size_t j = i + 1; j < specs.size(); ++j) {
      if (specs[i].variable == specs[j].variable) {
        throw Error(ErrorKind::Validation, "feature " + specs[i].variable + " selected twice");
      }
    }
  }
  DesignMatrix d;
  d.specs = specs;
  d.lag_order = lag_order;
  d.intercept = intercept;
  if (intercept) d.column_names.emplace_back("intercept");
  for (int k = 0; k <= lag_order; ++k) d.column_names.push_back("a[" + std::to_string(k) + "]");
  for (const auto& s : specs) d.column_names.push_back("b:" + s.variable + "@" + std::to_string(s.lag));
  for (const auto& s : specs) d.column_names.push_back("c:" + s.variable + "@" + std::to_string(s.lag));

  const auto cols = static_cast<Eigen::Index>(design_column_count(lag_order, specs.size(), intercept));
  Eigen::MatrixXd full(static_cast<Eigen::Index>(points.size()), cols);
  Eigen::RowVectorXd row(cols);
  Eigen::Index kept = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (fill_row(ctx, specs, lag_order, intercept, points[i], row)) {
      ++d.excluded;
      continue;
    }
    full.row(kept++) = row;
    d.kept.push_back(i);
  }
  d.X = full.topRows(kept);
  return d;
}

Eigen::VectorXd CalibrationModel::coefficient_vector() const {
  const auto m = b.size();
  Eigen::VectorXd beta(static_cast<Eigen::Index>(design_column_count(lag_order, m, has_intercept)));
  Eigen::Index col = 0;
  if (has_intercept) beta(col++) = intercept;
  for (double v : a) beta(col++) = v;
  for (double v : b) beta(col++) = v;
  for (double v : c) beta(col++) = v;
  return beta;
}

CalibrationModel CalibrationModel::from_coefficients(const DesignMatrix& design, const Eigen::VectorXd& beta) {
  CalibrationModel model;
  model.lag_order = design.lag_order;
  model.has_intercept = design.intercept;
  model.specs = design.specs;
  model.column_names = design.column_names;
  Eigen::Index col = 0;
  if (design.intercept) model.intercept = beta(col++);
  for (int k = 0; k <= design.lag_order; ++k) model.a.push_back(beta(col++));
  for (std::size_t j = 0; j < design.specs.size(); ++j) model.b.push_back(beta(col++));
  for (std::size_t j = 0; j < design.specs.size(); ++j) model.c.push_back(beta(col++));
  return model;
}

CalibrationModel fit_mu(const DesignMatrix& design, const Eigen::VectorXd& targets) {
  const Eigen::Index rows = design.X.rows();
  const Eigen::Index cols = design.X.cols();
  if (targets.size() != rows) throw Error(ErrorKind::Validation, "targets do not match design rows");
  if (rows < cols) {
    throw Error(ErrorKind::Underdetermined, std::to_string(rows) + " rows for " + std::to_string(cols) + " columns");
  }
  if (!design.X.allFinite() || !targets.allFinite()) {
    throw Error(ErrorKind::Validation, "non-finite entries in calibration design");
  }
  if (rows < 5 * cols) {
    spdlog::warn("calibration: {} rows for {} columns (fewer than 5 per column)", rows, cols);
  }

  // Equilibrate columns so the rank decision is scale-free.
  Eigen::VectorXd scale(cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double norm = design.X.col(j).norm();
    scale(j) = norm > 0.0 ? 1.0 / norm : 1.0;
  }
  const Eigen::MatrixXd Xs = design.X * scale.asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xs);
  qr.setThreshold(1e-10);
  // Basic solution: pivots past the rank get zero coefficients. Eigen's own
  // solve counts pivots with its default tolerance, so solve explicitly.
  const Eigen::Index rank = qr.rank();
  const Eigen::VectorXd qty = qr.householderQ().transpose() * targets;
  Eigen::VectorXd permuted = Eigen::VectorXd::Zero(cols);
  permuted.head(rank) = qr.matrixQR()
                            .topLeftCorner(rank, rank)
                            .triangularView<Eigen::Upper>()
                            .solve(qty.head(rank));
  const Eigen::VectorXd beta_scaled = qr.colsPermutation() * permuted;
  Eigen::VectorXd beta = scale.asDiagonal() * beta_scaled;

  CalibrationModel model = CalibrationModel::from_coefficients(design, beta);
  for (Eigen::Index k = rank; k < cols; ++k) {
    const auto j = qr.colsPermutation().indices()(k);
    model.rank_deficient.push_back(design.column_names[static_cast<std::size_t>(j)]);
  }
  if (!model.rank_deficient.empty()) {
    spdlog::warn("calibration: {} rank-deficient column(s) set to zero", model.rank_deficient.size());
  }
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(Xs);
  const auto& sv = svd.singularValues();
  model.condition_number = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1)
                                                   : std::numeric_limits<double>::infinity();
  model.rows_used = static_cast<std::size_t>(rows);
  if (!beta.allFinite()) throw Error(ErrorKind::Numerical, "calibration produced non-finite coefficients");
  return model;
}

std::vector<double> eval_mu(const CalibrationModel& model, const features::FeatureContext& ctx,
                            const std::vector<Point>& points) {
  const Eigen::VectorXd beta = model.coefficient_vector();
  Eigen::RowVectorXd row(beta.size());
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (auto missing = fill_row(ctx, model.specs, model.lag_order, model.has_intercept, p, row)) {
      throw Error(ErrorKind::Evaluation, "cannot evaluate " + *missing + " at step " + std::to_string(p.step));
    }
    out.push_back(row.dot(beta));
  }
  return out;
}

std::vector<std::vector<std::optional<double>>> residuals(const CalibrationModel& model,
                                                          const features::FeatureContext& ctx,
                                                          std::size_t first_step, std::size_t last_step) {
  const auto& ds = ctx.dataset();
  if (last_step < first_step || last_step >= ds.length()) {
    throw Error(ErrorKind::EmptyResult, "residual window outside the dataset");
  }
  const Eigen::VectorXd beta = model.coefficient_vector();
  Eigen::RowVectorXd row(beta.size());
  std::vector<std::vector<std::optional<double>>> out(ds.site_count());
  std::size_t present = 0;
  for (std::size_t s = 0; s < ds.site_count(); ++s) {
    const auto loc = features::site_location(ds, s);
    out[s].resize(last_step - first_step + 1);
    for (std::size_t t = first_step; t <= last_step; ++t) {
      const auto y = ds.observation(s, t);
      if (!y) continue;
      if (fill_row(ctx, model.specs, model.lag_order, model.has_intercept, Point{loc, t}, row)) continue;
      out[s][t - first_step] = *y - row.dot(beta);
      ++present;
    }
  }
  if (present == 0) throw Error(ErrorKind::EmptyResult, "no observations overlap the residual window");
  return out;
}

}  // namespace windcast::calibration
