#pragma once

// Mesoscale term: additive and multiplicative NWP bias correction fitted by
// least squares on lagged NWP wind speed and the selected predictors.

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "windcast/features.hpp"

namespace windcast::calibration {

// A (location, grid step) at which mu is fitted or evaluated.
struct Point {
  features::Location location;
  std::size_t step = 0;
};

// Columns: [1], Y(t), ..., Y(t - lag_order), G_1..G_m, G_1*Y(t)..G_m*Y(t).
struct DesignMatrix {
  Eigen::MatrixXd X;
  std::vector<std::string> column_names;
  std::vector<std::size_t> kept;  // indices into the requested points
  std::size_t excluded = 0;       // points dropped for a missing entry
  std::vector<features::FeatureSpec> specs;
  int lag_order = 0;
  bool intercept = true;

  Eigen::Index columns() const { return X.cols(); }
};

std::size_t design_column_count(int lag_order, std::size_t m, bool intercept);

DesignMatrix build_design(const features::FeatureContext& ctx, const std::vector<features::FeatureSpec>& specs,
                          int lag_order, const std::vector<Point>& points, bool intercept = true);

struct CalibrationModel {
  double intercept = 0.0;
  std::vector<double> a;  // lagged NWP wind speed, length lag_order + 1
  std::vector<double> b;  // additive, length m
  std::vector<double> c;  // multiplicative, length m
  int lag_order = 0;
  bool has_intercept = true;
  std::vector<features::FeatureSpec> specs;
  std::vector<std::string> column_names;
  std::vector<std::string> rank_deficient;  // columns given a zero coefficient
  double condition_number = 1.0;
  std::size_t rows_used = 0;

  Eigen::VectorXd coefficient_vector() const;
  static CalibrationModel from_coefficients(const DesignMatrix& design, const Eigen::VectorXd& beta);
};

// Ordinary least squares via column-pivoted QR on a column-equilibrated
// design. Columns beyond the numerical rank get zero coefficients.
CalibrationModel fit_mu(const DesignMatrix& design, const Eigen::VectorXd& targets);

// mu at each point; throws Evaluation naming the first spec that cannot be
// computed.
std::vector<double> eval_mu(const CalibrationModel& model, const features::FeatureContext& ctx,
                            const std::vector<Point>& points);

// z = y - mu on observation site rows in [first_step, last_step]; missing
// observations stay missing. Indexed [site][step - first_step].
std::vector<std::vector<std::optional<double>>> residuals(const CalibrationModel& model,
                                                          const features::FeatureContext& ctx,
                                                          std::size_t first_step, std::size_t last_step);

}  // namespace windcast::calibration
