#pragma once

#include <Eigen/Dense>

#include <functional>

namespace windcast::optim {

struct NelderMeadOptions {
  int max_evaluations = 400;
  double initial_step = 0.5;   // simplex edge in the (unconstrained) search space
  double f_tolerance = 1e-7;   // spread of simplex values
  double x_tolerance = 1e-6;   // simplex diameter
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Minimises `f`. The start point is a simplex vertex, so the returned value
// never exceeds f(start). Non-finite evaluations count as +infinity.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& start,
                             const NelderMeadOptions& options = {});

}  // namespace windcast::optim
