#pragma once

#include <Eigen/Dense>

#include <vector>

#include "psmooth/ou_engine.hpp"

namespace psmooth {

// (P Q_{t-s} P*)^{-1/2} (P e^{tA}) C, N x m.
struct SmoothingOperator {
  double t = 0.0;
  double s = 0.0;
  Eigen::MatrixXd matrix;
  int rank = 0;

  double norm() const { return operator_norm(matrix); }
};

inline constexpr double kInclusionTol = 1e-6;

SmoothingOperator lambda_operator(const ProjectedModel& model, double t, double s = 0.0);

// G with E[h(Y) <G e_k, Y>] the derivative of E[h(Y + y)] along proj_control(t) e_k,
// Y ~ N(0, pushforward_cov(s, t)).
Eigen::MatrixXd convolution_gradient_weight(const ProjectedModel& model, double s, double t);

struct GradientEstimate {
  Eigen::VectorXd value;
  Eigen::VectorXd std_error;
};

// C-gradient of R_t[phi] at any x with P e^{tA} x = y0.
GradientEstimate c_gradient_semigroup(const ProjectedModel& model,
                                      const ProjectedTerminalCost& phi, double t,
                                      const Eigen::VectorXd& y0, const QuadratureRule& rule);

struct NormBoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool ok = false;
};

NormBoundCheck c_gradient_norm_bound_check(const ProjectedModel& model,
                                           const ProjectedTerminalCost& phi, double t,
                                           const Eigen::VectorXd& y0, const QuadratureRule& rule);

struct BlowupFit {
  std::vector<double> times;
  std::vector<double> norms;
  std::vector<bool> used;
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;

  double gamma() const { return -slope; }
};

// Least squares of log ||Lambda(t)|| on log t. Drops the largest 10% of times and
// a 10% neighborhood of every control breakpoint.
BlowupFit fit_blowup(const ProjectedModel& model, const std::vector<double>& t_grid);

std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace psmooth
