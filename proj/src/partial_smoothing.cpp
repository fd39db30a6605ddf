#include "psmooth/partial_smoothing.hpp"

#include "internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psmooth {

namespace {

void check_inclusion(const SymPSDMatrix& cov, const Eigen::MatrixXd& ctrl, const char* where) {
  const double total = ctrl.norm();
  if (total == 0.0) return;
  const double resid = (ctrl - image_projector(cov) * ctrl).norm();
  if (resid > kInclusionTol * total)
    fail(ErrorKind::InclusionViolated,
         std::string(where) + ": control image leaves the covariance range (relative residual " +
             std::to_string(resid / total) + ")");
}

}  // namespace

SmoothingOperator lambda_operator(const ProjectedModel& model, double t, double s) {
  require(s >= 0.0 && t > s, ErrorKind::ConfigInvalid, "lambda_operator needs 0 <= s < t");
  const SymPSDMatrix cov = model.proj_cov(t - s);
  const Eigen::MatrixXd ctrl = model.proj_control(t);
  check_inclusion(cov, ctrl, "lambda_operator");
  const PinvSqrt inv = psd_pinv_sqrt(cov);
  SmoothingOperator out;
  out.t = t;
  out.s = s;
  out.rank = inv.rank;
  out.matrix = inv.matrix.matrix() * ctrl;
  return out;
}

Eigen::MatrixXd convolution_gradient_weight(const ProjectedModel& model, double s, double t) {
  const SymPSDMatrix cov = model.pushforward_cov(s, t);
  const Eigen::MatrixXd ctrl = model.proj_control(t);
  check_inclusion(cov, ctrl, "convolution_gradient_weight");
  return psd_pinv(cov) * ctrl;
}

GradientEstimate c_gradient_semigroup(const ProjectedModel& model,
                                      const ProjectedTerminalCost& phi, double t,
                                      const Eigen::VectorXd& y0, const QuadratureRule& rule) {
  const int N = model.proj_dim();
  require(y0.size() == N && rule.dim() == N, ErrorKind::DimensionMismatch,
          "c_gradient_semigroup: dimension mismatch");
  const SmoothingOperator lam = lambda_operator(model, t);
  const Eigen::MatrixXd L = psd_sqrt(model.proj_cov(t)).matrix();
  const int m = model.control_dim();
  const int n = rule.size();
  Eigen::MatrixXd samples(m, n);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
  for (int q = 0; q < n; ++q) {
    const Eigen::VectorXd xi = rule.nodes.col(q);
    const double val = phi(y0 + L * xi);
    samples.col(q) = val * (lam.matrix.transpose() * xi);
    acc += rule.weights(q) * samples.col(q);
  }
  GradientEstimate out{acc, Eigen::VectorXd::Zero(m)};
  if (rule.kind == QuadratureKind::MonteCarlo && n > 1) {
    for (int k = 0; k < m; ++k) {
      const double var = (samples.row(k).array() - acc(k)).square().sum() / (n - 1);
      out.std_error(k) = std::sqrt(var / n);
    }
  }
  return out;
}

NormBoundCheck c_gradient_norm_bound_check(const ProjectedModel& model,
                                           const ProjectedTerminalCost& phi, double t,
                                           const Eigen::VectorXd& y0, const QuadratureRule& rule) {
  const GradientEstimate g = c_gradient_semigroup(model, phi, t, y0, rule);
  NormBoundCheck out;
  out.lhs = g.value.norm();
  out.rhs = lambda_operator(model, t).norm() * phi.bound();
  out.slack = 3.0 * g.std_error.norm();
  out.ok = out.lhs <= out.rhs * (1.0 + 1e-3) + out.slack;
  return out;
}

std::vector<double> log_grid(double lo, double hi, int n) {
  require(lo > 0.0 && hi > lo && n >= 2, ErrorKind::ConfigInvalid, "invalid log grid");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return g;
}

BlowupFit fit_blowup(const ProjectedModel& model, const std::vector<double>& t_grid) {
  require(t_grid.size() >= 10, ErrorKind::ConfigInvalid, "blow-up fit needs at least 10 times");
  for (double t : t_grid) require(t > 0.0, ErrorKind::ConfigInvalid, "fit times must be positive");
  BlowupFit fit;
  fit.times = t_grid;
  const int n = static_cast<int>(t_grid.size());
  fit.norms.assign(n, 0.0);
  fit.used.assign(n, true);

  internal::parallel_for(n, [&](int i) { fit.norms[i] = lambda_operator(model, t_grid[i]).norm(); });

  std::vector<double> sorted = t_grid;
  std::sort(sorted.begin(), sorted.end());
  const int drop = n / 10;
  const double cutoff = drop > 0 ? sorted[n - drop] : std::numeric_limits<double>::infinity();
  const std::vector<double> bps = model.control_breakpoints();
  for (int i = 0; i < n; ++i) {
    const double t = t_grid[i];
    if (t >= cutoff) fit.used[i] = false;
    for (double b : bps)
      if (std::abs(t - b) < 0.1 * b) fit.used[i] = false;
    if (!(fit.norms[i] > 0.0)) fit.used[i] = false;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int i = 0; i < n; ++i) {
    if (!fit.used[i]) continue;
    const double x = std::log(t_grid[i]);
    const double y = std::log(fit.norms[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++cnt;
  }
  require(cnt >= 3, ErrorKind::ConfigInvalid, "too few usable points for the blow-up fit");
  fit.slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / cnt;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!fit.used[i]) continue;
    const double r = std::log(fit.norms[i]) - (fit.intercept + fit.slope * std::log(t_grid[i]));
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / cnt);
  return fit;
}

}  // namespace psmooth
