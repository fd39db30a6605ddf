#include <algorithm>
#include <cmath>

#include "psmooth/hjb_solver.hpp"
#include "internal.hpp"

namespace psmooth {

int SpaceGrid::size() const {
  int n = 1;
  for (int d = 0; d < dim; ++d) n *= points_per_dim;
  return n;
}

Eigen::VectorXd SpaceGrid::point(int index) const {
  Eigen::VectorXd y(dim);
  int rem = index;
  for (int d = 0; d < dim; ++d) {
    y(d) = coordinate(d, rem % points_per_dim);
    rem /= points_per_dim;
  }
  return y;
}

bool SpaceGrid::contains(const Eigen::VectorXd& y) const {
  if (y.size() != dim) return false;
  for (int d = 0; d < dim; ++d) {
    const double slack = 1e-12 * (hi[d] - lo[d]);
    if (!(y(d) >= lo[d] - slack && y(d) <= hi[d] + slack)) return false;
  }
  return true;
}

bool SpaceGrid::operator==(const SpaceGrid& o) const {
  return dim == o.dim && points_per_dim == o.points_per_dim && lo == o.lo && hi == o.hi;
}

Cell locate(const SpaceGrid& grid, const double* y) {
  int base[3] = {0, 0, 0};
  double th[3] = {0.0, 0.0, 0.0};
  const int n = grid.points_per_dim;
  for (int d = 0; d < grid.dim; ++d) {
    const double pos = std::clamp((y[d] - grid.lo[d]) / grid.spacing(d), 0.0,
                                  static_cast<double>(n - 1));
    const int i = std::min(static_cast<int>(pos), n - 2);
    base[d] = i;
    th[d] = pos - i;
  }
  Cell c;
  c.count = 1 << grid.dim;
  for (int corner = 0; corner < c.count; ++corner) {
    int idx = 0;
    int stride = 1;
    double w = 1.0;
    for (int d = 0; d < grid.dim; ++d) {
      const int bit = (corner >> d) & 1;
      idx += (base[d] + bit) * stride;
      w *= bit ? th[d] : 1.0 - th[d];
      stride *= n;
    }
    c.idx[corner] = idx;
    c.w[corner] = w;
  }
  return c;
}

using internal::bracket;

double interpolate_value(const ValueIterate& g, double t, const Eigen::VectorXd& y) {
  require(y.size() == g.space.dim, ErrorKind::DimensionMismatch, "interpolation point dimension");
  double th = 0.0;
  const int j = bracket(g.time_grid, t, 0, &th);
  const Cell c = locate(g.space, y.data());
  double a = 0.0, b = 0.0;
  for (int k = 0; k < c.count; ++k) {
    a += c.w[k] * g.f(c.idx[k], j);
    b += c.w[k] * g.f(c.idx[k], j + 1);
  }
  return (1.0 - th) * a + th * b;
}

Eigen::VectorXd interpolate_fbar(const ValueIterate& g, double t, const Eigen::VectorXd& y) {
  require(y.size() == g.space.dim, ErrorKind::DimensionMismatch, "interpolation point dimension");
  require(g.n_time() >= 3, ErrorKind::GridMismatch, "gradient needs two positive time nodes");
  double th = 0.0;
  const int j = bracket(g.time_grid, t, 1, &th);
  const Cell c = locate(g.space, y.data());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(g.control_dim);
  for (int k = 0; k < c.count; ++k)
    out += c.w[k] * ((1.0 - th) * g.fbar[j].col(c.idx[k]) + th * g.fbar[j + 1].col(c.idx[k]));
  return out;
}

double weighted_distance(const ValueIterate& g1, const ValueIterate& g2, double eta) {
  if (g1.time_grid != g2.time_grid || !(g1.space == g2.space) ||
      g1.control_dim != g2.control_dim || g1.gamma != g2.gamma ||
      g1.f.rows() != g2.f.rows() || g1.f.cols() != g2.f.cols())
    fail(ErrorKind::GridMismatch, "iterates live on different grids");
  double df = 0.0, dg = 0.0;
  for (int i = 0; i < g1.n_time(); ++i) {
    const double w = std::exp(-eta * g1.time_grid[i]);
    df = std::max(df, w * (g1.f.col(i) - g2.f.col(i)).cwiseAbs().maxCoeff());
    if (i == 0) continue;
    dg = std::max(dg, w * (g1.fbar[i] - g2.fbar[i]).colwise().norm().maxCoeff());
  }
  return df + dg;
}

void SolverConfig::validate() const {
  require(T > 0.0, ErrorKind::ConfigInvalid, "horizon T must be positive");
  require(gamma > 0.0 && gamma < 1.0, ErrorKind::ConfigInvalid, "gamma must lie in (0, 1)");
  require(eta >= 0.0, ErrorKind::ConfigInvalid, "eta must be nonnegative");
  require(tol > 0.0, ErrorKind::ConfigInvalid, "tol must be positive");
  require(max_iter >= 1, ErrorKind::ConfigInvalid, "max_iter must be positive");
  require(time_nodes == 0 || time_nodes >= 3, ErrorKind::ConfigInvalid,
          "time_nodes must be 0 or at least 3");
  require(time_ratio > 1.0, ErrorKind::ConfigInvalid, "time_ratio must exceed 1");
  require(t_min_frac > 0.0 && t_min_frac < 1.0, ErrorKind::ConfigInvalid,
          "t_min_frac must lie in (0, 1)");
  require(space_points >= 2, ErrorKind::ConfigInvalid, "space_points must be at least 2");
  require(box_halfwidth >= 0.0, ErrorKind::ConfigInvalid, "box_halfwidth must be nonnegative");
  require(quad.outer_order >= 1 && quad.inner_order >= 1 && quad.mc_samples >= 2 &&
              quad.time_nodes_per_half >= 1,
          ErrorKind::ConfigInvalid, "quadrature settings must be positive");
  require(contraction_pairs >= 1, ErrorKind::ConfigInvalid, "contraction_pairs must be positive");
  require(contraction_target > 0.0 && contraction_target < 1.0, ErrorKind::ConfigInvalid,
          "contraction_target must lie in (0, 1)");
}

std::vector<double> make_time_grid(const SolverConfig& cfg) {
  const double tmin = cfg.t_min_frac * cfg.T;
  std::vector<double> grid{0.0};
  if (cfg.time_nodes > 0) {
    const int K = cfg.time_nodes - 1;
    for (int i = 0; i < K; ++i)
      grid.push_back(i == K - 1 ? cfg.T : tmin * std::pow(cfg.T / tmin, static_cast<double>(i) / (K - 1)));
    return grid;
  }
  for (double t = tmin; t < cfg.T * (1.0 - 1e-9); t *= cfg.time_ratio) grid.push_back(t);
  grid.push_back(cfg.T);
  return grid;
}

SpaceGrid make_space_grid(const ProjectedModel& model, const SolverConfig& cfg) {
  const int N = model.proj_dim();
  require(N <= 3, ErrorKind::DimensionTooLarge, "tensor space grids support N <= 3");
  double half = cfg.box_halfwidth;
  if (half <= 0.0) half = 6.0 * std::sqrt(model.proj_cov(cfg.T).matrix().diagonal().maxCoeff());
  require(half > 0.0 && std::isfinite(half), ErrorKind::ConfigInvalid, "degenerate space box");
  SpaceGrid g;
  g.dim = N;
  g.points_per_dim = cfg.space_points;
  g.lo.assign(N, -half);
  g.hi.assign(N, half);
  return g;
}

std::vector<std::pair<double, double>> convolution_time_nodes(double t, double gamma,
                                                              int per_half) {
  std::vector<double> x, w;
  gauss_legendre(per_half, &x, &w);
  const double p = 1.0 / (1.0 - gamma);
  std::vector<std::pair<double, double>> left, right;
  for (int i = 0; i < per_half; ++i) {
    const double u = 0.5 * (x[i] + 1.0);
    const double jac = 0.5 * w[i] * 0.5 * t * p * std::pow(u, p - 1.0);
    const double off = 0.5 * t * std::pow(u, p);
    left.emplace_back(off, jac);
    // strong grading can round t - off to t; such nodes carry negligible weight
    if (t - off < t) right.emplace_back(t - off, jac);
  }
  std::vector<std::pair<double, double>> out(left.begin(), left.end());
  out.insert(out.end(), right.rbegin(), right.rend());
  return out;
}

}  // namespace psmooth
