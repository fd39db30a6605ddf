#include "psmooth/delay_model.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace psmooth::delay {

void DelayConfig::validate() const {
  require(n >= 1 && m >= 1 && k >= 1, ErrorKind::ConfigInvalid, "dimensions must be positive");
  require(a0.rows() == n && a0.cols() == n, ErrorKind::ConfigInvalid, "a0 must be n x n");
  require(b0.rows() == n && b0.cols() == m, ErrorKind::ConfigInvalid, "b0 must be n x m");
  require(sigma.rows() == n && sigma.cols() == k, ErrorKind::ConfigInvalid, "sigma must be n x k");
  require(d > 0.0, ErrorKind::ConfigInvalid, "delay d must be positive");
  for (const Atom& a : atoms) {
    require(a.location >= -d && a.location <= 0.0, ErrorKind::ConfigInvalid,
            "atom location outside [-d, 0]");
    require(a.weight.rows() == n && a.weight.cols() == m, ErrorKind::ConfigInvalid,
            "atom weight must be n x m");
  }
  if (!density.empty()) {
    require(density.size() >= 2, ErrorKind::ConfigInvalid, "density table needs two points");
    for (const auto& v : density)
      require(v.rows() == n && v.cols() == m, ErrorKind::ConfigInvalid,
              "density values must be n x m");
  }
  const bool finite = a0.allFinite() && b0.allFinite() && sigma.allFinite();
  require(finite, ErrorKind::ConfigInvalid, "non-finite coefficients");
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) { return a.exp(); }

SymPSDMatrix gramian(const DelayConfig& cfg, double t) {
  require(t > 0.0, ErrorKind::ConfigInvalid, "gramian needs t > 0");
  const Eigen::MatrixXd& a = cfg.a0;
  const Eigen::MatrixXd S = cfg.sigma * cfg.sigma.transpose();
  const double anorm = a.cwiseAbs().rowwise().sum().maxCoeff();
  const int steps = 200 * std::max(1, static_cast<int>(std::ceil(2.0 * t * anorm)));
  const double h = t / steps;
  auto rhs = [&](const Eigen::MatrixXd& Q) -> Eigen::MatrixXd {
    return a * Q + Q * a.transpose() + S;
  };
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(cfg.n, cfg.n);
  for (int i = 0; i < steps; ++i) {
    const Eigen::MatrixXd k1 = rhs(Q);
    const Eigen::MatrixXd k2 = rhs(Q + 0.5 * h * k1);
    const Eigen::MatrixXd k3 = rhs(Q + 0.5 * h * k2);
    const Eigen::MatrixXd k4 = rhs(Q + h * k3);
    Q += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return SymPSDMatrix(Q);
}

namespace {

// Trapezoid of g(r) * table(r) over [lo, 0] where table is uniform on [-d, 0].
template <class Table, class Weight>
Eigen::MatrixXd trapezoid_tail(double d, int points, double lo, const Table& table,
                               const Weight& weight) {
  const double h = d / (points - 1);
  std::vector<double> nodes{lo};
  for (int j = 0; j < points; ++j) {
    const double r = -d + j * h;
    if (r > lo + 1e-14 * d) nodes.push_back(r);
  }
  Eigen::MatrixXd acc;
  Eigen::MatrixXd prev = weight(nodes[0]) * table(nodes[0]);
  acc = Eigen::MatrixXd::Zero(prev.rows(), prev.cols());
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    Eigen::MatrixXd cur = weight(nodes[i]) * table(nodes[i]);
    acc += 0.5 * (nodes[i] - nodes[i - 1]) * (prev + cur);
    prev = std::move(cur);
  }
  return acc;
}

template <class Rows>
Eigen::MatrixXd interp_uniform(const Rows& values, double d, double r) {
  const int M = static_cast<int>(values.size());
  const double pos = std::clamp((r + d) / d * (M - 1), 0.0, static_cast<double>(M - 1));
  const int j = std::min(static_cast<int>(pos), M - 2);
  const double th = pos - j;
  return (1.0 - th) * values[j] + th * values[j + 1];
}

}  // namespace

Eigen::MatrixXd proj_control_delay(const DelayConfig& cfg, double t) {
  require(t >= 0.0, ErrorKind::ConfigInvalid, "negative time");
  Eigen::MatrixXd out = expm(t * cfg.a0) * cfg.b0;
  for (const Atom& a : cfg.atoms)
    if (a.location >= -t) out += expm((t + a.location) * cfg.a0) * a.weight;
  if (!cfg.density.empty() && t > 0.0) {
    const double lo = -std::min(t, cfg.d);
    auto table = [&](double r) { return interp_uniform(cfg.density, cfg.d, r); };
    auto weight = [&](double r) { return expm((t + r) * cfg.a0); };
    out += trapezoid_tail(cfg.d, static_cast<int>(cfg.density.size()), lo, table, weight);
  }
  return out;
}

Eigen::MatrixXd kalman_matrix(const DelayConfig& cfg) {
  Eigen::MatrixXd K(cfg.n, cfg.n * cfg.k);
  Eigen::MatrixXd blk = cfg.sigma;
  for (int i = 0; i < cfg.n; ++i) {
    K.middleCols(i * cfg.k, cfg.k) = blk;
    blk = cfg.a0 * blk;
  }
  return K;
}

int kalman_rank(const DelayConfig& cfg) { return numerical_rank(kalman_matrix(cfg), 1e-10); }

namespace {

Eigen::MatrixXd range_projector(const Eigen::MatrixXd& M, double rel_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(M.rows(), M.rows());
  if (s.size() == 0 || s(0) <= 0.0) return P;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) P += svd.matrixU().col(i) * svd.matrixU().col(i).transpose();
  return P;
}

double column_residual(const Eigen::MatrixXd& P, const Eigen::MatrixXd& cols) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < cols.cols(); ++j) {
    const double nrm = cols.col(j).norm();
    if (nrm == 0.0) continue;
    worst = std::max(worst, (cols.col(j) - P * cols.col(j)).norm() / nrm);
  }
  return worst;
}

}  // namespace

double strong_inclusion_residual(const DelayConfig& cfg, const std::vector<double>& t_grid) {
  const Eigen::MatrixXd P = range_projector(cfg.sigma, 1e-10);
  double worst = 0.0;
  for (double t : t_grid) worst = std::max(worst, column_residual(P, proj_control_delay(cfg, t)));
  return worst;
}

bool check_strong_inclusion(const DelayConfig& cfg, const std::vector<double>& t_grid) {
  return strong_inclusion_residual(cfg, t_grid) < 1e-8;
}

double kalman_inclusion_residual(const DelayConfig& cfg, const std::vector<double>& t_grid) {
  const Eigen::MatrixXd P = range_projector(kalman_matrix(cfg), 1e-10);
  double worst = 0.0;
  for (double t : t_grid) worst = std::max(worst, column_residual(P, proj_control_delay(cfg, t)));
  return worst;
}

std::vector<double> inclusion_check_grid(const DelayConfig& cfg) {
  std::vector<double> grid;
  const double hi = 10.0 * std::max(1.0, cfg.d);
  for (int i = 0; i < 24; ++i) grid.push_back(1e-4 * std::pow(hi / 1e-4, i / 23.0));
  for (const Atom& a : cfg.atoms) {
    if (a.location < 0.0) {
      grid.push_back(-a.location * (1.0 + 1e-6));
      grid.push_back(-a.location * (1.0 - 1e-6));
    }
  }
  std::sort(grid.begin(), grid.end());
  return grid;
}

DelayModel::DelayModel(const DelayConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  if (kalman_rank(cfg_) < cfg_.n) {
    const double resid = kalman_inclusion_residual(cfg_, inclusion_check_grid(cfg_));
    if (resid > 1e-8)
      fail(ErrorKind::RankDeficient,
           "Kalman rank " + std::to_string(kalman_rank(cfg_)) + " < n and control image leaves "
           "the controllable subspace (relative residual " + std::to_string(resid) + ")");
  }
}

Eigen::VectorXd DelayModel::proj_semigroup_apply(double t, const ModelState& x) const {
  const auto* s = std::get_if<DelayState>(&x);
  require(s != nullptr, ErrorKind::DimensionMismatch, "delay model expects a delay state");
  require(s->x0.size() == cfg_.n, ErrorKind::DimensionMismatch, "x0 must have n entries");
  require(t >= 0.0, ErrorKind::ConfigInvalid, "negative time");
  Eigen::VectorXd out = expm(t * cfg_.a0) * s->x0;
  if (s->x1.size() == 0 || t == 0.0) return out;
  require(s->x1.rows() == cfg_.n && s->x1.cols() >= 2, ErrorKind::DimensionMismatch,
          "x1 must be n x (grid points)");
  const int M = static_cast<int>(s->x1.cols());
  std::vector<Eigen::MatrixXd> cols(M);
  for (int j = 0; j < M; ++j) cols[j] = s->x1.col(j);
  const double lo = -std::min(t, cfg_.d);
  auto table = [&](double r) { return interp_uniform(cols, cfg_.d, r); };
  auto weight = [&](double r) { return expm((t + r) * cfg_.a0); };
  out += trapezoid_tail(cfg_.d, M, lo, table, weight);
  return out;
}

SymPSDMatrix DelayModel::proj_cov(double t) const { return gramian(cfg_, t); }

Eigen::MatrixXd DelayModel::proj_control(double t) const {
  require(t > 0.0, ErrorKind::ConfigInvalid, "proj_control needs t > 0");
  return proj_control_delay(cfg_, t);
}

SymPSDMatrix DelayModel::pushforward_cov(double s, double t) const {
  require(s >= 0.0 && t > s, ErrorKind::ConfigInvalid, "pushforward_cov needs 0 <= s < t");
  const Eigen::MatrixXd E = expm(s * cfg_.a0);
  return SymPSDMatrix(E * gramian(cfg_, t - s).matrix() * E.transpose());
}

Eigen::MatrixXd DelayModel::cross_cov(double s, double t) const {
  require(s >= 0.0 && t > s, ErrorKind::ConfigInvalid, "cross_cov needs 0 <= s < t");
  return expm(s * cfg_.a0) * gramian(cfg_, t - s).matrix();
}

Eigen::MatrixXd DelayModel::noise_cov(double s, double s2) const {
  require(s > 0.0 && s2 > 0.0, ErrorKind::ConfigInvalid, "noise_cov needs positive times");
  const double m = std::min(s, s2);
  return expm((s - m) * cfg_.a0) * gramian(cfg_, m).matrix() * expm((s2 - m) * cfg_.a0).transpose();
}

std::vector<double> DelayModel::control_breakpoints() const {
  std::vector<double> out;
  for (const Atom& a : cfg_.atoms)
    if (a.location < 0.0) out.push_back(-a.location);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::unique_ptr<DelayModel> build_projected_model(const DelayConfig& cfg) {
  return std::make_unique<DelayModel>(cfg);
}

DelayState make_state(const DelayConfig& cfg, const Eigen::VectorXd& x0,
                      const std::function<Eigen::VectorXd(double)>& past_control,
                      int grid_points) {
  require(grid_points >= 2, ErrorKind::ConfigInvalid, "state grid needs two points");
  require(x0.size() == cfg.n, ErrorKind::DimensionMismatch, "x0 must have n entries");
  DelayState s;
  s.x0 = x0;
  s.x1 = Eigen::MatrixXd::Zero(cfg.n, grid_points);
  const double h = cfg.d / (grid_points - 1);
  for (int j = 0; j < grid_points; ++j) {
    const double xi = -cfg.d + j * h;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(cfg.n);
    for (const Atom& a : cfg.atoms)
      if (a.location <= xi) v += a.weight * past_control(a.location - xi);
    if (!cfg.density.empty() && xi > -cfg.d) {
      const int M = static_cast<int>(cfg.density.size());
      const int pieces = std::max(2, static_cast<int>(std::ceil((xi + cfg.d) / cfg.d * (M - 1))));
      const double dz = (xi + cfg.d) / pieces;
      for (int p = 0; p <= pieces; ++p) {
        const double zeta = -cfg.d + p * dz;
        const double arg = std::min(0.0, zeta - xi);
        const double w = (p == 0 || p == pieces) ? 0.5 * dz : dz;
        v += w * interp_uniform(cfg.density, cfg.d, zeta) * past_control(arg);
      }
    }
    s.x1.col(j) = v;
  }
  return s;
}

}  // namespace psmooth::delay
