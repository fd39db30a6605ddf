#include "psmooth/heat_model.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <numbers>

namespace psmooth::heat {

void HeatConfig::validate() const {
  require(n_modes >= 1, ErrorKind::ConfigInvalid, "n_modes must be positive");
  require(beta >= 0.0, ErrorKind::ConfigInvalid, "beta must be nonnegative");
  require(epsilon > 0.0 && epsilon < 0.25, ErrorKind::ConfigInvalid,
          "epsilon must lie in (0, 1/4)");
  switch (projection.kind) {
    case ProjectionKind::SmoothedBumps:
      require(projection.count >= 1 && projection.count <= n_modes, ErrorKind::ConfigInvalid,
              "projection count must be in [1, n_modes]");
      break;
    case ProjectionKind::Modes:
      require(!projection.modes.empty(), ErrorKind::ConfigInvalid, "no projection modes");
      for (int k : projection.modes)
        require(k >= 1 && k <= n_modes, ErrorKind::ConfigInvalid, "projection mode out of range");
      break;
    case ProjectionKind::Coefficients:
      require(!projection.coefficients.empty(), ErrorKind::ConfigInvalid,
              "no projection coefficient vectors");
      break;
    case ProjectionKind::Identity:
      break;
  }
}

SpectralBasis heat_eigenvalues(int n_modes) {
  std::vector<double> lam(n_modes);
  for (int k = 1; k <= n_modes; ++k) lam[k - 1] = static_cast<double>(k) * k;
  return SpectralBasis(std::move(lam));
}

Eigen::VectorXd dirichlet_map_coeffs(const Eigen::Vector2d& a, int n_modes) {
  Eigen::VectorXd d(n_modes);
  for (int k = 1; k <= n_modes; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    d(k - 1) = std::numbers::sqrt2 * (a(0) - sign * a(1)) / k;
  }
  return d;
}

Eigen::VectorXd control_coeffs(const Eigen::Vector2d& a, int n_modes) {
  Eigen::VectorXd d = dirichlet_map_coeffs(a, n_modes);
  for (int k = 1; k <= n_modes; ++k) d(k - 1) *= static_cast<double>(k) * k;
  return d;
}

namespace {

Eigen::MatrixXd orthonormal_rows(const Eigen::MatrixXd& rows) {
  const Eigen::Index N = rows.rows();
  require(rows.cols() >= N, ErrorKind::ConfigInvalid, "more projection vectors than modes");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(rows.transpose());
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(rows.cols(), N);
  const Eigen::MatrixXd R = qr.matrixQR().topRows(N).triangularView<Eigen::Upper>();
  const double scale = R.diagonal().cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < N; ++j) {
    require(std::abs(R(j, j)) > 1e-12 * scale, ErrorKind::ConfigInvalid,
            "projection vectors are linearly dependent");
    if (R(j, j) < 0.0) Q.col(j) *= -1.0;
  }
  return Q.transpose();
}

}  // namespace

Eigen::MatrixXd projection_vectors(const ProjectionSpec& spec, int n_modes) {
  switch (spec.kind) {
    case ProjectionKind::SmoothedBumps: {
      const int N = spec.count;
      Eigen::MatrixXd raw(N, n_modes);
      for (int i = 0; i < N; ++i) {
        const double center = std::numbers::pi * (i + 1) / (N + 1);
        for (int k = 1; k <= n_modes; ++k) {
          const double lam = static_cast<double>(k) * k;
          raw(i, k - 1) = std::pow(lam, -spec.alpha - 0.5) * std::numbers::sqrt2 * std::sin(k * center);
        }
      }
      return orthonormal_rows(raw);
    }
    case ProjectionKind::Modes: {
      Eigen::MatrixXd V = Eigen::MatrixXd::Zero(spec.modes.size(), n_modes);
      for (std::size_t i = 0; i < spec.modes.size(); ++i) V(i, spec.modes[i] - 1) = 1.0;
      return orthonormal_rows(V);
    }
    case ProjectionKind::Coefficients: {
      Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(spec.coefficients.size(), n_modes);
      for (std::size_t i = 0; i < spec.coefficients.size(); ++i) {
        const auto& c = spec.coefficients[i];
        require(static_cast<int>(c.size()) <= n_modes, ErrorKind::ConfigInvalid,
                "projection coefficient vector longer than n_modes");
        for (std::size_t k = 0; k < c.size(); ++k) raw(i, k) = c[k];
      }
      return orthonormal_rows(raw);
    }
    case ProjectionKind::Identity:
      return Eigen::MatrixXd::Identity(n_modes, n_modes);
  }
  return {};
}

double fit_projection_decay(const Eigen::MatrixXd& V, const SpectralBasis& basis) {
  const int n = static_cast<int>(basis.n_modes());
  const int k0 = std::max(1, n / 8);
  double alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < V.rows(); ++i) {
    std::vector<double> env(n, 0.0);
    double run = 0.0;
    for (int k = n - 1; k >= 0; --k) {
      run = std::max(run, std::abs(V(i, k)));
      env[k] = run;
    }
    if (env[k0] <= 0.0 || env[n - 1] <= 1e-300) continue;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int k = k0; k < n; ++k) {
      const double x = std::log(basis.eigenvalues[k]);
      const double y = std::log(env[k]);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++cnt;
    }
    if (cnt < 2) continue;
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    alpha = std::min(alpha, -slope - 0.5);
  }
  return alpha;
}

HeatModel::HeatModel(const HeatConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const SpectralBasis basis = heat_eigenvalues(cfg_.n_modes);
  lam_ = Eigen::Map<const Eigen::VectorXd>(basis.eigenvalues.data(), cfg_.n_modes);
  V_ = projection_vectors(cfg_.projection, cfg_.n_modes);
  Dmat_.resize(cfg_.n_modes, 2);
  Dmat_.col(0) = dirichlet_map_coeffs(Eigen::Vector2d(1.0, 0.0), cfg_.n_modes);
  Dmat_.col(1) = dirichlet_map_coeffs(Eigen::Vector2d(0.0, 1.0), cfg_.n_modes);
  alpha_fit_ = fit_projection_decay(V_, basis);
  if (cfg_.enforce_decay && cfg_.projection.kind != ProjectionKind::Identity &&
      !(alpha_fit_ > cfg_.beta + 0.25)) {
    fail(ErrorKind::InclusionViolated,
         "projection vectors decay with fitted alpha " + std::to_string(alpha_fit_) +
             ", need alpha > beta + 1/4 = " + std::to_string(cfg_.beta + 0.25));
  }
}

Eigen::VectorXd HeatModel::q(double t) const {
  Eigen::VectorXd out(lam_.size());
  for (Eigen::Index k = 0; k < lam_.size(); ++k)
    out(k) = std::pow(lam_(k), -1.0 - 2.0 * cfg_.beta) * (-std::expm1(-2.0 * t * lam_(k))) / 2.0;
  return out;
}

Eigen::MatrixXd HeatModel::sandwich(const Eigen::VectorXd& d) const {
  return V_ * d.asDiagonal() * V_.transpose();
}

Eigen::VectorXd HeatModel::proj_semigroup_apply(double t, const ModelState& x) const {
  const auto* s = std::get_if<SpectralState>(&x);
  require(s != nullptr, ErrorKind::DimensionMismatch, "heat model expects a spectral state");
  require(s->coeffs.size() <= lam_.size(), ErrorKind::DimensionMismatch,
          "state has more coefficients than modes");
  require(t >= 0.0, ErrorKind::ConfigInvalid, "negative time");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(lam_.size());
  c.head(s->coeffs.size()) = s->coeffs;
  for (Eigen::Index k = 0; k < lam_.size(); ++k) c(k) *= std::exp(-t * lam_(k));
  return V_ * c;
}

SymPSDMatrix HeatModel::proj_cov(double t) const {
  require(t > 0.0, ErrorKind::ConfigInvalid, "proj_cov needs t > 0");
  return SymPSDMatrix(sandwich(q(t)));
}

Eigen::MatrixXd HeatModel::proj_control(double t) const {
  require(t > 0.0, ErrorKind::ConfigInvalid, "proj_control needs t > 0");
  Eigen::VectorXd d(lam_.size());
  for (Eigen::Index k = 0; k < lam_.size(); ++k) d(k) = lam_(k) * std::exp(-t * lam_(k));
  return V_ * d.asDiagonal() * Dmat_;
}

SymPSDMatrix HeatModel::pushforward_cov(double s, double t) const {
  require(s >= 0.0 && t > s, ErrorKind::ConfigInvalid, "pushforward_cov needs 0 <= s < t");
  Eigen::VectorXd d = q(t - s);
  for (Eigen::Index k = 0; k < lam_.size(); ++k) d(k) *= std::exp(-2.0 * s * lam_(k));
  return SymPSDMatrix(sandwich(d));
}

Eigen::MatrixXd HeatModel::cross_cov(double s, double t) const {
  require(s >= 0.0 && t > s, ErrorKind::ConfigInvalid, "cross_cov needs 0 <= s < t");
  Eigen::VectorXd d = q(t - s);
  for (Eigen::Index k = 0; k < lam_.size(); ++k) d(k) *= std::exp(-s * lam_(k));
  return sandwich(d);
}

Eigen::MatrixXd HeatModel::noise_cov(double s, double s2) const {
  require(s > 0.0 && s2 > 0.0, ErrorKind::ConfigInvalid, "noise_cov needs positive times");
  const double m = std::min(s, s2);
  const double gap = std::abs(s - s2);
  Eigen::VectorXd d(lam_.size());
  for (Eigen::Index k = 0; k < lam_.size(); ++k) {
    const double l = lam_(k);
    d(k) = std::pow(l, -2.0 * cfg_.beta) * std::exp(-gap * l) * (-std::expm1(-2.0 * m * l)) / (2.0 * l);
  }
  return sandwich(d);
}

SpectralState HeatModel::state_for_projection(double t, const Eigen::VectorXd& y) const {
  require(y.size() == proj_dim(), ErrorKind::DimensionMismatch, "projected point dimension");
  const int K = std::min<int>(static_cast<int>(lam_.size()), 4 * proj_dim() + 4);
  Eigen::MatrixXd M = V_.leftCols(K);
  for (int k = 0; k < K; ++k) M.col(k) *= std::exp(-t * lam_(k));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return SpectralState{svd.solve(y)};
}

std::unique_ptr<HeatModel> build_projected_model(const HeatConfig& cfg) {
  return std::make_unique<HeatModel>(cfg);
}

std::unique_ptr<HeatModel> build_unprojected_model(HeatConfig cfg) {
  cfg.projection = ProjectionSpec{};
  cfg.projection.kind = ProjectionKind::Identity;
  return std::make_unique<HeatModel>(cfg);
}

}  // namespace psmooth::heat
