#include <doctest.h>

#include <cmath>
#include <numbers>

#include "psmooth/heat_model.hpp"
#include "psmooth/partial_smoothing.hpp"
#include "test_support.hpp"

using namespace psmooth;

namespace {

// int_0^pi f(xi) sqrt2 sin(k xi) dxi by composite Simpson.
template <class F>
double sine_coefficient(F f, int k) {
  const int n = 20000;
  const double h = std::numbers::pi / n;
  double acc = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double xi = j * h;
    const double w = (j == 0 || j == n) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    acc += w * f(xi) * std::numbers::sqrt2 * std::sin(k * xi);
  }
  return acc * h / 3.0;
}

double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("eigenvalues are squares") {
  const SpectralBasis b = heat::heat_eigenvalues(3);
  CHECK(b.eigenvalues == std::vector<double>{1.0, 4.0, 9.0});
  const SpectralBasis big = heat::heat_eigenvalues(256);
  CHECK(big.eigenvalues[255] == 256.0 * 256.0);
}

TEST_CASE("Dirichlet map coefficients match integration of the linear extension") {
  support::Gen gen(41);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Vector2d a(gen.normal(), gen.normal());
    const Eigen::VectorXd d = heat::dirichlet_map_coeffs(a, 12);
    for (int k = 1; k <= 12; ++k) {
      const double exact = sine_coefficient(
          [&](double xi) { return a(0) + (a(1) - a(0)) * xi / std::numbers::pi; }, k);
      CHECK(std::abs(d(k - 1) - exact) < 1e-9);
    }
  }
  CHECK(heat::dirichlet_map_coeffs(Eigen::Vector2d::Zero(), 5).isZero(0.0));
}

TEST_CASE("control coefficients") {
  const Eigen::VectorXd c = heat::control_coeffs(Eigen::Vector2d(1.0, 0.0), 8);
  CHECK(c(1) == doctest::Approx(2.0 * std::numbers::sqrt2));
  for (int k = 1; k <= 8; ++k) CHECK(c(k - 1) == doctest::Approx(std::numbers::sqrt2 * k));
  CHECK(heat::control_coeffs(Eigen::Vector2d::Zero(), 4).isZero(0.0));
}

TEST_CASE("projection vectors are orthonormal") {
  const auto m = heat::build_projected_model(support::default_heat());
  const Eigen::MatrixXd& V = m->projection();
  CHECK((V * V.transpose() - Eigen::MatrixXd::Identity(V.rows(), V.rows())).norm() < 1e-12);
  CHECK(m->fitted_alpha() > 0.9);
}

TEST_CASE("covariance limits") {
  heat::HeatConfig cfg = support::default_heat();
  for (double beta : {0.0, 0.3}) {
    cfg.beta = beta;
    const auto m = heat::build_projected_model(cfg);
    const Eigen::MatrixXd& V = m->projection();
    Eigen::VectorXd lam2b(cfg.n_modes), stat(cfg.n_modes);
    for (int k = 1; k <= cfg.n_modes; ++k) {
      const double l = static_cast<double>(k) * k;
      lam2b(k - 1) = std::pow(l, -2.0 * beta);
      stat(k - 1) = std::pow(l, -1.0 - 2.0 * beta) / 2.0;
    }
    const double t = 1e-7;
    const Eigen::MatrixXd small = V * lam2b.asDiagonal() * V.transpose();
    CHECK(max_rel_diff(m->proj_cov(t).matrix() / t, small) < 1e-3);
    const Eigen::MatrixXd large = V * stat.asDiagonal() * V.transpose();
    CHECK(max_rel_diff(m->proj_cov(40.0).matrix(), large) < 1e-12);
  }
}

TEST_CASE("truncation at 256 modes is stable under doubling") {
  heat::HeatConfig a = support::default_heat();
  heat::HeatConfig b = a;
  b.n_modes = 512;
  const auto ma = heat::build_projected_model(a);
  const auto mb = heat::build_projected_model(b);
  for (double t : {1e-3, 1e-2, 0.1, 1.0}) {
    CHECK(max_rel_diff(ma->proj_cov(t).matrix(), mb->proj_cov(t).matrix()) < 1e-6);
    CHECK(max_rel_diff(ma->proj_control(t), mb->proj_control(t)) < 1e-6);
  }
}

TEST_CASE("inclusion holds for the default projection") {
  const auto m = heat::build_projected_model(support::default_heat());
  for (double t : log_grid(1e-4, 1.0, 25)) CHECK_NOTHROW(lambda_operator(*m, t));
}

TEST_CASE("slowly decaying projection vectors are rejected") {
  heat::HeatConfig cfg = support::default_heat();
  cfg.projection.alpha = 0.1;
  try {
    heat::build_projected_model(cfg);
    FAIL("expected InclusionViolated");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InclusionViolated);
  }
  cfg.enforce_decay = false;
  const auto m = heat::build_projected_model(cfg);
  CHECK(m->fitted_alpha() < 0.25);
}

TEST_CASE("unprojected smoothing blows up faster than t^{-1}") {
  const auto m = heat::build_unprojected_model(support::default_heat());
  const BlowupFit fit = fit_blowup(*m, log_grid(1e-4, 1e-1, 20));
  CHECK(fit.slope <= -1.2);
  CHECK(fit.slope > -1.4);
}

TEST_CASE("state_for_projection inverts the projected semigroup") {
  support::Gen gen(43);
  const auto m = heat::build_projected_model(support::default_heat());
  for (int trial = 0; trial < 5; ++trial) {
    const double t = gen.uniform(0.0, 1.0);
    const Eigen::VectorXd y = gen.vector(2);
    const SpectralState x = m->state_for_projection(t, y);
    CHECK((m->proj_semigroup_apply(t, x) - y).norm() < 1e-9 * (1.0 + y.norm()));
  }
}

TEST_CASE("configuration validation") {
  heat::HeatConfig cfg = support::default_heat();
  cfg.epsilon = 0.3;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = support::modes_heat({0});
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = support::modes_heat({1, 1});
  CHECK_THROWS_AS(heat::build_projected_model(cfg), Error);
}
