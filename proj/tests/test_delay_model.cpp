#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "psmooth/delay_model.hpp"
#include "psmooth/partial_smoothing.hpp"
#include "test_support.hpp"

using namespace psmooth;

namespace {

delay::DelayConfig random_config(support::Gen& gen, int n, int k) {
  delay::DelayConfig cfg;
  cfg.n = n;
  cfg.m = 1;
  cfg.k = k;
  cfg.a0 = 0.5 * gen.matrix(n, n);
  cfg.sigma = gen.matrix(n, k);
  cfg.b0 = cfg.sigma * gen.matrix(k, 1);
  cfg.d = 1.0;
  return cfg;
}

// Van Loan: expm(t [[-A, S], [0, A^T]]) = [[*, F12], [0, F22]], gramian = F22^T F12.
Eigen::MatrixXd van_loan_gramian(const delay::DelayConfig& cfg, double t) {
  const int n = cfg.n;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  M.topLeftCorner(n, n) = -cfg.a0;
  M.topRightCorner(n, n) = cfg.sigma * cfg.sigma.transpose();
  M.bottomRightCorner(n, n) = cfg.a0.transpose();
  const Eigen::MatrixXd F = delay::expm(t * M);
  return F.bottomRightCorner(n, n).transpose() * F.topRightCorner(n, n);
}

// Deterministic path y' = a0 y + b0 u(s) + sum_atoms w u(s + loc) by RK4, restarted
// at every control jump. Inside a piece u is read at a time clamped strictly into
// the piece, so piecewise constant controls are seen without the jump.
Eigen::VectorXd integrate_drift(const delay::DelayConfig& cfg, const Eigen::VectorXd& x0,
                                const std::function<Eigen::VectorXd(double)>& u, double t,
                                int steps) {
  std::vector<double> cuts{0.0, t};
  for (const auto& a : cfg.atoms)
    if (-a.location > 0.0 && -a.location < t) cuts.push_back(-a.location);
  std::sort(cuts.begin(), cuts.end());
  Eigen::VectorXd y = x0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c], hi = cuts[c + 1];
    const double pad = 1e-9 * (hi - lo);
    auto rhs = [&](double s, const Eigen::VectorXd& yy) {
      const double sc = std::clamp(s, lo + pad, hi - pad);
      Eigen::VectorXd out = cfg.a0 * yy + cfg.b0 * u(sc);
      for (const auto& a : cfg.atoms) out += a.weight * u(sc + a.location);
      return out;
    };
    const int n = std::max(1, static_cast<int>(steps * (hi - lo) / t));
    const double h = (hi - lo) / n;
    for (int i = 0; i < n; ++i) {
      const double s = lo + i * h;
      const Eigen::VectorXd k1 = rhs(s, y);
      const Eigen::VectorXd k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1);
      const Eigen::VectorXd k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2);
      const Eigen::VectorXd k4 = rhs(s + h, y + h * k3);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return y;
}

}  // namespace

TEST_CASE("gramian matches the Van Loan block exponential") {
  support::Gen gen(53);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = gen.integer(1, 4);
    const delay::DelayConfig cfg = random_config(gen, n, gen.integer(1, n));
    const double t = gen.uniform(0.01, 2.0);
    const Eigen::MatrixXd g = delay::gramian(cfg, t).matrix();
    const Eigen::MatrixXd vl = van_loan_gramian(cfg, t);
    CHECK((g - vl).norm() < 1e-9 * (1.0 + vl.norm()));
  }
}

TEST_CASE("Kalman rank equals the rank of the controllability gramian") {
  support::Gen gen(59);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = gen.integer(2, 4);
    delay::DelayConfig cfg = random_config(gen, n, 1);
    if (trial % 2 == 0) {
      // invariant subspace spanned by the first r coordinates containing sigma
      const int r = gen.integer(1, n - 1);
      cfg.a0.bottomLeftCorner(n - r, r).setZero();
      cfg.sigma.bottomRows(n - r).setZero();
    }
    const Eigen::MatrixXd g = van_loan_gramian(cfg, 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    const double top = es.eigenvalues().maxCoeff();
    int rank = 0;
    for (int i = 0; i < n; ++i) rank += es.eigenvalues()(i) > 1e-9 * top;
    CHECK(delay::kalman_rank(cfg) == rank);
  }
}

TEST_CASE("control outside the controllable subspace is RankDeficient") {
  delay::DelayConfig cfg;
  cfg.n = 2;
  cfg.m = cfg.k = 1;
  cfg.a0 = Eigen::MatrixXd::Zero(2, 2);
  cfg.sigma = Eigen::Vector2d(1.0, 0.0);
  cfg.b0 = Eigen::Vector2d(0.0, 1.0);
  try {
    delay::build_projected_model(cfg);
    FAIL("expected RankDeficient");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RankDeficient);
  }
  cfg.b0 = Eigen::Vector2d(2.0, 0.0);
  CHECK_NOTHROW(delay::build_projected_model(cfg));
}

TEST_CASE("default configuration satisfies the strong inclusion") {
  const delay::DelayConfig cfg = support::default_delay();
  CHECK(delay::kalman_rank(cfg) == 2);
  CHECK(delay::check_strong_inclusion(cfg, delay::inclusion_check_grid(cfg)));
  const auto m = delay::build_projected_model(cfg);
  CHECK(m->control_breakpoints() == std::vector<double>{0.5});
}

TEST_CASE("structural state reproduces the delayed drift with a constant past control") {
  // scalar, a0 = 0: y(t) = x0 + c u0 min(t, d)
  const delay::DelayConfig s = support::scalar_delay(0.8, 0.6);
  const auto ms = delay::build_projected_model(s);
  const Eigen::VectorXd u0 = Eigen::VectorXd::Constant(1, 1.5);
  const DelayState xs = delay::make_state(s, Eigen::VectorXd::Constant(1, 0.3),
                                          [&](double) { return u0; });
  for (double t : {0.1, 0.6, 1.3})
    CHECK(ms->proj_semigroup_apply(t, xs)(0) == doctest::Approx(0.3 + 0.8 * 1.5 * std::min(t, 0.6)));

  const delay::DelayConfig cfg = support::default_delay();
  const auto m = delay::build_projected_model(cfg);
  const Eigen::VectorXd x0 = Eigen::Vector2d(0.4, -0.2);
  const Eigen::VectorXd past = Eigen::VectorXd::Constant(1, -0.7);
  auto u = [&](double r) { return r < 0.0 ? past : Eigen::VectorXd::Zero(1).eval(); };
  // The tabulated past component carries the atom's jump, so the trapezoid tail is
  // first order in the state grid spacing once t passes the atom.
  for (double t : {0.25, 0.5, 0.9, 2.0}) {
    const Eigen::VectorXd ode = integrate_drift(cfg, x0, u, t, 20000);
    double prev = 0.0;
    for (int points : {129, 513, 2049}) {
      const DelayState x = delay::make_state(cfg, x0, [&](double) { return past; }, points);
      const double err = (m->proj_semigroup_apply(t, x) - ode).norm();
      CHECK(err < 0.3 / (points - 1));
      if (prev > 1e-8) CHECK(err < 0.3 * prev);
      prev = err;
    }
  }
}

TEST_CASE("integrated control is the response to a constant control from rest") {
  const delay::DelayConfig cfg = support::default_delay();
  const auto m = delay::build_projected_model(cfg);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 1.0);
  for (double t : {0.3, 0.8, 1.5}) {
    const Eigen::VectorXd ode = integrate_drift(
        cfg, Eigen::Vector2d::Zero(), [&](double r) { return r < 0.0 ? Eigen::VectorXd::Zero(1).eval() : u; },
        t, 20000);
    CHECK((integrated_control(*m, 0.0, t) * u - ode).norm() < 1e-6);
  }
}

TEST_CASE("Euler-Maruyama paths reproduce the projected covariance") {
  const delay::DelayConfig cfg = support::default_delay();
  const auto m = delay::build_projected_model(cfg);
  const double t = 0.8;
  const int steps = 400, paths = 20000;
  const double h = t / steps;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  for (int p = 0; p < paths; ++p) {
    Eigen::Vector2d y = Eigen::Vector2d::Zero();
    for (int i = 0; i < steps; ++i) {
      const Eigen::Vector2d dw(nd(rng), nd(rng));
      y += h * cfg.a0 * y + std::sqrt(h) * cfg.sigma * dw;
    }
    acc += y * y.transpose();
  }
  acc /= paths;
  const Eigen::MatrixXd cov = m->proj_cov(t).matrix();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double sd = std::sqrt((cov(i, i) * cov(j, j) + cov(i, j) * cov(i, j)) / paths);
      // five standard errors plus the O(h) discretization bias
      CHECK(std::abs(acc(i, j) - cov(i, j)) < 5.0 * sd + 2.0 * h * cov.norm());
    }
}

TEST_CASE("delay configuration validation") {
  delay::DelayConfig cfg = support::default_delay();
  cfg.d = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = support::default_delay();
  cfg.atoms[0].location = -2.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = support::default_delay();
  cfg.b0 = Eigen::MatrixXd::Zero(3, 1);
  CHECK_THROWS_AS(cfg.validate(), Error);
}
