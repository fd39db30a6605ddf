#include "psmooth/ou_engine.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace psmooth {

ProjectedTerminalCost::ProjectedTerminalCost(int dim, Fn fn, double bound)
    : dim_(dim), fn_(std::move(fn)), bound_(bound) {
  require(dim_ >= 1, ErrorKind::ConfigInvalid, "terminal cost dimension must be positive");
  require(static_cast<bool>(fn_), ErrorKind::ConfigInvalid, "terminal cost has no function");
  require(bound_ >= 0.0, ErrorKind::ConfigInvalid, "terminal cost bound must be nonnegative");
}

Expectation semigroup_apply(const ProjectedModel& model, const ProjectedTerminalCost& phi,
                            double t, const Eigen::VectorXd& y0, const QuadratureRule& rule) {
  require(y0.size() == model.proj_dim() && phi.dim() == model.proj_dim(),
          ErrorKind::DimensionMismatch, "semigroup_apply: dimension mismatch");
  if (t <= 0.0) return {phi(y0), 0.0};
  const GaussianMeasureN mu(y0, model.proj_cov(t));
  return gauss_expectation(phi, mu, rule);
}

CameronMartinDensity::CameronMartinDensity(const SymPSDMatrix& cov, const Eigen::VectorXd& y,
                                           double rank_tol) {
  require(y.size() == cov.dim(), ErrorKind::DimensionMismatch, "shift dimension mismatch");
  const Eigen::VectorXd projected = image_projector(cov, rank_tol) * y;
  const double resid = (y - projected).norm();
  if (resid > 1e-8 * y.norm())
    fail(ErrorKind::NotInCameronMartin,
         "shift has component " + std::to_string(resid) + " outside the covariance image");
  a_ = psd_pinv(cov, rank_tol) * y;
  half_norm2_ = 0.5 * y.dot(a_);
}

double CameronMartinDensity::operator()(const Eigen::VectorXd& z) const {
  return std::exp(a_.dot(z) - half_norm2_);
}

double cameron_martin_density(const SymPSDMatrix& cov, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& z) {
  require(z.size() == cov.dim(), ErrorKind::DimensionMismatch, "point dimension mismatch");
  return CameronMartinDensity(cov, y)(z);
}

GaussianPathSampler::GaussianPathSampler(int block_dim, const Eigen::MatrixXd& block_cov)
    : block_dim_(block_dim) {
  require(block_dim > 0 && block_cov.rows() % block_dim == 0, ErrorKind::DimensionMismatch,
          "block covariance size is not a multiple of the block dimension");
  steps_ = static_cast<int>(block_cov.rows() / block_dim);
  factor_ = psd_sqrt(SymPSDMatrix(block_cov)).matrix();
}

std::vector<Eigen::VectorXd> GaussianPathSampler::draw(std::mt19937_64& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd xi(factor_.cols());
  for (Eigen::Index i = 0; i < xi.size(); ++i) xi(i) = normal(rng);
  const Eigen::VectorXd z = factor_ * xi;
  std::vector<Eigen::VectorXd> path(steps_);
  for (int i = 0; i < steps_; ++i) path[i] = z.segment(i * block_dim_, block_dim_);
  return path;
}

Eigen::MatrixXd noise_block_cov(const ProjectedModel& model, const std::vector<double>& times) {
  const int N = model.proj_dim();
  const int K = static_cast<int>(times.size());
  for (int i = 0; i < K; ++i) {
    require(times[i] > 0.0, ErrorKind::ConfigInvalid, "noise path times must be positive");
    if (i > 0)
      require(times[i] > times[i - 1], ErrorKind::ConfigInvalid,
              "noise path times must be increasing");
  }
  Eigen::MatrixXd cov(N * K, N * K);
  for (int i = 0; i < K; ++i) {
    for (int j = i; j < K; ++j) {
      const Eigen::MatrixXd c = model.noise_cov(times[i], times[j]);
      cov.block(i * N, j * N, N, N) = c;
      cov.block(j * N, i * N, N, N) = c.transpose();
    }
  }
  return cov;
}

std::vector<Eigen::VectorXd> sample_noise_path(const ProjectedModel& model,
                                               const std::vector<double>& times,
                                               std::uint64_t seed) {
  const GaussianPathSampler sampler(model.proj_dim(), noise_block_cov(model, times));
  std::mt19937_64 rng(seed);
  return sampler.draw(rng);
}

void gauss_legendre(int n, std::vector<double>* nodes, std::vector<double>* weights) {
  require(n >= 1, ErrorKind::ConfigInvalid, "Gauss-Legendre order must be positive");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k - 1, k) = J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes->resize(n);
  weights->resize(n);
  for (int i = 0; i < n; ++i) {
    (*nodes)[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    (*weights)[i] = 2.0 * v0 * v0;
  }
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * ((*nodes)[j] - (*nodes)[i]);
    const double w = 0.5 * ((*weights)[i] + (*weights)[j]);
    (*nodes)[i] = -x;
    (*nodes)[j] = x;
    (*weights)[i] = (*weights)[j] = w;
  }
  if (n % 2 == 1) (*nodes)[n / 2] = 0.0;
}

namespace {

Eigen::MatrixXd gl_panel(const ProjectedModel& model, double a, double b,
                         const std::vector<double>& x, const std::vector<double>& w) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(model.proj_dim(), model.control_dim());
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < x.size(); ++i) acc += w[i] * half * model.proj_control(mid + half * x[i]);
  return acc;
}

// Panels geometrically graded toward the left endpoint.
Eigen::MatrixXd integrate_piece(const ProjectedModel& model, double a, double b,
                                const std::vector<double>& x, const std::vector<double>& w) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(model.proj_dim(), model.control_dim());
  const double len = b - a;
  if (len <= 0.0) return acc;
  double hi = b;
  for (int j = 1; j <= 40; ++j) {
    const double lo = a + len * std::ldexp(1.0, -j);
    acc += gl_panel(model, lo, hi, x, w);
    hi = lo;
  }
  acc += gl_panel(model, a, hi, x, w);
  return acc;
}

}  // namespace

Eigen::MatrixXd integrated_control(const ProjectedModel& model, double tau_lo, double tau_hi) {
  require(tau_lo >= 0.0 && tau_hi >= tau_lo, ErrorKind::ConfigInvalid,
          "integrated_control: invalid interval");
  std::vector<double> x, w;
  gauss_legendre(10, &x, &w);
  std::vector<double> cuts{tau_lo};
  std::vector<double> bps = model.control_breakpoints();
  std::sort(bps.begin(), bps.end());
  for (double b : bps)
    if (b > tau_lo && b < tau_hi) cuts.push_back(b);
  cuts.push_back(tau_hi);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(model.proj_dim(), model.control_dim());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    acc += integrate_piece(model, cuts[i], cuts[i + 1], x, w);
  return acc;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace psmooth
