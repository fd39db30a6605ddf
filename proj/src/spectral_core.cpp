#include "psmooth/spectral_core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <random>

namespace psmooth {

SpectralBasis::SpectralBasis(std::vector<double> values) : eigenvalues(std::move(values)) {
  require(!eigenvalues.empty(), ErrorKind::ConfigInvalid, "empty spectral basis");
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    require(eigenvalues[k] > 0.0, ErrorKind::ConfigInvalid, "eigenvalues must be positive");
    if (k > 0)
      require(eigenvalues[k] >= eigenvalues[k - 1], ErrorKind::ConfigInvalid,
              "eigenvalues must be increasing");
  }
}

SymPSDMatrix::SymPSDMatrix(const Eigen::MatrixXd& m) {
  require(m.rows() == m.cols(), ErrorKind::DimensionMismatch, "matrix is not square");
  m_ = 0.5 * (m + m.transpose());
}

GaussianMeasureN::GaussianMeasureN(Eigen::VectorXd mean_, SymPSDMatrix cov)
    : mean(std::move(mean_)), covariance(std::move(cov)) {
  require(mean.size() == covariance.dim(), ErrorKind::DimensionMismatch,
          "mean and covariance dimensions differ");
}

SymEigen psd_eigen(const SymPSDMatrix& m) {
  SymEigen out;
  if (m.dim() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.matrix());
  out.values = es.eigenvalues();
  out.vectors = es.eigenvectors();
  const double lmax = std::max(0.0, out.values.maxCoeff());
  const double tol = kPsdTol * lmax;
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    if (out.values(i) < 0.0) {
      if (-out.values(i) > tol)
        fail(ErrorKind::NotPSD, "eigenvalue " + std::to_string(out.values(i)) +
                                    " below tolerance " + std::to_string(-tol));
      out.values(i) = 0.0;
    }
  }
  return out;
}

SymPSDMatrix psd_sqrt(const SymPSDMatrix& m) {
  const SymEigen e = psd_eigen(m);
  if (m.dim() == 0) return m;
  return SymPSDMatrix(e.vectors * e.values.cwiseSqrt().asDiagonal() * e.vectors.transpose());
}

namespace {

Eigen::VectorXd kept_mask(const Eigen::VectorXd& values, double rank_tol, int* rank) {
  const double lmax = values.size() ? values.maxCoeff() : 0.0;
  Eigen::VectorXd keep = Eigen::VectorXd::Zero(values.size());
  *rank = 0;
  if (lmax <= 0.0) return keep;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values(i) > rank_tol * lmax) {
      keep(i) = 1.0;
      ++*rank;
    }
  }
  return keep;
}

}  // namespace

PinvSqrt psd_pinv_sqrt(const SymPSDMatrix& m, double rank_tol) {
  const SymEigen e = psd_eigen(m);
  PinvSqrt out;
  const Eigen::VectorXd keep = kept_mask(e.values, rank_tol, &out.rank);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(e.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (keep(i) > 0.0) d(i) = 1.0 / std::sqrt(e.values(i));
  out.matrix = SymPSDMatrix(e.vectors * d.asDiagonal() * e.vectors.transpose());
  return out;
}

Eigen::MatrixXd psd_pinv(const SymPSDMatrix& m, double rank_tol) {
  const SymEigen e = psd_eigen(m);
  int rank = 0;
  const Eigen::VectorXd keep = kept_mask(e.values, rank_tol, &rank);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(e.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (keep(i) > 0.0) d(i) = 1.0 / e.values(i);
  return e.vectors * d.asDiagonal() * e.vectors.transpose();
}

Eigen::MatrixXd image_projector(const SymPSDMatrix& m, double rank_tol) {
  const SymEigen e = psd_eigen(m);
  int rank = 0;
  const Eigen::VectorXd keep = kept_mask(e.values, rank_tol, &rank);
  return e.vectors * keep.asDiagonal() * e.vectors.transpose();
}

double operator_norm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) <= 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

// Golub-Welsch for the probabilists' Hermite weight; weights sum to one.
std::vector<double> hermite_nodes_1d(int order, std::vector<double>* weights) {
  require(order >= 1, ErrorKind::ConfigInvalid, "hermite order must be positive");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) J(k - 1, k) = J(k, k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  std::vector<double> nodes(order);
  weights->assign(order, 0.0);
  double total = 0.0;
  for (int i = 0; i < order; ++i) {
    nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    (*weights)[i] = v0 * v0;
    total += v0 * v0;
  }
  for (double& w : *weights) w /= total;
  // symmetrize: the exact rule is symmetric about zero
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (nodes[j] - nodes[i]);
    const double w = 0.5 * ((*weights)[i] + (*weights)[j]);
    nodes[i] = -x;
    nodes[j] = x;
    (*weights)[i] = (*weights)[j] = w;
  }
  if (order % 2 == 1) nodes[order / 2] = 0.0;
  return nodes;
}

QuadratureRule build_quadrature(int dim, QuadratureKind kind, int order_or_samples,
                                std::uint64_t seed) {
  require(dim >= 1, ErrorKind::DimensionMismatch, "quadrature dimension must be positive");
  require(order_or_samples >= 1, ErrorKind::ConfigInvalid, "order/samples must be positive");
  QuadratureRule rule;
  rule.kind = kind;
  rule.seed = seed;
  if (kind == QuadratureKind::TensorHermite) {
    if (dim > kMaxTensorDim)
      fail(ErrorKind::DimensionTooLarge,
           "tensor Hermite rule requested in dimension " + std::to_string(dim));
    std::vector<double> w1;
    const std::vector<double> x1 = hermite_nodes_1d(order_or_samples, &w1);
    int count = 1;
    for (int d = 0; d < dim; ++d) count *= order_or_samples;
    rule.nodes.resize(dim, count);
    rule.weights.resize(count);
    for (int q = 0; q < count; ++q) {
      int rem = q;
      double w = 1.0;
      for (int d = 0; d < dim; ++d) {
        const int i = rem % order_or_samples;
        rem /= order_or_samples;
        rule.nodes(d, q) = x1[i];
        w *= w1[i];
      }
      rule.weights(q) = w;
    }
    return rule;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  rule.nodes.resize(dim, order_or_samples);
  for (int q = 0; q < order_or_samples; ++q)
    for (int d = 0; d < dim; ++d) rule.nodes(d, q) = normal(rng);
  rule.weights = Eigen::VectorXd::Constant(order_or_samples, 1.0 / order_or_samples);
  return rule;
}

QuadratureRule default_quadrature(int dim, int hermite_order, int mc_samples, std::uint64_t seed) {
  if (dim <= 3) return build_quadrature(dim, QuadratureKind::TensorHermite, hermite_order, seed);
  return build_quadrature(dim, QuadratureKind::MonteCarlo, mc_samples, seed);
}

}  // namespace psmooth
