#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <vector>

#include "psmooth/errors.hpp"

namespace psmooth {

// Eigenvalues of -A on the truncated spectral basis, increasing and positive.
struct SpectralBasis {
  std::vector<double> eigenvalues;

  explicit SpectralBasis(std::vector<double> values);
  std::size_t n_modes() const { return eigenvalues.size(); }
};

// Square matrix, symmetrized on construction. Positivity is checked by the
// operations that need it.
class SymPSDMatrix {
 public:
  SymPSDMatrix() = default;
  explicit SymPSDMatrix(const Eigen::MatrixXd& m);

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  Eigen::MatrixXd m_;
};

struct GaussianMeasureN {
  Eigen::VectorXd mean;
  SymPSDMatrix covariance;

  GaussianMeasureN(Eigen::VectorXd mean, SymPSDMatrix covariance);
  Eigen::Index dim() const { return mean.size(); }
};

enum class QuadratureKind { TensorHermite, MonteCarlo };

// Nodes are standard normal points stored column-wise (dim x count).
struct QuadratureRule {
  QuadratureKind kind = QuadratureKind::TensorHermite;
  Eigen::MatrixXd nodes;
  Eigen::VectorXd weights;
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(nodes.rows()); }
  int size() const { return static_cast<int>(nodes.cols()); }
};

struct Expectation {
  double value = 0.0;
  double std_error = 0.0;
};

inline constexpr double kPsdTol = 1e-10;
inline constexpr double kRankTol = 1e-12;
inline constexpr int kMaxTensorDim = 4;

struct SymEigen {
  Eigen::VectorXd values;   // ascending, clamped at zero
  Eigen::MatrixXd vectors;
};

// Eigendecomposition with negative eigenvalues above -kPsdTol*lambda_max
// clamped to zero; anything below throws NotPSD.
SymEigen psd_eigen(const SymPSDMatrix& m);

SymPSDMatrix psd_sqrt(const SymPSDMatrix& m);

struct PinvSqrt {
  SymPSDMatrix matrix;
  int rank = 0;
};

PinvSqrt psd_pinv_sqrt(const SymPSDMatrix& m, double rank_tol = kRankTol);
Eigen::MatrixXd psd_pinv(const SymPSDMatrix& m, double rank_tol = kRankTol);
Eigen::MatrixXd image_projector(const SymPSDMatrix& m, double rank_tol = kRankTol);

double operator_norm(const Eigen::MatrixXd& m);
int numerical_rank(const Eigen::MatrixXd& m, double rel_tol);

std::vector<double> hermite_nodes_1d(int order, std::vector<double>* weights);

QuadratureRule build_quadrature(int dim, QuadratureKind kind, int order_or_samples,
                                std::uint64_t seed = 0);

// Tensor Hermite up to three dimensions, Monte Carlo beyond.
QuadratureRule default_quadrature(int dim, int hermite_order, int mc_samples,
                                  std::uint64_t seed = 0);

template <class F>
Expectation gauss_expectation(F&& f, const GaussianMeasureN& mu, const QuadratureRule& rule) {
  require(rule.dim() == mu.dim(), ErrorKind::DimensionMismatch,
          "quadrature dimension differs from measure dimension");
  const Eigen::MatrixXd L = psd_sqrt(mu.covariance).matrix();
  const int n = rule.size();
  Eigen::VectorXd values(n);
  Eigen::VectorXd point(mu.dim());
  double acc = 0.0;
  for (int q = 0; q < n; ++q) {
    point.noalias() = mu.mean + L * rule.nodes.col(q);
    values(q) = f(point);
    acc += rule.weights(q) * values(q);
  }
  Expectation out;
  out.value = acc;
  if (rule.kind == QuadratureKind::MonteCarlo && n > 1) {
    const double var = (values.array() - acc).square().sum() / (n - 1);
    out.std_error = std::sqrt(var / n);
  }
  return out;
}

}  // namespace psmooth
