#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "psmooth/spectral_core.hpp"

namespace psmooth {

// Spectral coefficients of a state in the eigenbasis of A.
struct SpectralState {
  Eigen::VectorXd coeffs;
};

// Present value x0 and past component x1 tabulated on a uniform grid of [-d, 0]
// (column j sits at -d + j*d/(cols-1)).
struct DelayState {
  Eigen::VectorXd x0;
  Eigen::MatrixXd x1;
};

using ModelState = std::variant<SpectralState, DelayState>;

// The finite-dimensional view of an OU model through a projection P onto R^N.
// All times are strictly positive unless stated otherwise.
class ProjectedModel {
 public:
  virtual ~ProjectedModel() = default;

  virtual std::string name() const = 0;
  virtual int proj_dim() const = 0;
  virtual int control_dim() const = 0;

  // P e^{tA} x, t >= 0.
  virtual Eigen::VectorXd proj_semigroup_apply(double t, const ModelState& x) const = 0;
  // P Q_t P*
  virtual SymPSDMatrix proj_cov(double t) const = 0;
  // closure of P e^{tA} applied to C, N x m
  virtual Eigen::MatrixXd proj_control(double t) const = 0;
  // P e^{sA} Q_{t-s} e^{sA*} P*, 0 <= s < t
  virtual SymPSDMatrix pushforward_cov(double s, double t) const = 0;
  // P e^{sA} Q_{t-s} P*, 0 <= s < t
  virtual Eigen::MatrixXd cross_cov(double s, double t) const = 0;
  // Cov(P W_A(s), P W_A(s'))
  virtual Eigen::MatrixXd noise_cov(double s, double s2) const = 0;

  // Times at which proj_control jumps.
  virtual std::vector<double> control_breakpoints() const { return {}; }
};

class ProjectedTerminalCost {
 public:
  using Fn = std::function<double(const Eigen::VectorXd&)>;

  ProjectedTerminalCost() = default;
  ProjectedTerminalCost(int dim, Fn fn, double bound);

  double operator()(const Eigen::VectorXd& y) const { return fn_(y); }
  int dim() const { return dim_; }
  double bound() const { return bound_; }

 private:
  int dim_ = 0;
  Fn fn_;
  double bound_ = 0.0;
};

// R_t[phi](x) for x with P e^{tA} x = y0.
Expectation semigroup_apply(const ProjectedModel& model, const ProjectedTerminalCost& phi,
                            double t, const Eigen::VectorXd& y0, const QuadratureRule& rule);

// dN(y, cov)/dN(0, cov) at z.
class CameronMartinDensity {
 public:
  CameronMartinDensity(const SymPSDMatrix& cov, const Eigen::VectorXd& y,
                       double rank_tol = kRankTol);
  double operator()(const Eigen::VectorXd& z) const;

 private:
  Eigen::VectorXd a_;  // cov^+ y
  double half_norm2_ = 0.0;
};

double cameron_martin_density(const SymPSDMatrix& cov, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& z);

// Joint Gaussian sampler for a stack of N-vectors with a given block covariance.
class GaussianPathSampler {
 public:
  GaussianPathSampler(int block_dim, const Eigen::MatrixXd& block_cov);
  std::vector<Eigen::VectorXd> draw(std::mt19937_64& rng) const;
  int steps() const { return steps_; }

 private:
  int block_dim_;
  int steps_;
  Eigen::MatrixXd factor_;
};

Eigen::MatrixXd noise_block_cov(const ProjectedModel& model, const std::vector<double>& times);

std::vector<Eigen::VectorXd> sample_noise_path(const ProjectedModel& model,
                                               const std::vector<double>& times,
                                               std::uint64_t seed);

// Integral of proj_control over [tau_lo, tau_hi], refined near 0 and split at
// the model's breakpoints.
Eigen::MatrixXd integrated_control(const ProjectedModel& model, double tau_lo, double tau_hi);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>* nodes, std::vector<double>* weights);

// Derives an independent stream seed from a base seed and an index.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace psmooth
