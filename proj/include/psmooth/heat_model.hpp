#pragma once

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "psmooth/ou_engine.hpp"

// Heat equation on (0, pi) with Dirichlet boundary control, truncated to the
// first n_modes sine modes. Eigenvalues of -A are k^2.
namespace psmooth::heat {

enum class ProjectionKind { SmoothedBumps, Modes, Coefficients, Identity };

struct ProjectionSpec {
  ProjectionKind kind = ProjectionKind::SmoothedBumps;
  int count = 2;                                // SmoothedBumps
  double alpha = 1.0;                           // SmoothedBumps smoothing order
  std::vector<int> modes;                       // Modes, 1-based
  std::vector<std::vector<double>> coefficients;  // Coefficients, one row per vector
};

struct HeatConfig {
  int n_modes = 256;
  double beta = 0.0;
  double epsilon = 0.01;
  ProjectionSpec projection;
  bool enforce_decay = true;

  void validate() const;
};

SpectralBasis heat_eigenvalues(int n_modes);

// Coefficients of the harmonic extension of boundary data a = (a0, a1).
Eigen::VectorXd dirichlet_map_coeffs(const Eigen::Vector2d& a, int n_modes);

// lambda_k (D a)_k
Eigen::VectorXd control_coeffs(const Eigen::Vector2d& a, int n_modes);

// Rows are orthonormal coefficient vectors v_i.
Eigen::MatrixXd projection_vectors(const ProjectionSpec& spec, int n_modes);

// Fitted alpha from the tail envelope |<v_i, e_k>| ~ lambda_k^{-alpha-1/2};
// the minimum over rows. Infinity for finitely supported vectors.
double fit_projection_decay(const Eigen::MatrixXd& V, const SpectralBasis& basis);

class HeatModel : public ProjectedModel {
 public:
  explicit HeatModel(const HeatConfig& cfg);

  std::string name() const override { return "heat"; }
  int proj_dim() const override { return static_cast<int>(V_.rows()); }
  int control_dim() const override { return 2; }

  Eigen::VectorXd proj_semigroup_apply(double t, const ModelState& x) const override;
  SymPSDMatrix proj_cov(double t) const override;
  Eigen::MatrixXd proj_control(double t) const override;
  SymPSDMatrix pushforward_cov(double s, double t) const override;
  Eigen::MatrixXd cross_cov(double s, double t) const override;
  Eigen::MatrixXd noise_cov(double s, double s2) const override;

  const HeatConfig& config() const { return cfg_; }
  const Eigen::MatrixXd& projection() const { return V_; }
  const Eigen::VectorXd& lambdas() const { return lam_; }
  double fitted_alpha() const { return alpha_fit_; }

  // Spectral state whose projected semigroup image at time t equals y; only
  // the lowest proj_dim modes are used.
  SpectralState state_for_projection(double t, const Eigen::VectorXd& y) const;

 private:
  Eigen::VectorXd q(double t) const;
  Eigen::MatrixXd sandwich(const Eigen::VectorXd& d) const;

  HeatConfig cfg_;
  Eigen::VectorXd lam_;
  Eigen::MatrixXd V_;
  Eigen::MatrixXd Dmat_;  // n_modes x 2, columns D e_1, D e_2
  double alpha_fit_ = 0.0;
};

std::unique_ptr<HeatModel> build_projected_model(const HeatConfig& cfg);

// P = identity on the truncated modes.
std::unique_ptr<HeatModel> build_unprojected_model(HeatConfig cfg);

}  // namespace psmooth::heat
