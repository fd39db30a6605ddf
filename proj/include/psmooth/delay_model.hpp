#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "psmooth/ou_engine.hpp"

// Linear SDE with delay in the control:
//   dy = (a0 y + b0 u(t) + int_{-d}^0 b1(dr) u(t+r)) dt + sigma dW.
namespace psmooth::delay {

struct Atom {
  double location = 0.0;   // in [-d, 0]
  Eigen::MatrixXd weight;  // n x m
};

struct DelayConfig {
  int n = 1;
  int m = 1;
  int k = 1;
  Eigen::MatrixXd a0;     // n x n
  Eigen::MatrixXd b0;     // n x m
  Eigen::MatrixXd sigma;  // n x k
  double d = 1.0;
  std::vector<Atom> atoms;
  // absolutely continuous part of b1, n x m values on a uniform grid of [-d, 0]
  std::vector<Eigen::MatrixXd> density;

  void validate() const;
};

Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

// int_0^t e^{s a0} sigma sigma^T e^{s a0^T} ds by RK4 on the Lyapunov ODE.
SymPSDMatrix gramian(const DelayConfig& cfg, double t);

Eigen::MatrixXd proj_control_delay(const DelayConfig& cfg, double t);

Eigen::MatrixXd kalman_matrix(const DelayConfig& cfg);
int kalman_rank(const DelayConfig& cfg);

double strong_inclusion_residual(const DelayConfig& cfg, const std::vector<double>& t_grid);
bool check_strong_inclusion(const DelayConfig& cfg, const std::vector<double>& t_grid);

// Largest relative residual of proj_control columns outside Im of the Kalman matrix.
double kalman_inclusion_residual(const DelayConfig& cfg, const std::vector<double>& t_grid);

class DelayModel : public ProjectedModel {
 public:
  explicit DelayModel(const DelayConfig& cfg);

  std::string name() const override { return "delay"; }
  int proj_dim() const override { return cfg_.n; }
  int control_dim() const override { return cfg_.m; }

  Eigen::VectorXd proj_semigroup_apply(double t, const ModelState& x) const override;
  SymPSDMatrix proj_cov(double t) const override;
  Eigen::MatrixXd proj_control(double t) const override;
  SymPSDMatrix pushforward_cov(double s, double t) const override;
  Eigen::MatrixXd cross_cov(double s, double t) const override;
  Eigen::MatrixXd noise_cov(double s, double s2) const override;
  std::vector<double> control_breakpoints() const override;

  const DelayConfig& config() const { return cfg_; }

 private:
  DelayConfig cfg_;
};

std::unique_ptr<DelayModel> build_projected_model(const DelayConfig& cfg);

// Structural state for present value x0 and past control u0 on [-d, 0).
DelayState make_state(const DelayConfig& cfg, const Eigen::VectorXd& x0,
                      const std::function<Eigen::VectorXd(double)>& past_control,
                      int grid_points = 129);

std::vector<double> inclusion_check_grid(const DelayConfig& cfg);

}  // namespace psmooth::delay
