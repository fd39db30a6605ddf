#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "psmooth/ou_engine.hpp"

namespace psmooth {

// Finite control grid U with running cost l1 on it.
class Hamiltonian {
 public:
  Hamiltonian(const std::vector<Eigen::VectorXd>& points, std::vector<double> costs);

  static Hamiltonian trivial(int m);

  int size() const { return static_cast<int>(points_.cols()); }
  int control_dim() const { return static_cast<int>(points_.rows()); }
  const Eigen::MatrixXd& points() const { return points_; }  // m x |U|
  const Eigen::VectorXd& costs() const { return costs_; }
  Eigen::VectorXd point(int j) const { return points_.col(j); }
  double max_control_norm() const;

  // min_j <p, u_j> + l1(u_j) over a raw m-vector.
  double min_value(const double* p) const;

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd costs_;
};

struct HMin {
  double value = 0.0;
  int argmin = 0;
};

HMin h_min(const Hamiltonian& ham, const Eigen::VectorXd& p);

// Piecewise-linear function of calendar time on [0, T], constant beyond the table.
class TimeFunction {
 public:
  TimeFunction() : TimeFunction(0.0) {}
  explicit TimeFunction(double constant);
  TimeFunction(std::vector<double> times, std::vector<double> values);

  double operator()(double t) const;
  double integral(double a, double b) const;
  double sup_abs() const;

 private:
  std::vector<double> times_;
  std::vector<double> values_;
};

struct SpaceGrid {
  int dim = 0;
  int points_per_dim = 0;
  std::vector<double> lo;
  std::vector<double> hi;

  int size() const;
  double spacing(int d) const { return (hi[d] - lo[d]) / (points_per_dim - 1); }
  double coordinate(int d, int i) const { return lo[d] + i * spacing(d); }
  Eigen::VectorXd point(int index) const;
  bool contains(const Eigen::VectorXd& y) const;
  bool operator==(const SpaceGrid& o) const;
};

inline constexpr int kMaxCorners = 8;

// Multilinear interpolation stencil, clamped at the box boundary.
struct Cell {
  int count = 0;
  int idx[kMaxCorners];
  double w[kMaxCorners];
};

Cell locate(const SpaceGrid& grid, const double* y);

struct ValueIterate {
  std::vector<double> time_grid;
  SpaceGrid space;
  int control_dim = 0;
  double gamma = 0.5;
  Eigen::MatrixXd f;                  // n_space x n_time
  std::vector<Eigen::MatrixXd> fbar;  // per time: m x n_space, empty at t = 0

  int n_time() const { return static_cast<int>(time_grid.size()); }
  int n_space() const { return space.size(); }
};

// f(t, y) and fbar(t, y) by time-linear, space-multilinear interpolation.
double interpolate_value(const ValueIterate& g, double t, const Eigen::VectorXd& y);
Eigen::VectorXd interpolate_fbar(const ValueIterate& g, double t, const Eigen::VectorXd& y);

// max e^{-eta t}|f1 - f2| + max e^{-eta t}|fbar1 - fbar2|
double weighted_distance(const ValueIterate& g1, const ValueIterate& g2, double eta);

struct QuadSettings {
  int outer_order = 12;          // Hermite order for the semigroup part
  int inner_order = 6;           // Hermite order inside the time convolution
  int mc_samples = 4000;         // replaces Hermite above three dimensions
  int time_nodes_per_half = 8;   // Gauss-Legendre nodes on each half of (0, t)
  std::uint64_t seed = 7;
};

struct SolverConfig {
  double T = 1.0;
  double gamma = 0.5;
  double eta = 0.0;
  bool auto_eta = true;
  QuadSettings quad;
  double tol = 1e-4;
  int max_iter = 30;
  int time_nodes = 0;          // total including t = 0; 0 selects ratio stepping
  double time_ratio = 1.2;
  double t_min_frac = 1e-4;
  int space_points = 41;
  double box_halfwidth = 0.0;  // 0 selects 6 sqrt(max diag proj_cov(T))
  int contraction_pairs = 3;
  double contraction_target = 0.9;
  std::uint64_t seed = 11;

  void validate() const;
};

std::vector<double> make_time_grid(const SolverConfig& cfg);
SpaceGrid make_space_grid(const ProjectedModel& model, const SolverConfig& cfg);

// (s, weight) pairs integrating over (0, t) with graded nodes at both ends.
std::vector<std::pair<double, double>> convolution_time_nodes(double t, double gamma,
                                                              int per_half);

struct HJBSolution {
  ValueIterate iterate;
  ProjectedTerminalCost phi;
  double T = 1.0;
  double eta = 0.0;
  double residual = 0.0;
  std::vector<double> residuals;
  std::vector<double> contraction_estimates;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> diagnostics;
};

enum class InitialIterate { Semigroup, Zero };

class UpsilonPlan;

struct EtaSelection {
  double eta = 0.0;
  std::vector<double> candidates;
  std::vector<double> worst_ratio;  // per candidate, max over pairs
};

std::vector<double> eta_candidates();

// Random bounded perturbation pairs around the semigroup iterate.
std::vector<std::pair<ValueIterate, ValueIterate>> random_iterate_pairs(const UpsilonPlan& plan,
                                                                        int count,
                                                                        std::uint64_t seed);

// Contraction ratios of the given pairs for each eta in etas; rows = pairs.
Eigen::MatrixXd contraction_ratios(const UpsilonPlan& plan,
                                   const std::vector<std::pair<ValueIterate, ValueIterate>>& pairs,
                                   const std::vector<double>& etas);

EtaSelection select_eta(const UpsilonPlan& plan, const SolverConfig& cfg);

HJBSolution picard_solve(const UpsilonPlan& plan, const SolverConfig& cfg,
                         InitialIterate init = InitialIterate::Semigroup);

HJBSolution picard_solve(const ProjectedModel& model, const Hamiltonian& ham,
                         const ProjectedTerminalCost& phi, const TimeFunction& ell0,
                         const SolverConfig& cfg, InitialIterate init = InitialIterate::Semigroup);

double eval_value(const HJBSolution& sol, const ProjectedModel& model, double t,
                  const ModelState& x);
// v(t, .) at a state whose image P e^{(T-t)A} x is y.
double eval_value_projected(const HJBSolution& sol, double t, const Eigen::VectorXd& y);

Eigen::VectorXd eval_c_gradient(const HJBSolution& sol, const ProjectedModel& model, double t,
                                const ModelState& x);
Eigen::VectorXd eval_c_gradient_projected(const HJBSolution& sol, double t,
                                          const Eigen::VectorXd& y, bool clamp = false);

void write_solution_csv(const HJBSolution& sol, const std::string& path);
void write_solution_json(const HJBSolution& sol, const std::string& path);

}  // namespace psmooth
