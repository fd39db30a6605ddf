#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psmooth/control_harness.hpp"
#include "psmooth/delay_model.hpp"
#include "psmooth/heat_model.hpp"
#include "psmooth/hjb_solver.hpp"
#include "psmooth/partial_smoothing.hpp"

namespace psmooth {

struct LambdaSection {
  double t_min = 1e-4;
  double t_max = 1e-1;
  int points = 20;
};

struct SimulateSection {
  double t0 = 0.0;
  // heat: target for P e^{(T-t0)A} x0; delay: present value x0
  std::vector<Eigen::VectorXd> initial_points;
  Eigen::VectorXd past_control;  // delay only, held constant on [-d, 0)
  int samples = 10000;
  int time_steps = 50;
  int open_loop_draws = 10;
  int open_loop_pieces = 8;
  bool greedy = true;
};

struct CheckSection {
  bool inject_psd_violation = false;
};

struct OutputSection {
  std::string dir = ".";
  std::string prefix;
};

struct RunConfig {
  std::optional<heat::HeatConfig> heat;
  std::optional<delay::DelayConfig> delay;
  double horizon = 1.0;
  TimeFunction ell0;
  std::vector<Eigen::VectorXd> control_points;
  std::vector<double> control_costs;
  nlohmann::json terminal;
  SolverConfig solver;
  bool gamma_auto = false;
  LambdaSection lambda;
  SimulateSection simulate;
  CheckSection check;
  OutputSection output;
  std::uint64_t seed = 1;  // simulation streams
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

std::unique_ptr<ProjectedModel> build_model(const RunConfig& rc);
Hamiltonian build_hamiltonian(const RunConfig& rc);
CostSpec build_cost(const RunConfig& rc, const ProjectedModel& model);

struct ResolvedSolver {
  SolverConfig cfg;
  BlowupFit fit;
};

// Fits the blow-up exponent on the lambda grid. "auto" gamma becomes
// min(0.95, fitted + 0.02); a configured gamma below fitted - 0.02 is rejected.
ResolvedSolver resolve_solver(const RunConfig& rc, const ProjectedModel& model);

ModelState initial_state(const RunConfig& rc, const ProjectedModel& model,
                         const Eigen::VectorXd& point);

}  // namespace psmooth
