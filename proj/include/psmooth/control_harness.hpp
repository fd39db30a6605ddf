#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "psmooth/hjb_solver.hpp"
#include "psmooth/ou_engine.hpp"

namespace psmooth {

struct CostSpec {
  TimeFunction ell0;
  Hamiltonian ham;
  ProjectedTerminalCost phi;
  double T = 1.0;
};

// Controls are always indices into the U grid of the cost's Hamiltonian.
struct Policy {
  enum class Kind { OpenLoop, Constant, Greedy };

  Kind kind = Kind::Constant;
  std::string label;
  int index = 0;              // Constant
  std::vector<double> knots;  // OpenLoop: increasing partition of [t0, T]
  std::vector<int> indices;   // OpenLoop: one per piece
  const HJBSolution* solution = nullptr;  // Greedy

  static Policy constant(int index);
  static Policy open_loop(std::vector<double> knots, std::vector<int> indices);
  // Uniform pieces on [t0, T] with independent uniformly drawn indices.
  static Policy random_open_loop(int grid_size, double t0, double T, int pieces,
                                 std::uint64_t seed);
  static Policy greedy(const HJBSolution& sol);

  int index_at(double t) const;
};

struct SimulationResult {
  std::vector<double> sample_costs;
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<Eigen::VectorXd> terminal_projected_states;
};

// Open-loop and constant policies sample P X(T) exactly; greedy policies run on
// time_steps uniform steps with the control held constant on each.
SimulationResult simulate_cost(const ProjectedModel& model, const CostSpec& cost,
                               const Policy& policy, double t0, const ModelState& x0,
                               int n_samples, int time_steps, std::uint64_t seed);

struct DominanceEntry {
  std::string label;
  bool greedy = false;
  double mean = 0.0;
  double std_error = 0.0;
  double gap = 0.0;  // mean - value
  bool ok = true;    // value <= mean + 3 std_error
  std::vector<double> sample_costs;
};

struct DominanceReport {
  double t0 = 0.0;
  double value = 0.0;
  std::vector<DominanceEntry> entries;

  bool all_ok() const;  // greedy entries excluded
};

// Throws DominanceViolated on the first failing non-greedy policy when asked to.
DominanceReport value_dominance_check(const ProjectedModel& model, const CostSpec& cost,
                                      const HJBSolution& sol, const std::vector<Policy>& policies,
                                      double t0, const ModelState& x0, int n_samples,
                                      int time_steps, std::uint64_t seed,
                                      bool throw_on_violation = true);

}  // namespace psmooth
