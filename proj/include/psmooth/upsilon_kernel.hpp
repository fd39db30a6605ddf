#pragma once

#include <Eigen/Dense>

#include <vector>

#include "psmooth/hjb_solver.hpp"

namespace psmooth {

// One node s of the time convolution at a fixed outer time t.
struct SNodeBlock {
  double s = 0.0;
  double scale = 1.0;      // s^{-gamma}
  int j0 = 1;              // fbar(s) = (1 - theta) fbar[j0] + theta fbar[j0 + 1]
  double theta = 0.0;
  Eigen::MatrixXd offsets;  // N x Q, samples of Y ~ N(0, pushforward_cov(s, t))
  Eigen::MatrixXd gvecs;    // m x Q, t^gamma times the gradient weight at each sample
  Eigen::VectorXd weights;  // Q, time weight times quadrature weight
};

// Everything in the Picard map that does not depend on the iterate.
class UpsilonPlan {
 public:
  UpsilonPlan(const ProjectedModel& model, const Hamiltonian& ham,
              const ProjectedTerminalCost& phi, const TimeFunction& ell0,
              const SolverConfig& cfg);

  const ProjectedModel& model() const { return *model_; }
  const Hamiltonian& hamiltonian() const { return ham_; }
  const ProjectedTerminalCost& phi() const { return phi_; }
  const TimeFunction& ell0() const { return ell0_; }
  const SolverConfig& config() const { return cfg_; }

  const ValueIterate& semigroup_iterate() const { return g0_; }
  ValueIterate zero_iterate() const;
  const std::vector<SNodeBlock>& blocks(int time_index) const { return blocks_[time_index]; }

 private:
  const ProjectedModel* model_;
  Hamiltonian ham_;
  ProjectedTerminalCost phi_;
  TimeFunction ell0_;
  SolverConfig cfg_;
  ValueIterate g0_;
  std::vector<std::vector<SNodeBlock>> blocks_;
};

// Semigroup part f = R_t[phi] + int l0, fbar = t^gamma grad^C R_t[phi].
ValueIterate semigroup_iterate(const ProjectedModel& model, const ProjectedTerminalCost& phi,
                               const TimeFunction& ell0, const SolverConfig& cfg);

// Parallel over space points.
ValueIterate apply_upsilon(const UpsilonPlan& plan, const ValueIterate& g);

// Direct evaluation from the model at every grid point, single threaded.
ValueIterate apply_upsilon_serial_reference(const ProjectedModel& model, const Hamiltonian& ham,
                                            const ProjectedTerminalCost& phi,
                                            const TimeFunction& ell0, const ValueIterate& g,
                                            const SolverConfig& cfg);

// Builds a plan and applies it once.
ValueIterate apply_upsilon(const ProjectedModel& model, const Hamiltonian& ham,
                           const ProjectedTerminalCost& phi, const TimeFunction& ell0,
                           const ValueIterate& g, const SolverConfig& cfg);

}  // namespace psmooth
