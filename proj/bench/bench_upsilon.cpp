#include <benchmark/benchmark.h>
#include <omp.h>

#include "psmooth/delay_model.hpp"
#include "psmooth/terminal_cost.hpp"
#include "psmooth/upsilon_kernel.hpp"

namespace {

using namespace psmooth;

struct Setup {
  std::unique_ptr<delay::DelayModel> model;
  Hamiltonian ham;
  ProjectedTerminalCost phi;
  TimeFunction ell0{0.1};
  SolverConfig cfg;
};

Setup make_setup(int space_points) {
  delay::DelayConfig c;
  c.n = 2;
  c.m = 1;
  c.k = 2;
  c.a0 = (Eigen::MatrixXd(2, 2) << 0, 1, -1, -0.5).finished();
  c.b0 = (Eigen::MatrixXd(2, 1) << 0, 1).finished();
  c.sigma = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  c.d = 1.0;
  c.atoms.push_back({-0.5, (Eigen::MatrixXd(2, 1) << 0, 0.5).finished()});
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> costs;
  for (double u : {-1.0, 0.0, 1.0}) {
    pts.push_back(Eigen::VectorXd::Constant(1, u));
    costs.push_back(0.5 * u * u);
  }
  Setup s{delay::build_projected_model(c), Hamiltonian(pts, costs),
          terminal::tanh_clamp(1.0, terminal::polynomial(2, {{1.0, {2, 0}}, {1.0, {0, 2}}})),
          TimeFunction(0.1), SolverConfig{}};
  s.cfg.gamma = 0.52;
  s.cfg.time_nodes = 16;
  s.cfg.space_points = space_points;
  return s;
}

void BM_UpsilonSerialReference(benchmark::State& state) {
  const Setup s = make_setup(static_cast<int>(state.range(0)));
  const UpsilonPlan plan(*s.model, s.ham, s.phi, s.ell0, s.cfg);
  const ValueIterate g = plan.semigroup_iterate();
  for (auto _ : state)
    benchmark::DoNotOptimize(apply_upsilon_serial_reference(*s.model, s.ham, s.phi, s.ell0, g, s.cfg));
}

void BM_UpsilonParallel(benchmark::State& state) {
  const Setup s = make_setup(static_cast<int>(state.range(0)));
  const UpsilonPlan plan(*s.model, s.ham, s.phi, s.ell0, s.cfg);
  const ValueIterate g = plan.semigroup_iterate();
  state.counters["threads"] = omp_get_max_threads();
  for (auto _ : state) benchmark::DoNotOptimize(apply_upsilon(plan, g));
}

void BM_UpsilonPlanBuild(benchmark::State& state) {
  const Setup s = make_setup(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(UpsilonPlan(*s.model, s.ham, s.phi, s.ell0, s.cfg));
}

}  // namespace

BENCHMARK(BM_UpsilonSerialReference)->Arg(9)->Arg(17)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UpsilonParallel)->Arg(9)->Arg(17)->Arg(41)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_UpsilonPlanBuild)->Arg(9)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
