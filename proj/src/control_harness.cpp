#include <cmath>
#include <random>

#include "internal.hpp"
#include "psmooth/control_harness.hpp"

namespace psmooth {

namespace {

constexpr int kBatch = 512;

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

}  // namespace

Policy Policy::constant(int index) {
  Policy p;
  p.kind = Kind::Constant;
  p.index = index;
  p.label = "constant[" + std::to_string(index) + "]";
  return p;
}

Policy Policy::open_loop(std::vector<double> knots, std::vector<int> indices) {
  require(knots.size() == indices.size() + 1 && !indices.empty(), ErrorKind::DimensionMismatch,
          "open-loop policy needs one index per piece");
  for (std::size_t i = 1; i < knots.size(); ++i)
    require(knots[i] > knots[i - 1], ErrorKind::ConfigInvalid, "open-loop knots must increase");
  Policy p;
  p.kind = Kind::OpenLoop;
  p.knots = std::move(knots);
  p.indices = std::move(indices);
  p.label = "open_loop";
  return p;
}

Policy Policy::random_open_loop(int grid_size, double t0, double T, int pieces,
                                std::uint64_t seed) {
  require(grid_size >= 1 && pieces >= 1 && T > t0, ErrorKind::ConfigInvalid,
          "random open-loop policy needs a nonempty grid and t0 < T");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, grid_size - 1);
  std::vector<double> knots(pieces + 1);
  std::vector<int> idx(pieces);
  for (int i = 0; i <= pieces; ++i) knots[i] = i == pieces ? T : t0 + (T - t0) * i / pieces;
  for (int i = 0; i < pieces; ++i) idx[i] = pick(rng);
  Policy p = open_loop(std::move(knots), std::move(idx));
  p.label = "open_loop[seed=" + std::to_string(seed) + "]";
  return p;
}

Policy Policy::greedy(const HJBSolution& sol) {
  Policy p;
  p.kind = Kind::Greedy;
  p.solution = &sol;
  p.label = "greedy";
  return p;
}

int Policy::index_at(double t) const {
  switch (kind) {
    case Kind::Constant:
      return index;
    case Kind::OpenLoop: {
      for (std::size_t i = 0; i + 1 < knots.size(); ++i)
        if (t < knots[i + 1]) return indices[i];
      return indices.back();
    }
    case Kind::Greedy:
      break;
  }
  fail(ErrorKind::ConfigInvalid, "greedy policies depend on the state");
}

namespace {

void check_indices(const Policy& p, const Hamiltonian& ham) {
  auto ok = [&](int j) { return j >= 0 && j < ham.size(); };
  if (p.kind == Policy::Kind::Constant)
    require(ok(p.index), ErrorKind::ConfigInvalid, "policy index outside the control grid");
  for (int j : p.indices)
    require(ok(j), ErrorKind::ConfigInvalid, "policy index outside the control grid");
}

template <class Sample>
SimulationResult run_batches(int n_samples, std::uint64_t seed, Sample&& sample) {
  SimulationResult res;
  res.sample_costs.resize(n_samples);
  res.terminal_projected_states.resize(n_samples);
  const int batches = (n_samples + kBatch - 1) / kBatch;
  internal::parallel_for(batches, [&](int b) {
    std::mt19937_64 rng(derive_seed(seed, b));
    const int hi = std::min(n_samples, (b + 1) * kBatch);
    for (int i = b * kBatch; i < hi; ++i)
      sample(rng, &res.sample_costs[i], &res.terminal_projected_states[i]);
  });
  res.mean = mean_of(res.sample_costs);
  double var = 0.0;
  for (double c : res.sample_costs) var += (c - res.mean) * (c - res.mean);
  var = n_samples > 1 ? var / (n_samples - 1) : 0.0;
  res.std_error = std::sqrt(var / n_samples);
  return res;
}

}  // namespace

SimulationResult simulate_cost(const ProjectedModel& model, const CostSpec& cost,
                               const Policy& policy, double t0, const ModelState& x0,
                               int n_samples, int time_steps, std::uint64_t seed) {
  require(n_samples >= 1 && time_steps >= 1, ErrorKind::ConfigInvalid,
          "simulation needs positive sample and step counts");
  require(t0 >= 0.0 && t0 < cost.T, ErrorKind::ConfigInvalid, "t0 must lie in [0, T)");
  require(cost.ham.control_dim() == model.control_dim() && cost.phi.dim() == model.proj_dim(),
          ErrorKind::DimensionMismatch, "cost does not match the model dimensions");
  check_indices(policy, cost.ham);
  const double T = cost.T;
  const int N = model.proj_dim();
  const Eigen::VectorXd start = model.proj_semigroup_apply(T - t0, x0);
  const double ell0_part = cost.ell0.integral(t0, T);

  if (policy.kind != Policy::Kind::Greedy) {
    std::vector<double> cuts{t0};
    if (policy.kind == Policy::Kind::OpenLoop)
      for (double k : policy.knots)
        if (k > t0 && k < T) cuts.push_back(k);
    cuts.push_back(T);
    Eigen::VectorXd mean = start;
    double running = ell0_part;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const int j = policy.index_at(cuts[i]);
      mean += integrated_control(model, T - cuts[i + 1], T - cuts[i]) * cost.ham.point(j);
      running += cost.ham.costs()(j) * (cuts[i + 1] - cuts[i]);
    }
    const Eigen::MatrixXd L = psd_sqrt(model.proj_cov(T - t0)).matrix();
    return run_batches(n_samples, seed, [&](std::mt19937_64& rng, double* c, Eigen::VectorXd* z) {
      std::normal_distribution<double> normal(0.0, 1.0);
      Eigen::VectorXd xi(N);
      for (int d = 0; d < N; ++d) xi(d) = normal(rng);
      *z = mean + L * xi;
      *c = running + cost.phi(*z);
    });
  }

  require(policy.solution != nullptr, ErrorKind::ConfigInvalid, "greedy policy without solution");
  const HJBSolution& sol = *policy.solution;
  require(sol.T == T && sol.iterate.space.dim == N && sol.iterate.control_dim == model.control_dim(),
          ErrorKind::GridMismatch, "greedy policy solution does not match the cost");
  const int K = time_steps;
  std::vector<double> s(K + 1);
  for (int i = 0; i <= K; ++i) s[i] = i == K ? T : t0 + (T - t0) * i / K;
  // Noise part of P e^{(T-s)A} X(s) is a martingale in s with
  // Cov(M_i, M_j) = pushforward_cov(T - s_{min(i,j)}, T - t0).
  Eigen::MatrixXd block(N * K, N * K);
  for (int i = 1; i <= K; ++i) {
    const Eigen::MatrixXd c = i == K ? model.proj_cov(T - t0).matrix()
                                     : model.pushforward_cov(T - s[i], T - t0).matrix();
    for (int j = i; j <= K; ++j) {
      block.block((i - 1) * N, (j - 1) * N, N, N) = c;
      block.block((j - 1) * N, (i - 1) * N, N, N) = c;
    }
  }
  const GaussianPathSampler sampler(N, block);
  std::vector<Eigen::MatrixXd> drift(K);
  for (int i = 0; i < K; ++i) drift[i] = integrated_control(model, T - s[i + 1], T - s[i]);
  return run_batches(n_samples, seed, [&](std::mt19937_64& rng, double* c, Eigen::VectorXd* zt) {
    const std::vector<Eigen::VectorXd> M = sampler.draw(rng);
    Eigen::VectorXd z = start;
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(N);
    double running = ell0_part;
    for (int i = 0; i < K; ++i) {
      const HMin hm = h_min(cost.ham, eval_c_gradient_projected(sol, s[i], z, true));
      running += cost.ham.costs()(hm.argmin) * (s[i + 1] - s[i]);
      z += drift[i] * cost.ham.point(hm.argmin) + (M[i] - prev);
      prev = M[i];
    }
    *zt = z;
    *c = running + cost.phi(z);
  });
}

bool DominanceReport::all_ok() const {
  for (const DominanceEntry& e : entries)
    if (!e.greedy && !e.ok) return false;
  return true;
}

DominanceReport value_dominance_check(const ProjectedModel& model, const CostSpec& cost,
                                      const HJBSolution& sol, const std::vector<Policy>& policies,
                                      double t0, const ModelState& x0, int n_samples,
                                      int time_steps, std::uint64_t seed,
                                      bool throw_on_violation) {
  DominanceReport rep;
  rep.t0 = t0;
  rep.value = eval_value(sol, model, t0, x0);
  for (std::size_t k = 0; k < policies.size(); ++k) {
    const SimulationResult r = simulate_cost(model, cost, policies[k], t0, x0, n_samples,
                                             time_steps, derive_seed(seed, k));
    DominanceEntry e;
    e.label = policies[k].label;
    e.greedy = policies[k].kind == Policy::Kind::Greedy;
    e.mean = r.mean;
    e.std_error = r.std_error;
    e.gap = r.mean - rep.value;
    e.ok = rep.value <= r.mean + 3.0 * r.std_error;
    e.sample_costs = r.sample_costs;
    rep.entries.push_back(e);
    if (throw_on_violation && !e.greedy && !e.ok)
      fail(ErrorKind::DominanceViolated,
           "policy " + e.label + ": value " + std::to_string(rep.value) +
               " exceeds mean cost " + std::to_string(r.mean) + " + 3 std errors (" +
               std::to_string(r.std_error) + ")");
  }
  return rep;
}

}  // namespace psmooth
