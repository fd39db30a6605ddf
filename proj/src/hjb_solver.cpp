#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "psmooth/csv.hpp"
#include "psmooth/hjb_solver.hpp"
#include "psmooth/upsilon_kernel.hpp"

namespace psmooth {

constexpr double kEtaSafety = 0.5;

std::vector<double> eta_candidates() { return {0, 1, 2, 4, 8, 16, 32, 64, 128, 256}; }

namespace {

ValueIterate perturbed(const ValueIterate& g0, double amp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> U01(0.0, 1.0);
  const int N = g0.space.dim;
  const int m = g0.control_dim;
  Eigen::VectorXd omega(N);
  for (int d = 0; d < N; ++d)
    omega(d) = U(rng) * 3.14159265358979 / (g0.space.hi[d] - g0.space.lo[d]) * 2.0;
  const double phase = 6.28318530717959 * U01(rng);
  Eigen::VectorXd c(m);
  for (int k = 0; k < m; ++k) c(k) = U(rng);
  const double cf = U(rng);
  std::vector<double> rf(g0.n_time()), rg(g0.n_time());
  for (int i = 0; i < g0.n_time(); ++i) {
    rf[i] = U01(rng);
    rg[i] = U01(rng);
  }
  ValueIterate g = g0;
  for (int p = 0; p < g.n_space(); ++p) {
    const double shape = 1.0 + 0.5 * std::sin(omega.dot(g.space.point(p)) + phase);
    for (int i = 1; i < g.n_time(); ++i) {
      g.f(p, i) += amp * rf[i] * cf * shape;
      g.fbar[i].col(p) += amp * rg[i] * shape * c;
    }
  }
  return g;
}

}  // namespace

std::vector<std::pair<ValueIterate, ValueIterate>> random_iterate_pairs(const UpsilonPlan& plan,
                                                                        int count,
                                                                        std::uint64_t seed) {
  const ValueIterate& g0 = plan.semigroup_iterate();
  double amp = g0.f.cwiseAbs().maxCoeff();
  for (int i = 1; i < g0.n_time(); ++i) amp = std::max(amp, g0.fbar[i].cwiseAbs().maxCoeff());
  amp = 0.5 * std::max(amp, 1e-3);
  std::mt19937_64 rng(seed);
  std::vector<std::pair<ValueIterate, ValueIterate>> out;
  for (int k = 0; k < count; ++k) {
    ValueIterate a = perturbed(g0, amp, rng);
    ValueIterate b = perturbed(g0, amp, rng);
    out.emplace_back(std::move(a), std::move(b));
  }
  return out;
}

Eigen::MatrixXd contraction_ratios(const UpsilonPlan& plan,
                                   const std::vector<std::pair<ValueIterate, ValueIterate>>& pairs,
                                   const std::vector<double>& etas) {
  Eigen::MatrixXd R(pairs.size(), etas.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const ValueIterate u1 = apply_upsilon(plan, pairs[k].first);
    const ValueIterate u2 = apply_upsilon(plan, pairs[k].second);
    for (std::size_t e = 0; e < etas.size(); ++e) {
      const double before = weighted_distance(pairs[k].first, pairs[k].second, etas[e]);
      R(k, e) = before > 0.0 ? weighted_distance(u1, u2, etas[e]) / before : 0.0;
    }
  }
  return R;
}

EtaSelection select_eta(const UpsilonPlan& plan, const SolverConfig& cfg) {
  EtaSelection sel;
  sel.candidates = eta_candidates();
  auto pairs = random_iterate_pairs(plan, cfg.contraction_pairs, cfg.seed);
  // Upsilon ignores the input f, so pairs differing only in fbar give the larger ratios
  for (auto& pr : pairs) pr.second.f = pr.first.f;
  const Eigen::MatrixXd R = contraction_ratios(plan, pairs, sel.candidates);
  for (std::size_t e = 0; e < sel.candidates.size(); ++e) {
    sel.worst_ratio.push_back(R.col(e).maxCoeff());
  }
  for (std::size_t e = 0; e < sel.candidates.size(); ++e) {
    // a few sampled pairs understate the supremum; select against half the target
    if (sel.worst_ratio[e] < kEtaSafety * cfg.contraction_target) {
      sel.eta = sel.candidates[e];
      return sel;
    }
  }
  std::ostringstream msg;
  msg << "no candidate weight contracts; worst ratios:";
  for (std::size_t e = 0; e < sel.candidates.size(); ++e)
    msg << " eta=" << sel.candidates[e] << ":" << sel.worst_ratio[e];
  fail(ErrorKind::NoContraction, msg.str());
}

HJBSolution picard_solve(const UpsilonPlan& plan, const SolverConfig& cfg, InitialIterate init) {
  HJBSolution sol;
  sol.phi = plan.phi();
  sol.T = cfg.T;
  if (cfg.gamma > 0.5)
    sol.diagnostics.push_back("gamma " + format_double(cfg.gamma) +
                              " > 1/2: first-iterate estimate carries a negative power of t");
  if (cfg.auto_eta) {
    const EtaSelection sel = select_eta(plan, cfg);
    sol.eta = sel.eta;
    std::ostringstream msg;
    msg << "eta selected from measured ratios:";
    for (std::size_t e = 0; e < sel.worst_ratio.size(); ++e)
      msg << " " << sel.candidates[e] << ":" << format_double(sel.worst_ratio[e]);
    sol.diagnostics.push_back(msg.str());
  } else {
    sol.eta = cfg.eta;
  }
  ValueIterate g = init == InitialIterate::Semigroup ? plan.semigroup_iterate() : plan.zero_iterate();
  int above_one = 0;
  for (int k = 1; k <= cfg.max_iter; ++k) {
    ValueIterate next = apply_upsilon(plan, g);
    const double d = weighted_distance(next, g, sol.eta);
    if (!sol.residuals.empty()) {
      const double r = d / sol.residuals.back();
      sol.contraction_estimates.push_back(r);
      above_one = r > 1.0 ? above_one + 1 : 0;
    }
    sol.residuals.push_back(d);
    sol.iterations = k;
    sol.residual = d;
    g = std::move(next);
    if (d < cfg.tol) {
      sol.converged = true;
      break;
    }
    if (above_one >= 3) {
      std::ostringstream msg;
      msg << "residual grew for 3 consecutive steps (eta " << sol.eta << ", gamma " << cfg.gamma
          << "); residuals:";
      for (double r : sol.residuals) msg << " " << format_double(r);
      fail(ErrorKind::NoContraction, msg.str());
    }
  }
  sol.iterate = std::move(g);
  return sol;
}

HJBSolution picard_solve(const ProjectedModel& model, const Hamiltonian& ham,
                         const ProjectedTerminalCost& phi, const TimeFunction& ell0,
                         const SolverConfig& cfg, InitialIterate init) {
  const UpsilonPlan plan(model, ham, phi, ell0, cfg);
  return picard_solve(plan, cfg, init);
}

namespace {

double forward_time(const HJBSolution& sol, double t) {
  if (!(t >= 0.0 && t <= sol.T))
    fail(ErrorKind::OutOfGrid, "time " + format_double(t) + " outside [0, T]");
  return sol.T - t;
}

}  // namespace

double eval_value_projected(const HJBSolution& sol, double t, const Eigen::VectorXd& y) {
  const double tau = forward_time(sol, t);
  if (tau == 0.0) return sol.phi(y);
  if (!sol.iterate.space.contains(y)) fail(ErrorKind::OutOfGrid, "point outside the space box");
  return interpolate_value(sol.iterate, tau, y);
}

double eval_value(const HJBSolution& sol, const ProjectedModel& model, double t,
                  const ModelState& x) {
  const double tau = forward_time(sol, t);
  return eval_value_projected(sol, t, model.proj_semigroup_apply(tau, x));
}

Eigen::VectorXd eval_c_gradient_projected(const HJBSolution& sol, double t,
                                          const Eigen::VectorXd& y, bool clamp) {
  const double tau = forward_time(sol, t);
  const double first = sol.iterate.time_grid[1];
  if (tau < first * (1.0 - 1e-12))
    fail(ErrorKind::TooCloseToHorizon, "T - t = " + format_double(tau) +
                                           " below the first time node " + format_double(first));
  if (!clamp && !sol.iterate.space.contains(y))
    fail(ErrorKind::OutOfGrid, "point outside the space box");
  return std::pow(tau, -sol.iterate.gamma) * interpolate_fbar(sol.iterate, tau, y);
}

Eigen::VectorXd eval_c_gradient(const HJBSolution& sol, const ProjectedModel& model, double t,
                                const ModelState& x) {
  const double tau = forward_time(sol, t);
  return eval_c_gradient_projected(sol, t, model.proj_semigroup_apply(tau, x));
}

void write_solution_csv(const HJBSolution& sol, const std::string& path) {
  const ValueIterate& g = sol.iterate;
  std::vector<std::string> header{"t"};
  for (int d = 0; d < g.space.dim; ++d) header.push_back("y" + std::to_string(d + 1));
  header.push_back("f");
  for (int k = 0; k < g.control_dim; ++k) header.push_back("fbar" + std::to_string(k + 1));
  CsvWriter csv(path, header);
  std::vector<double> row;
  for (int i = 0; i < g.n_time(); ++i) {
    for (int p = 0; p < g.n_space(); ++p) {
      row.clear();
      row.push_back(g.time_grid[i]);
      const Eigen::VectorXd y = g.space.point(p);
      for (int d = 0; d < g.space.dim; ++d) row.push_back(y(d));
      row.push_back(g.f(p, i));
      if (i == 0) {
        csv.row(row, g.control_dim);
        continue;
      }
      for (int k = 0; k < g.control_dim; ++k) row.push_back(g.fbar[i](k, p));
      csv.row(row);
    }
  }
}

void write_solution_json(const HJBSolution& sol, const std::string& path) {
  nlohmann::ordered_json j;
  j["gamma"] = sol.iterate.gamma;
  j["eta"] = sol.eta;
  j["T"] = sol.T;
  j["residual"] = sol.residual;
  j["iterations"] = sol.iterations;
  j["converged"] = sol.converged;
  j["residuals"] = sol.residuals;
  j["contraction_ratios"] = sol.contraction_estimates;
  j["time_nodes"] = sol.iterate.n_time();
  j["space_points_per_dim"] = sol.iterate.space.points_per_dim;
  j["box_lo"] = sol.iterate.space.lo;
  j["box_hi"] = sol.iterate.space.hi;
  j["diagnostics"] = sol.diagnostics;
  std::ofstream out(path);
  require(out.good(), ErrorKind::ConfigInvalid, "cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace psmooth
