#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "psmooth/csv.hpp"
#include "psmooth/run_config.hpp"
#include "psmooth/upsilon_kernel.hpp"

namespace psmooth::cli {

namespace {

using json = nlohmann::ordered_json;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::ConfigParse:
    case ErrorKind::ConfigInvalid:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::DimensionTooLarge:
    case ErrorKind::GridMismatch:
      return kConfig;
    case ErrorKind::NoContraction:
      return kNoContraction;
    case ErrorKind::InclusionViolated:
    case ErrorKind::RankDeficient:
    case ErrorKind::NotInCameronMartin:
      return kInclusion;
    case ErrorKind::DominanceViolated:
      return kDominance;
    default:
      return kInvariant;
  }
}

struct Context {
  RunConfig rc;
  std::filesystem::path dir;
  bool quiet = false;

  std::string path(const std::string& name) const { return (dir / (rc.output.prefix + name)).string(); }
  void log(const std::string& msg) const {
    if (!quiet) std::cout << msg << '\n';
  }
};

Context load(const Options& opt) {
  Context c;
  c.rc = load_run_config(opt.config);
  if (opt.seed) {
    c.rc.seed = *opt.seed;
    c.rc.solver.seed = *opt.seed;
  }
  c.dir = opt.out_dir.empty() ? std::filesystem::path(c.rc.output.dir) : std::filesystem::path(opt.out_dir);
  std::filesystem::create_directories(c.dir);
  c.quiet = opt.quiet;
  return c;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::ConfigInvalid, "cannot write " + path);
  out << j.dump(2) << '\n';
}

int guarded(const char* name, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return kConfig;
  }
}

json fit_json(const BlowupFit& fit) {
  int used = 0;
  for (bool u : fit.used) used += u;
  return json{{"slope", fit.slope},
              {"intercept", fit.intercept},
              {"residual", fit.residual},
              {"gamma", fit.gamma()},
              {"points_used", used}};
}

struct Solved {
  std::unique_ptr<ProjectedModel> model;
  ResolvedSolver solver;
  CostSpec cost;
  HJBSolution sol;
};

Solved solve_from(const Context& c) {
  std::unique_ptr<ProjectedModel> model = build_model(c.rc);
  ResolvedSolver rs = resolve_solver(c.rc, *model);
  CostSpec cost = build_cost(c.rc, *model);
  c.log("model " + model->name() + ", fitted exponent " + format_double(rs.fit.gamma()) +
        ", gamma " + format_double(rs.cfg.gamma));
  HJBSolution sol = picard_solve(*model, cost.ham, cost.phi, cost.ell0, rs.cfg);
  c.log("iterations " + std::to_string(sol.iterations) + ", eta " + format_double(sol.eta) +
        ", residual " + format_double(sol.residual));
  return Solved{std::move(model), std::move(rs), std::move(cost), std::move(sol)};
}

std::string residual_report(const HJBSolution& sol) {
  std::ostringstream out;
  out << "residuals:";
  for (double r : sol.residuals) out << ' ' << format_double(r);
  return out.str();
}

}  // namespace

int cmd_solve(const Options& opt) {
  return guarded("solve", [&] {
    const Context c = load(opt);
    const Solved s = solve_from(c);
    write_solution_csv(s.sol, c.path("solution.csv"));
    write_solution_json(s.sol, c.path("solution.json"));
    if (!s.sol.converged) {
      std::cerr << "solve: not converged within " << s.solver.cfg.max_iter << " iterations; "
                << residual_report(s.sol) << '\n';
      return static_cast<int>(kNoContraction);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_lambda(const Options& opt) {
  return guarded("lambda", [&] {
    const Context c = load(opt);
    const std::unique_ptr<ProjectedModel> model = build_model(c.rc);
    const BlowupFit fit =
        fit_blowup(*model, log_grid(c.rc.lambda.t_min, c.rc.lambda.t_max, c.rc.lambda.points));
    CsvWriter csv(c.path("lambda.csv"), {"t", "norm", "used", "fitted_norm"});
    for (std::size_t i = 0; i < fit.times.size(); ++i)
      csv.row({fit.times[i], fit.norms[i], fit.used[i] ? 1.0 : 0.0,
               std::exp(fit.intercept) * std::pow(fit.times[i], fit.slope)});
    json j = fit_json(fit);
    j["model"] = model->name();
    const bool ok = fit.gamma() > 0.0 && fit.gamma() < 1.0;
    j["exponent_in_unit_interval"] = ok;
    write_json(c.path("lambda.json"), j);
    c.log("slope " + format_double(fit.slope));
    if (!ok) {
      std::cerr << "lambda: InclusionViolated: fitted exponent " << fit.gamma()
                << " outside (0, 1)\n";
      return static_cast<int>(kInclusion);
    }
    return static_cast<int>(kOk);
  });
}

int cmd_simulate(const Options& opt) {
  return guarded("simulate", [&] {
    const Context c = load(opt);
    const Solved s = solve_from(c);
    if (!s.sol.converged) {
      std::cerr << "simulate: solve not converged; " << residual_report(s.sol) << '\n';
      return static_cast<int>(kNoContraction);
    }
    const SimulateSection& S = c.rc.simulate;
    require(!S.initial_points.empty(), ErrorKind::ConfigInvalid, "simulate.initial_points is empty");
    const double T = c.rc.horizon;
    std::vector<Policy> policies;
    const bool all = opt.policy == "all";
    if (all || opt.policy == "open_loop")
      for (int k = 0; k < S.open_loop_draws; ++k)
        policies.push_back(Policy::random_open_loop(s.cost.ham.size(), S.t0, T, S.open_loop_pieces,
                                                    derive_seed(c.rc.seed, 1000 + k)));
    if (opt.policy.rfind("constant:", 0) == 0)
      policies.push_back(Policy::constant(std::stoi(opt.policy.substr(9))));
    if ((all && S.greedy) || opt.policy == "greedy") policies.push_back(Policy::greedy(s.sol));
    require(!policies.empty(), ErrorKind::ConfigInvalid, "no policy selected: " + opt.policy);

    json summary;
    summary["t0"] = S.t0;
    summary["samples"] = S.samples;
    summary["gamma"] = s.solver.cfg.gamma;
    summary["eta"] = s.sol.eta;
    summary["points"] = json::array();
    CsvWriter csv(c.path("simulate_samples.csv"), {"point", "policy", "sample", "cost"});
    bool violated = false;
    for (std::size_t p = 0; p < S.initial_points.size(); ++p) {
      const ModelState x0 = initial_state(c.rc, *s.model, S.initial_points[p]);
      const DominanceReport rep =
          value_dominance_check(*s.model, s.cost, s.sol, policies, S.t0, x0, S.samples,
                                S.time_steps, derive_seed(c.rc.seed, p), false);
      json pj;
      pj["initial_point"] = std::vector<double>(S.initial_points[p].data(),
                                                S.initial_points[p].data() + S.initial_points[p].size());
      pj["value"] = rep.value;
      pj["policies"] = json::array();
      for (std::size_t k = 0; k < rep.entries.size(); ++k) {
        const DominanceEntry& e = rep.entries[k];
        pj["policies"].push_back(json{{"label", e.label},
                                      {"mean", e.mean},
                                      {"std_error", e.std_error},
                                      {"gap", e.gap},
                                      {"dominance_ok", e.ok},
                                      {"asserted", !e.greedy}});
        if (!e.greedy && !e.ok) {
          violated = true;
          std::cerr << "simulate: DominanceViolated: point " << p << " policy " << e.label << '\n';
        }
        for (std::size_t i = 0; i < e.sample_costs.size(); ++i)
          csv.row({static_cast<double>(p), static_cast<double>(k), static_cast<double>(i), e.sample_costs[i]});
      }
      pj["all_ok"] = rep.all_ok();
      summary["points"].push_back(pj);
      c.log("point " + std::to_string(p) + ": value " + format_double(rep.value));
    }
    write_json(c.path("simulate.json"), summary);
    return static_cast<int>(violated ? kDominance : kOk);
  });
}

namespace {

struct Suite {
  json results = json::array();
  std::vector<std::string> failed;

  void record(const std::string& name, const std::function<std::string()>& body) {
    bool ok = true;
    std::string detail;
    try {
      detail = body();
    } catch (const Error& e) {
      ok = false;
      detail = e.what();
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    if (!ok) failed.push_back(name);
    results.push_back(json{{"name", name}, {"ok", ok}, {"detail", detail}});
  }
};

std::string num(double x) { return format_double(x); }

void expect(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvariantFailed, what);
}

}  // namespace

int cmd_check(const Options& opt) {
  return guarded("check", [&] {
    const Context c = load(opt);
    Suite suite;
    std::unique_ptr<ProjectedModel> model;
    suite.record("model_construction", [&] {
      model = build_model(c.rc);
      return model->name();
    });
    if (model) {
      const ProjectedModel& M = *model;
      const int N = M.proj_dim();
      const int m = M.control_dim();
      const double T = c.rc.horizon;
      const std::vector<double> ts = log_grid(1e-3 * T, T, 8);

      suite.record("proj_cov_psd", [&] {
        for (double t : ts) {
          Eigen::MatrixXd cov = M.proj_cov(t).matrix();
          if (c.rc.check.inject_psd_violation) cov(0, 0) -= 2.0 * cov.norm() + 1.0;
          psd_eigen(SymPSDMatrix(cov));
        }
        return std::string("8 times");
      });
      suite.record("covariance_splitting", [&] {
        double worst = 0.0;
        for (double t : ts) {
          const double s = 0.4 * t;
          const Eigen::MatrixXd lhs = M.proj_cov(s).matrix() + M.pushforward_cov(s, t).matrix();
          const Eigen::MatrixXd rhs = M.proj_cov(t).matrix();
          worst = std::max(worst, (lhs - rhs).norm() / rhs.norm());
        }
        expect(worst < 1e-6, "relative error " + num(worst));
        return "max relative error " + num(worst);
      });
      suite.record("inclusion", [&] {
        for (double t : ts) lambda_operator(M, t);
        return std::string("lambda_operator defined at 8 times");
      });
      suite.record("blowup_exponent", [&] {
        const BlowupFit fit = fit_blowup(
            M, log_grid(c.rc.lambda.t_min, c.rc.lambda.t_max, c.rc.lambda.points));
        expect(fit.gamma() > 0.0 && fit.gamma() < 1.0, "gamma " + num(fit.gamma()));
        return "gamma " + num(fit.gamma());
      });
      const QuadratureRule rule = default_quadrature(N, 12, 20000, 3);
      const CostSpec cost = build_cost(c.rc, M);
      suite.record("cameron_martin_normalization", [&] {
        const SymPSDMatrix cov = M.proj_cov(0.5 * T);
        const Eigen::VectorXd y = psd_sqrt(cov).matrix() * Eigen::VectorXd::Constant(N, 0.3);
        const CameronMartinDensity dens(cov, y);
        const Expectation e = gauss_expectation(dens, GaussianMeasureN(Eigen::VectorXd::Zero(N), cov), rule);
        const double tol = rule.kind == QuadratureKind::TensorHermite ? 1e-6 : 4.0 * e.std_error;
        expect(std::abs(e.value - 1.0) <= tol, "integral " + num(e.value));
        return "integral " + num(e.value);
      });
      suite.record("c_gradient_finite_difference", [&] {
        double worst = 0.0;
        for (double t : {0.1 * T, 0.5 * T}) {
          const Eigen::VectorXd y0 = Eigen::VectorXd::Constant(N, 0.1);
          const GradientEstimate g = c_gradient_semigroup(M, cost.phi, t, y0, rule);
          const Eigen::MatrixXd dir = M.proj_control(t);
          for (int k = 0; k < m; ++k) {
            const double h = 1e-4 / std::max(1.0, dir.col(k).norm());
            const double fp = semigroup_apply(M, cost.phi, t, y0 + h * dir.col(k), rule).value;
            const double fm = semigroup_apply(M, cost.phi, t, y0 - h * dir.col(k), rule).value;
            const double fd = (fp - fm) / (2.0 * h);
            const double scale = std::max(1.0, std::abs(fd));
            const double tol = rule.kind == QuadratureKind::TensorHermite ? 5e-3 * scale
                                                                          : 3.0 * g.std_error(k) + 1e-3 * scale;
            worst = std::max(worst, std::abs(g.value(k) - fd) / scale);
            expect(std::abs(g.value(k) - fd) <= tol, "direction " + std::to_string(k) + " at t " + num(t));
          }
        }
        return "max scaled error " + num(worst);
      });
      suite.record("gradient_norm_bound", [&] {
        for (double t : ts) {
          const NormBoundCheck b =
              c_gradient_norm_bound_check(M, cost.phi, t, Eigen::VectorXd::Constant(N, 0.2), rule);
          expect(b.ok, "lhs " + num(b.lhs) + " rhs " + num(b.rhs) + " at t " + num(t));
        }
        return std::string("8 times");
      });
      suite.record("h_min_enumeration", [&] {
        std::mt19937_64 rng(5);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (int r = 0; r < 50; ++r) {
          Eigen::VectorXd p(m);
          for (int k = 0; k < m; ++k) p(k) = nd(rng);
          double best = std::numeric_limits<double>::infinity();
          for (int j = 0; j < cost.ham.size(); ++j)
            best = std::min(best, p.dot(cost.ham.point(j)) + cost.ham.costs()(j));
          expect(h_min(cost.ham, p).value == best, "h_min disagrees with enumeration");
        }
        return std::string("50 random p");
      });

      SolverConfig small = c.rc.solver;
      small.space_points = std::min(small.space_points, 9);
      small.time_nodes = 10;
      small.max_iter = 40;
      small.tol = 1e-4;
      std::optional<ResolvedSolver> rs;
      suite.record("solver_config", [&] {
        RunConfig r2 = c.rc;
        r2.solver = small;
        rs = resolve_solver(r2, M);
        return "gamma " + num(rs->cfg.gamma);
      });
      if (rs) {
        const SolverConfig& cfg = rs->cfg;
        std::optional<UpsilonPlan> plan;
        suite.record("upsilon_parallel_matches_serial", [&] {
          plan.emplace(M, cost.ham, cost.phi, cost.ell0, cfg);
          const ValueIterate& g0 = plan->semigroup_iterate();
          const ValueIterate a = apply_upsilon(*plan, g0);
          const ValueIterate b = apply_upsilon_serial_reference(M, cost.ham, cost.phi, cost.ell0, g0, cfg);
          const double d = weighted_distance(a, b, 0.0);
          const double scale = std::max(1.0, weighted_distance(a, plan->zero_iterate(), 0.0));
          expect(d <= 1e-9 * scale, "distance " + num(d));
          return "distance " + num(d);
        });
        if (plan) {
          suite.record("picard_convergence", [&] {
            const HJBSolution sol = picard_solve(*plan, cfg);
            expect(sol.converged, residual_report(sol));
            for (int p = 0; p < sol.iterate.n_space(); ++p)
              expect(sol.iterate.f(p, 0) == cost.phi(sol.iterate.space.point(p)),
                     "terminal values differ from phi");
            return "iterations " + std::to_string(sol.iterations) + ", eta " + num(sol.eta);
          });
        }
      }
    }
    json out;
    out["config"] = opt.config;
    out["passed"] = suite.failed.empty();
    out["invariants"] = suite.results;
    write_json(c.path("check.json"), out);
    for (const std::string& f : suite.failed) std::cerr << "check: invariant failed: " << f << '\n';
    c.log(suite.failed.empty() ? "all invariants hold" : "invariant failures present");
    return static_cast<int>(suite.failed.empty() ? kOk : kInvariant);
  });
}

}  // namespace psmooth::cli
