#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "psmooth/run_config.hpp"
#include "psmooth/terminal_cost.hpp"

namespace psmooth {

namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) fail(ErrorKind::ConfigParse, where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      fail(ErrorKind::ConfigParse, "unknown key '" + it.key() + "' in " + where);
}

Eigen::VectorXd parse_vector(const json& j, const std::string& what) {
  if (j.is_number()) return Eigen::VectorXd::Constant(1, j.get<double>());
  if (!j.is_array()) fail(ErrorKind::ConfigParse, what + " must be a number or an array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    fail(ErrorKind::ConfigParse, what + " must be a nested array of rows");
  const std::size_t cols = j[0].size();
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      fail(ErrorKind::ConfigParse, what + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

heat::HeatConfig parse_heat(const json& j) {
  check_keys(j, {"n_modes", "beta", "epsilon", "projection", "enforce_decay"}, "model.heat");
  heat::HeatConfig c;
  c.n_modes = j.value("n_modes", c.n_modes);
  c.beta = j.value("beta", c.beta);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.enforce_decay = j.value("enforce_decay", c.enforce_decay);
  if (j.contains("projection")) {
    const json& p = j.at("projection");
    check_keys(p, {"kind", "count", "alpha", "modes", "rows"}, "model.heat.projection");
    const std::string kind = p.value("kind", std::string("smoothed_bumps"));
    if (kind == "smoothed_bumps") {
      c.projection.kind = heat::ProjectionKind::SmoothedBumps;
      c.projection.count = p.value("count", c.projection.count);
      c.projection.alpha = p.value("alpha", c.projection.alpha);
    } else if (kind == "modes") {
      c.projection.kind = heat::ProjectionKind::Modes;
      c.projection.modes = p.at("modes").get<std::vector<int>>();
    } else if (kind == "coefficients") {
      c.projection.kind = heat::ProjectionKind::Coefficients;
      c.projection.coefficients = p.at("rows").get<std::vector<std::vector<double>>>();
    } else if (kind == "identity") {
      c.projection.kind = heat::ProjectionKind::Identity;
    } else {
      fail(ErrorKind::ConfigParse, "unknown projection kind '" + kind + "'");
    }
  }
  c.validate();
  return c;
}

delay::DelayConfig parse_delay(const json& j) {
  check_keys(j, {"a0", "b0", "sigma", "d", "atoms", "density"}, "model.delay");
  delay::DelayConfig c;
  c.a0 = parse_matrix(j.at("a0"), "a0");
  c.b0 = parse_matrix(j.at("b0"), "b0");
  c.sigma = parse_matrix(j.at("sigma"), "sigma");
  c.n = static_cast<int>(c.a0.rows());
  c.m = static_cast<int>(c.b0.cols());
  c.k = static_cast<int>(c.sigma.cols());
  c.d = j.value("d", 1.0);
  if (j.contains("atoms")) {
    for (const json& a : j.at("atoms")) {
      check_keys(a, {"location", "weight"}, "model.delay.atoms[]");
      delay::Atom atom;
      atom.location = a.at("location").get<double>();
      atom.weight = parse_matrix(a.at("weight"), "atom weight");
      c.atoms.push_back(std::move(atom));
    }
  }
  if (j.contains("density"))
    for (const json& v : j.at("density")) c.density.push_back(parse_matrix(v, "density value"));
  c.validate();
  return c;
}

void parse_cost(const json& j, RunConfig* rc) {
  check_keys(j, {"horizon", "ell0", "controls", "terminal"}, "cost");
  rc->horizon = j.value("horizon", 1.0);
  require(rc->horizon > 0.0, ErrorKind::ConfigInvalid, "horizon must be positive");
  if (j.contains("ell0")) {
    const json& e = j.at("ell0");
    check_keys(e, {"constant", "times", "values"}, "cost.ell0");
    if (e.contains("constant")) rc->ell0 = TimeFunction(e.at("constant").get<double>());
    else
      rc->ell0 = TimeFunction(e.at("times").get<std::vector<double>>(),
                              e.at("values").get<std::vector<double>>());
  }
  const json& u = j.at("controls");
  check_keys(u, {"points", "costs", "box_grid", "running_cost"}, "cost.controls");
  if (u.contains("points")) {
    for (const json& p : u.at("points")) rc->control_points.push_back(parse_vector(p, "control point"));
  } else {
    const json& b = u.at("box_grid");
    check_keys(b, {"lo", "hi", "points_per_dim"}, "cost.controls.box_grid");
    const Eigen::VectorXd lo = parse_vector(b.at("lo"), "box_grid.lo");
    const Eigen::VectorXd hi = parse_vector(b.at("hi"), "box_grid.hi");
    const int n = b.at("points_per_dim").get<int>();
    require(lo.size() == hi.size() && n >= 1, ErrorKind::ConfigInvalid, "malformed control box grid");
    int total = 1;
    for (Eigen::Index d = 0; d < lo.size(); ++d) total *= n;
    for (int idx = 0; idx < total; ++idx) {
      Eigen::VectorXd p(lo.size());
      int rem = idx;
      for (Eigen::Index d = 0; d < lo.size(); ++d) {
        const int i = rem % n;
        rem /= n;
        p(d) = n == 1 ? lo(d) : lo(d) + (hi(d) - lo(d)) * i / (n - 1);
      }
      rc->control_points.push_back(p);
    }
  }
  if (u.contains("costs")) {
    rc->control_costs = u.at("costs").get<std::vector<double>>();
  } else {
    const json& r = u.value("running_cost", json{{"constant", 0.0}});
    check_keys(r, {"constant", "quadratic"}, "cost.controls.running_cost");
    const double c0 = r.value("constant", 0.0);
    const double c2 = r.value("quadratic", 0.0);
    for (const auto& p : rc->control_points) rc->control_costs.push_back(c0 + c2 * p.squaredNorm());
  }
  rc->terminal = j.at("terminal");
}

void parse_solver(const json& j, RunConfig* rc) {
  check_keys(j, {"gamma", "eta", "tol", "max_iter", "time_nodes", "time_ratio", "t_min_frac",
                 "space_points", "box_halfwidth", "contraction_pairs", "contraction_target",
                 "seed", "quad"},
             "solver");
  SolverConfig& s = rc->solver;
  const json g = j.value("gamma", json("auto"));
  if (g.is_string()) {
    require(g.get<std::string>() == "auto", ErrorKind::ConfigParse, "gamma must be a number or \"auto\"");
    rc->gamma_auto = true;
  } else {
    s.gamma = g.get<double>();
  }
  const json e = j.value("eta", json("auto"));
  if (e.is_string()) {
    require(e.get<std::string>() == "auto", ErrorKind::ConfigParse, "eta must be a number or \"auto\"");
    s.auto_eta = true;
  } else {
    s.eta = e.get<double>();
    s.auto_eta = false;
  }
  s.tol = j.value("tol", s.tol);
  s.max_iter = j.value("max_iter", s.max_iter);
  s.time_nodes = j.value("time_nodes", s.time_nodes);
  s.time_ratio = j.value("time_ratio", s.time_ratio);
  s.t_min_frac = j.value("t_min_frac", s.t_min_frac);
  s.space_points = j.value("space_points", s.space_points);
  s.box_halfwidth = j.value("box_halfwidth", s.box_halfwidth);
  s.contraction_pairs = j.value("contraction_pairs", s.contraction_pairs);
  s.contraction_target = j.value("contraction_target", s.contraction_target);
  s.seed = j.value("seed", s.seed);
  if (j.contains("quad")) {
    const json& q = j.at("quad");
    check_keys(q, {"outer_order", "inner_order", "mc_samples", "time_nodes_per_half", "seed"},
               "solver.quad");
    s.quad.outer_order = q.value("outer_order", s.quad.outer_order);
    s.quad.inner_order = q.value("inner_order", s.quad.inner_order);
    s.quad.mc_samples = q.value("mc_samples", s.quad.mc_samples);
    s.quad.time_nodes_per_half = q.value("time_nodes_per_half", s.quad.time_nodes_per_half);
    s.quad.seed = q.value("seed", s.quad.seed);
  }
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  RunConfig rc;
  try {
    check_keys(j, {"model", "cost", "solver", "lambda", "simulate", "check", "output", "seed"},
               "config");
    const json& m = j.at("model");
    check_keys(m, {"heat", "delay"}, "model");
    require(m.size() == 1, ErrorKind::ConfigInvalid, "model needs exactly one of heat, delay");
    if (m.contains("heat")) rc.heat = parse_heat(m.at("heat"));
    else rc.delay = parse_delay(m.at("delay"));

    parse_cost(j.at("cost"), &rc);
    parse_solver(j.value("solver", json::object()), &rc);
    rc.solver.T = rc.horizon;
    rc.seed = j.value("seed", rc.seed);

    if (j.contains("lambda")) {
      const json& l = j.at("lambda");
      check_keys(l, {"t_min", "t_max", "points"}, "lambda");
      rc.lambda.t_min = l.value("t_min", rc.lambda.t_min);
      rc.lambda.t_max = l.value("t_max", rc.lambda.t_max);
      rc.lambda.points = l.value("points", rc.lambda.points);
    }
    require(rc.lambda.t_min > 0.0 && rc.lambda.t_max > rc.lambda.t_min && rc.lambda.points >= 10,
            ErrorKind::ConfigInvalid, "lambda grid needs 0 < t_min < t_max and at least 10 points");

    if (j.contains("simulate")) {
      const json& s = j.at("simulate");
      check_keys(s, {"t0", "initial_points", "past_control", "samples", "time_steps",
                     "open_loop_draws", "open_loop_pieces", "greedy"},
                 "simulate");
      SimulateSection& S = rc.simulate;
      S.t0 = s.value("t0", S.t0);
      if (s.contains("initial_points"))
        for (const json& p : s.at("initial_points")) S.initial_points.push_back(parse_vector(p, "initial point"));
      if (s.contains("past_control")) S.past_control = parse_vector(s.at("past_control"), "past_control");
      S.samples = s.value("samples", S.samples);
      S.time_steps = s.value("time_steps", S.time_steps);
      S.open_loop_draws = s.value("open_loop_draws", S.open_loop_draws);
      S.open_loop_pieces = s.value("open_loop_pieces", S.open_loop_pieces);
      S.greedy = s.value("greedy", S.greedy);
      require(S.t0 >= 0.0 && S.t0 < rc.horizon, ErrorKind::ConfigInvalid, "simulate.t0 must lie in [0, T)");
      require(S.samples >= 2 && S.time_steps >= 1 && S.open_loop_draws >= 0 && S.open_loop_pieces >= 1,
              ErrorKind::ConfigInvalid, "simulation counts must be positive");
    }
    if (j.contains("check")) {
      const json& c = j.at("check");
      check_keys(c, {"inject_psd_violation"}, "check");
      rc.check.inject_psd_violation = c.value("inject_psd_violation", false);
    }
    if (j.contains("output")) {
      const json& o = j.at("output");
      check_keys(o, {"dir", "prefix"}, "output");
      rc.output.dir = o.value("dir", rc.output.dir);
      rc.output.prefix = o.value("prefix", rc.output.prefix);
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigParse, e.what());
  }

  const int m = rc.heat ? 2 : rc.delay->m;
  const int N = rc.heat ? -1 : rc.delay->n;
  for (const auto& p : rc.control_points)
    require(p.size() == m, ErrorKind::DimensionMismatch, "control points must have the control dimension");
  require(rc.control_points.size() == rc.control_costs.size(), ErrorKind::ConfigInvalid,
          "running cost table length differs from the control grid");
  if (N > 0)
    for (const auto& p : rc.simulate.initial_points)
      require(p.size() == N, ErrorKind::DimensionMismatch, "initial point dimension");
  if (!rc.gamma_auto) rc.solver.validate();
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigParse, "cannot read config " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    fail(ErrorKind::ConfigParse, path + ": " + e.what());
  }
  return parse_run_config(j);
}

std::unique_ptr<ProjectedModel> build_model(const RunConfig& rc) {
  if (rc.heat) return heat::build_projected_model(*rc.heat);
  return delay::build_projected_model(*rc.delay);
}

Hamiltonian build_hamiltonian(const RunConfig& rc) {
  return Hamiltonian(rc.control_points, rc.control_costs);
}

CostSpec build_cost(const RunConfig& rc, const ProjectedModel& model) {
  return CostSpec{rc.ell0, build_hamiltonian(rc), terminal::from_json(rc.terminal, model.proj_dim()),
                  rc.horizon};
}

ResolvedSolver resolve_solver(const RunConfig& rc, const ProjectedModel& model) {
  ResolvedSolver out{rc.solver, fit_blowup(model, log_grid(rc.lambda.t_min, rc.lambda.t_max,
                                                            rc.lambda.points))};
  const double g = out.fit.gamma();
  if (!(g > 0.0 && g < 1.0)) {
    std::ostringstream msg;
    msg << "fitted blow-up exponent " << g << " outside (0, 1)";
    fail(ErrorKind::InclusionViolated, msg.str());
  }
  if (rc.gamma_auto) {
    out.cfg.gamma = std::min(0.95, g + 0.02);
  } else if (rc.solver.gamma < g - 0.02) {
    std::ostringstream msg;
    msg << "configured gamma " << rc.solver.gamma << " below the fitted exponent " << g;
    fail(ErrorKind::ConfigInvalid, msg.str());
  }
  out.cfg.validate();
  return out;
}

ModelState initial_state(const RunConfig& rc, const ProjectedModel& model,
                         const Eigen::VectorXd& point) {
  if (rc.heat) {
    const auto& hm = dynamic_cast<const heat::HeatModel&>(model);
    return hm.state_for_projection(rc.horizon - rc.simulate.t0, point);
  }
  const delay::DelayConfig& c = *rc.delay;
  require(point.size() == c.n, ErrorKind::DimensionMismatch, "initial point dimension");
  const Eigen::VectorXd u0 = rc.simulate.past_control.size() == c.m
                                 ? rc.simulate.past_control
                                 : Eigen::VectorXd::Zero(c.m);
  return delay::make_state(c, point, [u0](double) { return u0; });
}

}  // namespace psmooth
