#include <cmath>

#include "internal.hpp"
#include "psmooth/partial_smoothing.hpp"
#include "psmooth/upsilon_kernel.hpp"

namespace psmooth {

namespace {

ValueIterate empty_iterate(const ProjectedModel& model, const SolverConfig& cfg) {
  ValueIterate g;
  g.time_grid = make_time_grid(cfg);
  g.space = make_space_grid(model, cfg);
  g.control_dim = model.control_dim();
  g.gamma = cfg.gamma;
  g.f = Eigen::MatrixXd::Zero(g.n_space(), g.n_time());
  g.fbar.resize(g.n_time());
  for (int i = 1; i < g.n_time(); ++i) g.fbar[i] = Eigen::MatrixXd::Zero(g.control_dim, g.n_space());
  return g;
}

void set_terminal(ValueIterate& g, const ProjectedTerminalCost& phi) {
  for (int p = 0; p < g.n_space(); ++p) g.f(p, 0) = phi(g.space.point(p));
}

void check_inputs(const ProjectedModel& model, const Hamiltonian& ham,
                  const ProjectedTerminalCost& phi, const SolverConfig& cfg) {
  cfg.validate();
  require(ham.control_dim() == model.control_dim(), ErrorKind::DimensionMismatch,
          "control grid dimension differs from the model's control dimension");
  require(phi.dim() == model.proj_dim(), ErrorKind::DimensionMismatch,
          "terminal cost dimension differs from the projection dimension");
}

}  // namespace

ValueIterate semigroup_iterate(const ProjectedModel& model, const ProjectedTerminalCost& phi,
                               const TimeFunction& ell0, const SolverConfig& cfg) {
  ValueIterate g = empty_iterate(model, cfg);
  set_terminal(g, phi);
  const int N = model.proj_dim();
  const QuadratureRule rule =
      default_quadrature(N, cfg.quad.outer_order, cfg.quad.mc_samples, cfg.quad.seed);
  const int nt = g.n_time();
  std::vector<Eigen::MatrixXd> offsets(nt), weights(nt);
  std::vector<double> running(nt, 0.0);
  for (int i = 1; i < nt; ++i) {
    const double t = g.time_grid[i];
    offsets[i] = psd_sqrt(model.proj_cov(t)).matrix() * rule.nodes;
    weights[i] = std::pow(t, cfg.gamma) * lambda_operator(model, t).matrix.transpose() * rule.nodes;
    running[i] = ell0.integral(cfg.T - t, cfg.T);
  }
  const int ns = g.n_space();
  internal::parallel_for((nt - 1) * ns, [&](int flat) {
    const int i = 1 + flat / ns;
    const int p = flat % ns;
    const Eigen::VectorXd y = g.space.point(p);
    double val = 0.0;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(g.control_dim);
    for (int q = 0; q < rule.size(); ++q) {
      const double v = rule.weights(q) * phi(y + offsets[i].col(q));
      val += v;
      grad += v * weights[i].col(q);
    }
    g.f(p, i) = val + running[i];
    g.fbar[i].col(p) = grad;
  });
  return g;
}

UpsilonPlan::UpsilonPlan(const ProjectedModel& model, const Hamiltonian& ham,
                         const ProjectedTerminalCost& phi, const TimeFunction& ell0,
                         const SolverConfig& cfg)
    : model_(&model), ham_(ham), phi_(phi), ell0_(ell0), cfg_(cfg) {
  check_inputs(model, ham, phi, cfg);
  g0_ = psmooth::semigroup_iterate(model, phi, ell0, cfg);
  const int N = model.proj_dim();
  const QuadratureRule rule =
      default_quadrature(N, cfg.quad.inner_order, cfg.quad.mc_samples, cfg.quad.seed + 1);
  const int nt = g0_.n_time();
  blocks_.resize(nt);
  internal::parallel_for(nt - 1, [&](int k) {
    const int i = k + 1;
    const double t = g0_.time_grid[i];
    const double tg = std::pow(t, cfg.gamma);
    for (const auto& [s, w] : convolution_time_nodes(t, cfg.gamma, cfg.quad.time_nodes_per_half)) {
      SNodeBlock b;
      b.s = s;
      b.scale = std::pow(s, -cfg.gamma);
      b.j0 = internal::bracket(g0_.time_grid, s, 1, &b.theta);
      b.offsets = psd_sqrt(model.pushforward_cov(s, t)).matrix() * rule.nodes;
      b.gvecs = tg * convolution_gradient_weight(model, s, t).transpose() * b.offsets;
      b.weights = w * rule.weights;
      blocks_[i].push_back(std::move(b));
    }
  });
}

ValueIterate UpsilonPlan::zero_iterate() const {
  ValueIterate g = g0_;
  g.f.rightCols(g.n_time() - 1).setZero();
  for (int i = 1; i < g.n_time(); ++i) g.fbar[i].setZero();
  return g;
}

ValueIterate apply_upsilon(const ProjectedModel& model, const Hamiltonian& ham,
                           const ProjectedTerminalCost& phi, const TimeFunction& ell0,
                           const ValueIterate& g, const SolverConfig& cfg) {
  const UpsilonPlan plan(model, ham, phi, ell0, cfg);
  return apply_upsilon(plan, g);
}

}  // namespace psmooth
