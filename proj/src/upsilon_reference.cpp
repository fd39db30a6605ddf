#include <cmath>

#include "psmooth/partial_smoothing.hpp"
#include "psmooth/upsilon_kernel.hpp"

namespace psmooth {

ValueIterate apply_upsilon_serial_reference(const ProjectedModel& model, const Hamiltonian& ham,
                                            const ProjectedTerminalCost& phi,
                                            const TimeFunction& ell0, const ValueIterate& g,
                                            const SolverConfig& cfg) {
  cfg.validate();
  const int N = model.proj_dim();
  const int m = model.control_dim();
  require(g.time_grid == make_time_grid(cfg) && g.space == make_space_grid(model, cfg) &&
              g.control_dim == m && g.gamma == cfg.gamma,
          ErrorKind::GridMismatch, "iterate does not match the solver grids");
  const QuadratureRule outer =
      default_quadrature(N, cfg.quad.outer_order, cfg.quad.mc_samples, cfg.quad.seed);
  const QuadratureRule inner =
      default_quadrature(N, cfg.quad.inner_order, cfg.quad.mc_samples, cfg.quad.seed + 1);

  ValueIterate out = g;
  for (int p = 0; p < g.n_space(); ++p) out.f(p, 0) = phi(g.space.point(p));
  for (int i = 1; i < g.n_time(); ++i) {
    const double t = g.time_grid[i];
    for (int p = 0; p < g.n_space(); ++p) {
      const Eigen::VectorXd y = g.space.point(p);
      double f = semigroup_apply(model, phi, t, y, outer).value + ell0.integral(cfg.T - t, cfg.T);
      Eigen::VectorXd grad = c_gradient_semigroup(model, phi, t, y, outer).value;
      for (const auto& [s, w] : convolution_time_nodes(t, cfg.gamma, cfg.quad.time_nodes_per_half)) {
        const SymPSDMatrix cov = model.pushforward_cov(s, t);
        const Eigen::MatrixXd L = psd_sqrt(cov).matrix();
        const Eigen::MatrixXd G = convolution_gradient_weight(model, s, t);
        auto h = [&](const Eigen::VectorXd& z) {
          return h_min(ham, std::pow(s, -cfg.gamma) * interpolate_fbar(g, s, z)).value;
        };
        f += w * gauss_expectation(h, GaussianMeasureN(y, cov), inner).value;
        for (int q = 0; q < inner.size(); ++q) {
          const Eigen::VectorXd Y = L * inner.nodes.col(q);
          grad += w * inner.weights(q) * h(y + Y) * (G.transpose() * Y);
        }
      }
      out.f(p, i) = f;
      out.fbar[i].col(p) = std::pow(t, cfg.gamma) * grad;
    }
  }
  return out;
}

}  // namespace psmooth
