#include "internal.hpp"
#include "psmooth/upsilon_kernel.hpp"

namespace psmooth {

namespace {

constexpr int kMaxControlDim = 8;

void check_compatible(const ValueIterate& a, const ValueIterate& b) {
  if (a.time_grid != b.time_grid || !(a.space == b.space) || a.control_dim != b.control_dim ||
      a.gamma != b.gamma)
    fail(ErrorKind::GridMismatch, "iterate does not match the solver grids");
}

}  // namespace

ValueIterate apply_upsilon(const UpsilonPlan& plan, const ValueIterate& g) {
  const ValueIterate& g0 = plan.semigroup_iterate();
  check_compatible(g0, g);
  const int m = g.control_dim;
  require(m <= kMaxControlDim, ErrorKind::DimensionTooLarge, "control dimension above 8");
  const int N = g.space.dim;
  const int nt = g.n_time();
  const int ns = g.n_space();
  const Hamiltonian& ham = plan.hamiltonian();
  ValueIterate out = g0;

  internal::parallel_for((nt - 1) * ns, [&](int flat) {
    const int i = 1 + flat / ns;
    const int p = flat % ns;
    const Eigen::VectorXd y = g.space.point(p);
    double conv = 0.0;
    double grad[kMaxControlDim] = {};
    double pt[3];
    double pv[kMaxControlDim];
    for (const SNodeBlock& b : plan.blocks(i)) {
      const double* A = g.fbar[b.j0].data();
      const double* B = g.fbar[b.j0 + 1].data();
      const double wa = (1.0 - b.theta) * b.scale;
      const double wb = b.theta * b.scale;
      const int Q = static_cast<int>(b.weights.size());
      for (int q = 0; q < Q; ++q) {
        const double* off = b.offsets.col(q).data();
        for (int d = 0; d < N; ++d) pt[d] = y(d) + off[d];
        const Cell c = locate(g.space, pt);
        for (int k = 0; k < m; ++k) pv[k] = 0.0;
        for (int corner = 0; corner < c.count; ++corner) {
          const double* a = A + static_cast<std::ptrdiff_t>(c.idx[corner]) * m;
          const double* bb = B + static_cast<std::ptrdiff_t>(c.idx[corner]) * m;
          const double w = c.w[corner];
          for (int k = 0; k < m; ++k) pv[k] += w * (wa * a[k] + wb * bb[k]);
        }
        const double h = b.weights(q) * ham.min_value(pv);
        conv += h;
        const double* gv = b.gvecs.col(q).data();
        for (int k = 0; k < m; ++k) grad[k] += h * gv[k];
      }
    }
    out.f(p, i) += conv;
    for (int k = 0; k < m; ++k) out.fbar[i](k, p) += grad[k];
  });
  return out;
}

}  // namespace psmooth
