#include "mvstop/gbm_benchmark.hpp"

#include <algorithm>

namespace mvstop {

ClosedFormValue closed_form_eval(const GBMClosedForm<double>& cf, double x) {
  if (!(x > 0)) throw std::domain_error("closed_form_eval: x must be positive");
  if (x >= cf.threshold) return {x, x};
  return {cf.V_cont(x), cf.g_cont(x)};
}

void closed_form_profiles(const GBMClosedForm<double>& cf, const Grid& grid, Profile& V,
                          Profile& g) {
  V.resize(grid.n_x);
  g.resize(grid.n_x);
  for (int i = 0; i < grid.n_x; ++i) {
    const auto v = closed_form_eval(cf, grid.node(i));
    V[i] = v.V;
    g[i] = v.g;
  }
}

double kappa_function(const GBMClosedForm<double>& cf, double z) {
  const double gb = cf.gamma * cf.threshold / 2;
  return gb * std::pow(z, 2 * cf.rho - 1) + (1 - gb) * std::pow(z, cf.rho);
}

EllipticReport verify_elliptic_system(const GBMClosedForm<double>& cf, const Grid& grid,
                                      double tol) {
  EllipticReport r;
  const double half_gamma = cf.gamma / 2;
  for (int i = 0; i < grid.n_x; ++i) {
    const double x = grid.node(i);
    if (!(x > 0)) continue;
    if (x < cf.threshold) {
      ++r.continuation_nodes;
      const double dg = cf.dg_cont(x);
      const double lv = cf.generator(x, cf.dV_cont(x), cf.d2V_cont(x));
      const double lg = cf.generator(x, dg, cf.d2g_cont(x));
      const double scale = std::max(1.0, std::abs(lv));
      r.continuation_v_residual = std::max(
          r.continuation_v_residual, std::abs(lv - half_gamma * cf.sigma_sq * x * x * dg * dg) / scale);
      r.continuation_g_residual = std::max(r.continuation_g_residual, std::abs(lg));
      const double g = cf.g_cont(x);
      const double margin = cf.V_cont(x) + half_gamma * (x - g) * (x - g) - x;
      r.min_obstacle_margin = std::min(r.min_obstacle_margin, margin);
      const double bound = x * (kappa_function(cf, cf.threshold / x) - 1);
      if (!(bound > 0) || margin < bound - 1e-12) r.kappa_bound_holds = false;
    } else {
      ++r.stopped_nodes;
      r.stopped_max = std::max(r.stopped_max, cf.mu * x - half_gamma * cf.sigma_sq * x * x);
    }
  }
  r.pass = r.continuation_v_residual <= tol && r.continuation_g_residual <= tol &&
           (r.stopped_nodes == 0 || r.stopped_max <= tol) &&
           (r.continuation_nodes == 0 || r.min_obstacle_margin > 0) && r.kappa_bound_holds;
  return r;
}

BoundaryJump boundary_jump_quantities(const GBMClosedForm<double>& cf) {
  BoundaryJump j;
  const double b = cf.threshold;
  j.lv_left = cf.generator(b, cf.dV_cont(b), cf.d2V_cont(b));
  j.lv_right = cf.mu * b;
  j.dg_left = cf.dg_cont(b);
  j.dg_right = 1.0;
  j.dv_left = cf.dV_cont(b);
  j.dv_right = 1.0;
  j.lhs = j.lv_left + j.lv_right;
  const double mean = 0.5 * (j.dg_left + j.dg_right);
  j.rhs = cf.gamma * cf.sigma_sq * b * b * mean * mean;
  j.margin = j.rhs - j.lhs;
  j.smooth_fit_gap = j.dv_left - j.dv_right;
  j.printed_lhs = cf.sigma_sq * b * cf.rho * (2 - cf.rho);
  return j;
}

double numerical_elliptic_residual(const GBMClosedForm<double>& cf, const Grid& grid,
                                   const Eigen::Ref<const Profile>& V,
                                   const Eigen::Ref<const Profile>& g, double x_lo, double x_hi) {
  const double dx = grid.dx();
  double sup = 0.0;
  for (int i = 1; i + 1 < grid.n_x; ++i) {
    const double x = grid.node(i);
    if (x < x_lo || x > x_hi) continue;
    const double vx = (V[i + 1] - V[i - 1]) / (2 * dx);
    const double vxx = (V[i + 1] - 2 * V[i] + V[i - 1]) / (dx * dx);
    const double gx = (g[i + 1] - g[i - 1]) / (2 * dx);
    const double res = cf.generator(x, vx, vxx) - cf.gamma / 2 * cf.sigma_sq * x * x * gx * gx;
    sup = std::max(sup, std::abs(res));
  }
  return sup;
}

}  // namespace mvstop
