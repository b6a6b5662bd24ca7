#include "mvstop/vi_limit.hpp"

#include "mvstop/pde_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvstop {

VISolution solve_vi(const ProblemSpec& spec, const Grid& grid, const VIOptions& options) {
  if (spec.dimension != 1) throw std::invalid_argument("solve_vi: requires d=1");
  const int nx = grid.n_x;
  const double dt = grid.dt(spec.horizon);
  const double dx = grid.dx();
  const double gamma = spec.gamma;
  const double kappa = spec.kappa();
  const Profile f = spec.reward_on(grid);
  const Profile nodes = grid.nodes();

  VISolution sol;
  sol.f = f;
  sol.gamma = gamma;
  sol.kappa = kappa;
  sol.V = GridField(grid, spec.horizon);
  sol.g = GridField(grid, spec.horizon);
  sol.stop_mask = MaskMatrix::Constant(grid.n_t + 1, nx, false);
  sol.V.slice(grid.n_t) = f;
  sol.g.slice(grid.n_t) = f;
  sol.stop_mask.row(grid.n_t).setConstant(true);

  const Profile zero = Profile::Zero(nx);
  Profile sig_sq(nx);
  for (int n = grid.n_t - 1; n >= 0; --n) {
    const double t = sol.V.time(n);
    const auto L = assemble_generator(spec, grid, t);
    for (int i = 0; i < nx; ++i) {
      const double s = spec.sigma(t, nodes[i]);
      sig_sq[i] = s * s;
    }
    const Profile V_next = sol.V.slice(n + 1);
    const Profile g_next = sol.g.slice(n + 1);
    NodeMask mask = NodeMask::Constant(nx, false);
    Profile g_cur = g_next;
    Profile V_step, g_step, psi;
    bool settled = false;
    int it = 0;
    for (; it < options.inner_max_iter; ++it) {
      const Profile src = kappa * sig_sq.cwiseProduct(gradient(g_cur, dx).cwiseAbs2());
      V_step = step_backward(L, V_next, zero, src, dt);
      g_step = step_backward(L, g_next, zero, zero, dt, PinnedRows{&mask, &f});
      psi = f - 0.5 * gamma * (f - g_step).cwiseAbs2();
      const NodeMask next_mask = (V_step - psi).array() <= options.tie_tol;
      for (int i = 0; i < nx; ++i)
        if (next_mask[i]) g_step[i] = f[i];
      if ((next_mask == mask).all()) {
        settled = true;
        break;
      }
      mask = next_mask;
      g_cur = g_step;
    }
    if (!settled) ++sol.unconverged_steps;
    sol.max_inner_iterations = std::max(sol.max_inner_iterations, it + 1);
    psi = f - 0.5 * gamma * (f - g_step).cwiseAbs2();
    for (int i = 0; i < nx; ++i) {
      sol.V(n, i) = mask[i] ? f[i] : std::max(V_step[i], psi[i]);
      sol.g(n, i) = g_step[i];
      sol.stop_mask(n, i) = mask[i];
    }
  }
  sol.h = GridField(grid, spec.horizon);
  sol.h.values() = sol.V.values() - 0.5 * gamma * sol.g.values().cwiseAbs2();
  sol.boundary = extract_boundary(sol);
  return sol;
}

Profile obstacle_residual(const VISolution& sol, int n) {
  const Profile g = sol.g.slice(n);
  return sol.V.slice(n) + 0.5 * sol.gamma * (sol.f - g).cwiseAbs2() - sol.f;
}

std::vector<double> locate_sign_changes(const Eigen::Ref<const Profile>& r,
                                        const Eigen::Ref<const Profile>& x, double tol) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i + 1 < r.size(); ++i) {
    const bool a = r[i] > tol;
    const bool b = r[i + 1] > tol;
    if (a == b) continue;
    const double denom = r[i] - r[i + 1];
    const double w = denom != 0.0 ? std::clamp(r[i] / denom, 0.0, 1.0) : 0.5;
    out.push_back(x[i] + w * (x[i + 1] - x[i]));
  }
  return out;
}

BoundaryCurve extract_boundary(const VISolution& sol) {
  BoundaryCurve curve(sol.V.n_slices());
  const Profile x = sol.V.grid().nodes();
  for (int n = 0; n < sol.V.n_slices(); ++n) curve[n] = locate_sign_changes(obstacle_residual(sol, n), x);
  return curve;
}

namespace {

/// Value, first and second derivative at z of the quadratic through three
/// equally spaced nodes starting at x0.
struct Quadratic {
  double value, d1, d2;
};

Quadratic fit3(double x0, double h, double y0, double y1, double y2, double z) {
  const double d1_mid = (y2 - y0) / (2 * h);
  const double d2 = (y2 - 2 * y1 + y0) / (h * h);
  const double u = z - (x0 + h);
  return {y1 + d1_mid * u + 0.5 * d2 * u * u, d1_mid + d2 * u, d2};
}

}  // namespace

BoundaryInequality boundary_inequality_at(const VISolution& sol, const ProblemSpec& spec,
                                          int n, double x, double tol) {
  const Grid& grid = sol.V.grid();
  if (n < 0 || n >= grid.n_t) throw std::out_of_range("boundary inequality: slice needs n < n_t");
  const double h = grid.dx();
  const int k = int(std::floor((x - grid.node(0)) / h + 1e-9));
  if (k < 2 || k + 3 >= grid.n_x) {
    std::ostringstream msg;
    msg << "boundary point x = " << x << " too close to the domain edge for one-sided stencils";
    throw std::out_of_range(msg.str());
  }
  const double dt = grid.dt(spec.horizon);
  const double t = sol.V.time(n);
  const double b = spec.b(t, x);
  const double sg = spec.sigma(t, x);
  const double s2 = sg * sg;

  auto side = [&](int first, double& lv, double& dv, double& dg) {
    const double x0 = grid.node(first);
    const auto& V = sol.V;
    const auto& g = sol.g;
    const Quadratic qv = fit3(x0, h, V(n, first), V(n, first + 1), V(n, first + 2), x);
    const Quadratic qg = fit3(x0, h, g(n, first), g(n, first + 1), g(n, first + 2), x);
    auto vt = [&](int i) { return (V(n + 1, i) - V(n, i)) / dt; };
    const Quadratic qt = fit3(x0, h, vt(first), vt(first + 1), vt(first + 2), x);
    lv = qt.value + 0.5 * s2 * qv.d2 + b * qv.d1;
    dv = qv.d1;
    dg = qg.d1;
  };

  BoundaryInequality r;
  r.x = x;
  side(k - 2, r.lv_left, r.dv_left, r.dg_left);
  side(k + 1, r.lv_right, r.dv_right, r.dg_right);
  r.lhs = r.lv_left + r.lv_right;
  const double mean = 0.5 * (r.dg_left + r.dg_right);
  r.rhs = spec.gamma * s2 * mean * mean;
  const double jump = r.dg_right - r.dg_left;
  r.rhs_kappa = spec.kappa() * s2 * (r.dg_left * r.dg_left + r.dg_right * r.dg_right) -
                0.25 * spec.gamma * s2 * jump * jump;
  r.pass = r.lhs <= r.rhs + tol;
  r.pass_kappa = r.lhs <= r.rhs_kappa + tol;
  return r;
}

std::vector<BoundaryInequality> check_boundary_inequality(const VISolution& sol,
                                                          const ProblemSpec& spec, int n,
                                                          double tol) {
  std::vector<BoundaryInequality> out;
  for (double x : sol.boundary.at(n)) out.push_back(boundary_inequality_at(sol, spec, n, x, tol));
  return out;
}

ContinuationLadder lambda_continuation(const ProblemSpec& spec, const Grid& grid,
                                       const std::vector<double>& lambdas,
                                       const HJBOptions& options) {
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0)) throw std::invalid_argument("lambda ladder: entries must be positive");
    if (i > 0 && !(lambdas[i] < lambdas[i - 1]))
      throw std::invalid_argument("lambda ladder: entries must be strictly decreasing");
  }
  ContinuationLadder ladder;
  ladder.lambdas = lambdas;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    ProblemSpec rung = spec;
    rung.lambda = lambdas[i];
    const GridField* warm = i > 0 ? &ladder.solutions.back().g : nullptr;
    ladder.solutions.push_back(solve_extended_hjb(rung, grid, options, warm));
    if (i > 0)
      ladder.gaps.push_back(sup_distance(ladder.solutions[i].V, ladder.solutions[i - 1].V));
  }
  return ladder;
}

std::vector<WindowGap> ladder_gaps_to_vi(const ContinuationLadder& ladder, const VISolution& vi,
                                         int n, double x_lo, double x_hi) {
  std::vector<WindowGap> out;
  for (const auto& s : ladder.solutions) {
    if (!s.V.grid().same_space(vi.V.grid()))
      throw std::invalid_argument("ladder_gaps_to_vi: incompatible spatial grids");
    const int m = s.V.nearest_slice(vi.V.time(n));
    out.push_back(window_gap(s.V.slice(m), vi.V.slice(n), vi.V.grid(), x_lo, x_hi));
  }
  return out;
}

GeneralResidual general_g_residual(const GridField& V, const GridField& g,
                                   const GeneralObjective& obj, const ProblemSpec& spec,
                                   const MaskMatrix* stopped) {
  if (!obj.G || !obj.dG || !obj.d2G || !obj.k || !obj.reward)
    throw std::invalid_argument("general_g_residual: G, G', G'', k and f are required");
  const Grid& grid = V.grid();
  const double T = V.horizon();
  const double dx = grid.dx();
  const double dt = grid.dt(T);
  GeneralResidual r{GridField(grid, T), GridField(grid, T), GridField(grid, T),
                    GridField(grid, T), 0.0};
  for (int n = 0; n < V.n_slices(); ++n) {
    const double t = V.time(n);
    const Profile dg = gradient(g.slice(n), dx);
    for (int i = 0; i < grid.n_x; ++i) {
      const double x = grid.node(i);
      const double k = obj.k(x);
      const double gv = g(n, i);
      const double sg = spec.sigma(t, x);
      r.delta(n, i) = obj.G(k) - obj.G(gv) - obj.dG(gv) * (k - gv);
      r.obstacle(n, i) = V(n, i) + r.delta(n, i) - (obj.reward(x) + obj.G(k));
      r.drift_correction(n, i) = -0.5 * obj.d2G(gv) * sg * sg * dg[i] * dg[i];
    }
    if (n == V.n_slices() - 1) continue;
    for (int i = 1; i + 1 < grid.n_x; ++i) {
      if (stopped && (*stopped)(n, i)) continue;
      const double x = grid.node(i);
      const double sg = spec.sigma(t, x);
      const double vxx = (V(n, i + 1) - 2 * V(n, i) + V(n, i - 1)) / (dx * dx);
      const double vx = (V(n, i + 1) - V(n, i - 1)) / (2 * dx);
      const double vt = (V(n + 1, i) - V(n, i)) / dt;
      const double res = vt + 0.5 * sg * sg * vxx + spec.b(t, x) * vx + r.drift_correction(n, i);
      r.interior(n, i) = res;
      r.interior_sup = std::max(r.interior_sup, std::abs(res));
    }
  }
  return r;
}

}  // namespace mvstop
