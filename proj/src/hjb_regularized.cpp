#include "mvstop/hjb_regularized.hpp"

#include "mvstop/pde_kernel.hpp"

#include <algorithm>
#include <cmath>

namespace mvstop {

IntensityResult extract_intensity(const Eigen::Ref<const Profile>& V,
                                  const Eigen::Ref<const Profile>& g,
                                  const Eigen::Ref<const Profile>& f, double gamma,
                                  double lambda, double clip) {
  if (!(lambda > 0)) throw std::invalid_argument("extract_intensity: lambda must be positive");
  IntensityResult r;
  r.pi.resize(V.size());
  for (Eigen::Index i = 0; i < V.size(); ++i) {
    const double d = f[i] - g[i];
    double xi = -(V[i] + 0.5 * gamma * d * d - f[i]) / lambda;
    if (xi > clip || xi < -clip) {
      ++r.clip_hits;
      xi = std::clamp(xi, -clip, clip);
    }
    r.pi[i] = std::exp(xi);
  }
  return r;
}

namespace {

struct Sweep {
  GridField V;
  GridField k;
  long inner_failures = 0;
};

Sweep sweep(const ProblemSpec& spec, const Grid& grid, const HJBOptions& opt,
            const GridField& l, const Profile& f, const Profile& nodes) {
  const double dt = grid.dt(spec.horizon);
  const double lambda = spec.lambda;
  const double kappa = spec.kappa();
  const double gamma = spec.gamma;
  const double dx = grid.dx();
  const int nx = grid.n_x;
  Sweep out{GridField(grid, spec.horizon), GridField(grid, spec.horizon), 0};
  out.V.slice(grid.n_t) = f;
  out.k.slice(grid.n_t) = f;

  Profile sig_sq(nx), src(nx), q(nx), c(nx), s(nx), p(nx);
  for (int n = grid.n_t - 1; n >= 0; --n) {
    const double t = out.V.time(n);
    const auto L = assemble_generator(spec, grid, t);
    const Profile ln = l.slice(n);
    const Profile dl = gradient(ln, dx);
    for (int i = 0; i < nx; ++i) {
      const double sg = spec.sigma(t, nodes[i]);
      sig_sq[i] = sg * sg;
    }
    src = kappa * sig_sq.cwiseProduct(dl.cwiseAbs2());
    q = 0.5 * gamma * (f - ln).cwiseAbs2() - f;

    Profile v = out.V.slice(n + 1);
    bool done = false;
    for (int it = 0; it < opt.inner_max_iter; ++it) {
      for (int i = 0; i < nx; ++i) {
        const double xi = -(v[i] + q[i]) / lambda;
        const bool clamped = xi > opt.clip || xi < -opt.clip;
        p[i] = std::exp(std::clamp(xi, -opt.clip, opt.clip));
        c[i] = clamped ? 0.0 : -p[i];
        s[i] = src[i] - lambda * p[i] + c[i] * v[i];
      }
      Profile next = step_backward(L, out.V.slice(n + 1), c, s, dt);
      const double change = (next - v).cwiseAbs().maxCoeff();
      v = std::move(next);
      if (change <= opt.inner_tol) {
        done = true;
        break;
      }
    }
    if (!done) ++out.inner_failures;
    out.V.slice(n) = v;
    for (int i = 0; i < nx; ++i)
      p[i] = std::exp(std::clamp(-(v[i] + q[i]) / lambda, -opt.clip, opt.clip));
    out.k.slice(n) = step_backward(L, out.k.slice(n + 1), -p, -p.cwiseProduct(f), dt);
  }
  return out;
}

double iteration_gap(const GridField& k, const GridField& l) {
  const double dx = k.grid().dx();
  double sup_val = 0.0;
  double sup_grad = 0.0;
  for (int n = 0; n < k.n_slices(); ++n) {
    const Profile d = k.slice(n) - l.slice(n);
    sup_val = std::max(sup_val, d.cwiseAbs().maxCoeff());
    sup_grad = std::max(sup_grad, gradient(d, dx).cwiseAbs().maxCoeff());
  }
  return sup_val + sup_grad;
}

}  // namespace

HJBSolution solve_extended_hjb(const ProblemSpec& spec, const Grid& grid,
                               const HJBOptions& options, const GridField* warm_start) {
  if (!(spec.lambda > 0))
    throw std::invalid_argument("solve_extended_hjb: lambda must be positive");
  if (spec.dimension != 1) throw std::invalid_argument("solve_extended_hjb: requires d=1");
  if (!(options.damping > 0 && options.damping <= 1))
    throw std::invalid_argument("solve_extended_hjb: damping must lie in (0,1]");

  const Profile f = spec.reward_on(grid);
  const Profile nodes = grid.nodes();
  GridField l = warm_start ? *warm_start : GridField::constant_in_time(grid, spec.horizon, f);
  if (!l.grid().same_space(grid) || l.n_slices() != grid.n_t + 1)
    throw std::invalid_argument("solve_extended_hjb: warm start on a different grid");
  l.slice(grid.n_t) = f;

  HJBSolution sol;
  sol.lambda = spec.lambda;
  double theta = options.damping;
  Sweep best{};
  double best_gap = std::numeric_limits<double>::infinity();
  for (int iter = 1; iter <= options.fp_max_iter; ++iter) {
    Sweep sw = sweep(spec, grid, options, l, f, nodes);
    const double gap = iteration_gap(sw.k, l);
    sol.gap_history.push_back(gap);
    sol.iterations = iter;
    const std::size_t m = sol.gap_history.size();
    if (m >= 2 && gap > sol.gap_history[m - 2]) theta *= 0.5;
    const bool converged = gap <= options.fp_tol;
    if (gap <= best_gap || converged) {
      best_gap = gap;
      best = sw;
    }
    if (converged) {
      sol.converged = true;
      break;
    }
    l.values() = theta * sw.k.values() + (1 - theta) * l.values();
  }
  sol.final_damping = theta;
  sol.V = std::move(best.V);
  sol.g = std::move(best.k);
  sol.inner_failures = best.inner_failures;

  sol.pi = GridField(grid, spec.horizon);
  sol.h = GridField(grid, spec.horizon);
  for (int n = 0; n <= grid.n_t; ++n) {
    auto r = extract_intensity(sol.V.slice(n), sol.g.slice(n), f, spec.gamma, spec.lambda,
                               options.clip);
    sol.pi.slice(n) = r.pi;
    sol.clip_hits += r.clip_hits;
  }
  sol.h.values() = sol.V.values() - 0.5 * spec.gamma * sol.g.values().cwiseAbs2();
  sol.residual = hjb_residual(sol, spec, grid, options.clip);
  return sol;
}

HJBResidual hjb_residual(const HJBSolution& sol, const ProblemSpec& spec, const Grid& grid,
                         double clip) {
  HJBResidual r;
  const Profile f = spec.reward_on(grid);
  const double dt = grid.dt(spec.horizon);
  const double dx = grid.dx();
  const double gamma = spec.gamma;
  const double lambda = spec.lambda;
  const double kappa = spec.kappa();
  const int nx = grid.n_x;

  auto second = [&](const GridField& u, int n, int i) {
    return (u(n, i + 1) - 2 * u(n, i) + u(n, i - 1)) / (dx * dx);
  };
  auto first = [&](const GridField& u, int n, int i) {
    return (u(n, i + 1) - u(n, i - 1)) / (2 * dx);
  };
  for (int n = 0; n < grid.n_t; ++n) {
    const double tm = (n + 0.5) * dt;
    for (int i = 1; i + 1 < nx; ++i) {
      const double x = grid.node(i);
      const double b = spec.b(tm, x);
      const double sg = spec.sigma(tm, x);
      const double a = 0.5 * sg * sg;
      double lv = 0, lg = 0, src = 0, zero_v = 0, zero_g = 0;
      for (int m : {n, n + 1}) {
        lv += 0.5 * (a * second(sol.V, m, i) + b * first(sol.V, m, i));
        lg += 0.5 * (a * second(sol.g, m, i) + b * first(sol.g, m, i));
        const double dg = first(sol.g, m, i);
        src += 0.5 * kappa * sg * sg * dg * dg;
        zero_v += 0.5 * lambda * sol.pi(m, i);
        zero_g += 0.5 * sol.pi(m, i) * (f[i] - sol.g(m, i));
      }
      const double vt = (sol.V(n + 1, i) - sol.V(n, i)) / dt;
      const double gt = (sol.g(n + 1, i) - sol.g(n, i)) / dt;
      r.v_equation = std::max(r.v_equation, std::abs(vt + lv + zero_v - src));
      r.g_equation = std::max(r.g_equation, std::abs(gt + lg + zero_g));
    }
  }
  for (int n = 0; n <= grid.n_t; ++n) {
    for (int i = 0; i < nx; ++i) {
      const double d = f[i] - sol.g(n, i);
      const double xi = -(sol.V(n, i) + 0.5 * gamma * d * d - f[i]) / lambda;
      if (xi > clip || xi < -clip) continue;
      r.pi_consistency = std::max(r.pi_consistency, std::abs(sol.pi(n, i) - std::exp(xi)));
    }
  }
  r.terminal_v = (sol.V.slice(grid.n_t) - f).cwiseAbs().maxCoeff();
  r.terminal_g = (sol.g.slice(grid.n_t) - f).cwiseAbs().maxCoeff();
  return r;
}

}  // namespace mvstop
