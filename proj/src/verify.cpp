#include "mvstop/verify.hpp"

#include <algorithm>
#include <cmath>

namespace mvstop {

double regularized_rate(double v, double pi, double f, double g, double h, double gamma,
                        double lambda) {
  const double A = f - 0.5 * gamma * f * f - h - gamma * g * g + gamma * g * f;
  return (v - pi) * A + lambda * (entropy(v) - entropy(pi));
}

CertificationSummary analytic_perturbation_regularized(const HJBSolution& sol,
                                                       const ProblemSpec& spec,
                                                       const std::vector<double>& probes,
                                                       double tol, std::size_t max_listed) {
  CertificationSummary out;
  const Grid& grid = sol.V.grid();
  const Profile f = spec.reward_on(grid);
  for (int n = 0; n < sol.V.n_slices(); ++n) {
    for (int i = 0; i < grid.n_x; ++i) {
      const double pi = sol.pi(n, i);
      auto probe = [&](double v) {
        const double gain =
            regularized_rate(v, pi, f[i], sol.g(n, i), sol.h(n, i), spec.gamma, sol.lambda);
        ++out.checked;
        out.max_gain = std::max(out.max_gain, gain);
        if (gain > tol) {
          ++out.failed;
          if (out.failures.size() < max_listed)
            out.failures.push_back({sol.V.time(n), grid.node(i), v, gain, 0.0, 0.0,
                                    PerturbationMethod::analytic, false});
        }
      };
      for (double v : probes) probe(v);
      probe(pi);
    }
  }
  return out;
}

std::vector<PerturbationResult> mc_perturbation_regularized(
    const HJBSolution& sol, const ProblemSpec& spec, double t, double x, double v,
    const std::vector<double>& eps_list, const MCConfig& mc) {
  std::vector<PerturbationResult> out;
  const auto eq_sample = simulate_cox_stopping(spec, Intensity::of(sol.pi), t, x, mc);
  const auto a = estimate_objective(eq_sample, spec, EstimatorKind::conditional);
  auto influence = [&](const CoxPath& p, double gbar) {
    return (1 + spec.gamma * gbar) * p.cond_f - 0.5 * spec.gamma * p.cond_f2 +
           spec.lambda * p.cond_entropy;
  };
  for (double eps : eps_list) {
    if (!(eps > 0) || t + eps > spec.horizon + 1e-12)
      throw std::invalid_argument("mc perturbation: eps must lie in (0, T - t]");
    Intensity pert = Intensity::of(sol.pi);
    pert.override_until = t + eps;
    pert.override_rate = v;
    // Same seeds, hence the same Brownian paths and exponential clocks.
    const auto pert_sample = simulate_cox_stopping(spec, pert, t, x, mc);
    const auto b = estimate_objective(pert_sample, spec, EstimatorKind::conditional);
    std::vector<double> diff(eq_sample.paths.size());
    for (std::size_t i = 0; i < diff.size(); ++i)
      diff[i] = (influence(pert_sample.paths[i], b.g.mean) -
                 influence(eq_sample.paths[i], a.g.mean)) / eps;
    PerturbationResult r;
    r.t = t;
    r.x = x;
    r.v = v;
    r.eps = eps;
    r.gain = (b.J_lambda.mean - a.J_lambda.mean) / eps;
    r.se = summarize(diff, "monte-carlo").se;
    r.method = PerturbationMethod::monte_carlo;
    r.pass = r.gain <= 3 * r.se;
    out.push_back(r);
  }
  return out;
}

double vi_rate(const VISolution& sol, const ProblemSpec& spec, int n, int i, double v) {
  const Grid& grid = sol.V.grid();
  if (n < 0 || n >= grid.n_t || i < 1 || i + 1 >= grid.n_x)
    throw std::out_of_range("vi_rate: node needs interior neighbours and n < n_t");
  const bool s = sol.stop_mask(n, i);
  if (sol.stop_mask(n, i - 1) != s || sol.stop_mask(n, i + 1) != s)
    throw std::domain_error("vi_rate: node is adjacent to the free boundary");
  const double dx = grid.dx();
  const double dt = grid.dt(spec.horizon);
  const double t = sol.V.time(n);
  const double x = grid.node(i);
  const auto& V = sol.V;
  const auto& g = sol.g;
  const double vt = (V(n + 1, i) - V(n, i)) / dt;
  const double vx = (V(n, i + 1) - V(n, i - 1)) / (2 * dx);
  const double vxx = (V(n, i + 1) - 2 * V(n, i) + V(n, i - 1)) / (dx * dx);
  const double gx = (g(n, i + 1) - g(n, i - 1)) / (2 * dx);
  const double sg = spec.sigma(t, x);
  const double f = sol.f[i];
  const double d = f - g(n, i);
  const double interior = vt + 0.5 * sg * sg * vxx + spec.b(t, x) * vx -
                          spec.kappa() * sg * sg * gx * gx;
  return interior + v * (f - (V(n, i) + 0.5 * spec.gamma * d * d));
}

std::vector<PerturbationResult> vi_interior_perturbation(
    const VISolution& sol, const ProblemSpec& spec, const std::vector<std::pair<int, int>>& nodes,
    const std::vector<double>& probes, double tol) {
  std::vector<PerturbationResult> out;
  for (const auto& [n, i] : nodes) {
    for (double v : probes) {
      PerturbationResult r;
      r.t = sol.V.time(n);
      r.x = sol.V.grid().node(i);
      r.v = v;
      r.gain = vi_rate(sol, spec, n, i, v);
      r.pass = r.gain <= tol;
      out.push_back(r);
    }
  }
  return out;
}

BoundaryCertification vi_boundary_perturbation(const VISolution& sol, const ProblemSpec& spec,
                                               int n, double tol) {
  BoundaryCertification c;
  c.points = check_boundary_inequality(sol, spec, n, tol);
  for (const auto& p : c.points) c.pass = c.pass && p.pass;
  return c;
}

}  // namespace mvstop
