#include "mvstop/pde_kernel.hpp"

#include <cmath>
#include <sstream>

namespace mvstop {

GeneratorStencil assemble_generator(const ProblemSpec& spec, const Grid& grid, double t) {
  const int n = grid.n_x;
  const double dx = grid.dx();
  GeneratorStencil L{Profile::Zero(n), Profile::Zero(n), Profile::Zero(n), Profile::Zero(n), dx};
  for (int i = 0; i < n; ++i) {
    const double x = grid.node(i);
    const double b = spec.b(t, x);
    const double s = spec.sigma(t, x);
    const double diff = 0.5 * s * s / (dx * dx);
    const double adv = b / (2 * dx);
    L.lower[i] = diff - adv;
    L.diag[i] = -2 * diff;
    L.upper[i] = diff + adv;
  }
  if (grid.boundary == BoundaryKind::value_clamped) {
    L.edge[0] = L.lower[0] * spec.f(grid.x_min);
    L.edge[n - 1] = L.upper[n - 1] * spec.f(grid.x_max);
  } else {
    const double b0 = spec.b(t, grid.node(0));
    const double bn = spec.b(t, grid.node(n - 1));
    L.diag[0] = -b0 / dx;
    L.upper[0] = b0 / dx;
    L.lower[n - 1] = -bn / dx;
    L.diag[n - 1] = bn / dx;
  }
  L.lower[0] = 0.0;
  L.upper[n - 1] = 0.0;
  return L;
}

Profile apply_generator(const GeneratorStencil& L, const Eigen::Ref<const Profile>& u) {
  const Eigen::Index n = u.size();
  Profile out = L.diag.cwiseProduct(u) + L.edge;
  out.tail(n - 1) += L.lower.tail(n - 1).cwiseProduct(u.head(n - 1));
  out.head(n - 1) += L.upper.head(n - 1).cwiseProduct(u.tail(n - 1));
  return out;
}

Profile apply_generator(const ProblemSpec& spec, const Grid& grid,
                        const Eigen::Ref<const Profile>& u, double t) {
  return apply_generator(assemble_generator(spec, grid, t), u);
}

Profile step_backward(const GeneratorStencil& L, const Eigen::Ref<const Profile>& next,
                      const Eigen::Ref<const Profile>& c, const Eigen::Ref<const Profile>& s,
                      double dt, const PinnedRows& pins) {
  if (!(dt > 0)) throw SolverError("step_backward: dt must be positive");
  const Eigen::Index n = next.size();
  TridiagonalSystem<double> sys(n);
  sys.lower = -dt * L.lower;
  sys.upper = -dt * L.upper;
  sys.diag = Profile::Ones(n) - dt * L.diag - dt * c;
  sys.rhs = next - dt * s + dt * L.edge;
  // Where the drift leaves the domain the one-sided edge difference is
  // downwind and the implicit row loses positivity; drop it there.
  auto drop_downwind = [&](Eigen::Index i, double& off) {
    if (L.diag[i] > 0) {
      sys.diag[i] += dt * L.diag[i];
      off = 0.0;
    }
  };
  if (n > 1) {
    drop_downwind(0, sys.upper[0]);
    drop_downwind(n - 1, sys.lower[n - 1]);
  }
  if (pins.pinned) {
    for (Eigen::Index i = 0; i < n; ++i)
      if ((*pins.pinned)[i]) sys.pin(i, (*pins.values)[i]);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(std::abs(sys.diag[i]) > std::abs(sys.lower[i]) + std::abs(sys.upper[i]))) {
      std::ostringstream msg;
      msg << "step_backward: row " << i << " not diagonally dominant at dt = " << dt;
      throw SolverError(msg.str());
    }
  }
  try {
    return solve_tridiagonal(sys);
  } catch (const std::domain_error& e) {
    std::ostringstream msg;
    msg << "step_backward: singular system at dt = " << dt << " (" << e.what() << ")";
    throw SolverError(msg.str());
  }
}

Profile step_backward(const ProblemSpec& spec, const Grid& grid,
                      const Eigen::Ref<const Profile>& next, double t,
                      const Eigen::Ref<const Profile>& c, const Eigen::Ref<const Profile>& s,
                      double dt) {
  return step_backward(assemble_generator(spec, grid, t), next, c, s, dt);
}

GridField solve_linear_pde(const ProblemSpec& spec, const Grid& grid,
                           const Eigen::Ref<const Profile>& terminal, const GridField& c,
                           const GridField& s) {
  if (!c.grid().same_space(grid) || !s.grid().same_space(grid) ||
      c.n_slices() != grid.n_t + 1 || s.n_slices() != grid.n_t + 1 ||
      terminal.size() != grid.n_x)
    throw std::invalid_argument("solve_linear_pde: inputs not on the same grid");
  const double dt = grid.dt(spec.horizon);
  GridField phi(grid, spec.horizon);
  phi.slice(grid.n_t) = terminal;
  for (int n = grid.n_t - 1; n >= 0; --n) {
    const auto L = assemble_generator(spec, grid, phi.time(n));
    phi.slice(n) = step_backward(L, phi.slice(n + 1), c.slice(n), s.slice(n), dt);
  }
  return phi;
}

LinearBoundReport check_linear_bounds(const GridField& phi,
                                      const Eigen::Ref<const Profile>& terminal,
                                      const GridField& c, const GridField& s, double tol) {
  LinearBoundReport r;
  const double T = phi.horizon();
  const double f_pos = terminal.cwiseMax(0.0).maxCoeff();
  const double f_neg = (-terminal).cwiseMax(0.0).maxCoeff();
  const double s_pos = s.values().cwiseMax(0.0).maxCoeff();
  const double s_neg = (-s.values()).cwiseMax(0.0).maxCoeff();
  r.upper_bound = f_pos + T * s_neg;
  r.lower_bound = -f_neg - T * s_pos;
  r.field_min = phi.values().minCoeff();
  r.field_max = phi.values().maxCoeff();
  r.c_nonpositive = c.values().maxCoeff() <= 0.0;
  const double dx = phi.grid().dx();
  for (int n = 0; n < phi.n_slices(); ++n)
    r.gradient_sup = std::max(r.gradient_sup, gradient(phi.slice(n), dx).cwiseAbs().maxCoeff());
  r.pass = r.c_nonpositive && r.field_min >= r.lower_bound - tol &&
           r.field_max <= r.upper_bound + tol;
  return r;
}

}  // namespace mvstop
