#include "mvstop/discrete_game.hpp"

#include "mvstop/pde_kernel.hpp"

#include <algorithm>
#include <cmath>

namespace mvstop {

namespace {
/// f >= U - kTieTol counts as a tie, hence a stop.
constexpr double kTieTol = 1e-12;
}  // namespace

DiscreteEquilibrium backward_recursion(const ProblemSpec& spec, const Grid& base, int steps) {
  if (steps < 1) throw std::invalid_argument("backward_recursion: N must be >= 1");
  if (spec.dimension != 1) throw std::invalid_argument("backward_recursion: requires d=1");
  const Grid grid = base.with_steps(steps);
  const int nx = grid.n_x;
  const double T = spec.horizon;
  const double dt = grid.dt(T);
  const double gamma = spec.gamma;
  const Profile f = spec.reward_on(grid);
  const Profile f2 = f.cwiseAbs2();
  const Profile zero = Profile::Zero(nx);

  DiscreteEquilibrium d;
  d.dt = dt;
  d.U = GridField(grid, T);
  d.V = GridField(grid, T);
  d.g = GridField(grid, T);
  d.m = GridField(grid, T);
  d.stop_mask = MaskMatrix::Constant(steps + 1, nx, true);
  d.U.slice(steps) = f;
  d.V.slice(steps) = f;
  d.g.slice(steps) = f;
  d.m.slice(steps) = f2;

  for (int i = steps - 1; i >= 0; --i) {
    const auto L = assemble_generator(spec, grid, d.U.time(i));
    const Profile Eg = step_backward(L, d.g.slice(i + 1), zero, zero, dt);
    const Profile Em = step_backward(L, d.m.slice(i + 1), zero, zero, dt);
    const Profile U = Eg - 0.5 * gamma * (Em - Eg.cwiseAbs2());

    // E[V_{i+1}] - (gamma/2)(E[g_{i+1}^2] - E[g_{i+1}]^2) must agree with U.
    const Profile EV = step_backward(L, d.V.slice(i + 1), zero, zero, dt);
    const Profile Eg2 = step_backward(L, d.g.slice(i + 1).cwiseAbs2(), zero, zero, dt);
    const Profile U_tower = EV - 0.5 * gamma * (Eg2 - Eg.cwiseAbs2());
    d.tower_identity_error = std::max(d.tower_identity_error, (U - U_tower).cwiseAbs().maxCoeff());

    d.U.slice(i) = U;
    for (int j = 0; j < nx; ++j) {
      const bool stop = f[j] >= U[j] - kTieTol;
      d.stop_mask(i, j) = stop;
      d.g(i, j) = stop ? f[j] : Eg[j];
      d.m(i, j) = stop ? f2[j] : Em[j];
      d.V(i, j) = stop ? f[j] : U[j];
    }
  }
  d.min_variance = (d.m.values() - d.g.values().cwiseAbs2()).minCoeff();
  return d;
}

GameComparison compare_to_vi(const DiscreteEquilibrium& d, const VISolution& vi, double t,
                             double x_lo, double x_hi) {
  const Grid& grid = vi.V.grid();
  if (!d.V.grid().same_space(grid))
    throw std::invalid_argument("compare_to_vi: incompatible spatial grids");
  const int nd = d.V.nearest_slice(t);
  const int nv = vi.V.nearest_slice(t);
  GameComparison c;
  c.V = window_gap(d.V.slice(nd), vi.V.slice(nv), grid, x_lo, x_hi);
  c.g = window_gap(d.g.slice(nd), vi.g.slice(nv), grid, x_lo, x_hi);
  const Profile r = obstacle_residual(vi, nv);
  for (int i : window_indices(grid, x_lo, x_hi)) {
    const bool game_stop = d.stop_mask(nd, i);
    const bool vi_stop = vi.stop_mask(nv, i);
    if (game_stop != vi_stop) ++c.stop_symmetric_difference;
    const bool vi_binds = std::abs(r[i]) <= 1e-12;
    const bool game_binds = std::abs(d.V(nd, i) - vi.f[i]) <= 1e-12;
    c.binding.push_back(int(game_binds) + 2 * int(vi_binds));
    c.x.push_back(grid.node(i));
  }
  return c;
}

}  // namespace mvstop
