#include "mvstop/discrete_game.hpp"
#include "mvstop/pde_kernel.hpp"
#include "mvstop/vi_limit.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace mvstop;
using testing_helpers::constant_reward;

namespace {

const VISolution& gbm_vi() {
  static const VISolution sol = solve_vi(gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0),
                                         build_grid(0.01, 3.0, 300, 1000));
  return sol;
}

}  // namespace

TEST_SUITE("vi_limit") {

TEST_CASE("constant reward stops everywhere") {
  const ProblemSpec spec = constant_reward();
  const auto sol = solve_vi(spec, build_grid(-1, 1, 21, 50));
  CHECK(sol.stop_mask.all());
  CHECK((sol.V.values().array() == 1.0).all());
  CHECK((sol.g.values().array() == 1.0).all());
  for (const auto& slice : sol.boundary) CHECK(slice.empty());
  CHECK(check_boundary_inequality(sol, spec, 0).empty());
  CHECK(sol.mask_converged());
}

TEST_CASE("gamma = 0 reduces to the classical obstacle problem") {
  ProblemSpec down = gbm_problem(-0.05, 0.5, 0.0, 0.0, 2.0);
  const Grid grid = build_grid(0.01, 3.0, 200, 200);
  const auto stop = solve_vi(down, grid);
  CHECK(stop.stop_mask.all());
  CHECK((stop.V.values() - stop.g.values()).cwiseAbs().maxCoeff() == 0.0);

  ProblemSpec up = gbm_problem(0.05, 0.5, 0.0, 0.0, 10.0);
  const auto cont = solve_vi(up, grid);
  int continuing = 0;
  for (int i = 0; i < grid.n_x; ++i) continuing += !cont.stop_mask(0, i);
  CHECK(continuing > 0);
  CHECK_FALSE(cont.stop_mask(0, 0));

  // Brute-force Snell recursion on the same lattice.
  const auto snell = backward_recursion(up, grid, grid.n_t);
  CHECK(sup_distance(snell.V, cont.V) < 1e-10);
}

TEST_CASE("sign changes are linearly interpolated") {
  Profile r(5), x(5);
  r << 0.05, 0.03, 0.02, -0.02, -0.04;
  x << 0.47, 0.48, 0.49, 0.51, 0.53;
  const auto c = locate_sign_changes(r, x);
  REQUIRE(c.size() == 1);
  CHECK(c[0] == doctest::Approx(0.50));
}

TEST_CASE("GBM free boundary lies between rho/gamma and b") {
  const auto& sol = gbm_vi();
  REQUIRE(sol.boundary.front().size() == 1);
  const double c0 = sol.boundary.front().front();
  CHECK(c0 > 0.2);
  CHECK(c0 < 0.5);
  // It recedes toward rho/gamma as t -> T.
  const auto& late = sol.boundary[sol.boundary.size() - 2];
  REQUIRE(late.size() == 1);
  CHECK(late.front() < c0);
  CHECK(late.front() == doctest::Approx(0.2).epsilon(0.05));
}

TEST_CASE("obstacle feasibility and assigned g on the stop set") {
  const auto& sol = gbm_vi();
  for (int n = 0; n < sol.V.n_slices(); ++n) {
    CHECK(obstacle_residual(sol, n).minCoeff() >= -1e-8);
    for (int i = 0; i < sol.V.grid().n_x; ++i)
      if (sol.stop_mask(n, i)) CHECK(sol.g(n, i) == sol.f[i]);
  }
}

TEST_CASE("continuation equations hold away from the boundary") {
  const auto& sol = gbm_vi();
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0);
  const Grid& grid = sol.V.grid();
  const double dt = grid.dt(10.0), dx = grid.dx();
  double rv = 0, rg = 0;
  for (int n : {0, 200, 500}) {
    const Profile dg = gradient(sol.g.slice(n), dx);
    for (int i : window_indices(grid, 0.05, 0.3)) {
      const double x = grid.node(i), s2 = spec.sigma(0, x) * spec.sigma(0, x);
      auto L = [&](const GridField& u) {
        return (u(n + 1, i) - u(n, i)) / dt +
               0.5 * s2 * (u(n, i + 1) - 2 * u(n, i) + u(n, i - 1)) / (dx * dx) +
               spec.b(0, x) * (u(n, i + 1) - u(n, i - 1)) / (2 * dx);
      };
      rv = std::max(rv, std::abs(L(sol.V) - 0.5 * s2 * dg[i] * dg[i]));
      rg = std::max(rg, std::abs(L(sol.g)));
    }
  }
  CHECK(rv < 5e-3);
  CHECK(rg < 5e-3);
}

TEST_CASE("boundary inequality at a smooth point is an equality") {
  const auto& sol = gbm_vi();
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0);
  const auto r = boundary_inequality_at(sol, spec, 0, 0.2, 1e-8);
  CHECK(r.lhs == doctest::Approx(r.rhs).epsilon(0.03));
  CHECK(r.rhs_kappa == doctest::Approx(r.rhs).epsilon(0.03));
  CHECK_THROWS_AS(boundary_inequality_at(sol, spec, 0, 0.012, 1e-8), std::out_of_range);
}

TEST_CASE("boundary inequality holds on the GBM solution") {
  const auto& sol = gbm_vi();
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0);
  const auto pts = check_boundary_inequality(sol, spec, 0);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].pass);
}

TEST_CASE("general objective residuals") {
  const Grid grid = build_grid(0, 1, 5, 2);
  const ProblemSpec spec = constant_reward();
  GridField V(grid, 1.0), g(grid, 1.0);
  g.values().setConstant(2.0);
  V.values().setConstant(0.5);

  GeneralObjective sq;
  sq.G = [](double z) { return z * z; };
  sq.dG = [](double z) { return 2 * z; };
  sq.d2G = [](double) { return 2.0; };
  sq.k = [](double) { return 3.0; };
  sq.reward = [](double) { return 0.0; };
  const auto r = general_g_residual(V, g, sq, spec);
  CHECK((r.delta.values().array() - 1.0).abs().maxCoeff() < 1e-15);

  GeneralObjective lin = sq;
  lin.G = [](double z) { return 4 * z - 1; };
  lin.dG = [](double) { return 4.0; };
  lin.d2G = [](double) { return 0.0; };
  const auto rl = general_g_residual(V, g, lin, spec);
  CHECK(rl.delta.values().cwiseAbs().maxCoeff() < 1e-15);
  CHECK(rl.drift_correction.values().cwiseAbs().maxCoeff() == 0.0);

  // Mean-variance: Delta_G = (gamma/2)(f-g)^2 and the obstacle is the MV one.
  const auto& sol = gbm_vi();
  const auto mv = GeneralObjective::mean_variance(1.0, [](double x) { return x; });
  const auto rm = general_g_residual(sol.V, sol.g, mv, gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0),
                                     &sol.stop_mask);
  for (int n : {0, 500}) {
    const Profile expected = obstacle_residual(sol, n);
    CHECK((rm.obstacle.slice(n) - expected).cwiseAbs().maxCoeff() < 1e-12);
    const Profile d = 0.5 * (sol.f - sol.g.slice(n)).cwiseAbs2();
    CHECK((rm.delta.slice(n) - d).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("ladder on the constant reward") {
  const ProblemSpec spec = constant_reward();
  const Grid grid = build_grid(-1, 1, 21, 2000);
  const auto ladder = lambda_continuation(spec, grid, {0.4, 0.2, 0.1});
  REQUIRE(ladder.gaps.size() == 2);
  CHECK(ladder.gaps[0] == doctest::Approx(0.2 * std::log(2.0)).epsilon(1e-3));
  CHECK(ladder.gaps[1] == doctest::Approx(0.1 * std::log(2.0)).epsilon(1e-3));
  for (std::size_t k = 0; k < 3; ++k)
    CHECK(ladder.solutions[k].V(0, 10) ==
          doctest::Approx(1 + ladder.lambdas[k] * std::log(2.0)).epsilon(1e-3));

  CHECK(lambda_continuation(spec, grid, {0.3}).gaps.empty());
  CHECK_THROWS_AS(lambda_continuation(spec, grid, {0.1, 0.2}), std::invalid_argument);
}

TEST_CASE("ladder gaps to the VI shrink and satisfy the triangle check") {
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 2.0);
  const Grid grid = build_grid(0.01, 3.0, 150, 400);
  const auto vi = solve_vi(spec, grid);
  const auto ladder = lambda_continuation(spec, grid, {0.2, 0.1, 0.05});
  const auto gaps = ladder_gaps_to_vi(ladder, vi, 0, 0.1, 1.5);
  REQUIRE(gaps.size() == 3);
  CHECK(gaps[1].sup < gaps[0].sup);
  CHECK(gaps[2].sup < gaps[1].sup);
  const double full_last = sup_distance(ladder.solutions[2].V, vi.V);
  const double full_prev = sup_distance(ladder.solutions[1].V, vi.V);
  CHECK(full_last <= ladder.gaps[1] + full_prev + 1e-12);
}

}
