#include "mvstop/discrete_game.hpp"
#include "mvstop/pde_kernel.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace mvstop;
using testing_helpers::constant_reward;

TEST_SUITE("discrete_game") {

TEST_CASE("constant reward stops at every slice") {
  const auto d = backward_recursion(constant_reward(), build_grid(-1, 1, 21, 10), 10);
  CHECK(d.stop_mask.all());
  CHECK((d.V.values().array() == 1.0).all());
  CHECK((d.g.values().array() == 1.0).all());
}

TEST_CASE("one step of a martingale ties and stops") {
  ProblemSpec spec = constant_reward(0.5);
  spec.reward = CoefficientSpec::affine(0.0, 1.0);
  spec.gamma = 0.0;
  const Grid grid = build_grid(-1, 1, 21, 1);
  const auto d = backward_recursion(spec, grid, 1);
  CHECK(d.stop_mask.row(0).all());
  for (int i = 0; i < grid.n_x; ++i) CHECK(d.V(0, i) == spec.f(grid.node(i)));
}

TEST_CASE("moment and tower forms agree; variance stays nonnegative") {
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0);
  for (int steps : {80, 320}) {
    const auto d = backward_recursion(spec, build_grid(0.01, 3.0, 600, 1), steps);
    CHECK(d.tower_identity_error <= 1e-8);
    CHECK(d.min_variance >= -1e-12);
  }
}

TEST_CASE("gamma = 0 is the Snell recursion") {
  ProblemSpec spec = gbm_problem(0.05, 0.5, 0.0, 0.0, 3.0);
  spec.reward = CoefficientSpec::affine(-0.2, 1.0);
  const Grid grid = build_grid(0.01, 3.0, 120, 1);
  const int N = 30;
  const auto d = backward_recursion(spec, grid, N);
  const Grid lattice = grid.with_steps(N);
  const Profile f = spec.reward_on(lattice);
  const Profile zero = Profile::Zero(lattice.n_x);
  for (int i = N - 1; i >= 0; --i) {
    const auto L = assemble_generator(spec, lattice, d.V.time(i));
    const Profile EV = step_backward(L, d.V.slice(i + 1), zero, zero, d.dt);
    CHECK((d.V.slice(i) - f.cwiseMax(EV)).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("last slice stops exactly where f >= U up to the tie tolerance") {
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 1.0);
  const auto d = backward_recursion(spec, build_grid(0.01, 3.0, 100, 1), 20);
  const Profile f = spec.reward_on(d.V.grid());
  for (int i = 0; i < f.size(); ++i) CHECK(d.stop_mask(19, i) == (f[i] >= d.U(19, i) - 1e-12));
}

TEST_CASE("one-step variance matches sigma^2 |g'|^2 dt") {
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 1.0);
  const Grid grid = build_grid(0.01, 3.0, 600, 1);
  const auto L = assemble_generator(spec, grid, 0.0);
  const Profile x = grid.nodes(), zero = Profile::Zero(600);
  const double dt = 1e-3;
  const Profile Eg = step_backward(L, x, zero, zero, dt);
  const Profile Eg2 = step_backward(L, x.cwiseAbs2(), zero, zero, dt);
  for (int i : window_indices(grid, 0.3, 2.0)) {
    const double ratio = (Eg2[i] - Eg[i] * Eg[i]) / dt / (0.5 * x[i] * x[i]);
    CHECK(ratio == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("comparison with a VI solution") {
  const ProblemSpec spec = constant_reward();
  const Grid grid = build_grid(-1, 1, 21, 40);
  const auto d = backward_recursion(spec, grid, 40);
  const auto vi = solve_vi(spec, grid);
  const auto c = compare_to_vi(d, vi, 0.0, -0.5, 0.5);
  CHECK(c.V.sup <= 1e-12);
  CHECK(c.g.sup <= 1e-12);
  CHECK(c.stop_symmetric_difference == 0);

  // A game compared with its own fields is at distance zero.
  VISolution self = vi;
  const ProblemSpec gbm = gbm_problem(0.05, 0.5, 1.0, 0.0, 2.0);
  const Grid g2 = build_grid(0.01, 3.0, 100, 50);
  const auto dg = backward_recursion(gbm, g2, 50);
  self.V = dg.V;
  self.g = dg.g;
  self.stop_mask = dg.stop_mask;
  self.f = gbm.reward_on(g2);
  self.gamma = 1.0;
  const auto cs = compare_to_vi(dg, self, 0.0, 0.1, 1.5);
  CHECK(cs.V.sup == 0.0);
  CHECK(cs.g.sup == 0.0);
  CHECK(cs.stop_symmetric_difference == 0);

  CHECK_THROWS_AS(compare_to_vi(dg, vi, 0.0, 0.1, 1.5), std::invalid_argument);
}

}
