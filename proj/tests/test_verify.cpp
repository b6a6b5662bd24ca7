#include "mvstop/hjb_regularized.hpp"
#include "mvstop/verify.hpp"
#include "mvstop/vi_limit.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace mvstop;
using testing_helpers::constant_reward;

namespace {

const HJBSolution& fixture() {
  static const HJBSolution sol = solve_extended_hjb(constant_reward(), build_grid(-1, 1, 41, 400));
  return sol;
}

const VISolution& gbm_vi() {
  static const VISolution sol = solve_vi(gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0),
                                         build_grid(0.01, 3.0, 300, 1000));
  return sol;
}

}  // namespace

TEST_SUITE("verify") {

TEST_CASE("rate vanishes at the equilibrium intensity") {
  for (double pi : {0.01, 0.7, 3.0})
    CHECK(regularized_rate(pi, pi, 1.0, 0.5, 0.2, 1.0, 0.3) == 0.0);
}

TEST_CASE("every deviation loses on the constant fixture") {
  const auto& sol = fixture();
  const ProblemSpec spec = constant_reward();
  const auto cert = analytic_perturbation_regularized(sol, spec);
  CHECK(cert.pass());
  CHECK(cert.checked == long(sol.V.values().size()) * 8);
  const Profile f = spec.reward_on(sol.V.grid());
  for (int n = 0; n < sol.V.n_slices(); n += 50)
    for (int i = 0; i < sol.V.grid().n_x; i += 5)
      for (double v : default_regularized_probes()) {
        const double pi = sol.pi(n, i);
        if (std::abs(v - pi) < 1e-6) continue;
        CHECK(regularized_rate(v, pi, f[i], sol.g(n, i), sol.h(n, i), spec.gamma, spec.lambda) <
              0.0);
      }
}

TEST_CASE("corrupted intensity fails certification") {
  HJBSolution bad = fixture();
  bad.pi.values() *= 2.0;
  const auto cert = analytic_perturbation_regularized(bad, constant_reward(),
                                                      default_regularized_probes(), 1e-8, 5);
  CHECK_FALSE(cert.pass());
  CHECK(cert.max_gain > 0);
  CHECK(cert.failures.size() == 5);
}

TEST_CASE("Monte Carlo deviation rates match the analytic rate") {
  const auto& sol = fixture();
  const ProblemSpec spec = constant_reward();
  MCConfig mc;
  mc.n_paths = 20000;
  mc.dt_sim = 1e-3;
  mc.master_seed = 5;
  const double t = 0.9, x = 0.0;
  const int n = sol.V.nearest_slice(t), i = 20;
  const double pi = sol.pi(n, i);
  for (double v : {0.1, 1.0, 2.0}) {
    const double analytic = regularized_rate(v, pi, 1.0, sol.g(n, i), sol.h(n, i), 1.0, 0.3);
    const auto res = mc_perturbation_regularized(sol, spec, t, x, v, {0.04, 0.02, 0.01}, mc);
    REQUIRE(res.size() == 3);
    CHECK(std::abs(res[2].gain - analytic) <= 3 * res[2].se + 0.1 * std::abs(analytic) + 1e-3);
  }
  // With v eps of order one the rate is no longer first order, but the loss is unmistakable.
  const auto big = mc_perturbation_regularized(sol, spec, t, x, 100.0, {0.01}, mc);
  CHECK(big[0].gain + 3 * big[0].se < 0);
  CHECK_FALSE(big[0].gain > 3 * big[0].se);
}

TEST_CASE("VI interior rate: zero in deep continuation, affine in v") {
  const auto& sol = gbm_vi();
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0);
  const Grid& grid = sol.V.grid();
  const auto idx = window_indices(grid, 0.1, 0.3);
  std::vector<std::pair<int, int>> nodes;
  for (int i : idx) nodes.emplace_back(0, i);
  const auto res = vi_interior_perturbation(sol, spec, nodes, default_vi_probes(), 1e-3);
  for (const auto& r : res) CHECK(r.pass);
  for (int i : idx) {
    CHECK(std::abs(vi_rate(sol, spec, 0, i, 0.0)) < 5e-3);
    const double obstacle = sol.V(0, i) + 0.5 * std::pow(sol.f[i] - sol.g(0, i), 2);
    for (double v : {0.5, 10.0, 100.0}) {
      const double lhs = vi_rate(sol, spec, 0, i, v) - vi_rate(sol, spec, 0, i, 0.0);
      CHECK(std::abs(lhs - v * (sol.f[i] - obstacle)) <= 1e-10 * std::max(1.0, v));
    }
  }
}

TEST_CASE("bumped V in the continuation region is detected") {
  VISolution bumped = gbm_vi();
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0);
  const int i = window_indices(bumped.V.grid(), 0.19, 0.21).front();
  bumped.V(0, i) += 0.1;
  std::vector<std::pair<int, int>> nodes{{0, i - 1}, {0, i}, {0, i + 1}};
  const auto res = vi_interior_perturbation(bumped, spec, nodes, {0.0}, 1e-3);
  bool detected = false;
  for (const auto& r : res) detected = detected || (r.gain > 1e-3 && !r.pass);
  CHECK(detected);
}

TEST_CASE("boundary certification") {
  const auto& sol = gbm_vi();
  const ProblemSpec spec = gbm_problem(0.05, 0.5, 1.0, 0.0, 10.0);
  CHECK(vi_boundary_perturbation(sol, spec, 0).pass);

  // Hand-built fields: strongly convex V and a flat g around x = 1.
  const Grid grid = build_grid(0, 2, 199, 4);
  VISolution synth;
  synth.V = GridField(grid, 1.0);
  synth.g = GridField(grid, 1.0);
  synth.gamma = 1.0;
  synth.kappa = 0.5;
  for (int n = 0; n <= grid.n_t; ++n)
    for (int i = 0; i < grid.n_x; ++i) {
      const double x = grid.node(i);
      synth.V(n, i) = 10 * (x - 1) * (x - 1);
      synth.g(n, i) = 0.1 * x;
    }
  synth.boundary.assign(grid.n_t + 1, {});
  synth.boundary[0] = {1.0};
  ProblemSpec s = constant_reward(1.0);
  const auto bc = vi_boundary_perturbation(synth, s, 0);
  REQUIRE(bc.points.size() == 1);
  CHECK(bc.points[0].lhs == doctest::Approx(20.0));
  CHECK(bc.points[0].rhs == doctest::Approx(0.01));
  CHECK_FALSE(bc.pass);
}

}
