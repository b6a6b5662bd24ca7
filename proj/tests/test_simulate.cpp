#include "mvstop/hjb_regularized.hpp"
#include "mvstop/simulate.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace mvstop;
using testing_helpers::constant_reward;

namespace {

MCConfig small_mc(long n = 4000, std::uint64_t seed = 11) {
  MCConfig mc;
  mc.n_paths = n;
  mc.dt_sim = 1e-2;
  mc.master_seed = seed;
  return mc;
}

bool agree(const MCEstimate& a, const MCEstimate& b, double k = 3.0) {
  return std::abs(a.mean - b.mean) <= k * std::max(std::hypot(a.se, b.se), 1e-12);
}

ProblemSpec brownian(double b, double sigma, double gamma = 1.0) {
  ProblemSpec s;
  s.drift = CoefficientSpec::constant(b);
  s.diffusion = CoefficientSpec::constant(sigma);
  s.reward = CoefficientSpec::affine(0.0, 1.0);
  s.gamma = gamma;
  s.lambda = 0.2;
  s.horizon = 1.0;
  return s;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("degenerate dynamics") {
  const auto still = simulate_paths(brownian(0, 0), 0.0, 0.7, small_mc(10));
  CHECK((still.X.array() == 0.7).all());
  const auto ode = simulate_paths(brownian(1, 0), 0.0, 0.7, small_mc(10));
  CHECK((ode.X.col(ode.X.cols() - 1).array() - 1.7).abs().maxCoeff() < 1e-12);
}

TEST_CASE("lattice covers [t0, T]") {
  const auto lat = make_lattice(0.25, 1.0, 0.1);
  CHECK(lat.steps == 8);
  CHECK(lat.time(lat.steps) == doctest::Approx(1.0));
}

TEST_CASE("pairwise sums are order-fixed") {
  std::vector<double> v(1001);
  std::iota(v.begin(), v.end(), 0.0);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(nullptr, 0) == 0.0);
}

TEST_CASE("zero intensity never stops before T") {
  const ProblemSpec spec = brownian(0, 1);
  const auto batch = simulate_paths(spec, 0.0, 0.3, small_mc(2000));
  const auto sample = sample_cox_stopping(batch, spec, Intensity::rate(0.0));
  for (const auto& p : sample.paths) {
    CHECK(p.tau == doctest::Approx(1.0));
    CHECK_FALSE(p.by_intensity);
  }
  const auto est = estimate_objective(sample, spec, EstimatorKind::raw);
  CHECK(est.g.within(0.3));
  // J = g - (gamma/2) Var X_T with the sample variance of the same paths.
  const Eigen::VectorXd xt = batch.X.col(batch.X.cols() - 1);
  const double mean = xt.mean();
  const double var = (xt.array() - mean).square().mean();
  CHECK(est.J.mean == doctest::Approx(mean - 0.5 * var).epsilon(1e-12));
}

TEST_CASE("stored and streaming samplers agree path by path") {
  const ProblemSpec spec = brownian(0.1, 0.8);
  const auto mc = small_mc(500);
  const auto pi = Intensity::rate(1.3);
  const auto a = sample_cox_stopping(simulate_paths(spec, 0.0, 0.2, mc), spec, pi);
  const auto b = simulate_cox_stopping(spec, pi, 0.0, 0.2, mc);
  REQUIRE(a.paths.size() == b.paths.size());
  for (std::size_t i = 0; i < a.paths.size(); ++i) {
    CHECK(a.paths[i].tau == b.paths[i].tau);
    CHECK(a.paths[i].x_tau == b.paths[i].x_tau);
  }
}

TEST_CASE("constant intensity stops at exponential times") {
  const ProblemSpec spec = brownian(0, 0.5);
  const auto sample = simulate_cox_stopping(spec, Intensity::rate(2.0), 0.0, 0.0, small_mc(20000));
  std::vector<double> stopped(sample.paths.size());
  for (std::size_t i = 0; i < stopped.size(); ++i) stopped[i] = sample.paths[i].by_intensity;
  CHECK(summarize(stopped, "p").within(1 - std::exp(-2.0)));
}

TEST_CASE("raw and conditional estimators agree") {
  const Grid grid = build_grid(-2, 2, 41, 100);
  std::vector<std::pair<ProblemSpec, double>> fixtures{
      {brownian(0, 1), 0.0},
      {brownian(0.3, 0.5, 2.0), 0.4},
      {constant_reward(), 0.0},
      {gbm_problem(0.05, 0.5, 1.0, 0.1, 1.0), 0.4},
      {brownian(-0.2, 0.7, 0.5), -0.3},
  };
  for (const auto& [spec, x0] : fixtures) {
    const Grid g = spec.drift.kind == CoefficientKind::gbm ? build_grid(0.01, 3.0, 100, 100) : grid;
    const auto sol = solve_extended_hjb(spec, g);
    const auto sample = simulate_cox_stopping(spec, Intensity::of(sol.pi), 0.0, x0, small_mc());
    const auto raw = estimate_objective(sample, spec, EstimatorKind::raw);
    const auto cond = estimate_objective(sample, spec, EstimatorKind::conditional);
    CHECK(agree(raw.g, cond.g));
    CHECK(agree(raw.J_lambda, cond.J_lambda));
    CHECK(cond.g.se <= raw.g.se + 1e-12);
  }
}

TEST_CASE("Monte Carlo reproduces the PDE on a small fixture") {
  const ProblemSpec spec = brownian(0.1, 0.6, 1.0);
  const Grid grid = build_grid(-3, 3, 121, 400);
  const auto sol = solve_extended_hjb(spec, grid);
  REQUIRE(sol.converged);
  MCConfig mc = small_mc(20000, 99);
  mc.dt_sim = 2.5e-3;
  const auto sample = simulate_cox_stopping(spec, Intensity::of(sol.pi), 0.0, 0.0, mc);
  const auto raw = estimate_objective(sample, spec, EstimatorKind::raw);
  CHECK(raw.g.within(sol.g.interpolate(0, 0)));
  CHECK(raw.J_lambda.within(sol.V.interpolate(0, 0)));
}

TEST_CASE("hitting objective with trivial masks") {
  const ProblemSpec spec = brownian(0.05, 0.4);
  const Grid grid = build_grid(-3, 3, 61, 10);
  const MaskMatrix all = MaskMatrix::Constant(11, 61, true);
  const auto now = estimate_hitting_objective(spec, all, grid, 0.0, 0.2, small_mc(100));
  CHECK(now.mean.mean == 0.2);
  CHECK(now.J.mean == 0.2);
  CHECK(std::abs(now.variance.mean) < 1e-15);

  const MaskMatrix none = MaskMatrix::Constant(11, 61, false);
  const auto mc = small_mc(1000);
  const auto late = estimate_hitting_objective(spec, none, grid, 0.0, 0.2, mc);
  const auto batch = simulate_paths(spec, 0.0, 0.2, mc);
  const Eigen::VectorXd xt = batch.X.col(batch.X.cols() - 1);
  CHECK(late.mean.mean == doctest::Approx(xt.mean()).epsilon(1e-12));
  CHECK(late.variance.mean ==
        doctest::Approx((xt.array() - xt.mean()).square().mean()).epsilon(1e-9));
}

TEST_CASE("local time without diffusion is zero") {
  const ProblemSpec spec = brownian(1.0, 0.0);
  const auto rep = estimate_local_time_relation(spec, [](double) { return 0.0; }, 0.0, 0.0,
                                                {0.1}, small_mc(200));
  REQUIRE(rep.size() == 1);
  CHECK(rep[0].local_time.mean == 0.0);
  CHECK(rep[0].exit_time.mean > 0.0);
}

TEST_CASE("results do not depend on the worker count") {
  const ProblemSpec spec = brownian(0.1, 0.8);
  MCConfig one = small_mc(3001);
  MCConfig many = one;
  many.workers = 3;
  const auto a = estimate_objective(simulate_cox_stopping(spec, Intensity::rate(0.7), 0, 0.1, one),
                                    spec, EstimatorKind::raw);
  const auto b = estimate_objective(simulate_cox_stopping(spec, Intensity::rate(0.7), 0, 0.1, many),
                                    spec, EstimatorKind::raw);
  CHECK(a.g.mean == b.g.mean);
  CHECK(a.g.se == b.g.se);
  CHECK(a.J_lambda.mean == b.J_lambda.mean);
}

TEST_CASE("standard-error floor") {
  MCEstimate e;
  e.mean = 1.0;
  e.se = 0.0;
  CHECK(e.within(1.0));
  CHECK_FALSE(e.within(1.0 + 1e-9));
  e.se = 0.1;
  CHECK(e.within(1.29));
  CHECK_FALSE(e.within(1.31));
}

}
