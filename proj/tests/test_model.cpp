#include "mvstop/model.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace mvstop;

namespace {

bool mentions(const std::vector<std::string>& list, const std::string& needle) {
  return std::any_of(list.begin(), list.end(),
                     [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("coefficient families") {
  CHECK(evaluate_coefficient(CoefficientSpec::constant(0.3), 0.7, -4.0) == 0.3);
  CHECK(evaluate_coefficient(CoefficientSpec::gbm(0.5), 0.0, 2.0) == 1.0);
  CHECK(evaluate_coefficient(CoefficientSpec::affine(1.0, -1.0), 0.0, 1.0) == 0.0);
}

TEST_CASE("tabulated coefficient interpolates bilinearly and rejects off-lattice lookups") {
  CoefficientTable table;
  table.grid = build_grid(0.0, 4.0, 3, 2);
  table.horizon = 2.0;
  table.values.resize(3, 3);
  // value = t + x on nodes x = 1,2,3 and t = 0,1,2
  for (int n = 0; n < 3; ++n)
    for (int i = 0; i < 3; ++i) table.values(n, i) = n + (i + 1);
  const auto c = CoefficientSpec::tabulated(table);
  CHECK(evaluate_coefficient(c, 0.5, 1.5) == doctest::Approx(2.0));
  CHECK(evaluate_coefficient(c, 2.0, 3.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(evaluate_coefficient(c, 0.5, 3.5), std::out_of_range);
}

TEST_CASE("coefficient evaluation is bit-reproducible") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5);
  const auto c = CoefficientSpec::affine(0.123, -0.77);
  for (int k = 0; k < 100; ++k) {
    const double t = u(rng), x = u(rng);
    const double a = evaluate_coefficient(c, t, x);
    CHECK(a == evaluate_coefficient(c, t, x));
  }
}

TEST_CASE("grid construction") {
  const Grid g = build_grid(0.0, 1.0, 3, 2);
  REQUIRE(g.nodes().size() == 3);
  CHECK(g.node(0) == 0.25);
  CHECK(g.node(1) == 0.5);
  CHECK(g.node(2) == 0.75);
  CHECK(g.dt(3.0) == 1.5);
  CHECK_THROWS_AS(build_grid(0.0, 1.0, 1, 1), std::invalid_argument);
  CHECK(build_grid(-1.0, 1.0, 199, 100).dx() == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("node coordinates are exactly x_min + (i+1) dx") {
  const Grid g = build_grid(-0.37, 2.9, 517, 10);
  const Profile x = g.nodes();
  for (int i = 0; i < g.n_x; ++i) CHECK(x[i] == g.x_min + (i + 1) * g.dx());
}

TEST_CASE("validation") {
  const Grid grid = build_grid(0.01, 3.0, 299, 100);
  const ProblemSpec gbm = gbm_problem(0.05, 0.5, 1.0, 0.1, 10.0);
  CHECK(validate_problem(gbm, grid).ok());
  CHECK(validate_problem(gbm, grid).violations.empty());

  ProblemSpec flat = gbm;
  flat.diffusion = CoefficientSpec::constant(0.0);
  CHECK(mentions(validate_problem(flat, grid).violations, "degenerate diffusion"));

  ProblemSpec two_d = gbm;
  two_d.dimension = 2;
  CHECK(mentions(validate_problem(two_d, grid).violations, "solver requires d=1"));

  ProblemSpec no_lambda = gbm;
  no_lambda.lambda = 0.0;
  CHECK_FALSE(validate_problem(no_lambda, grid).ok());
  ValidationOptions vi_opts;
  vi_opts.requires_lambda = false;
  CHECK(validate_problem(no_lambda, grid, vi_opts).ok());
}

TEST_CASE("Peclet warning is advisory") {
  ProblemSpec s = gbm_problem(0.05, 0.5, 1.0, 0.1, 1.0);
  s.drift = CoefficientSpec::constant(50.0);
  s.diffusion = CoefficientSpec::constant(0.1);
  const auto r = validate_problem(s, build_grid(0.0, 1.0, 9, 10));
  CHECK(r.ok());
  CHECK(mentions(r.warnings, "Peclet"));
}

TEST_CASE("variance factor") {
  ProblemSpec s;
  s.gamma = 3.0;
  CHECK(s.kappa() == 1.5);
  s.variance_factor = VarianceFactor::full_gamma;
  CHECK(s.kappa() == 3.0);
}

TEST_CASE("mean-variance objective decomposition") {
  const auto obj = GeneralObjective::mean_variance(2.0, [](double x) { return x; });
  CHECK(obj.reward(3.0) == doctest::Approx(3.0 - 9.0));
  CHECK(obj.G(2.0) == doctest::Approx(4.0));
  CHECK(obj.dG(2.0) == doctest::Approx(4.0));
  CHECK(obj.d2G(7.0) == doctest::Approx(2.0));
}

}
