#include "mvstop/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mvstop {

Profile Grid::nodes() const {
  Profile x(n_x);
  for (int i = 0; i < n_x; ++i) x[i] = node(i);
  return x;
}

Grid Grid::with_steps(int steps) const {
  Grid g = *this;
  g.n_t = steps;
  return g;
}

bool Grid::same_space(const Grid& other) const {
  return x_min == other.x_min && x_max == other.x_max && n_x == other.n_x &&
         boundary == other.boundary;
}

Grid build_grid(double x_min, double x_max, int n_x, int n_t,
                BoundaryKind boundary) {
  if (!(x_min < x_max)) throw std::invalid_argument("grid: x_min must be < x_max");
  if (n_x < 3) throw std::invalid_argument("grid: n_x must be >= 3");
  if (n_t < 1) throw std::invalid_argument("grid: n_t must be >= 1");
  return Grid{x_min, x_max, n_x, n_t, boundary};
}

CoefficientSpec CoefficientSpec::constant(double value) {
  return {CoefficientKind::constant, value, 0.0, nullptr};
}

CoefficientSpec CoefficientSpec::affine(double intercept, double slope) {
  return {CoefficientKind::affine, intercept, slope, nullptr};
}

CoefficientSpec CoefficientSpec::gbm(double slope) {
  return {CoefficientKind::gbm, slope, 0.0, nullptr};
}

CoefficientSpec CoefficientSpec::tabulated(CoefficientTable table) {
  const auto& g = table.grid;
  if (table.values.rows() != g.n_t + 1 || table.values.cols() != g.n_x)
    throw std::invalid_argument("tabulated coefficient: table shape does not match its grid");
  return {CoefficientKind::tabulated, 0.0, 0.0,
          std::make_shared<const CoefficientTable>(std::move(table))};
}

namespace {

double lookup_table(const CoefficientTable& tab, double t, double x) {
  const Grid& g = tab.grid;
  const double dx = g.dx();
  const double dt = g.dt(tab.horizon);
  const double slack = 1e-12 * std::max(1.0, std::abs(g.x_max - g.x_min));
  const double x_lo = g.node(0);
  const double x_hi = g.node(g.n_x - 1);
  if (x < x_lo - slack || x > x_hi + slack || t < -1e-12 || t > tab.horizon + 1e-12) {
    std::ostringstream msg;
    msg << "tabulated coefficient: (t=" << t << ", x=" << x << ") outside table";
    throw std::out_of_range(msg.str());
  }
  const double sx = std::clamp((x - x_lo) / dx, 0.0, double(g.n_x - 1));
  const double st = std::clamp(t / dt, 0.0, double(g.n_t));
  const int i = std::min(int(sx), g.n_x - 2);
  const int n = std::min(int(st), std::max(g.n_t - 1, 0));
  const double wx = sx - i;
  if (g.n_t == 0) return (1 - wx) * tab.values(0, i) + wx * tab.values(0, i + 1);
  const double wt = st - n;
  const auto& v = tab.values;
  return (1 - wt) * ((1 - wx) * v(n, i) + wx * v(n, i + 1)) +
         wt * ((1 - wx) * v(n + 1, i) + wx * v(n + 1, i + 1));
}

}  // namespace

double evaluate_coefficient(const CoefficientSpec& c, double t, double x) {
  switch (c.kind) {
    case CoefficientKind::constant:
      return c.a;
    case CoefficientKind::affine:
      return c.a + c.b * x;
    case CoefficientKind::gbm:
      return c.a * x;
    case CoefficientKind::tabulated:
      return lookup_table(*c.table, t, x);
  }
  return 0.0;
}

Profile ProblemSpec::reward_on(const Grid& grid) const {
  Profile out(grid.n_x);
  for (int i = 0; i < grid.n_x; ++i) out[i] = f(grid.node(i));
  return out;
}

ProblemSpec gbm_problem(double mu, double sigma_sq, double gamma, double lambda,
                        double horizon) {
  ProblemSpec spec;
  spec.drift = CoefficientSpec::gbm(mu);
  spec.diffusion = CoefficientSpec::gbm(std::sqrt(sigma_sq));
  spec.reward = CoefficientSpec::affine(0.0, 1.0);
  spec.gamma = gamma;
  spec.lambda = lambda;
  spec.horizon = horizon;
  return spec;
}

GeneralObjective GeneralObjective::mean_variance(double gamma,
                                                 std::function<double(double)> f) {
  GeneralObjective obj;
  obj.G = [gamma](double z) { return 0.5 * gamma * z * z; };
  obj.dG = [gamma](double z) { return gamma * z; };
  obj.d2G = [gamma](double) { return gamma; };
  obj.k = f;
  obj.reward = [gamma, f](double x) {
    const double v = f(x);
    return v - 0.5 * gamma * v * v;
  };
  return obj;
}

ValidationReport validate_problem(const ProblemSpec& spec, const Grid& grid,
                                  const ValidationOptions& options) {
  ValidationReport report;
  auto violate = [&](std::string s) { report.violations.push_back(std::move(s)); };

  if (!(spec.horizon > 0)) violate("horizon T must be positive");
  if (!(spec.gamma >= 0)) violate("risk aversion gamma must be nonnegative");
  if (options.requires_lambda && !(spec.lambda > 0))
    violate("regularization lambda must be positive");
  if (spec.dimension < 1) violate("dimension must be a positive integer");
  if (options.for_solver && spec.dimension != 1) violate("solver requires d=1");
  if (!(grid.x_min < grid.x_max) || grid.n_x < 3 || grid.n_t < 1) {
    violate("grid is malformed");
    return report;
  }

  for (const auto* c : {&spec.drift, &spec.diffusion, &spec.reward}) {
    if (c->kind != CoefficientKind::tabulated) continue;
    const Grid& tg = c->table->grid;
    if (!tg.same_space(grid) || tg.n_t != grid.n_t ||
        (spec.horizon > 0 && c->table->horizon != spec.horizon))
      violate("tabulated coefficient does not cover the grid exactly");
  }
  if (!report.ok()) return report;

  const double dt = grid.dt(spec.horizon);
  const double dx = grid.dx();
  double worst_sigma_sq = std::numeric_limits<double>::infinity();
  double worst_x = 0;
  int peclet_nodes = 0;
  for (int n = 0; n <= grid.n_t; ++n) {
    const double t = n * dt;
    for (int i = 0; i < grid.n_x; ++i) {
      const double x = grid.node(i);
      const double s = spec.sigma(t, x);
      const double b = spec.b(t, x);
      if (!std::isfinite(s) || !std::isfinite(b) || !std::isfinite(spec.f(x))) {
        violate("coefficient not finite on grid");
        return report;
      }
      if (s * s < worst_sigma_sq) {
        worst_sigma_sq = s * s;
        worst_x = x;
      }
      if (std::abs(b) * dx > s * s) ++peclet_nodes;
    }
  }
  if (worst_sigma_sq < options.min_diffusion_sq) {
    std::ostringstream msg;
    msg << "degenerate diffusion: sigma^2 = " << worst_sigma_sq << " at x = " << worst_x;
    violate(msg.str());
  }
  if (peclet_nodes > 0) {
    std::ostringstream msg;
    msg << "Peclet number |b| dx / sigma^2 exceeds 1 at " << peclet_nodes
        << " nodes; central differencing may oscillate";
    report.warnings.push_back(msg.str());
  }
  return report;
}

}  // namespace mvstop
