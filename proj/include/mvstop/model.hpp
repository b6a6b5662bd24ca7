#pragma once

/// Problem definition for mean-variance stopping of a one-dimensional
/// diffusion dX = b(t,X) dt + sigma(t,X) dW with terminal reward f(X).

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvstop {

using Profile = Eigen::VectorXd;

/// Raised when a numerical routine cannot produce a result (singular
/// system, non-dominant assembly, ...).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BoundaryKind {
  linear_extrapolation,  ///< second derivative zero at the edge nodes
  value_clamped,         ///< ghost node at x_min / x_max carries f
};

enum class VarianceFactor {
  half_gamma,  ///< kappa = gamma / 2
  full_gamma,  ///< kappa = gamma
};

/// Uniform lattice: n_x interior nodes strictly inside (x_min, x_max) and
/// n_t time steps over [0, T].
struct Grid {
  double x_min = 0.0;
  double x_max = 1.0;
  int n_x = 3;
  int n_t = 1;
  BoundaryKind boundary = BoundaryKind::linear_extrapolation;

  double dx() const { return (x_max - x_min) / (n_x + 1); }
  double dt(double horizon) const { return horizon / n_t; }
  double node(int i) const { return x_min + (i + 1) * dx(); }
  double time(int n, double horizon) const { return n * dt(horizon); }
  Profile nodes() const;
  /// Same spatial lattice with a different number of time steps.
  Grid with_steps(int steps) const;
  bool same_space(const Grid& other) const;
};

Grid build_grid(double x_min, double x_max, int n_x, int n_t,
                BoundaryKind boundary = BoundaryKind::linear_extrapolation);

/// Values tabulated on the nodes of a (grid, horizon) lattice, read back by
/// bilinear interpolation.
struct CoefficientTable {
  Grid grid;
  double horizon = 1.0;
  Eigen::MatrixXd values;  ///< (n_t + 1) x n_x
};

enum class CoefficientKind { constant, affine, gbm, tabulated };

struct CoefficientSpec {
  CoefficientKind kind = CoefficientKind::constant;
  double a = 0.0;  ///< constant value, affine intercept, or gbm slope
  double b = 0.0;  ///< affine slope
  std::shared_ptr<const CoefficientTable> table;

  static CoefficientSpec constant(double value);
  static CoefficientSpec affine(double intercept, double slope);
  static CoefficientSpec gbm(double slope);
  static CoefficientSpec tabulated(CoefficientTable table);
};

/// a, a + b x, a x, or the interpolated table. Throws std::out_of_range for
/// a tabulated lookup outside the table's lattice.
double evaluate_coefficient(const CoefficientSpec& c, double t, double x);

struct ProblemSpec {
  CoefficientSpec drift;
  CoefficientSpec diffusion;
  CoefficientSpec reward;  ///< f(x); the time argument is ignored
  double gamma = 0.0;
  double lambda = 0.1;
  double horizon = 1.0;
  int dimension = 1;
  VarianceFactor variance_factor = VarianceFactor::half_gamma;

  double kappa() const {
    return variance_factor == VarianceFactor::half_gamma ? 0.5 * gamma : gamma;
  }
  double b(double t, double x) const { return evaluate_coefficient(drift, t, x); }
  double sigma(double t, double x) const {
    return evaluate_coefficient(diffusion, t, x);
  }
  double f(double x) const { return evaluate_coefficient(reward, 0.0, x); }
  Profile reward_on(const Grid& grid) const;
};

/// dX = mu X dt + sqrt(sigma_sq) X dW, f(x) = x.
ProblemSpec gbm_problem(double mu, double sigma_sq, double gamma,
                        double lambda, double horizon);

/// Objective E[f(X_tau)] + G(E[k(X_tau)]); `reward` plays the role of f.
struct GeneralObjective {
  std::function<double(double)> G;
  std::function<double(double)> dG;
  std::function<double(double)> d2G;
  std::function<double(double)> k;
  std::function<double(double)> reward;

  /// G(z) = (gamma/2) z^2, k = f, reward = f - (gamma/2) f^2.
  static GeneralObjective mean_variance(double gamma,
                                        std::function<double(double)> f);
};

struct ValidationOptions {
  bool for_solver = true;
  bool requires_lambda = true;
  double min_diffusion_sq = 1e-12;
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;  ///< advisory only (Peclet)
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_problem(const ProblemSpec& spec, const Grid& grid,
                                  const ValidationOptions& options = {});

}  // namespace mvstop
