#pragma once

#include "mvstop/hjb_regularized.hpp"
#include "mvstop/simulate.hpp"
#include "mvstop/vi_limit.hpp"

#include <string>
#include <vector>

namespace mvstop {

enum class PerturbationMethod { analytic, monte_carlo };

/// gain is the first-order rate of J(perturbed) - J(equilibrium); a
/// profitable deviation has gain > tol.
struct PerturbationResult {
  double t = 0.0;
  double x = 0.0;
  double v = 0.0;
  double gain = 0.0;
  double se = 0.0;   ///< Monte Carlo only
  double eps = 0.0;  ///< Monte Carlo only
  PerturbationMethod method = PerturbationMethod::analytic;
  bool pass = true;
};

struct CertificationSummary {
  long checked = 0;
  long failed = 0;
  double max_gain = -std::numeric_limits<double>::infinity();
  std::vector<PerturbationResult> failures;  ///< first `max_listed` failures
  bool pass() const { return failed == 0; }
};

inline const std::vector<double>& default_regularized_probes() {
  static const std::vector<double> probes{0.01, 0.1, 0.5, 1, 2, 10, 100};
  return probes;
}
inline const std::vector<double>& default_vi_probes() {
  static const std::vector<double> probes{0, 0.01, 0.1, 0.5, 1, 2, 10, 100};
  return probes;
}

/// (v - pi) A + lambda (H(v) - H(pi)) with
/// A = f - (gamma/2) f^2 - h - gamma g^2 + gamma g f.
double regularized_rate(double v, double pi, double f, double g, double h, double gamma,
                        double lambda);

/// Evaluates the rate at every node and probe (plus v = pi itself).
CertificationSummary analytic_perturbation_regularized(
    const HJBSolution& sol, const ProblemSpec& spec,
    const std::vector<double>& probes = default_regularized_probes(), double tol = 1e-8,
    std::size_t max_listed = 20);

/// Monte Carlo counterpart at one location with common random numbers:
/// intensity v on [t, t + eps], pi after. Uses the conditional estimator.
std::vector<PerturbationResult> mc_perturbation_regularized(
    const HJBSolution& sol, const ProblemSpec& spec, double t, double x, double v,
    const std::vector<double>& eps_list, const MCConfig& mc);

/// Pointwise rate (d_t+L)V - kappa |sigma d_x g|^2 + v (f - V - (gamma/2)(f-g)^2)
/// at node (n, i). Throws std::domain_error when the node's neighbours
/// straddle the stop boundary.
double vi_rate(const VISolution& sol, const ProblemSpec& spec, int n, int i, double v);

std::vector<PerturbationResult> vi_interior_perturbation(
    const VISolution& sol, const ProblemSpec& spec, const std::vector<std::pair<int, int>>& nodes,
    const std::vector<double>& probes = default_vi_probes(), double tol = 1e-8);

struct BoundaryCertification {
  std::vector<BoundaryInequality> points;
  bool pass = true;  ///< vacuous when there are no points
};

BoundaryCertification vi_boundary_perturbation(const VISolution& sol, const ProblemSpec& spec,
                                               int n, double tol = 1e-8);

}  // namespace mvstop
