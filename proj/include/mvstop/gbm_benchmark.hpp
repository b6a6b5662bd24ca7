#pragma once

#include "mvstop/grid_field.hpp"
#include "mvstop/model.hpp"

#include <cmath>
#include <stdexcept>

namespace mvstop {

/// Infinite-horizon equilibrium for dX = mu X dt + sigma X dW, f(x) = x:
/// below the threshold b, g = b^rho x^(1-rho) and
/// V = (1 - gamma b / 2) g + (gamma/2) g^2; above it V = g = x.
template <typename Scalar = double>
struct GBMClosedForm {
  Scalar mu, sigma_sq, gamma, rho, threshold;

  static GBMClosedForm create(Scalar mu, Scalar sigma_sq, Scalar gamma) {
    if (!(sigma_sq > 0) || !(gamma > 0))
      throw std::invalid_argument("GBM closed form: sigma^2 and gamma must be positive");
    const Scalar rho = 2 * mu / sigma_sq;
    if (!(rho > 0 && rho < Scalar(0.5)))
      throw std::invalid_argument("GBM closed form: rho = 2 mu / sigma^2 must lie in (0, 1/2)");
    return {mu, sigma_sq, gamma, rho, 2 * rho / (gamma * (1 - rho))};
  }

  Scalar coeff_a() const { return (1 - gamma * threshold / 2) * std::pow(threshold, rho); }
  Scalar coeff_b() const { return gamma / 2 * std::pow(threshold, 2 * rho); }

  // Continuation-branch formulas, valid for any x > 0.
  Scalar g_cont(Scalar x) const { return std::pow(threshold, rho) * std::pow(x, 1 - rho); }
  Scalar dg_cont(Scalar x) const { return (1 - rho) * std::pow(threshold, rho) * std::pow(x, -rho); }
  Scalar d2g_cont(Scalar x) const {
    return -rho * (1 - rho) * std::pow(threshold, rho) * std::pow(x, -rho - 1);
  }
  Scalar V_cont(Scalar x) const {
    return coeff_a() * std::pow(x, 1 - rho) + coeff_b() * std::pow(x, 2 - 2 * rho);
  }
  Scalar dV_cont(Scalar x) const {
    return (1 - rho) * coeff_a() * std::pow(x, -rho) +
           (2 - 2 * rho) * coeff_b() * std::pow(x, 1 - 2 * rho);
  }
  Scalar d2V_cont(Scalar x) const {
    return -rho * (1 - rho) * coeff_a() * std::pow(x, -rho - 1) +
           (2 - 2 * rho) * (1 - 2 * rho) * coeff_b() * std::pow(x, -2 * rho);
  }

  Scalar generator(Scalar x, Scalar d1, Scalar d2) const {
    return Scalar(0.5) * sigma_sq * x * x * d2 + mu * x * d1;
  }
};

struct ClosedFormValue {
  double V;
  double g;
};

/// Throws std::domain_error for x <= 0.
ClosedFormValue closed_form_eval(const GBMClosedForm<double>& cf, double x);
/// Closed form sampled on the grid nodes.
void closed_form_profiles(const GBMClosedForm<double>& cf, const Grid& grid, Profile& V, Profile& g);

/// kappa(z) = (gamma/2) b z^(2rho-1) + (1 - gamma b / 2) z^rho.
double kappa_function(const GBMClosedForm<double>& cf, double z);

struct EllipticReport {
  double continuation_v_residual = 0.0;  ///< sup |LV - (gamma/2) sigma^2 x^2 g'^2|, x < b
  double continuation_g_residual = 0.0;  ///< sup |Lg|, x < b
  double stopped_max = -1e300;           ///< max of LV - (gamma/2) sigma^2 x^2, x >= b
  double min_obstacle_margin = 1e300;    ///< min of V + (gamma/2)(x-g)^2 - x, x < b
  bool kappa_bound_holds = true;         ///< margin >= x (kappa(b/x) - 1) > 0
  int continuation_nodes = 0;
  int stopped_nodes = 0;
  bool pass = false;
};

EllipticReport verify_elliptic_system(const GBMClosedForm<double>& cf, const Grid& grid,
                                      double tol = 1e-10);

struct BoundaryJump {
  double lv_left = 0.0;
  double lv_right = 0.0;
  double dg_left = 0.0;
  double dg_right = 0.0;
  double dv_left = 0.0;
  double dv_right = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double smooth_fit_gap = 0.0;  ///< V'(b-) - V'(b+)
  /// sigma^2 b rho (2 - rho): the printed simplification of lv_left + lv_right,
  /// which takes mu b = sigma^2 b rho. Kept for comparison with lhs.
  double printed_lhs = 0.0;
};

BoundaryJump boundary_jump_quantities(const GBMClosedForm<double>& cf);

/// Numerical elliptic residual of computed profiles: sup over nodes in
/// [x_lo, x_hi] of |L V - (gamma/2) sigma^2 x^2 (d_x g)^2| using central
/// differences. Used to compare variance conventions on a finite-horizon run.
double numerical_elliptic_residual(const GBMClosedForm<double>& cf, const Grid& grid,
                                   const Eigen::Ref<const Profile>& V,
                                   const Eigen::Ref<const Profile>& g, double x_lo, double x_hi);

}  // namespace mvstop
