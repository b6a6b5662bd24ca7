#pragma once

#include "mvstop/grid_field.hpp"
#include "mvstop/model.hpp"

#include <vector>

namespace mvstop {

/// Entropy H(p) = p - p ln p, with H(0) = 0.
inline double entropy(double p) { return p > 0 ? p - p * std::log(p) : 0.0; }

struct IntensityResult {
  Profile pi;
  int clip_hits = 0;
};

/// pi = exp(clamp(-(V + (gamma/2)(f-g)^2 - f) / lambda, -M, M)).
IntensityResult extract_intensity(const Eigen::Ref<const Profile>& V,
                                  const Eigen::Ref<const Profile>& g,
                                  const Eigen::Ref<const Profile>& f, double gamma,
                                  double lambda, double clip = 50.0);

struct HJBOptions {
  double fp_tol = 1e-8;
  int fp_max_iter = 100;
  double damping = 1.0;
  double clip = 50.0;
  double inner_tol = 1e-10;
  int inner_max_iter = 100;
};

struct HJBResidual {
  double v_equation = 0.0;  ///< sup over interior nodes, midpoint-in-time stencil
  double g_equation = 0.0;
  double pi_consistency = 0.0;  ///< unclamped nodes only
  double terminal_v = 0.0;      ///< sup |V(T) - f|
  double terminal_g = 0.0;
};

struct HJBSolution {
  GridField V;
  GridField g;
  GridField h;
  GridField pi;
  double lambda = 0.0;
  int iterations = 0;
  bool converged = false;
  double final_damping = 1.0;
  std::vector<double> gap_history;
  long clip_hits = 0;
  long inner_failures = 0;  ///< time steps whose Newton loop hit its cap
  HJBResidual residual;
};

/// Picard iteration l -> k on the g-component. Within each time step the
/// exponential term is linearized by Newton. `warm_start` seeds l.
HJBSolution solve_extended_hjb(const ProblemSpec& spec, const Grid& grid,
                               const HJBOptions& options = {},
                               const GridField* warm_start = nullptr);

HJBResidual hjb_residual(const HJBSolution& sol, const ProblemSpec& spec, const Grid& grid,
                         double clip = 50.0);

}  // namespace mvstop
