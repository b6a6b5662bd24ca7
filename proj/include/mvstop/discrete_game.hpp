#pragma once

#include "mvstop/grid_field.hpp"
#include "mvstop/model.hpp"
#include "mvstop/vi_limit.hpp"

namespace mvstop {

/// Backward recursion of the discrete-time stopping game on N equal steps.
struct DiscreteEquilibrium {
  double dt = 0.0;
  GridField U;  ///< continuation value E[f] - (gamma/2) Var[f] of the next rule
  GridField V;
  GridField g;
  GridField m;  ///< second moment E[f^2(X_tau)]
  MaskMatrix stop_mask;
  double tower_identity_error = 0.0;  ///< moment form vs E[V] - (gamma/2) Var[g] form
  double min_variance = 0.0;          ///< min over nodes of m - g^2
};

DiscreteEquilibrium backward_recursion(const ProblemSpec& spec, const Grid& grid, int steps);

struct GameComparison {
  WindowGap V;
  WindowGap g;
  int stop_symmetric_difference = 0;
  /// Per window node: 0 neither obstacle binds, 1 only V >= f binds (game
  /// stops), 2 only the VI obstacle binds, 3 both.
  std::vector<int> binding;
  std::vector<double> x;
};

/// Compares slice t of both solutions (nearest slices) on [x_lo, x_hi].
GameComparison compare_to_vi(const DiscreteEquilibrium& d, const VISolution& vi, double t,
                             double x_lo, double x_hi);

}  // namespace mvstop
