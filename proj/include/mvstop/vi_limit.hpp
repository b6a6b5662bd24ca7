#pragma once

#include "mvstop/grid_field.hpp"
#include "mvstop/hjb_regularized.hpp"
#include "mvstop/model.hpp"

#include <vector>

namespace mvstop {

using BoundaryCurve = std::vector<std::vector<double>>;  ///< crossings per time slice

struct VIOptions {
  int inner_max_iter = 50;
  double tie_tol = 1e-12;  ///< V_step <= psi + tie_tol counts as stopped
};

struct VISolution {
  GridField V;
  GridField g;
  GridField h;
  MaskMatrix stop_mask;  ///< true where the obstacle binds
  BoundaryCurve boundary;
  Profile f;
  double gamma = 0.0;
  double kappa = 0.0;
  int unconverged_steps = 0;  ///< steps whose mask iteration hit the cap
  int max_inner_iterations = 0;

  bool mask_converged() const { return unconverged_steps == 0; }
};

/// Projected backward scheme for the limiting obstacle system.
VISolution solve_vi(const ProblemSpec& spec, const Grid& grid, const VIOptions& options = {});

/// Obstacle residual V + (gamma/2)(f-g)^2 - f on slice n.
Profile obstacle_residual(const VISolution& sol, int n);

/// Zero crossings of r between a node with r > tol and a neighbour with
/// r <= tol, linearly interpolated, in increasing x.
std::vector<double> locate_sign_changes(const Eigen::Ref<const Profile>& r,
                                        const Eigen::Ref<const Profile>& x, double tol = 1e-12);

BoundaryCurve extract_boundary(const VISolution& sol);

struct BoundaryInequality {
  double x = 0.0;
  double lhs = 0.0;        ///< (d_t+L)V(x+) + (d_t+L)V(x-)
  double rhs = 0.0;        ///< gamma sigma^2 ((g'(x+) + g'(x-))/2)^2
  double rhs_kappa = 0.0;  ///< kappa sigma^2 (a^2+b^2) - (gamma/4) sigma^2 (a-b)^2
  double lv_left = 0.0;
  double lv_right = 0.0;
  double dg_left = 0.0;
  double dg_right = 0.0;
  double dv_left = 0.0;
  double dv_right = 0.0;
  bool pass = false;
  bool pass_kappa = false;
};

/// Evaluates the boundary inequality at x on slice n (n < n_t) from
/// quadratic fits through three nodes on each side of x.
BoundaryInequality boundary_inequality_at(const VISolution& sol, const ProblemSpec& spec,
                                          int n, double x, double tol = 1e-8);

/// One report per extracted crossing on slice n.
std::vector<BoundaryInequality> check_boundary_inequality(const VISolution& sol,
                                                          const ProblemSpec& spec, int n,
                                                          double tol = 1e-8);

struct ContinuationLadder {
  std::vector<double> lambdas;
  std::vector<HJBSolution> solutions;
  std::vector<double> gaps;  ///< sup |V^{lambda_i} - V^{lambda_{i+1}}| over the lattice
};

ContinuationLadder lambda_continuation(const ProblemSpec& spec, const Grid& grid,
                                       const std::vector<double>& lambdas,
                                       const HJBOptions& options = {});

/// Gap of every rung's V on slice n to the VI solution, over [x_lo, x_hi].
std::vector<WindowGap> ladder_gaps_to_vi(const ContinuationLadder& ladder, const VISolution& vi,
                                         int n, double x_lo, double x_hi);

struct GeneralResidual {
  GridField delta;             ///< G(k) - G(g) - G'(g)(k - g)
  GridField obstacle;          ///< V + delta - (f + G(k))
  GridField drift_correction;  ///< -1/2 G''(g) |sigma d_x g|^2
  GridField interior;          ///< (d_t + L)V + H_G on continuation nodes, 0 elsewhere
  double interior_sup = 0.0;
};

/// `continuation` may be null, in which case every interior node counts.
GeneralResidual general_g_residual(const GridField& V, const GridField& g,
                                   const GeneralObjective& obj, const ProblemSpec& spec,
                                   const MaskMatrix* stopped = nullptr);

}  // namespace mvstop
