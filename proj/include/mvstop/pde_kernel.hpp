#pragma once

#include "mvstop/grid_field.hpp"
#include "mvstop/model.hpp"
#include "mvstop/tridiagonal.hpp"

namespace mvstop {

using NodeMask = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Discrete generator at one time: (L u)_i = lower_i u_{i-1} + diag_i u_i
/// + upper_i u_{i+1} + edge_i, where edge_i is the ghost contribution under
/// value clamping (zero otherwise).
struct GeneratorStencil {
  Profile lower;
  Profile diag;
  Profile upper;
  Profile edge;
  double dx = 0.0;
};

GeneratorStencil assemble_generator(const ProblemSpec& spec, const Grid& grid, double t);

Profile apply_generator(const GeneratorStencil& L, const Eigen::Ref<const Profile>& u);
Profile apply_generator(const ProblemSpec& spec, const Grid& grid,
                        const Eigen::Ref<const Profile>& u, double t);

/// Optional Dirichlet rows: where pinned[i], the step returns values[i].
struct PinnedRows {
  const NodeMask* pinned = nullptr;
  const Profile* values = nullptr;
};

/// One backward-Euler step of (d_t + L) phi + c phi = s:
///   (I - dt L - dt c) phi_n = phi_{n+1} - dt s.
/// At an edge where the drift points out of the domain the one-sided drift
/// term is dropped from the implicit row. Throws SolverError (quoting dt)
/// when a row is not strictly diagonally dominant or the elimination meets
/// a vanishing pivot.
Profile step_backward(const GeneratorStencil& L, const Eigen::Ref<const Profile>& next,
                      const Eigen::Ref<const Profile>& c, const Eigen::Ref<const Profile>& s,
                      double dt, const PinnedRows& pins = {});
Profile step_backward(const ProblemSpec& spec, const Grid& grid,
                      const Eigen::Ref<const Profile>& next, double t,
                      const Eigen::Ref<const Profile>& c, const Eigen::Ref<const Profile>& s,
                      double dt);

/// Full backward sweep from the terminal profile; L is taken at the earlier
/// time of each step.
GridField solve_linear_pde(const ProblemSpec& spec, const Grid& grid,
                           const Eigen::Ref<const Profile>& terminal, const GridField& c,
                           const GridField& s);

/// Sup-norm bounds for (d_t + L) phi + c phi = s, phi(T) = f with c <= 0:
///   -|f^-| - T |s^+|  <=  phi  <=  |f^+| + T |s^-|.
struct LinearBoundReport {
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double field_min = 0.0;
  double field_max = 0.0;
  double gradient_sup = 0.0;  ///< reported only; the constant is not explicit
  bool c_nonpositive = true;
  bool pass = false;
};

LinearBoundReport check_linear_bounds(const GridField& phi,
                                      const Eigen::Ref<const Profile>& terminal,
                                      const GridField& c, const GridField& s, double tol = 1e-6);

}  // namespace mvstop
