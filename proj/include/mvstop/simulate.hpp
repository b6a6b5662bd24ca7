#pragma once

#include "mvstop/grid_field.hpp"
#include "mvstop/model.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace mvstop {

struct MCConfig {
  long n_paths = 10000;
  double dt_sim = 1e-3;
  std::uint64_t master_seed = 20240601;
  bool antithetic = false;
  int workers = 1;  ///< results do not depend on this
};

struct MCEstimate {
  double mean = 0.0;
  double se = 0.0;
  long n = 0;
  std::string kind;

  /// |mean - target| <= k * max(se, floor). The floor covers estimators
  /// with zero sample variance.
  bool within(double target, double k = 3.0, double floor = 1e-12) const;
};

/// Engine for (master_seed, path, stream); stream 0 drives the Brownian
/// increments, stream 1 the exponential clock.
std::mt19937_64 path_engine(std::uint64_t master_seed, std::uint64_t path, std::uint64_t stream);

/// Sum in a fixed pairwise order, so the result is independent of how the
/// terms were produced.
double pairwise_sum(const double* v, std::size_t n);
double pairwise_sum(const std::vector<double>& v);

/// Sample mean and standard error of per-path values.
MCEstimate summarize(const std::vector<double>& values, std::string kind);

/// Run body(i) for every path index, split over `workers` threads.
void for_each_path(long n_paths, int workers, const std::function<void(long)>& body);

/// Euler time grid from t0 to T: n = ceil((T - t0) / dt_sim) equal steps.
struct TimeLattice {
  double t0 = 0.0;
  double dt = 0.0;
  int steps = 0;
  double time(int k) const { return t0 + k * dt; }
};
TimeLattice make_lattice(double t0, double horizon, double dt_sim);

struct PathBatch {
  TimeLattice lattice;
  Eigen::MatrixXd X;  ///< n_paths x (steps + 1)
  std::uint64_t master_seed = 0;
};

/// Euler-Maruyama. Memory is n_paths * steps doubles; large runs use the
/// streaming estimators below instead.
PathBatch simulate_paths(const ProblemSpec& spec, double t0, double x0, const MCConfig& mc);

/// Either a constant rate or a field read by clamped bilinear interpolation.
/// Before `override_until` the rate is `override_rate` instead.
struct Intensity {
  const GridField* field = nullptr;
  double constant = 0.0;
  double override_until = -std::numeric_limits<double>::infinity();
  double override_rate = 0.0;
  double operator()(double t, double x) const {
    if (t < override_until) return override_rate;
    return field ? field->interpolate(t, x) : constant;
  }
  static Intensity of(const GridField& f) {
    Intensity p;
    p.field = &f;
    return p;
  }
  static Intensity rate(double v) {
    Intensity p;
    p.constant = v;
    return p;
  }
};

struct CoxPath {
  double tau = 0.0;
  bool by_intensity = false;
  double x_tau = 0.0;
  double hazard = 0.0;   ///< accumulated hazard up to tau
  double entropy = 0.0;  ///< integral of H(pi) over [t0, tau]
  // F_T-conditional counterparts, integrated over the whole path
  double cond_f = 0.0;
  double cond_f2 = 0.0;
  double cond_entropy = 0.0;
};

struct CoxStoppingSample {
  double t0 = 0.0;
  std::vector<CoxPath> paths;
};

/// Stopping on stored paths; the exponential clock of path i comes from
/// stream 1 of its engine.
CoxStoppingSample sample_cox_stopping(const PathBatch& paths, const ProblemSpec& spec,
                                      const Intensity& pi);

/// Same law without storing paths.
CoxStoppingSample simulate_cox_stopping(const ProblemSpec& spec, const Intensity& pi, double t0,
                                        double x0, const MCConfig& mc);

enum class EstimatorKind { raw, conditional };

struct ObjectiveEstimates {
  MCEstimate g;         ///< E f(X_tau)
  MCEstimate second;    ///< E f^2(X_tau)
  MCEstimate J;         ///< E f - (gamma/2) Var f
  MCEstimate J_lambda;  ///< J + lambda E int H(pi), with delta-method SE
};

ObjectiveEstimates estimate_objective(const CoxStoppingSample& sample, const ProblemSpec& spec,
                                      EstimatorKind kind);

struct HittingEstimates {
  MCEstimate mean;
  MCEstimate variance;
  MCEstimate J;
};

/// tau = first lattice time at which the nearest-node mask says stop, capped
/// at T. `mask` lives on (grid, horizon).
HittingEstimates estimate_hitting_objective(const ProblemSpec& spec, const MaskMatrix& mask,
                                            const Grid& grid, double t0, double x0,
                                            const MCConfig& mc);

struct LocalTimeOptions {
  /// Occupation band half-width delta = band_scale * eps^band_power.
  double band_scale = 1.0;
  double band_power = 2.0;
  /// Per-eps step: min(dt_sim, delta^2 * step_fraction).
  double step_fraction = 0.05;
  /// Also report the band eps / 10 on the same paths.
  bool report_tenth_band = true;
};

struct LocalTimeReport {
  double eps = 0.0;
  double delta = 0.0;
  double dt = 0.0;
  MCEstimate exit_time;   ///< E[tau_eps - t0]
  MCEstimate local_time;  ///< E[l^c]
  double ratio = 0.0;     ///< E[l]^2 / E[tau - t0]
  double sigma_sq = 0.0;  ///< sigma^2(t0, x0)
  double ratio_tenth_band = 0.0;
};

/// Occupation-time check of (E l)^2 / E(tau - t0) -> sigma^2 near the curve.
std::vector<LocalTimeReport> estimate_local_time_relation(
    const ProblemSpec& spec, const std::function<double(double)>& curve, double t0, double x0,
    const std::vector<double>& eps_list, const MCConfig& mc, const LocalTimeOptions& opt = {});

}  // namespace mvstop
