#include "mvstop/simulate.hpp"

#include "mvstop/hjb_regularized.hpp"

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <thread>

namespace mvstop {

bool MCEstimate::within(double target, double k, double floor) const {
  return std::abs(mean - target) <= k * std::max(se, floor);
}

std::mt19937_64 path_engine(std::uint64_t master_seed, std::uint64_t path, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(master_seed), std::uint32_t(master_seed >> 32),
                    std::uint32_t(path), std::uint32_t(path >> 32), std::uint32_t(stream)};
  return std::mt19937_64(seq);
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

MCEstimate summarize(const std::vector<double>& values, std::string kind) {
  MCEstimate e;
  e.kind = std::move(kind);
  e.n = long(values.size());
  if (values.empty()) return e;
  e.mean = pairwise_sum(values) / double(e.n);
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = (values[i] - e.mean) * (values[i] - e.mean);
  const double var = e.n > 1 ? pairwise_sum(dev) / double(e.n - 1) : 0.0;
  e.se = std::sqrt(var / double(e.n));
  return e;
}

void for_each_path(long n_paths, int workers, const std::function<void(long)>& body) {
  workers = std::max(1, std::min<int>(workers, int(std::max(1L, n_paths))));
  if (workers == 1) {
    for (long i = 0; i < n_paths; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const long chunk = (n_paths + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long lo = w * chunk;
    const long hi = std::min(n_paths, lo + chunk);
    pool.emplace_back([lo, hi, &body] {
      for (long i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

TimeLattice make_lattice(double t0, double horizon, double dt_sim) {
  if (!(dt_sim > 0)) throw std::invalid_argument("simulation step must be positive");
  if (!(t0 < horizon)) throw std::invalid_argument("simulation needs t0 < T");
  TimeLattice lat;
  lat.t0 = t0;
  lat.steps = std::max(1, int(std::ceil((horizon - t0) / dt_sim - 1e-9)));
  lat.dt = (horizon - t0) / lat.steps;
  return lat;
}

namespace {

/// Brownian source for one path, optionally the mirror of its antithetic
/// partner.
class Increments {
 public:
  Increments(const MCConfig& mc, long path, std::uint64_t stream = 0)
      : engine_(path_engine(mc.master_seed, std::uint64_t(mc.antithetic ? path / 2 : path), stream)),
        sign_(mc.antithetic && (path % 2) ? -1.0 : 1.0) {}
  double operator()() { return sign_ * normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
  double sign_;
};

double draw_clock(const MCConfig& mc, long path) {
  auto eng = path_engine(mc.master_seed, std::uint64_t(path), 1);
  boost::random::exponential_distribution<double> e(1.0);
  return e(eng);
}

void check_mc(const MCConfig& mc) {
  if (mc.n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  if (!(mc.dt_sim > 0)) throw std::invalid_argument("dt_sim must be positive");
}

/// Hazard bookkeeping along one path, fed step by step.
class CoxAccumulator {
 public:
  CoxAccumulator(const ProblemSpec& spec, const Intensity& pi, double theta)
      : spec_(spec), pi_(pi), theta_(theta) {}

  void start(double t, double x) {
    t_ = t;
    x_ = x;
    p_ = rate(t, x);
    f_ = spec_.f(x);
    out_ = CoxPath{};
  }

  void advance(double t, double x) {
    const double dt = t - t_;
    const double p = rate(t, x);
    const double f = spec_.f(x);
    const double d_hazard = 0.5 * dt * (p_ + p);
    const double s0 = std::exp(-lambda_total_);
    const double s1 = std::exp(-(lambda_total_ + d_hazard));
    out_.cond_f += (s0 - s1) * 0.5 * (f_ + f);
    out_.cond_f2 += (s0 - s1) * 0.5 * (f_ * f_ + f * f);
    out_.cond_entropy += 0.5 * dt * (entropy(p_) * s0 + entropy(p) * s1);
    if (!stopped_) {
      if (lambda_total_ + d_hazard >= theta_ && d_hazard > 0) {
        const double w = (theta_ - lambda_total_) / d_hazard;
        const double pw = p_ + w * (p - p_);
        stopped_ = true;
        out_.by_intensity = true;
        out_.tau = t_ + w * dt;
        out_.x_tau = x_ + w * (x - x_);
        out_.hazard = theta_;
        out_.entropy += 0.5 * w * dt * (entropy(p_) + entropy(pw));
      } else {
        out_.entropy += 0.5 * dt * (entropy(p_) + entropy(p));
      }
    }
    lambda_total_ += d_hazard;
    t_ = t;
    x_ = x;
    p_ = p;
    f_ = f;
  }

  CoxPath finish() {
    const double s = std::exp(-lambda_total_);
    out_.cond_f += f_ * s;
    out_.cond_f2 += f_ * f_ * s;
    if (!stopped_) {
      out_.tau = t_;
      out_.x_tau = x_;
      out_.hazard = lambda_total_;
    }
    return out_;
  }

 private:
  double rate(double t, double x) const {
    const double p = pi_(t, x);
    if (!(p >= 0)) throw std::domain_error("negative or undefined intensity along a path");
    return p;
  }

  const ProblemSpec& spec_;
  const Intensity& pi_;
  double theta_;
  double t_ = 0, x_ = 0, p_ = 0, f_ = 0;
  double lambda_total_ = 0;
  bool stopped_ = false;
  CoxPath out_;
};

inline double euler_step(const ProblemSpec& spec, double t, double x, double dt, double sqrt_dt,
                         double z) {
  return x + spec.b(t, x) * dt + spec.sigma(t, x) * sqrt_dt * z;
}

}  // namespace

PathBatch simulate_paths(const ProblemSpec& spec, double t0, double x0, const MCConfig& mc) {
  check_mc(mc);
  PathBatch batch;
  batch.lattice = make_lattice(t0, spec.horizon, mc.dt_sim);
  batch.master_seed = mc.master_seed;
  const auto& lat = batch.lattice;
  batch.X.resize(mc.n_paths, lat.steps + 1);
  const double sqrt_dt = std::sqrt(lat.dt);
  for_each_path(mc.n_paths, mc.workers, [&](long i) {
    Increments z(mc, i);
    double x = x0;
    batch.X(i, 0) = x;
    for (int k = 0; k < lat.steps; ++k) {
      x = euler_step(spec, lat.time(k), x, lat.dt, sqrt_dt, z());
      batch.X(i, k + 1) = x;
    }
  });
  return batch;
}

CoxStoppingSample sample_cox_stopping(const PathBatch& batch, const ProblemSpec& spec,
                                      const Intensity& pi) {
  CoxStoppingSample out;
  const auto& lat = batch.lattice;
  out.t0 = lat.t0;
  const long n = long(batch.X.rows());
  out.paths.resize(n);
  MCConfig mc;
  mc.master_seed = batch.master_seed;
  for (long i = 0; i < n; ++i) {
    CoxAccumulator acc(spec, pi, draw_clock(mc, i));
    acc.start(lat.time(0), batch.X(i, 0));
    for (int k = 1; k <= lat.steps; ++k) acc.advance(lat.time(k), batch.X(i, k));
    out.paths[i] = acc.finish();
  }
  return out;
}

CoxStoppingSample simulate_cox_stopping(const ProblemSpec& spec, const Intensity& pi, double t0,
                                        double x0, const MCConfig& mc) {
  check_mc(mc);
  const auto lat = make_lattice(t0, spec.horizon, mc.dt_sim);
  const double sqrt_dt = std::sqrt(lat.dt);
  CoxStoppingSample out;
  out.t0 = t0;
  out.paths.resize(mc.n_paths);
  for_each_path(mc.n_paths, mc.workers, [&](long i) {
    const double theta = draw_clock(mc, i);
    Increments z(mc, i);
    CoxAccumulator acc(spec, pi, theta);
    double x = x0;
    acc.start(t0, x);
    for (int k = 0; k < lat.steps; ++k) {
      x = euler_step(spec, lat.time(k), x, lat.dt, sqrt_dt, z());
      acc.advance(lat.time(k + 1), x);
    }
    out.paths[i] = acc.finish();
  });
  return out;
}

ObjectiveEstimates estimate_objective(const CoxStoppingSample& sample, const ProblemSpec& spec,
                                      EstimatorKind kind) {
  const std::size_t n = sample.paths.size();
  if (n == 0) throw std::invalid_argument("estimate_objective: empty sample");
  const std::string tag = kind == EstimatorKind::raw ? "raw" : "conditional";
  std::vector<double> f1(n), f2(n), ent(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = sample.paths[i];
    if (kind == EstimatorKind::raw) {
      const double f = spec.f(p.x_tau);
      f1[i] = f;
      f2[i] = f * f;
      ent[i] = p.entropy;
    } else {
      f1[i] = p.cond_f;
      f2[i] = p.cond_f2;
      ent[i] = p.cond_entropy;
    }
  }
  ObjectiveEstimates est;
  est.g = summarize(f1, tag);
  est.second = summarize(f2, tag);
  const MCEstimate h = summarize(ent, tag);
  const double gamma = spec.gamma;
  const double gbar = est.g.mean;
  std::vector<double> infl(n), infl_lambda(n);
  for (std::size_t i = 0; i < n; ++i) {
    infl[i] = (1 + gamma * gbar) * f1[i] - 0.5 * gamma * f2[i];
    infl_lambda[i] = infl[i] + spec.lambda * ent[i];
  }
  const double J = gbar - 0.5 * gamma * (est.second.mean - gbar * gbar);
  est.J = summarize(infl, tag);
  est.J.mean = J;
  est.J_lambda = summarize(infl_lambda, tag);
  est.J_lambda.mean = J + spec.lambda * h.mean;
  return est;
}

HittingEstimates estimate_hitting_objective(const ProblemSpec& spec, const MaskMatrix& mask,
                                            const Grid& grid, double t0, double x0,
                                            const MCConfig& mc) {
  check_mc(mc);
  if (mask.rows() != grid.n_t + 1 || mask.cols() != grid.n_x)
    throw std::invalid_argument("estimate_hitting_objective: mask does not match its grid");
  const auto lat = make_lattice(t0, spec.horizon, mc.dt_sim);
  const double sqrt_dt = std::sqrt(lat.dt);
  const double grid_dt = grid.dt(spec.horizon);
  const double dx = grid.dx();
  auto stopped = [&](double t, double x) {
    const int n = std::clamp(int(std::lround(t / grid_dt)), 0, grid.n_t);
    const int i = std::clamp(int(std::lround((x - grid.node(0)) / dx)), 0, grid.n_x - 1);
    return mask(n, i);
  };
  std::vector<double> f1(mc.n_paths);
  for_each_path(mc.n_paths, mc.workers, [&](long p) {
    Increments z(mc, p);
    double x = x0;
    bool stop = stopped(t0, x);
    for (int k = 0; k < lat.steps && !stop; ++k) {
      x = euler_step(spec, lat.time(k), x, lat.dt, sqrt_dt, z());
      stop = stopped(lat.time(k + 1), x);
    }
    f1[p] = spec.f(x);
  });
  const std::size_t n = f1.size();
  HittingEstimates est;
  est.mean = summarize(f1, "hitting");
  const double gbar = est.mean.mean;
  std::vector<double> f2(n), dev(n), infl(n);
  for (std::size_t i = 0; i < n; ++i) {
    f2[i] = f1[i] * f1[i];
    dev[i] = (f1[i] - gbar) * (f1[i] - gbar);
    infl[i] = (1 + spec.gamma * gbar) * f1[i] - 0.5 * spec.gamma * f2[i];
  }
  const MCEstimate second = summarize(f2, "hitting");
  est.variance = summarize(dev, "hitting");
  est.variance.mean = second.mean - gbar * gbar;
  est.J = summarize(infl, "hitting");
  est.J.mean = gbar - 0.5 * spec.gamma * est.variance.mean;
  return est;
}

std::vector<LocalTimeReport> estimate_local_time_relation(
    const ProblemSpec& spec, const std::function<double(double)>& curve, double t0, double x0,
    const std::vector<double>& eps_list, const MCConfig& mc, const LocalTimeOptions& opt) {
  check_mc(mc);
  if (std::abs(curve(t0) - x0) > 1e-12)
    throw std::invalid_argument("local time relation: x0 must lie on the curve at t0");
  std::vector<LocalTimeReport> out;
  for (std::size_t e = 0; e < eps_list.size(); ++e) {
    const double eps = eps_list[e];
    if (!(eps > 0)) throw std::invalid_argument("local time relation: eps must be positive");
    if (!(t0 < spec.horizon)) throw std::invalid_argument("local time relation: needs t0 < T");
    LocalTimeReport r;
    r.eps = eps;
    r.delta = opt.band_scale * std::pow(eps, opt.band_power);
    const double delta_tenth = eps / 10;
    const double t_cap = std::min(t0 + eps, spec.horizon);
    const auto lat = make_lattice(t0, t_cap, std::min(mc.dt_sim, r.delta * r.delta * opt.step_fraction));
    r.dt = lat.dt;
    const double sqrt_dt = std::sqrt(lat.dt);
    std::vector<double> exit(mc.n_paths), occ(mc.n_paths), occ_tenth(mc.n_paths);
    for_each_path(mc.n_paths, mc.workers, [&](long p) {
      Increments z(mc, p, 2 + e);
      double x = x0;
      double o = 0.0, o10 = 0.0;
      int k = 0;
      for (; k < lat.steps && std::abs(x - x0) < eps; ++k) {
        const double t = lat.time(k);
        const double s = spec.sigma(t, x);
        const double dist = std::abs(x - curve(t));
        if (dist <= r.delta) o += s * s * lat.dt;
        if (dist <= delta_tenth) o10 += s * s * lat.dt;
        x = euler_step(spec, t, x, lat.dt, sqrt_dt, z());
      }
      exit[p] = lat.time(k) - t0;
      occ[p] = o / (2 * r.delta);
      occ_tenth[p] = o10 / (2 * delta_tenth);
    });
    r.exit_time = summarize(exit, "exit-time");
    r.local_time = summarize(occ, "occupation");
    const double sq = spec.sigma(t0, x0);
    r.sigma_sq = sq * sq;
    r.ratio = r.local_time.mean * r.local_time.mean / r.exit_time.mean;
    if (opt.report_tenth_band) {
      const double lt = pairwise_sum(occ_tenth) / double(mc.n_paths);
      r.ratio_tenth_band = lt * lt / r.exit_time.mean;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace mvstop
