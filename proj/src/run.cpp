#include "mvstop/run.hpp"

#include "mvstop/config.hpp"
#include "mvstop/discrete_game.hpp"
#include "mvstop/export.hpp"
#include "mvstop/gbm_benchmark.hpp"
#include "mvstop/hjb_regularized.hpp"
#include "mvstop/simulate.hpp"
#include "mvstop/verify.hpp"
#include "mvstop/vi_limit.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace mvstop {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Outcome {
  ordered_json report = ordered_json::object();
  std::vector<std::string> files;
  bool certification_failed = false;
};

ordered_json estimate_json(const MCEstimate& e) {
  return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}, {"kind", e.kind}};
}

ordered_json gap_json(const WindowGap& w) {
  return {{"sup", w.sup},
          {"l2", w.l2},
          {"sup_relative", w.sup_relative},
          {"sup_normalized", w.sup_normalized}};
}

HJBOptions hjb_options(const RunConfig& cfg) {
  HJBOptions o;
  o.fp_tol = cfg.number("fp_tol", o.fp_tol);
  o.fp_max_iter = int(cfg.integer("fp_max_iter", o.fp_max_iter));
  o.damping = cfg.number("damping", o.damping);
  o.clip = cfg.number("clip", o.clip);
  o.inner_tol = cfg.number("inner_tol", o.inner_tol);
  return o;
}

ordered_json hjb_json(const HJBSolution& s, const HJBOptions& o) {
  return {{"lambda", s.lambda},
          {"converged", s.converged},
          {"iterations", s.iterations},
          {"fp_tol", o.fp_tol},
          {"gap_history", s.gap_history},
          {"final_damping", s.final_damping},
          {"exponent_clip_hits", s.clip_hits},
          {"inner_failures", s.inner_failures},
          {"residual",
           {{"v_equation", s.residual.v_equation},
            {"g_equation", s.residual.g_equation},
            {"pi_consistency", s.residual.pi_consistency},
            {"terminal_v", s.residual.terminal_v},
            {"terminal_g", s.residual.terminal_g},
            {"note", "independent midpoint stencil; expected O(dx^2 + dt)"}}}};
}

void check_valid(const RunConfig& cfg, bool needs_lambda, std::ostream& err) {
  ValidationOptions vo;
  vo.requires_lambda = needs_lambda;
  const auto rep = validate_problem(*cfg.problem, *cfg.grid, vo);
  for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
  if (!rep.ok()) {
    std::string msg = "invalid problem:";
    for (const auto& v : rep.violations) msg += "\n  " + v;
    throw ConfigError(msg);
  }
}

/// The closed form applies when the problem is the GBM benchmark shape.
std::optional<GBMClosedForm<double>> gbm_shape(const ProblemSpec& p) {
  if (p.drift.kind != CoefficientKind::gbm || p.diffusion.kind != CoefficientKind::gbm ||
      p.reward.kind != CoefficientKind::affine || p.reward.a != 0.0 || p.reward.b != 1.0)
    return std::nullopt;
  try {
    return GBMClosedForm<double>::create(p.drift.a, p.diffusion.a * p.diffusion.a, p.gamma);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

Outcome cmd_solve_hjb(const RunConfig& cfg, const fs::path& dir, std::ostream& err) {
  check_valid(cfg, true, err);
  Outcome o;
  const auto opt = hjb_options(cfg);
  const auto sol = solve_extended_hjb(*cfg.problem, *cfg.grid, opt);
  if (!sol.converged) err << "warning: fixed point did not converge; best iterate returned\n";
  o.report = hjb_json(sol, opt);
  const auto cert = analytic_perturbation_regularized(sol, *cfg.problem);
  o.report["certification"] = {{"checked", cert.checked},
                               {"failed", cert.failed},
                               {"max_gain", cert.max_gain},
                               {"tol", 1e-8}};
  if (cfg.output.csv) o.files = export_hjb(sol, dir, cfg.output.stride);
  return o;
}

Outcome cmd_solve_vi(const RunConfig& cfg, const fs::path& dir, std::ostream& err) {
  check_valid(cfg, false, err);
  Outcome o;
  VIOptions vo;
  vo.inner_max_iter = int(cfg.integer("inner_max_iter", vo.inner_max_iter));
  const auto& spec = *cfg.problem;
  const auto sol = solve_vi(spec, *cfg.grid, vo);
  if (!sol.mask_converged())
    err << "warning: mask iteration hit its cap on " << sol.unconverged_steps << " steps\n";
  o.report = {{"kappa", sol.kappa},
              {"mask_converged", sol.mask_converged()},
              {"unconverged_steps", sol.unconverged_steps},
              {"max_inner_iterations", sol.max_inner_iterations},
              {"boundary_t0", sol.boundary.front()},
              {"obstacle_min", [&] {
                 double m = 0;
                 for (int n = 0; n < sol.V.n_slices(); ++n)
                   m = std::min(m, obstacle_residual(sol, n).minCoeff());
                 return m;
               }()},
              {"obstacle_tol", 1e-8}};
  if (!sol.boundary.front().empty()) {
    ordered_json pts = ordered_json::array();
    for (const auto& b : check_boundary_inequality(sol, spec, 0))
      pts.push_back({{"x", b.x}, {"lhs", b.lhs}, {"rhs", b.rhs}, {"rhs_kappa", b.rhs_kappa},
                     {"pass", b.pass}, {"tol", 1e-8}});
    o.report["boundary_inequality_t0"] = pts;
  }
  if (auto cf = gbm_shape(spec); cf && cfg.flag("closed_form", true)) {
    Profile Vc, gc;
    closed_form_profiles(*cf, *cfg.grid, Vc, gc);
    const double lo = cfg.number("x_lo", 0.1), hi = cfg.number("x_hi", 1.5);
    o.report["closed_form"] = {{"threshold", cf->threshold},
                               {"window", {lo, hi}},
                               {"V_gap", gap_json(window_gap(sol.V.slice(0), Vc, *cfg.grid, lo, hi))},
                               {"g_gap", gap_json(window_gap(sol.g.slice(0), gc, *cfg.grid, lo, hi))}};
  }
  if (cfg.output.csv) o.files = export_vi(sol, dir, cfg.output.stride);
  return o;
}

Outcome cmd_ladder(const RunConfig& cfg, const fs::path& dir, std::ostream& err) {
  check_valid(cfg, false, err);
  Outcome o;
  const auto opt = hjb_options(cfg);
  const auto lambdas = cfg.list("lambdas", {0.4, 0.2, 0.1, 0.05, 0.025});
  const auto ladder = lambda_continuation(*cfg.problem, *cfg.grid, lambdas, opt);
  ordered_json rungs = ordered_json::array();
  for (std::size_t i = 0; i < ladder.solutions.size(); ++i) {
    rungs.push_back(hjb_json(ladder.solutions[i], opt));
    if (cfg.output.csv) {
      const std::string name = "V_rung" + std::to_string(i) + ".csv";
      write_field_csv(dir / name, ladder.solutions[i].V, cfg.output.stride);
      o.files.push_back(name);
    }
  }
  o.report = {{"lambdas", lambdas}, {"gaps", ladder.gaps}, {"rungs", rungs}};
  if (cfg.flag("compare_vi", true)) {
    const auto vi = solve_vi(*cfg.problem, *cfg.grid);
    const double lo = cfg.number("x_lo", 0.1), hi = cfg.number("x_hi", 1.5);
    ordered_json g = ordered_json::array();
    for (const auto& w : ladder_gaps_to_vi(ladder, vi, 0, lo, hi)) g.push_back(gap_json(w));
    o.report["gaps_to_vi_t0"] = g;
    o.report["window"] = {lo, hi};
  }
  return o;
}

Outcome cmd_discrete(const RunConfig& cfg, const fs::path& dir, std::ostream& err) {
  check_valid(cfg, false, err);
  Outcome o;
  std::vector<double> steps = cfg.list("steps", {double(cfg.grid->n_t)});
  const bool compare = cfg.flag("compare_vi", false);
  std::optional<VISolution> vi;
  if (compare) vi = solve_vi(*cfg.problem, *cfg.grid);
  const double lo = cfg.number("x_lo", 0.1), hi = cfg.number("x_hi", 1.5);
  ordered_json runs = ordered_json::array();
  for (double s : steps) {
    const auto d = backward_recursion(*cfg.problem, *cfg.grid, int(s));
    ordered_json r = {{"steps", int(s)},
                      {"tower_identity_error", d.tower_identity_error},
                      {"tower_tol", 1e-8},
                      {"min_variance", d.min_variance},
                      {"variance_tol", -1e-12}};
    if (vi) {
      const auto c = compare_to_vi(d, *vi, 0.0, lo, hi);
      r["V_gap"] = gap_json(c.V);
      r["g_gap"] = gap_json(c.g);
      r["stop_symmetric_difference"] = c.stop_symmetric_difference;
    }
    runs.push_back(r);
    if (cfg.output.csv && s == steps.back()) {
      write_field_csv(dir / "V.csv", d.V, cfg.output.stride);
      write_field_csv(dir / "g.csv", d.g, cfg.output.stride);
      write_field_csv(dir / "m.csv", d.m, cfg.output.stride);
      write_mask_csv(dir / "stop_mask.csv", d.stop_mask, d.V.grid(), d.V.horizon(),
                     cfg.output.stride);
      o.files = {"V.csv", "g.csv", "m.csv", "stop_mask.csv"};
    }
  }
  o.report = {{"runs", runs}, {"window", {lo, hi}}};
  return o;
}

Outcome cmd_simulate(const RunConfig& cfg, const fs::path&, std::ostream& err) {
  const std::string source = cfg.text("intensity", "hjb");
  const bool from_hjb = source == "hjb";
  check_valid(cfg, from_hjb, err);
  Outcome o;
  const auto& spec = *cfg.problem;
  const double t0 = cfg.number("t0", 0.0);
  const double x0 = cfg.number("x0");
  std::optional<HJBSolution> sol;
  Intensity pi;
  if (from_hjb) {
    HJBOptions opt;
    opt.fp_tol = cfg.number("fp_tol", opt.fp_tol);
    opt.fp_max_iter = int(cfg.integer("fp_max_iter", opt.fp_max_iter));
    sol = solve_extended_hjb(spec, *cfg.grid, opt);
    pi = Intensity::of(sol->pi);
  } else {
    std::istringstream in(source);
    std::string word;
    double v = -1;
    if (!(in >> word >> v) || word != "constant" || v < 0)
      throw ConfigError("config: [simulate] intensity: expected 'hjb' or 'constant v'");
    pi = Intensity::rate(v);
  }
  const auto sample = simulate_cox_stopping(spec, pi, t0, x0, cfg.mc);
  const auto raw = estimate_objective(sample, spec, EstimatorKind::raw);
  const auto cond = estimate_objective(sample, spec, EstimatorKind::conditional);
  auto block = [](const ObjectiveEstimates& e) {
    return ordered_json{{"g", estimate_json(e.g)},
                        {"second_moment", estimate_json(e.second)},
                        {"J", estimate_json(e.J)},
                        {"J_lambda", estimate_json(e.J_lambda)}};
  };
  o.report = {{"t0", t0}, {"x0", x0}, {"seed", cfg.mc.master_seed}, {"n_paths", cfg.mc.n_paths},
              {"dt_sim", cfg.mc.dt_sim}, {"raw", block(raw)}, {"conditional", block(cond)}};
  if (sol) {
    const double g_pde = sol->g.interpolate(t0, x0);
    const double v_pde = sol->V.interpolate(t0, x0);
    o.report["pde"] = {{"g", g_pde},
                       {"V", v_pde},
                       {"g_within_3se", raw.g.within(g_pde)},
                       {"V_within_3se", raw.J_lambda.within(v_pde)}};
  }
  return o;
}

Outcome cmd_verify(const RunConfig& cfg, const fs::path&, std::ostream& err) {
  const std::string target = cfg.text("target", "hjb");
  const double tol = cfg.number("tol", 1e-8);
  const std::size_t listed = std::size_t(cfg.integer("list", 20));
  const auto& spec = *cfg.problem;
  Outcome o;
  if (target == "hjb") {
    check_valid(cfg, true, err);
    HJBSolution sol;
    if (cfg.has("solution")) {
      fs::path p = cfg.text("solution", "");
      if (p.is_relative()) p = cfg.base_dir / p;
      sol = import_hjb(p, spec, *cfg.grid);
    } else {
      HJBOptions opt;
      opt.fp_tol = cfg.number("fp_tol", opt.fp_tol);
      opt.fp_max_iter = int(cfg.integer("fp_max_iter", opt.fp_max_iter));
      sol = solve_extended_hjb(spec, *cfg.grid, opt);
    }
    const auto cert = analytic_perturbation_regularized(
        sol, spec, cfg.list("probes", default_regularized_probes()), tol, listed);
    ordered_json fails = ordered_json::array();
    for (const auto& f : cert.failures)
      fails.push_back({{"t", f.t}, {"x", f.x}, {"v", f.v}, {"gain", f.gain}});
    o.report = {{"target", "hjb"},     {"checked", cert.checked}, {"failed", cert.failed},
                {"max_gain", cert.max_gain}, {"tol", tol},           {"failures", fails}};
    o.certification_failed = !cert.pass();
    for (const auto& f : cert.failures)
      err << "failing node t=" << f.t << " x=" << f.x << " v=" << f.v << " gain=" << f.gain << "\n";
  } else if (target == "vi") {
    check_valid(cfg, false, err);
    VISolution sol;
    if (cfg.has("solution")) {
      fs::path p = cfg.text("solution", "");
      if (p.is_relative()) p = cfg.base_dir / p;
      sol = import_vi(p, spec, *cfg.grid);
    } else {
      sol = solve_vi(spec, *cfg.grid);
    }
    long checked = 0, failed = 0, skipped = 0;
    double max_gain = -1e300;
    ordered_json fails = ordered_json::array();
    const auto probes = cfg.list("probes", default_vi_probes());
    for (int i = 1; i + 1 < cfg.grid->n_x; ++i) {
      std::vector<PerturbationResult> res;
      try {
        res = vi_interior_perturbation(sol, spec, {{0, i}}, probes, tol);
      } catch (const std::domain_error&) {
        ++skipped;
        continue;
      }
      for (const auto& r : res) {
        ++checked;
        max_gain = std::max(max_gain, r.gain);
        if (!r.pass) {
          ++failed;
          if (fails.size() < listed) fails.push_back({{"t", r.t}, {"x", r.x}, {"v", r.v}, {"gain", r.gain}});
        }
      }
    }
    const auto bc = vi_boundary_perturbation(sol, spec, 0, tol);
    ordered_json pts = ordered_json::array();
    for (const auto& b : bc.points)
      pts.push_back({{"x", b.x}, {"lhs", b.lhs}, {"rhs", b.rhs}, {"pass", b.pass}});
    o.report = {{"target", "vi"},          {"slice_t", 0.0},   {"checked", checked},
                {"failed", failed},        {"skipped_near_boundary", skipped},
                {"max_gain", max_gain},    {"tol", tol},       {"failures", fails},
                {"boundary", pts},         {"boundary_pass", bc.pass}};
    o.certification_failed = failed > 0 || !bc.pass;
  } else {
    throw ConfigError("config: [verify] target: expected hjb or vi");
  }
  return o;
}

Outcome cmd_benchmark(const RunConfig& cfg, const fs::path& dir, std::ostream&) {
  Outcome o;
  const auto cf = GBMClosedForm<double>::create(cfg.number("mu", 0.05), cfg.number("sigma_sq", 0.5),
                                                cfg.number("gamma", 1.0));
  const auto pts = cfg.list("points", {0.25, cf.threshold, 1.0});
  ordered_json values = ordered_json::array();
  for (double x : pts) {
    const auto v = closed_form_eval(cf, x);
    values.push_back({{"x", x}, {"V", v.V}, {"g", v.g}});
  }
  const Grid grid = build_grid(cfg.number("x_min", 0.01), cfg.number("x_max", 3.0),
                               int(cfg.integer("n_x", 299)), 1);
  const auto ell = verify_elliptic_system(cf, grid);
  const auto j = boundary_jump_quantities(cf);
  o.report = {
      {"mu", cf.mu},
      {"sigma_sq", cf.sigma_sq},
      {"gamma", cf.gamma},
      {"rho", cf.rho},
      {"threshold", cf.threshold},
      {"values", values},
      {"elliptic",
       {{"continuation_v_residual", ell.continuation_v_residual},
        {"continuation_g_residual", ell.continuation_g_residual},
        {"stopped_max", ell.stopped_max},
        {"min_obstacle_margin", ell.min_obstacle_margin},
        {"kappa_bound_holds", ell.kappa_bound_holds},
        {"tol", 1e-10},
        {"pass", ell.pass}}},
      {"boundary_jump",
       {{"LV_left", j.lv_left},
        {"LV_right", j.lv_right},
        {"dg_left", j.dg_left},
        {"dg_right", j.dg_right},
        {"lhs", j.lhs},
        {"rhs", j.rhs},
        {"margin", j.margin},
        {"smooth_fit_gap", j.smooth_fit_gap},
        {"smooth_fit_tol", 1e-12},
        {"printed_lhs_simplification", j.printed_lhs},
        {"printed_lhs_matches", std::abs(j.printed_lhs - j.lhs) <= 1e-12}}}};
  if (cfg.output.csv) {
    GridField V(grid, 1.0), g(grid, 1.0);
    Profile Vc, gc;
    closed_form_profiles(cf, grid, Vc, gc);
    V.values().rowwise() = Vc.transpose();
    g.values().rowwise() = gc.transpose();
    write_field_csv(dir / "V.csv", V);
    write_field_csv(dir / "g.csv", g);
    o.files = {"V.csv", "g.csv"};
  }
  return o;
}

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setw(2) << j << "\n";
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

int run(const fs::path& config_path, const RunOverrides& overrides, std::ostream& out,
        std::ostream& err) {
  try {
    RunConfig cfg = load_config(config_path);
    if (overrides.seed) cfg.mc.master_seed = *overrides.seed;
    fs::path dir = overrides.output_dir ? *overrides.output_dir : cfg.output.directory;
    if (dir.is_relative() && !overrides.output_dir) dir = cfg.base_dir / dir;
    fs::create_directories(dir);

    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    if (cfg.command == "solve-hjb") o = cmd_solve_hjb(cfg, dir, err);
    else if (cfg.command == "ladder") o = cmd_ladder(cfg, dir, err);
    else if (cfg.command == "solve-vi") o = cmd_solve_vi(cfg, dir, err);
    else if (cfg.command == "discrete") o = cmd_discrete(cfg, dir, err);
    else if (cfg.command == "simulate") o = cmd_simulate(cfg, dir, err);
    else if (cfg.command == "verify") o = cmd_verify(cfg, dir, err);
    else o = cmd_benchmark(cfg, dir, err);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (cfg.output.json) {
      write_json(dir / "report.json", o.report);
      o.files.push_back("report.json");
    }
    ordered_json sections = ordered_json::object();
    for (const auto& [name, keys] : cfg.sections) sections[name] = keys;
    ordered_json manifest = {{"tool", "mvstop"},
                             {"version", kVersion},
                             {"command", cfg.command},
                             {"config", config_path.string()},
                             {"resolved", sections},
                             {"seed", cfg.mc.master_seed},
                             {"files", o.files},
                             {"timing_seconds", seconds},
                             {"created_utc", utc_now()}};
    write_json(dir / "manifest.json", manifest);
    out << cfg.command << ": wrote " << o.files.size() + 1 << " files to " << dir.string() << "\n";
    if (o.certification_failed) {
      err << "certification failed\n";
      return exit_certification_failure;
    }
    return exit_success;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_error;
  }
}

}  // namespace mvstop
