#include "mvstop/config.hpp"

#include "mvstop/export.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace mvstop {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"solve-hjb", "ladder",   "solve-vi",     "discrete",
                                              "simulate",  "verify",   "benchmark-gbm"};
  return names;
}

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"problem",
       {"drift", "diffusion", "reward", "gamma", "lambda", "horizon", "dimension",
        "variance_factor"}},
      {"grid", {"x_min", "x_max", "n_x", "n_t", "boundary"}},
      {"output", {"directory", "formats", "stride"}},
      {"mc", {"n_paths", "dt_sim", "seed", "antithetic", "workers"}},
      {"solve-hjb", {"fp_tol", "fp_max_iter", "damping", "clip", "inner_tol"}},
      {"ladder",
       {"lambdas", "fp_tol", "fp_max_iter", "damping", "clip", "compare_vi", "x_lo", "x_hi"}},
      {"solve-vi", {"inner_max_iter", "closed_form", "x_lo", "x_hi"}},
      {"discrete", {"steps", "compare_vi", "x_lo", "x_hi"}},
      {"simulate", {"t0", "x0", "intensity", "fp_tol", "fp_max_iter"}},
      {"verify", {"target", "solution", "tol", "probes", "fp_tol", "fp_max_iter", "list"}},
      {"benchmark-gbm", {"mu", "sigma_sq", "gamma", "points", "x_min", "x_max", "n_x"}},
  };
  return keys;
}

/// Line of `key` inside `[section]` in the source text, or 0.
int line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      current = line.substr(first + 1, close - first - 1);
      continue;
    }
    if (current == section && line.compare(first, key.size(), key) == 0) {
      const auto rest = line.find_first_not_of(" \t", first + key.size());
      if (rest != std::string::npos && line[rest] == '=') return no;
    }
  }
  return 0;
}

[[noreturn]] void fail(const std::string& text, const std::string& section, const std::string& key,
                       const std::string& what) {
  std::ostringstream msg;
  msg << "config";
  if (int l = line_of(text, section, key)) msg << " line " << l;
  msg << ": [" << section << "] " << key << ": " << what;
  throw ConfigError(msg.str());
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

bool to_double(const std::string& s, double& v) {
  const char* b = s.data();
  const char* e = b + s.size();
  if (b != e && *b == '+') ++b;
  const auto r = std::from_chars(b, e, v);
  return r.ec == std::errc() && r.ptr == e;
}

struct Reader {
  const std::string& src;
  const std::map<std::string, Section>& sections;

  const std::string* find(const std::string& sec, const std::string& key) const {
    auto s = sections.find(sec);
    if (s == sections.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }
  double number(const std::string& sec, const std::string& key) const {
    const auto* v = find(sec, key);
    if (!v) fail(src, sec, key, "missing required key");
    double d;
    if (!to_double(*v, d)) fail(src, sec, key, "expected a number, got '" + *v + "'");
    return d;
  }
  double number(const std::string& sec, const std::string& key, double fallback) const {
    return find(sec, key) ? number(sec, key) : fallback;
  }
  long integer(const std::string& sec, const std::string& key, long fallback) const {
    if (!find(sec, key)) return fallback;
    const double d = number(sec, key);
    if (d != std::floor(d)) fail(src, sec, key, "expected an integer");
    return long(d);
  }
};

}  // namespace

CoefficientSpec parse_coefficient(const std::string& text, const Grid* grid, double horizon,
                                  const fs::path& base_dir) {
  const auto w = split_ws(text);
  auto num = [&](std::size_t i) {
    double d;
    if (i >= w.size() || !to_double(w[i], d))
      throw ConfigError("coefficient '" + text + "': expected a number in position " +
                        std::to_string(i));
    return d;
  };
  if (w.empty()) throw ConfigError("empty coefficient");
  if (w[0] == "constant" && w.size() == 2) return CoefficientSpec::constant(num(1));
  if (w[0] == "affine" && w.size() == 3) return CoefficientSpec::affine(num(1), num(2));
  if (w[0] == "gbm" && w.size() == 2) return CoefficientSpec::gbm(num(1));
  if (w[0] == "tabulated" && w.size() == 2) {
    if (!grid) throw ConfigError("tabulated coefficient needs a [grid] section");
    const fs::path p = fs::path(w[1]).is_absolute() ? fs::path(w[1]) : base_dir / w[1];
    const GridField field = read_field_csv(p, *grid, horizon);
    return CoefficientSpec::tabulated({*grid, horizon, Eigen::MatrixXd(field.values())});
  }
  throw ConfigError("coefficient '" + text +
                    "': expected 'constant c', 'affine a b', 'gbm c' or 'tabulated FILE'");
}

bool RunConfig::has(const std::string& key) const { return command_section().count(key) > 0; }

std::string RunConfig::text(const std::string& key, const std::string& fallback) const {
  auto it = command_section().find(key);
  return it == command_section().end() ? fallback : it->second;
}

double RunConfig::number(const std::string& key) const {
  auto it = command_section().find(key);
  if (it == command_section().end())
    throw ConfigError("config: [" + command + "] " + key + ": missing required key");
  double d;
  if (!to_double(it->second, d))
    throw ConfigError("config: [" + command + "] " + key + ": expected a number");
  return d;
}

double RunConfig::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

long RunConfig::integer(const std::string& key, long fallback) const {
  if (!has(key)) return fallback;
  const double d = number(key);
  if (d != std::floor(d))
    throw ConfigError("config: [" + command + "] " + key + ": expected an integer");
  return long(d);
}

bool RunConfig::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = text(key, "");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: [" + command + "] " + key + ": expected true or false");
}

std::vector<double> RunConfig::list(const std::string& key, std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::string s = text(key, "");
  std::replace(s.begin(), s.end(), ',', ' ');
  std::vector<double> out;
  for (const auto& w : split_ws(s)) {
    double d;
    if (!to_double(w, d))
      throw ConfigError("config: [" + command + "] " + key + ": bad list entry '" + w + "'");
    out.push_back(d);
  }
  return out;
}

RunConfig parse_config(const std::string& src, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(src);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    std::ostringstream msg;
    msg << "config line " << e.line() << ": " << e.message();
    throw ConfigError(msg.str());
  }

  RunConfig cfg;
  cfg.base_dir = base_dir;
  for (const auto& [name, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + name + "' outside any section");
    const auto allowed = allowed_keys().find(name);
    if (allowed == allowed_keys().end())
      throw ConfigError("config: unknown section [" + name + "]");
    Section sec;
    for (const auto& [key, value] : body) {
      if (!allowed->second.count(key)) fail(src, name, key, "unknown key");
      sec[key] = value.data();
    }
    cfg.sections[name] = std::move(sec);
  }

  // read_ini drops sections without keys; a bare command header is still a command.
  {
    std::istringstream lines(src);
    std::string line;
    while (std::getline(lines, line)) {
      const auto a = line.find_first_not_of(" \t");
      if (a == std::string::npos || line[a] != '[') continue;
      const auto b = line.find(']', a);
      if (b == std::string::npos) continue;
      const std::string name = line.substr(a + 1, b - a - 1);
      if (!allowed_keys().count(name)) throw ConfigError("config: unknown section [" + name + "]");
      cfg.sections.try_emplace(name);
    }
  }

  std::vector<std::string> commands;
  for (const auto& c : command_names())
    if (cfg.sections.count(c)) commands.push_back(c);
  if (commands.size() != 1) {
    std::string msg = "config: expected exactly one command section (";
    for (std::size_t i = 0; i < command_names().size(); ++i)
      msg += (i ? ", " : "") + command_names()[i];
    msg += "), found " + std::to_string(commands.size());
    throw ConfigError(msg);
  }
  cfg.command = commands.front();

  const Reader r{src, cfg.sections};
  if (cfg.command != "benchmark-gbm") {
    for (const char* needed : {"problem", "grid"})
      if (!cfg.sections.count(needed))
        throw ConfigError(std::string("config: command '") + cfg.command + "' needs a [" +
                          needed + "] section");
  }

  if (cfg.sections.count("grid")) {
    BoundaryKind kind = BoundaryKind::linear_extrapolation;
    if (const auto* b = r.find("grid", "boundary")) {
      if (*b == "value_clamped") kind = BoundaryKind::value_clamped;
      else if (*b != "linear_extrapolation")
        fail(src, "grid", "boundary", "expected linear_extrapolation or value_clamped");
    }
    try {
      cfg.grid = build_grid(r.number("grid", "x_min"), r.number("grid", "x_max"),
                            int(r.integer("grid", "n_x", 0)), int(r.integer("grid", "n_t", 0)),
                            kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: [grid] ") + e.what());
    }
  }

  if (cfg.sections.count("problem")) {
    ProblemSpec p;
    p.horizon = r.number("problem", "horizon");
    p.gamma = r.number("problem", "gamma");
    p.lambda = r.number("problem", "lambda", p.lambda);
    p.dimension = int(r.integer("problem", "dimension", 1));
    if (const auto* v = r.find("problem", "variance_factor")) {
      if (*v == "half_gamma") p.variance_factor = VarianceFactor::half_gamma;
      else if (*v == "full_gamma") p.variance_factor = VarianceFactor::full_gamma;
      else fail(src, "problem", "variance_factor", "expected half_gamma or full_gamma");
    }
    const Grid* g = cfg.grid ? &*cfg.grid : nullptr;
    auto coef = [&](const char* key) {
      const auto* v = r.find("problem", key);
      if (!v) fail(src, "problem", key, "missing required key");
      try {
        return parse_coefficient(*v, g, p.horizon, base_dir);
      } catch (const std::exception& e) {
        fail(src, "problem", key, e.what());
      }
    };
    p.drift = coef("drift");
    p.diffusion = coef("diffusion");
    p.reward = coef("reward");
    cfg.problem = p;
  }

  if (const auto* d = r.find("output", "directory")) cfg.output.directory = *d;
  if (const auto* f = r.find("output", "formats")) {
    std::string s = *f;
    std::replace(s.begin(), s.end(), ',', ' ');
    cfg.output.csv = cfg.output.json = false;
    for (const auto& w : split_ws(s)) {
      if (w == "csv") cfg.output.csv = true;
      else if (w == "json") cfg.output.json = true;
      else fail(src, "output", "formats", "unknown format '" + w + "'");
    }
  }
  cfg.output.stride = int(r.integer("output", "stride", 1));
  if (cfg.output.stride < 1) fail(src, "output", "stride", "must be >= 1");

  cfg.mc.n_paths = r.integer("mc", "n_paths", cfg.mc.n_paths);
  cfg.mc.dt_sim = r.number("mc", "dt_sim", cfg.mc.dt_sim);
  cfg.mc.master_seed = std::uint64_t(r.integer("mc", "seed", long(cfg.mc.master_seed)));
  cfg.mc.workers = int(r.integer("mc", "workers", 1));
  if (const auto* a = r.find("mc", "antithetic")) cfg.mc.antithetic = (*a == "true" || *a == "1");
  if (cfg.mc.n_paths < 1) fail(src, "mc", "n_paths", "must be >= 1");
  if (!(cfg.mc.dt_sim > 0)) fail(src, "mc", "dt_sim", "must be positive");
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.has_parent_path() ? path.parent_path() : fs::path("."));
}

}  // namespace mvstop
