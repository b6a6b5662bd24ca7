#include "mvstop/export.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mvstop {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<int> kept_slices(int n_slices, int stride) {
  stride = std::max(1, stride);
  std::vector<int> out;
  for (int n = 0; n < n_slices; n += stride) out.push_back(n);
  if (out.back() != n_slices - 1) out.push_back(n_slices - 1);
  return out;
}

template <typename Value>
void write_lattice(const fs::path& path, const Grid& grid, double horizon, int n_slices,
                   int stride, Value value) {
  auto out = open_out(path);
  std::string buf;
  buf.reserve(1 << 20);
  buf += "t,x,value\n";
  std::vector<std::string> xs(grid.n_x);
  for (int i = 0; i < grid.n_x; ++i) xs[i] = format_double(grid.node(i));
  for (int n : kept_slices(n_slices, stride)) {
    const std::string t = format_double(grid.time(n, horizon));
    for (int i = 0; i < grid.n_x; ++i) {
      buf += t;
      buf += ',';
      buf += xs[i];
      buf += ',';
      buf += value(n, i);
      buf += '\n';
      if (buf.size() > (1u << 20) - 256) {
        out.write(buf.data(), std::streamsize(buf.size()));
        buf.clear();
      }
    }
  }
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

double parse_number(const std::string& s, const fs::path& path, long line) {
  double v = 0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    std::ostringstream msg;
    msg << path.string() << ":" << line << ": malformed number '" << s << "'";
    throw std::runtime_error(msg.str());
  }
  return v;
}

/// Calls row(t, x, value, line) for every data row after checking the header.
template <typename Row>
void read_rows(const fs::path& path, const std::string& header, Row row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw std::runtime_error(path.string() + ": expected header '" + header + "'");
  long no = 1;
  std::vector<std::string> cols;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty()) continue;
    cols.clear();
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cols.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    std::vector<double> vals;
    for (const auto& c : cols) vals.push_back(parse_number(c, path, no));
    row(vals, no);
  }
}

void check_node(const fs::path& path, long line, const Grid& grid, double horizon, int n, int i,
                double t, double x) {
  if (t != grid.time(n, horizon) || x != grid.node(i)) {
    std::ostringstream msg;
    msg << path.string() << ":" << line << ": (t, x) does not match the lattice";
    throw std::runtime_error(msg.str());
  }
}

}  // namespace

void write_field_csv(const fs::path& path, const GridField& field, int stride) {
  write_lattice(path, field.grid(), field.horizon(), field.n_slices(), stride,
                [&](int n, int i) { return format_double(field(n, i)); });
}

void write_mask_csv(const fs::path& path, const MaskMatrix& mask, const Grid& grid,
                    double horizon, int stride) {
  write_lattice(path, grid, horizon, int(mask.rows()), stride,
                [&](int n, int i) { return std::string(mask(n, i) ? "1" : "0"); });
}

void write_boundary_csv(const fs::path& path, const BoundaryCurve& curve, const Grid& grid,
                        double horizon, int stride) {
  auto out = open_out(path);
  out << "t,c\n";
  if (curve.empty()) return;
  for (int n : kept_slices(int(curve.size()), stride))
    for (double c : curve[n]) out << format_double(grid.time(n, horizon)) << ',' << format_double(c) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

GridField read_field_csv(const fs::path& path, const Grid& grid, double horizon) {
  GridField field(grid, horizon);
  const long expected = long(grid.n_t + 1) * grid.n_x;
  long k = 0;
  read_rows(path, "t,x,value", [&](const std::vector<double>& v, long line) {
    if (v.size() != 3 || k >= expected) {
      std::ostringstream msg;
      msg << path.string() << ":" << line << ": unexpected row";
      throw std::runtime_error(msg.str());
    }
    const int n = int(k / grid.n_x);
    const int i = int(k % grid.n_x);
    check_node(path, line, grid, horizon, n, i, v[0], v[1]);
    field(n, i) = v[2];
    ++k;
  });
  if (k != expected)
    throw std::runtime_error(path.string() + ": row count does not match the lattice");
  return field;
}

MaskMatrix read_mask_csv(const fs::path& path, const Grid& grid, double horizon) {
  const GridField f = read_field_csv(path, grid, horizon);
  return f.values().array() != 0.0;
}

BoundaryCurve read_boundary_csv(const fs::path& path, const Grid& grid, double horizon) {
  BoundaryCurve curve(grid.n_t + 1);
  read_rows(path, "t,c", [&](const std::vector<double>& v, long line) {
    if (v.size() != 2) {
      std::ostringstream msg;
      msg << path.string() << ":" << line << ": unexpected row";
      throw std::runtime_error(msg.str());
    }
    const int n = int(std::lround(v[0] / grid.dt(horizon)));
    if (n < 0 || n > grid.n_t) throw std::runtime_error(path.string() + ": time outside horizon");
    curve[n].push_back(v[1]);
  });
  return curve;
}

std::vector<std::string> export_hjb(const HJBSolution& sol, const fs::path& dir, int stride) {
  write_field_csv(dir / "V.csv", sol.V, stride);
  write_field_csv(dir / "g.csv", sol.g, stride);
  write_field_csv(dir / "h.csv", sol.h, stride);
  write_field_csv(dir / "pi.csv", sol.pi, stride);
  return {"V.csv", "g.csv", "h.csv", "pi.csv"};
}

std::vector<std::string> export_vi(const VISolution& sol, const fs::path& dir, int stride) {
  const Grid& grid = sol.V.grid();
  write_field_csv(dir / "V.csv", sol.V, stride);
  write_field_csv(dir / "g.csv", sol.g, stride);
  write_field_csv(dir / "h.csv", sol.h, stride);
  write_mask_csv(dir / "stop_mask.csv", sol.stop_mask, grid, sol.V.horizon(), stride);
  write_boundary_csv(dir / "boundary.csv", sol.boundary, grid, sol.V.horizon(), stride);
  return {"V.csv", "g.csv", "h.csv", "stop_mask.csv", "boundary.csv"};
}

VISolution import_vi(const fs::path& dir, const ProblemSpec& spec, const Grid& grid) {
  VISolution sol;
  sol.V = read_field_csv(dir / "V.csv", grid, spec.horizon);
  sol.g = read_field_csv(dir / "g.csv", grid, spec.horizon);
  sol.h = read_field_csv(dir / "h.csv", grid, spec.horizon);
  sol.stop_mask = read_mask_csv(dir / "stop_mask.csv", grid, spec.horizon);
  sol.boundary = read_boundary_csv(dir / "boundary.csv", grid, spec.horizon);
  sol.f = spec.reward_on(grid);
  sol.gamma = spec.gamma;
  sol.kappa = spec.kappa();
  return sol;
}

HJBSolution import_hjb(const fs::path& dir, const ProblemSpec& spec, const Grid& grid) {
  HJBSolution sol;
  sol.lambda = spec.lambda;
  sol.V = read_field_csv(dir / "V.csv", grid, spec.horizon);
  sol.g = read_field_csv(dir / "g.csv", grid, spec.horizon);
  sol.pi = read_field_csv(dir / "pi.csv", grid, spec.horizon);
  sol.h = GridField(grid, spec.horizon);
  sol.h.values() = sol.V.values() - 0.5 * spec.gamma * sol.g.values().cwiseAbs2();
  sol.converged = true;
  return sol;
}

}  // namespace mvstop
