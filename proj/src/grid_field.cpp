#include "mvstop/grid_field.hpp"

#include <algorithm>
#include <cmath>

namespace mvstop {

GridField::GridField(const Grid& grid, double horizon)
    : grid_(grid), horizon_(horizon), values_(FieldMatrix::Zero(grid.n_t + 1, grid.n_x)) {}

GridField::GridField(const Grid& grid, double horizon, FieldMatrix values)
    : grid_(grid), horizon_(horizon), values_(std::move(values)) {
  if (values_.rows() != grid.n_t + 1 || values_.cols() != grid.n_x)
    throw std::invalid_argument("GridField: value count must be (n_t+1) x n_x");
}

GridField GridField::constant_in_time(const Grid& grid, double horizon,
                                      const Eigen::Ref<const Profile>& profile) {
  GridField out(grid, horizon);
  out.values_.rowwise() = profile.transpose();
  return out;
}

double GridField::interpolate(double t, double x) const {
  const double dx = grid_.dx();
  const double dt = grid_.dt(horizon_);
  const double sx = std::clamp((x - grid_.node(0)) / dx, 0.0, double(grid_.n_x - 1));
  const double st = std::clamp(t / dt, 0.0, double(grid_.n_t));
  const int i = std::min(int(sx), grid_.n_x - 2);
  const int n = std::min(int(st), grid_.n_t - 1);
  const double wx = sx - i;
  const double wt = st - n;
  const auto& v = values_;
  return (1 - wt) * ((1 - wx) * v(n, i) + wx * v(n, i + 1)) +
         wt * ((1 - wx) * v(n + 1, i) + wx * v(n + 1, i + 1));
}

int GridField::nearest_slice(double t) const {
  const double st = t / grid_.dt(horizon_);
  return std::clamp(int(std::lround(st)), 0, grid_.n_t);
}

double sup_distance(const GridField& a, const GridField& b) {
  return (a.values() - b.values()).cwiseAbs().maxCoeff();
}

Profile gradient(const Eigen::Ref<const Profile>& u, double dx) {
  const Eigen::Index n = u.size();
  Profile d(n);
  d.segment(1, n - 2) = (u.tail(n - 2) - u.head(n - 2)) / (2 * dx);
  d[0] = (u[1] - u[0]) / dx;
  d[n - 1] = (u[n - 1] - u[n - 2]) / dx;
  return d;
}

}  // namespace mvstop

namespace mvstop {

std::vector<int> window_indices(const Grid& grid, double x_lo, double x_hi) {
  std::vector<int> out;
  for (int i = 0; i < grid.n_x; ++i) {
    const double x = grid.node(i);
    if (x >= x_lo && x <= x_hi) out.push_back(i);
  }
  return out;
}

WindowGap window_gap(const Eigen::Ref<const Profile>& a, const Eigen::Ref<const Profile>& b,
                     const Grid& grid, double x_lo, double x_hi) {
  WindowGap w;
  double b_sup = 0.0;
  double sum_sq = 0.0;
  for (int i : window_indices(grid, x_lo, x_hi)) {
    const double d = std::abs(a[i] - b[i]);
    w.sup = std::max(w.sup, d);
    sum_sq += d * d;
    b_sup = std::max(b_sup, std::abs(b[i]));
    if (b[i] != 0.0) w.sup_relative = std::max(w.sup_relative, d / std::abs(b[i]));
  }
  w.l2 = std::sqrt(grid.dx() * sum_sq);
  w.sup_normalized = b_sup > 0 ? w.sup / b_sup : w.sup;
  return w;
}

}  // namespace mvstop
