#pragma once

#include "mvstop/model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mvstop {

using FieldMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MaskMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A function of (t, x) sampled on the lattice of a Grid: row n is the
/// time slice t_n = n T / n_t, column i the node x_i.
class GridField {
 public:
  GridField() = default;
  GridField(const Grid& grid, double horizon);
  GridField(const Grid& grid, double horizon, FieldMatrix values);

  /// Every slice equal to `profile`.
  static GridField constant_in_time(const Grid& grid, double horizon,
                                    const Eigen::Ref<const Profile>& profile);

  const Grid& grid() const { return grid_; }
  double horizon() const { return horizon_; }
  int n_slices() const { return int(values_.rows()); }
  double time(int n) const { return grid_.time(n, horizon_); }

  auto slice(int n) const { return values_.row(n).transpose(); }
  auto slice(int n) { return values_.row(n).transpose(); }
  Profile slice_copy(int n) const { return values_.row(n).transpose(); }

  double operator()(int n, int i) const { return values_(n, i); }
  double& operator()(int n, int i) { return values_(n, i); }

  const FieldMatrix& values() const { return values_; }
  FieldMatrix& values() { return values_; }

  /// Bilinear in (t, x), clamped to the lattice.
  double interpolate(double t, double x) const;
  /// Nearest time slice to t.
  int nearest_slice(double t) const;
  bool all_finite() const { return values_.allFinite(); }

 private:
  Grid grid_{};
  double horizon_ = 1.0;
  FieldMatrix values_;
};

/// sup |a - b| over the whole lattice.
double sup_distance(const GridField& a, const GridField& b);

/// Central first difference at interior nodes, one-sided at the two ends.
Profile gradient(const Eigen::Ref<const Profile>& u, double dx);

}  // namespace mvstop

namespace mvstop {

/// Node indices i with x_lo <= x_i <= x_hi.
std::vector<int> window_indices(const Grid& grid, double x_lo, double x_hi);

/// Distances between two profiles restricted to a window of nodes.
struct WindowGap {
  double sup = 0.0;            ///< max |a - b|
  double l2 = 0.0;             ///< sqrt(dx * sum (a - b)^2)
  double sup_relative = 0.0;   ///< max |a - b| / |b|
  double sup_normalized = 0.0; ///< max |a - b| / max |b|
};

WindowGap window_gap(const Eigen::Ref<const Profile>& a, const Eigen::Ref<const Profile>& b,
                     const Grid& grid, double x_lo, double x_hi);

}  // namespace mvstop
