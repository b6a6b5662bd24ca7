#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mvstop {

/// a_i u_{i-1} + d_i u_i + c_i u_{i+1} = r_i; lower[0] and upper[n-1] unused.
template <typename Scalar>
struct TridiagonalSystem {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector lower;
  Vector diag;
  Vector upper;
  Vector rhs;

  explicit TridiagonalSystem(Eigen::Index n = 0)
      : lower(Vector::Zero(n)), diag(Vector::Zero(n)), upper(Vector::Zero(n)),
        rhs(Vector::Zero(n)) {}

  Eigen::Index size() const { return diag.size(); }

  /// Index of the first row that is not strictly diagonally dominant, or -1.
  Eigen::Index first_non_dominant_row() const {
    const Eigen::Index n = size();
    for (Eigen::Index i = 0; i < n; ++i) {
      Scalar off = 0;
      if (i > 0) off += std::abs(lower[i]);
      if (i + 1 < n) off += std::abs(upper[i]);
      if (!(std::abs(diag[i]) > off)) return i;
    }
    return -1;
  }

  /// Pin row i to u_i = value.
  void pin(Eigen::Index i, Scalar value) {
    lower[i] = 0;
    upper[i] = 0;
    diag[i] = 1;
    rhs[i] = value;
  }
};

/// Thomas algorithm. Throws std::domain_error on a vanishing pivot.
template <typename Scalar>
typename TridiagonalSystem<Scalar>::Vector solve_tridiagonal(
    const TridiagonalSystem<Scalar>& sys) {
  using Vector = typename TridiagonalSystem<Scalar>::Vector;
  const Eigen::Index n = sys.size();
  Vector c_prime(n);
  Vector x(n);
  Scalar pivot = sys.diag[0];
  if (pivot == Scalar(0)) throw std::domain_error("tridiagonal: zero pivot in row 0");
  c_prime[0] = sys.upper[0] / pivot;
  x[0] = sys.rhs[0] / pivot;
  for (Eigen::Index i = 1; i < n; ++i) {
    pivot = sys.diag[i] - sys.lower[i] * c_prime[i - 1];
    if (pivot == Scalar(0) || !std::isfinite(double(pivot))) {
      std::ostringstream msg;
      msg << "tridiagonal: zero pivot in row " << i;
      throw std::domain_error(msg.str());
    }
    c_prime[i] = sys.upper[i] / pivot;
    x[i] = (sys.rhs[i] - sys.lower[i] * x[i - 1]) / pivot;
  }
  for (Eigen::Index i = n - 1; i > 0; --i) x[i - 1] -= c_prime[i - 1] * x[i];
  return x;
}

}  // namespace mvstop
