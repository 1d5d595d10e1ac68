#pragma once

// Independent dense reference implementations used by the tests. They form
// full matrices with Eigen and share no code with the library solvers.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "pe3d/pe3d.hpp"

namespace oracle {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat dense_matrix(const pe3d::TriDiagSystem<cd>& s) {
  const auto n = static_cast<Eigen::Index>(s.main.size());
  Mat a = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) a(i, i) = s.main[i];
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    a(i, i + 1) = s.sup[i];
    a(i + 1, i) = s.sub[i];
  }
  if (s.topology == pe3d::Topology::cyclic) {
    a(n - 1, 0) += s.sup[n - 1];
    a(0, n - 1) += s.sub[n - 1];
  }
  return a;
}

inline Vec to_vec(std::span<const cd> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

inline std::vector<cd> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

inline std::vector<cd> solve(const pe3d::TriDiagSystem<cd>& s) {
  return to_std(dense_matrix(s).fullPivLu().solve(to_vec(s.rhs)));
}

/// Second-difference matrix on n points, Dirichlet or periodic closure.
inline Mat second_difference(Eigen::Index n, bool periodic) {
  Mat d = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = -2.0;
    if (i > 0) d(i, i - 1) = 1.0;
    if (i + 1 < n) d(i, i + 1) = 1.0;
  }
  if (periodic) {
    d(0, n - 1) += 1.0;
    d(n - 1, 0) += 1.0;
  }
  return d;
}

/// Slab vector ordering matches FieldSlab: index m * L + l.
struct StepGeometry {
  Eigen::Index M = 3, L = 3;
  double k0 = 0.2, dz = 2.0, dtheta = 0.0, r_old = 10.0, r_new = 15.0;
  bool periodic = true;
  std::vector<std::vector<cd>> n_old, n_new;  // [m][l]
};

inline Mat x_hat(const StepGeometry& g, const std::vector<std::vector<cd>>& n) {
  const Mat d = second_difference(g.L, false) / ((g.k0 * g.dz) * (g.k0 * g.dz));
  Mat x = Mat::Zero(g.M * g.L, g.M * g.L);
  for (Eigen::Index m = 0; m < g.M; ++m) {
    x.block(m * g.L, m * g.L, g.L, g.L) = d;
    for (Eigen::Index l = 0; l < g.L; ++l) x(m * g.L + l, m * g.L + l) += n[m][l] * n[m][l] - 1.0;
  }
  return x;
}

inline Mat y_hat(const StepGeometry& g, double r) {
  const double s = 1.0 / ((g.k0 * r * g.dtheta) * (g.k0 * r * g.dtheta));
  const Mat ring = second_difference(g.M, g.periodic) * s;
  return Eigen::kroneckerProduct(ring, Mat::Identity(g.L, g.L)).eval();
}

inline void boundary(const StepGeometry& g, Vec& u) {
  for (Eigen::Index m = 0; m < g.M; ++m) u[m * g.L] = 0.0;
  if (!g.periodic)
    for (Eigen::Index l = 0; l < g.L; ++l) {
      u[l] = 0.0;
      u[(g.M - 1) * g.L + l] = 0.0;
    }
}

inline Vec step_rhs(const StepGeometry& g, const pe3d::StepCoefficients& c, Vec u) {
  const Mat I = Mat::Identity(g.M * g.L, g.M * g.L);
  return (I + c.cx_rhs * x_hat(g, g.n_old)) * ((I + c.cy_rhs * y_hat(g, g.r_old)) * u);
}

/// Replaces the rows of boundary nodes by identity rows.
inline void pin_boundary_rows(const StepGeometry& g, Mat& a) {
  Vec mask = Vec::Ones(g.M * g.L);
  boundary(g, mask);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    if (mask[i] == cd{}) {
      a.row(i).setZero();
      a(i, i) = 1.0;
    }
}

/// One full step of the factored update as a single dense solve, with the
/// boundary nodes held at zero.
inline Vec step(const StepGeometry& g, const pe3d::StepCoefficients& c, Vec u) {
  boundary(g, u);
  const Mat I = Mat::Identity(g.M * g.L, g.M * g.L);
  Mat a = I + c.cx_lhs * x_hat(g, g.n_new);
  Mat b = I + c.cy_lhs * y_hat(g, g.r_new);
  pin_boundary_rows(g, a);
  pin_boundary_rows(g, b);
  Vec rhs = step_rhs(g, c, u);
  boundary(g, rhs);
  Vec out = (a * b).fullPivLu().solve(rhs);
  boundary(g, out);
  return out;
}

inline double relative_error(std::span<const cd> x, std::span<const cd> ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num = std::max(num, std::abs(x[i] - ref[i]));
    den = std::max(den, std::abs(ref[i]));
  }
  return num / std::max(den, 1e-300);
}

}  // namespace oracle
