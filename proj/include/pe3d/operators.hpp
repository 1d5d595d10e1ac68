#pragma once

// Difference operators of the wide-angle split step, the two tri-diagonal
// systems solved per range step, and the explicit right-hand side.
//
// With delta = i k0 dr, one step solves
//
//   [I + (1/4 - delta/4) X][I - (delta/4) Y] u(j+1)
//       = [I + (1/4 + delta/4) X][I + (delta/4) Y] u(j)
//
// where X u = (n^2 - 1) u + (k0 dz)^-2 D2z u and Y u = (k0 r dtheta)^-2 D2theta u
// are dimensionless. D2 is the three-point second difference with zero
// exterior values, wrapping in azimuth on a periodic grid.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pe3d/env_model.hpp"
#include "pe3d/error.hpp"
#include "pe3d/thread_pool.hpp"
#include "pe3d/tridiag.hpp"

namespace pe3d {

struct StepCoefficients {
  double k0 = 0.0;
  double delta_r = 0.0;
  complex delta;
  complex cx_lhs;  // 1/4 - delta/4
  complex cx_rhs;  // 1/4 + delta/4
  complex cy_lhs;  // -delta/4
  complex cy_rhs;  // +delta/4

  /// True when the implicit and explicit factors coincide and cancel.
  bool x_factors_cancel() const { return cx_lhs == cx_rhs; }
  bool y_factors_cancel() const { return cy_lhs == cy_rhs; }
};

inline StepCoefficients step_coefficients(double k0, double delta_r) {
  if (!(k0 > 0.0) || !(delta_r >= 0.0))
    throw domain_error("step_coefficients requires k0 > 0 and delta_r >= 0");
  StepCoefficients c;
  c.k0 = k0;
  c.delta_r = delta_r;
  c.delta = {0.0, k0 * delta_r};
  const complex quarter_delta = 0.25 * c.delta;
  c.cx_lhs = 0.25 - quarter_delta;
  c.cx_rhs = 0.25 + quarter_delta;
  c.cy_lhs = -quarter_delta;
  c.cy_rhs = quarter_delta;
  return c;
}

enum class Direction { depth, azimuth };

struct OperatorStencil {
  Direction direction = Direction::depth;
  double second_difference_scale = 0.0;
  std::vector<complex> local_term;  // n^2 - 1 for depth, zeros for azimuth
};

inline double depth_scale(double k0, double delta_z) {
  const double s = k0 * delta_z;
  return 1.0 / (s * s);
}

inline double azimuth_scale(double k0, double r, double delta_theta) {
  if (!(r > 0.0)) throw domain_error("azimuth operator requires r > 0");
  const double s = k0 * r * delta_theta;
  return 1.0 / (s * s);
}

inline OperatorStencil depth_stencil(std::span<const complex> n_column, double k0, double delta_z) {
  OperatorStencil st{Direction::depth, depth_scale(k0, delta_z), {}};
  st.local_term.reserve(n_column.size());
  for (const auto& n : n_column) st.local_term.push_back(n * n - 1.0);
  return st;
}

inline OperatorStencil azimuth_stencil(std::size_t n_azimuth, double k0, double r,
                                       double delta_theta) {
  return {Direction::azimuth, azimuth_scale(k0, r, delta_theta),
          std::vector<complex>(n_azimuth, complex{})};
}

namespace detail {

inline void check_length(std::size_t n, const char* what) {
  if (n < 3) throw shape_error(std::string(what) + ": vector length must be >= 3");
}

/// out = in + factor * X in, along one depth column. factor = 1 gives X in
/// only when `accumulate` is false.
inline void x_column(std::span<const complex> in, std::span<const complex> n_column, double scale,
                     complex factor, bool accumulate, std::span<complex> out) {
  const std::size_t L = in.size();
  for (std::size_t l = 0; l < L; ++l) {
    const complex up = l > 0 ? in[l - 1] : complex{};
    const complex down = l + 1 < L ? in[l + 1] : complex{};
    const complex local = n_column[l] * n_column[l] - 1.0;
    const complex xu = local * in[l] + scale * ((down + up) - 2.0 * in[l]);
    out[l] = accumulate ? in[l] + factor * xu : xu;
  }
}

}  // namespace detail

/// (X u)_l = (n_l^2 - 1) u_l + (u_{l+1} - 2 u_l + u_{l-1}) / (k0 dz)^2.
inline std::vector<complex> apply_X(std::span<const complex> column,
                                    std::span<const complex> n_column, double k0, double delta_z) {
  detail::check_length(column.size(), "apply_X");
  if (n_column.size() != column.size()) throw shape_error("apply_X: n column length mismatch");
  std::vector<complex> out(column.size());
  detail::x_column(column, n_column, depth_scale(k0, delta_z), 1.0, false, out);
  return out;
}

/// (Y u)_m = (u_{m+1} - 2 u_m + u_{m-1}) / (k0 r dtheta)^2.
inline std::vector<complex> apply_Y(std::span<const complex> row, double k0, double r,
                                    double delta_theta, AzimuthTopology topology) {
  detail::check_length(row.size(), "apply_Y");
  const double s = azimuth_scale(k0, r, delta_theta);
  const std::size_t M = row.size();
  const bool ring = topology == AzimuthTopology::periodic;
  std::vector<complex> out(M);
  for (std::size_t m = 0; m < M; ++m) {
    const complex prev = m > 0 ? row[m - 1] : (ring ? row[M - 1] : complex{});
    const complex next = m + 1 < M ? row[m + 1] : (ring ? row[0] : complex{});
    out[m] = s * ((next + prev) - 2.0 * row[m]);
  }
  return out;
}

/// A = I + coeff * X on one depth column, with rhs attached.
inline TriDiagSystem<complex> assemble_depth_system(complex coeff, std::span<const complex> n_column,
                                                    double k0, double delta_z,
                                                    std::span<const complex> rhs_column) {
  const std::size_t L = n_column.size();
  if (L == 0 || rhs_column.size() != L) throw shape_error("assemble_depth_system: length mismatch");
  const double s = depth_scale(k0, delta_z);
  const complex off = coeff * s;
  TriDiagSystem<complex> sys{std::vector<complex>(L - 1, off), std::vector<complex>(L),
                             std::vector<complex>(L - 1, off),
                             std::vector<complex>(rhs_column.begin(), rhs_column.end()),
                             Topology::open};
  for (std::size_t l = 0; l < L; ++l)
    sys.main[l] = 1.0 + coeff * ((n_column[l] * n_column[l] - 1.0) - 2.0 * s);
  return sys;
}

/// B = I + coeff * Y on one azimuth row. Periodic grids give a cyclic system
/// whose corner entries equal the off-diagonal.
inline TriDiagSystem<complex> assemble_azimuth_system(complex coeff, double k0, double r,
                                                      double delta_theta, AzimuthTopology topology,
                                                      std::span<const complex> rhs_row) {
  const std::size_t M = rhs_row.size();
  const double s = azimuth_scale(k0, r, delta_theta);
  const complex off = coeff * s;
  const complex diag = 1.0 + coeff * (-2.0 * s);
  const bool ring = topology == AzimuthTopology::periodic;
  if (M == 0 || (ring && M < 3)) throw shape_error("assemble_azimuth_system: row too short");
  const std::size_t n_off = ring ? M : M - 1;
  return {std::vector<complex>(n_off, off), std::vector<complex>(M, diag),
          std::vector<complex>(n_off, off),
          std::vector<complex>(rhs_row.begin(), rhs_row.end()),
          ring ? Topology::cyclic : Topology::open};
}

/// All azimuth systems of a slab as one batch: member l is the system for
/// depth index l, and its right-hand side is row l of `rhs`. The SoA layout
/// coincides with the slab's storage order.
inline SolveBatch<complex> assemble_azimuth_batch(complex coeff, double k0, double r,
                                                  double delta_theta, AzimuthTopology topology,
                                                  const FieldSlab& rhs) {
  const std::size_t M = rhs.n_azimuth();
  const std::size_t L = rhs.n_depth();
  const double s = azimuth_scale(k0, r, delta_theta);
  const complex off = coeff * s;
  const complex diag = 1.0 + coeff * (-2.0 * s);
  const bool ring = topology == AzimuthTopology::periodic;
  SolveBatch<complex> batch(M, L, ring ? Topology::cyclic : Topology::open);
  std::fill(batch.main.begin(), batch.main.end(), diag);
  const std::size_t n_off = (ring ? M : M - 1) * L;
  std::fill_n(batch.sub.begin(), n_off, off);
  std::fill_n(batch.sup.begin(), n_off, off);
  std::copy(rhs.values().begin(), rhs.values().end(), batch.rhs.begin());
  return batch;
}

/// Where the medium is sampled for one factor: n per azimuth column and the
/// range used in the azimuth operator.
struct OperatorContext {
  const Grid3D* grid = nullptr;
  double k0 = 0.0;
  std::span<const std::span<const complex>> n_columns;
  double range = 0.0;
};

namespace detail {

inline void check_slab(const FieldSlab& u, const OperatorContext& ctx, const char* what) {
  if (!u.matches(*ctx.grid)) throw shape_error(std::string(what) + ": slab does not match grid");
  if (ctx.n_columns.size() != ctx.grid->n_azimuth)
    throw shape_error(std::string(what) + ": n slice size mismatch");
}

}  // namespace detail

/// [I + coeff Y] u, evaluated at ctx.range. Parallel over azimuth columns.
inline FieldSlab apply_y_factor(const FieldSlab& u, complex coeff, const OperatorContext& ctx,
                                ThreadPool& pool) {
  const Grid3D& g = *ctx.grid;
  detail::check_slab(u, ctx, "apply_y_factor");
  const std::size_t M = g.n_azimuth;
  const std::size_t L = g.n_depth;
  const bool ring = g.azimuth_topology == AzimuthTopology::periodic;
  const double s = azimuth_scale(ctx.k0, ctx.range, g.delta_theta);
  FieldSlab out(M, L, u.range());
  pool.for_blocks(M, [&](std::size_t first, std::size_t last) {
    const std::vector<complex> zeros(L);
    for (std::size_t m = first; m < last; ++m) {
      const auto cur = u.column(m);
      const auto prev =
          m > 0 ? u.column(m - 1) : (ring ? u.column(M - 1) : std::span<const complex>(zeros));
      const auto next =
          m + 1 < M ? u.column(m + 1) : (ring ? u.column(0) : std::span<const complex>(zeros));
      auto dst = out.column(m);
      for (std::size_t l = 0; l < L; ++l)
        dst[l] = cur[l] + coeff * (s * ((next[l] + prev[l]) - 2.0 * cur[l]));
    }
  });
  return out;
}

/// [I + coeff X] u with n taken from ctx.n_columns. Parallel over columns.
inline FieldSlab apply_x_factor(const FieldSlab& u, complex coeff, const OperatorContext& ctx,
                                ThreadPool& pool) {
  const Grid3D& g = *ctx.grid;
  detail::check_slab(u, ctx, "apply_x_factor");
  FieldSlab out(g.n_azimuth, g.n_depth, u.range());
  const double s = depth_scale(ctx.k0, g.delta_z);
  pool.for_blocks(g.n_azimuth, [&](std::size_t first, std::size_t last) {
    for (std::size_t m = first; m < last; ++m)
      detail::x_column(u.column(m), ctx.n_columns[m], s, coeff, true, out.column(m));
  });
  return out;
}

/// RHS = [I + cx_rhs X][I + cy_rhs Y] u: the Y factor row by row first,
/// then the X factor column by column.
inline FieldSlab compute_rhs(const FieldSlab& u, const StepCoefficients& coeffs,
                             const OperatorContext& ctx, ThreadPool& pool) {
  return apply_x_factor(apply_y_factor(u, coeffs.cy_rhs, ctx, pool), coeffs.cx_rhs, ctx, pool);
}

inline FieldSlab compute_rhs(const FieldSlab& u, const StepCoefficients& coeffs,
                             const OperatorContext& ctx) {
  ThreadPool serial(1);
  return compute_rhs(u, coeffs, ctx, serial);
}

}  // namespace pe3d
