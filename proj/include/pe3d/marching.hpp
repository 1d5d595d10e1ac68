#pragma once

// Per-frequency range marching: starter, boundary handling, the two-step
// tri-diagonal update, and TL sampling.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pe3d/config.hpp"
#include "pe3d/env_model.hpp"
#include "pe3d/error.hpp"
#include "pe3d/operators.hpp"
#include "pe3d/parallel.hpp"
#include "pe3d/thread_pool.hpp"
#include "pe3d/tridiag.hpp"

namespace pe3d {

/// Marching state at range index j. The medium table outlives the state.
struct MarchState {
  FieldSlab slab;
  std::size_t step = 0;
  StepCoefficients coeffs;
  const MediumTable* medium = nullptr;

  const Grid3D& grid() const { return medium->grid(); }
  double range_at(std::size_t j) const {
    return grid().r_start + static_cast<double>(j) * coeffs.delta_r;
  }
  double range() const { return range_at(step); }
};

/// Pressure-release surface (l = 0) and, on sector grids, zero field on the
/// two azimuth edges. The bottom is left to the absorber.
inline void apply_boundary_in_place(FieldSlab& slab, const Grid3D& grid) {
  for (std::size_t m = 0; m < slab.n_azimuth(); ++m) slab(m, 0) = complex{};
  if (grid.azimuth_topology == AzimuthTopology::sector) {
    auto first = slab.column(0);
    auto last = slab.column(slab.n_azimuth() - 1);
    std::fill(first.begin(), first.end(), complex{});
    std::fill(last.begin(), last.end(), complex{});
  }
}

inline FieldSlab apply_boundary(FieldSlab slab, const Grid3D& grid) {
  apply_boundary_in_place(slab, grid);
  return slab;
}

namespace detail {

/// Turns row `i` of every batch member into the identity row, so a zero
/// right-hand side there pins the unknown to zero.
inline void pin_row(SolveBatch<complex>& batch, std::size_t i) {
  const std::size_t B = batch.count;
  for (std::size_t b = 0; b < B; ++b) {
    batch.main[i * B + b] = 1.0;
    if (i + 1 < batch.n) batch.sup[i * B + b] = complex{};
    if (i > 0) batch.sub[(i - 1) * B + b] = complex{};
  }
}

}  // namespace detail

/// Advances u(j) to u(j+1):
///   boundary -> A, B at r(j+1) -> RHS from u(j) -> A v = RHS per azimuth
///   column -> B u = v per depth row -> boundary.
/// Boundary nodes (surface row, sector edges) are Dirichlet rows of A and B
/// with zero right-hand side rather than unknowns that are zeroed after the
/// solve, so the step stays unitary for real n.
/// When the implicit and explicit factors of a direction are identical
/// (delta = 0) they cancel and that direction is skipped.
inline MarchState range_step(MarchState state, ThreadPool& pool) {
  const Grid3D& g = state.grid();
  if (!state.slab.matches(g)) throw shape_error("range_step: slab does not match grid");
  if (state.step + 1 > g.n_range)
    throw domain_error("range_step: step " + std::to_string(state.step + 1) + " exceeds n_range");

  const std::size_t j = state.step;
  const StepCoefficients& c = state.coeffs;
  const double r_old = state.range_at(j);
  const double r_new = state.range_at(j + 1);

  apply_boundary_in_place(state.slab, g);
  const auto n_old = state.medium->slice(r_old);
  const auto n_new = state.medium->slice(r_new);
  const OperatorContext explicit_ctx{&g, c.k0, n_old, r_old};

  const bool do_x = !c.x_factors_cancel();
  const bool do_y = !c.y_factors_cancel();

  FieldSlab work = do_y ? apply_y_factor(state.slab, c.cy_rhs, explicit_ctx, pool)
                        : std::move(state.slab);
  if (do_x) {
    FieldSlab rhs = apply_x_factor(work, c.cx_rhs, explicit_ctx, pool);
    apply_boundary_in_place(rhs, g);
    try {
      work = parallel_map_columns(
          rhs,
          [&](std::size_t m, std::span<const complex> in, std::span<complex> out) {
            auto sys = assemble_depth_system(c.cx_lhs, n_new[m], c.k0, g.delta_z, in);
            sys.main[0] = 1.0;
            sys.sup[0] = complex{};
            const auto v = solve_thomas(sys);
            std::copy(v.begin(), v.end(), out.begin());
          },
          pool);
    } catch (const column_error& e) {
      throw step_error(j, Sweep::depth, e.columns().front(), e.what());
    }
  }
  if (do_y) {
    if (!do_x) apply_boundary_in_place(work, g);
    auto batch = assemble_azimuth_batch(c.cy_lhs, c.k0, r_new, g.delta_theta,
                                        g.azimuth_topology, work);
    if (g.azimuth_topology == AzimuthTopology::sector) {
      detail::pin_row(batch, 0);
      detail::pin_row(batch, g.n_azimuth - 1);
    }
    try {
      solve_batch_into<complex>(batch, work.values(), pool);
    } catch (const batch_error& e) {
      throw step_error(j, Sweep::azimuth, e.member(), e.what());
    }
  }

  apply_boundary_in_place(work, g);
  work.set_range(r_new);
  state.slab = std::move(work);
  state.step = j + 1;
  return state;
}

inline MarchState range_step(MarchState state) {
  ThreadPool serial(1);
  return range_step(std::move(state), serial);
}

/// TL samples on (output range x azimuth x depth), row-major.
struct FrequencyResult {
  double frequency = 0.0;
  std::size_t stride = 1;
  std::size_t n_azimuth = 0;
  std::size_t n_depth = 0;
  std::vector<double> ranges;  // one per stored range sample
  std::vector<double> tl;
  std::size_t clamped = 0;
  FieldSlab final_slab;
  double seconds = 0.0;

  std::size_t n_ranges() const { return ranges.size(); }
  double tl_at(std::size_t i, std::size_t m, std::size_t l) const {
    return tl[(i * n_azimuth + m) * n_depth + l];
  }
};

namespace detail {

inline void record_tl(FrequencyResult& out, const FieldSlab& slab, double k0, double r,
                      ThreadPool& pool) {
  const complex w = hankel_factor(k0, r);
  const std::size_t base = out.tl.size();
  const std::size_t M = slab.n_azimuth();
  const std::size_t L = slab.n_depth();
  out.tl.resize(base + M * L);
  std::vector<std::size_t> clamped(M, 0);
  pool.for_blocks(M, [&](std::size_t first, std::size_t last) {
    for (std::size_t m = first; m < last; ++m) {
      double* dst = out.tl.data() + base + m * L;
      const auto col = slab.column(m);
      for (std::size_t l = 0; l < L; ++l) {
        const auto s = transmission_loss(col[l], w);
        dst[l] = s.db;
        clamped[m] += s.clamped ? 1 : 0;
      }
    }
  });
  for (auto c : clamped) out.clamped += c;
  out.ranges.push_back(r);
}

}  // namespace detail

/// Marches one frequency from the starter out to max_range, sampling TL
/// every `stride` steps (the starter is sample 0).
inline FrequencyResult run_frequency(const Scenario& sc, double frequency, ThreadPool& pool) {
  const auto& freqs = sc.source.frequencies;
  if (std::find(freqs.begin(), freqs.end(), frequency) == freqs.end())
    throw domain_error("run_frequency: " + std::to_string(frequency) +
                       " Hz is not a configured source frequency");
  const auto t0 = std::chrono::steady_clock::now();
  const Grid3D& g = sc.grid;
  const MediumTable medium(g, sc.environment);
  const double k0 = wavenumber(frequency, sc.environment.reference_speed());

  FrequencyResult out;
  out.frequency = frequency;
  out.stride = resolve_output_stride(g, sc.options);
  out.n_azimuth = g.n_azimuth;
  out.n_depth = g.n_depth;

  MarchState state{gaussian_starter(g, sc.source, k0), 0, step_coefficients(k0, g.delta_r), &medium};
  detail::record_tl(out, state.slab, k0, state.range(), pool);
  const std::size_t steps = g.step_count();
  while (state.step < steps) {
    state = range_step(std::move(state), pool);
    if (state.step % out.stride == 0) detail::record_tl(out, state.slab, k0, state.range(), pool);
  }
  out.final_slab = std::move(state.slab);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline FrequencyResult run_frequency(const Scenario& sc, double frequency, std::size_t threads = 1) {
  ThreadPool pool(threads);
  return run_frequency(sc, frequency, pool);
}

}  // namespace pe3d
