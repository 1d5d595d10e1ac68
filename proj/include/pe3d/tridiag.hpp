#pragma once

// Complex tri-diagonal direct solvers: Thomas elimination, Sherman-Morrison
// for the cyclic case, a batched structure-of-arrays kernel, and a dense
// partial-pivot reference used by the tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pe3d/error.hpp"
#include "pe3d/thread_pool.hpp"

namespace pe3d {

enum class Topology { open, cyclic };

/// Row i reads sub[i-1] * x[i-1] + main[i] * x[i] + sup[i] * x[i+1].
/// Open systems carry n-1 off-diagonal entries. Cyclic systems carry n, with
/// sub[n-1] = A(0, n-1) and sup[n-1] = A(n-1, 0) closing the ring.
template <class T>
struct TriDiagSystem {
  std::vector<T> sub;
  std::vector<T> main;
  std::vector<T> sup;
  std::vector<T> rhs;
  Topology topology = Topology::open;

  std::size_t size() const { return main.size(); }

  void validate() const {
    const std::size_t n = main.size();
    const std::size_t off = topology == Topology::cyclic ? n : (n == 0 ? 0 : n - 1);
    if (topology == Topology::cyclic && n < 3) throw shape_error("cyclic system needs n >= 3");
    if (n == 0) throw shape_error("tri-diagonal system is empty");
    if (sub.size() != off || sup.size() != off || rhs.size() != n)
      throw shape_error("tri-diagonal lengths inconsistent with topology (n = " +
                        std::to_string(n) + ")");
  }

  /// y = A x, used for residual checks.
  std::vector<T> multiply(std::span<const T> x) const {
    const std::size_t n = main.size();
    std::vector<T> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      T acc = main[i] * x[i];
      if (i > 0) acc += sub[i - 1] * x[i - 1];
      if (i + 1 < n) acc += sup[i] * x[i + 1];
      y[i] = acc;
    }
    if (topology == Topology::cyclic) {
      y[0] += sub[n - 1] * x[n - 1];
      y[n - 1] += sup[n - 1] * x[0];
    }
    return y;
  }
};

/// Structure-of-arrays batch: entry i of member b lives at [i * count + b],
/// so the elimination inner loop runs unit-stride across members.
template <class T>
struct SolveBatch {
  std::size_t n = 0;
  std::size_t count = 0;
  Topology topology = Topology::open;
  std::vector<T> sub;
  std::vector<T> main;
  std::vector<T> sup;
  std::vector<T> rhs;

  SolveBatch() = default;
  SolveBatch(std::size_t n_, std::size_t count_, Topology topo)
      : n(n_), count(count_), topology(topo), sub(n_ * count_), main(n_ * count_),
        sup(n_ * count_), rhs(n_ * count_) {}

  static SolveBatch from_systems(std::span<const TriDiagSystem<T>> systems) {
    if (systems.empty()) throw shape_error("batch must be nonempty");
    const std::size_t n = systems.front().size();
    const Topology topo = systems.front().topology;
    SolveBatch out(n, systems.size(), topo);
    for (std::size_t b = 0; b < systems.size(); ++b) {
      const auto& s = systems[b];
      s.validate();
      if (s.size() != n || s.topology != topo)
        throw shape_error("batch member " + std::to_string(b) + " differs in size or topology");
      out.set(b, s);
    }
    return out;
  }

  void set(std::size_t b, const TriDiagSystem<T>& s) {
    for (std::size_t i = 0; i < n; ++i) {
      main[i * count + b] = s.main[i];
      rhs[i * count + b] = s.rhs[i];
    }
    for (std::size_t i = 0; i < s.sub.size(); ++i) {
      sub[i * count + b] = s.sub[i];
      sup[i * count + b] = s.sup[i];
    }
  }

  TriDiagSystem<T> member(std::size_t b) const {
    const std::size_t off = topology == Topology::cyclic ? n : n - 1;
    TriDiagSystem<T> s{std::vector<T>(off), std::vector<T>(n), std::vector<T>(off),
                       std::vector<T>(n), topology};
    for (std::size_t i = 0; i < n; ++i) {
      s.main[i] = main[i * count + b];
      s.rhs[i] = rhs[i * count + b];
    }
    for (std::size_t i = 0; i < off; ++i) {
      s.sub[i] = sub[i * count + b];
      s.sup[i] = sup[i * count + b];
    }
    return s;
  }
};

/// Pivots with max(|re|, |im|) below this are treated as zero.
inline constexpr double singular_pivot = 1e-300;

/// The cyclic correction denominator is a sum of O(1) terms; it is treated as
/// zero when it is within n * this * (sum of magnitudes) of cancelling out.
inline constexpr double cancellation_tolerance = 64.0 * std::numeric_limits<double>::epsilon();

namespace detail {

template <class T>
double pivot_size(const T& v) {
  if constexpr (requires { v.real(); }) return std::max(std::abs(v.real()), std::abs(v.imag()));
  else return std::abs(v);
}

inline constexpr std::size_t no_failure = std::numeric_limits<std::size_t>::max();

/// Interleaved elimination kernel shared by the scalar and batched solvers.
/// Solves members [first, last) of a batch laid out with `stride` between
/// consecutive rows. fail[b - first] receives the first singular pivot row
/// (or no_failure). Scalar solves call it with stride 1 and a single member,
/// which is what makes batched results bitwise equal to scalar ones.
template <class T>
void solve_interleaved(std::size_t n, std::size_t stride, std::size_t first, std::size_t last,
                       Topology topology, const T* sub, const T* main, const T* sup,
                       const T* rhs, T* x, std::size_t* fail) {
  const std::size_t width = last - first;
  const bool cyclic = topology == Topology::cyclic;
  auto at = [stride](std::size_t i, std::size_t b) { return i * stride + b; };

  std::vector<T> cp(n * width);
  std::vector<T> z(cyclic ? n * width : 0);
  std::vector<T> gamma(cyclic ? width : 0);
  std::vector<T> bend(cyclic ? width : 0);
  auto w = [width](std::size_t i, std::size_t k) { return i * width + k; };

  for (std::size_t k = 0; k < width; ++k) fail[k] = no_failure;

  // Sherman-Morrison: A = A' + u v^T with u = (gamma, 0.., alpha) and
  // v = (1, 0.., beta / gamma), where alpha = A(n-1, 0), beta = A(0, n-1).
  if (cyclic) {
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t b = first + k;
      const T m0 = main[at(0, b)];
      gamma[k] = pivot_size(m0) > singular_pivot ? -m0 : T(-1);
      const T alpha = sup[at(n - 1, b)];
      const T beta = sub[at(n - 1, b)];
      bend[k] = main[at(n - 1, b)] - alpha * beta / gamma[k];
    }
  }

  auto diag = [&](std::size_t i, std::size_t k) -> T {
    const std::size_t b = first + k;
    if (cyclic) {
      if (i == 0) return main[at(0, b)] - gamma[k];
      if (i == n - 1) return bend[k];
    }
    return main[at(i, b)];
  };

  // Forward sweep.
  for (std::size_t k = 0; k < width; ++k) {
    const std::size_t b = first + k;
    const T d0 = diag(0, k);
    if (pivot_size(d0) < singular_pivot) {
      fail[k] = 0;
      continue;
    }
    const T inv = T(1) / d0;
    cp[w(0, k)] = n > 1 ? sup[at(0, b)] * inv : T(0);
    x[at(0, b)] = rhs[at(0, b)] * inv;
    if (cyclic) z[w(0, k)] = gamma[k] * inv;
  }
  for (std::size_t i = 1; i < n; ++i) {
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t b = first + k;
      const T s = sub[at(i - 1, b)];
      const T denom = diag(i, k) - s * cp[w(i - 1, k)];
      if (pivot_size(denom) < singular_pivot) {
        if (fail[k] == no_failure) fail[k] = i;
        cp[w(i, k)] = T(0);
        x[at(i, b)] = T(0);
        if (cyclic) z[w(i, k)] = T(0);
        continue;
      }
      const T inv = T(1) / denom;
      cp[w(i, k)] = i + 1 < n ? sup[at(i, b)] * inv : T(0);
      x[at(i, b)] = (rhs[at(i, b)] - s * x[at(i - 1, b)]) * inv;
      if (cyclic) {
        const T u_i = i == n - 1 ? sup[at(n - 1, b)] : T(0);
        z[w(i, k)] = (u_i - s * z[w(i - 1, k)]) * inv;
      }
    }
  }

  // Back substitution.
  for (std::size_t i = n - 1; i-- > 0;) {
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t b = first + k;
      x[at(i, b)] -= cp[w(i, k)] * x[at(i + 1, b)];
      if (cyclic) z[w(i, k)] -= cp[w(i, k)] * z[w(i + 1, k)];
    }
  }

  if (!cyclic) return;
  for (std::size_t k = 0; k < width; ++k) {
    if (fail[k] != no_failure) continue;
    const std::size_t b = first + k;
    const T ratio = sub[at(n - 1, b)] / gamma[k];
    const T tail = ratio * z[w(n - 1, k)];
    const T denom = T(1) + z[w(0, k)] + tail;
    const double terms = 1.0 + pivot_size(z[w(0, k)]) + pivot_size(tail);
    if (pivot_size(denom) < singular_pivot ||
        pivot_size(denom) <= cancellation_tolerance * static_cast<double>(n) * terms) {
      fail[k] = n;
      continue;
    }
    const T fact = (x[at(0, b)] + ratio * x[at(n - 1, b)]) / denom;
    for (std::size_t i = 0; i < n; ++i) x[at(i, b)] -= fact * z[w(i, k)];
  }
}

template <class T>
std::vector<T> solve_single(const TriDiagSystem<T>& sys, Topology expected, const char* name) {
  sys.validate();
  if (sys.topology != expected)
    throw shape_error(std::string(name) + " called with the wrong topology");
  std::vector<T> x(sys.size());
  std::size_t fail = no_failure;
  solve_interleaved<T>(sys.size(), 1, 0, 1, sys.topology, sys.sub.data(), sys.main.data(),
                       sys.sup.data(), sys.rhs.data(), x.data(), &fail);
  if (fail != no_failure) {
    if (fail == sys.size()) throw singular_error(fail, "cyclic reduced system is singular");
    throw singular_error(fail, "zero pivot in tri-diagonal elimination");
  }
  return x;
}

}  // namespace detail

/// Thomas elimination without pivoting for an open system.
template <class T>
std::vector<T> solve_thomas(const TriDiagSystem<T>& sys) {
  return detail::solve_single(sys, Topology::open, "solve_thomas");
}

/// Cyclic system via a rank-1 correction of one open elimination.
template <class T>
std::vector<T> solve_cyclic(const TriDiagSystem<T>& sys) {
  return detail::solve_single(sys, Topology::cyclic, "solve_cyclic");
}

template <class T>
std::vector<T> solve(const TriDiagSystem<T>& sys) {
  return sys.topology == Topology::cyclic ? solve_cyclic(sys) : solve_thomas(sys);
}

/// Solves every member of `batch` into `out` (same SoA layout as batch.rhs).
/// Members are split into contiguous blocks over the pool; the result does
/// not depend on the split. Throws batch_error naming the lowest singular
/// member; `out` is then unspecified.
template <class T>
void solve_batch_into(const SolveBatch<T>& batch, std::span<T> out, ThreadPool& pool) {
  if (batch.count == 0 || batch.n == 0) throw shape_error("batch must be nonempty");
  if (batch.topology == Topology::cyclic && batch.n < 3)
    throw shape_error("cyclic system needs n >= 3");
  if (out.size() != batch.n * batch.count) throw shape_error("batch output has the wrong size");

  std::vector<std::size_t> fail(batch.count, detail::no_failure);
  pool.for_blocks(batch.count, [&](std::size_t first, std::size_t last) {
    detail::solve_interleaved<T>(batch.n, batch.count, first, last, batch.topology,
                                 batch.sub.data(), batch.main.data(), batch.sup.data(),
                                 batch.rhs.data(), out.data(), fail.data() + first);
  });
  for (std::size_t b = 0; b < batch.count; ++b)
    if (fail[b] != detail::no_failure) throw batch_error(b, fail[b]);
}

/// Ordered solutions, one vector per member.
template <class T>
std::vector<std::vector<T>> solve_batch(const SolveBatch<T>& batch, std::size_t parallel_hint) {
  ThreadPool pool(std::max<std::size_t>(1, parallel_hint));
  std::vector<T> flat(batch.n * batch.count);
  solve_batch_into<T>(batch, flat, pool);
  std::vector<std::vector<T>> out(batch.count, std::vector<T>(batch.n));
  for (std::size_t i = 0; i < batch.n; ++i)
    for (std::size_t b = 0; b < batch.count; ++b) out[b][i] = flat[i * batch.count + b];
  return out;
}

inline constexpr std::size_t dense_oracle_limit = 4096;

/// Reference solve: forms the full matrix and runs Gaussian elimination with
/// partial pivoting. O(n^3); for tests only.
template <class T>
std::vector<T> dense_oracle_solve(const TriDiagSystem<T>& sys) {
  sys.validate();
  const std::size_t n = sys.size();
  if (n > dense_oracle_limit) throw shape_error("dense oracle limited to n <= 4096");

  std::vector<T> a(n * n, T(0));
  auto A = [&](std::size_t i, std::size_t j) -> T& { return a[i * n + j]; };
  for (std::size_t i = 0; i < n; ++i) {
    A(i, i) += sys.main[i];
    if (i + 1 < n) {
      A(i, i + 1) += sys.sup[i];
      A(i + 1, i) += sys.sub[i];
    }
  }
  if (sys.topology == Topology::cyclic) {
    A(0, n - 1) += sys.sub[n - 1];
    A(n - 1, 0) += sys.sup[n - 1];
  }
  std::vector<T> b = sys.rhs;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A(r, col)) > std::abs(A(piv, col))) piv = r;
    if (std::abs(A(piv, col)) < singular_pivot) throw singular_error(col, "dense matrix is singular");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(A(col, j), A(piv, j));
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const T f = A(r, col) / A(col, col);
      if (f == T(0)) continue;
      for (std::size_t j = col; j < n; ++j) A(r, j) -= f * A(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<T> x(n);
  for (std::size_t i = n; i-- > 0;) {
    T acc = b[i];
    for (std::size_t j = i + 1; j < n; ++j) acc -= A(i, j) * x[j];
    x[i] = acc / A(i, i);
  }
  return x;
}

}  // namespace pe3d
