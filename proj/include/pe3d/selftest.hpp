#pragma once

// Invariant suite bundled with the CLI (`pe3d selftest`).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "pe3d/config.hpp"
#include "pe3d/env_model.hpp"
#include "pe3d/farm.hpp"
#include "pe3d/marching.hpp"
#include "pe3d/operators.hpp"
#include "pe3d/tridiag.hpp"

namespace pe3d {

using TriSolver = std::function<std::vector<complex>(const TriDiagSystem<complex>&)>;

struct SelftestOptions {
  std::uint64_t seed = 20261016;
  /// Test hook: perturbs every solver result, which must make the oracle
  /// property fail.
  bool corrupt_solver = false;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Random diagonally dominant complex system.
inline TriDiagSystem<complex> random_dominant_system(std::mt19937_64& rng, std::size_t n,
                                                     Topology topo) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto draw = [&] { return complex(u(rng), u(rng)); };
  const std::size_t off = topo == Topology::cyclic ? n : n - 1;
  TriDiagSystem<complex> s{std::vector<complex>(off), std::vector<complex>(n),
                           std::vector<complex>(off), std::vector<complex>(n), topo};
  for (auto& v : s.sub) v = draw();
  for (auto& v : s.sup) v = draw();
  for (auto& v : s.rhs) v = draw();
  for (std::size_t i = 0; i < n; ++i) {
    const complex left = topo == Topology::cyclic ? s.sub[(i + n - 1) % n]
                                                  : (i > 0 ? s.sub[i - 1] : complex{});
    const complex right = (topo == Topology::cyclic || i + 1 < n) ? s.sup[i] : complex{};
    const double radius = std::abs(left) + std::abs(right);
    const double phase = std::uniform_real_distribution<double>(0.0, two_pi)(rng);
    s.main[i] = std::polar(radius + 0.5 + std::abs(u(rng)), phase);
  }
  return s;
}

inline std::string format_error(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

inline double relative_error(const std::vector<complex>& x, const std::vector<complex>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num = std::max(num, std::abs(x[i] - ref[i]));
    den = std::max(den, std::abs(ref[i]));
  }
  return num / std::max(den, 1e-300);
}

/// Small homogeneous scenario used by several properties.
inline Scenario homogeneous_scenario(std::size_t n_azimuth, std::size_t n_depth, std::size_t n_range,
                                     std::vector<double> frequencies, double delta_r = 5.0) {
  Grid3D g;
  g.n_range = n_range;
  g.n_azimuth = n_azimuth;
  g.n_depth = n_depth;
  g.delta_r = delta_r;
  g.delta_theta = two_pi / static_cast<double>(n_azimuth);
  g.delta_z = 2.0;
  g.r_start = delta_r;
  g.azimuth_topology = AzimuthTopology::periodic;
  g.validate();
  const double bottom = g.bottom_depth();
  Environment env(g, 1500.0, SoundSpeedField::homogeneous(1500.0), Bathymetry::flat(bottom),
                  Absorber{0.75 * bottom, 0.01});
  SourceSpec src{std::move(frequencies), 0.3 * bottom, StarterKind::gaussian};
  src.validate(env);
  RunOptions opt;
  opt.output_stride = 1;
  return {g, std::move(env), std::move(src), opt, {}};
}

inline double azimuth_spread(const FieldSlab& s) {
  double spread = 0.0;
  for (std::size_t l = 0; l < s.n_depth(); ++l) {
    double lo = 1e300, hi = 0.0;
    for (std::size_t m = 0; m < s.n_azimuth(); ++m) {
      const double a = std::abs(s(m, l));
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
    spread = std::max(spread, hi - lo);
  }
  return spread;
}

inline std::vector<PropertyResult> run_selftest(const SelftestOptions& opt) {
  std::vector<PropertyResult> out;
  std::mt19937_64 rng(opt.seed);
  TriSolver solver = [](const TriDiagSystem<complex>& s) { return solve(s); };
  if (opt.corrupt_solver) {
    solver = [](const TriDiagSystem<complex>& s) {
      auto x = solve(s);
      x.front() *= 1.0 + 1e-6;
      return x;
    };
  }

  {
    PropertyResult p{"tridiag-oracle-equivalence", true, ""};
    double worst = 0.0;
    std::uniform_int_distribution<std::size_t> size(3, 128);
    for (int k = 0; k < 400; ++k) {
      const auto topo = k % 2 == 0 ? Topology::open : Topology::cyclic;
      const auto sys = random_dominant_system(rng, size(rng), topo);
      worst = std::max(worst, relative_error(solver(sys), dense_oracle_solve(sys)));
    }
    p.passed = worst <= 1e-10;
    p.detail = "400 systems, max relative error " + format_error(worst);
    out.push_back(p);
  }

  {
    PropertyResult p{"batch-determinism", true, ""};
    std::vector<TriDiagSystem<complex>> systems;
    for (int k = 0; k < 96; ++k) systems.push_back(random_dominant_system(rng, 40, Topology::cyclic));
    const auto batch = SolveBatch<complex>::from_systems(systems);
    const auto one = solve_batch(batch, 1);
    const auto four = solve_batch(batch, 4);
    bool scalar_equal = true;
    for (std::size_t b = 0; b < systems.size(); ++b) scalar_equal &= one[b] == solve(systems[b]);
    p.passed = one == four && scalar_equal;
    p.detail = "96 cyclic systems, hint 1 vs 4 and scalar";
    out.push_back(p);
  }

  {
    PropertyResult p{"delta-zero-identity", true, ""};
    const auto sc = homogeneous_scenario(8, 32, 4, {50.0});
    const MediumTable medium(sc.grid, sc.environment);
    const double k0 = wavenumber(50.0, 1500.0);
    auto slab = gaussian_starter(sc.grid, sc.source, k0);
    for (auto& v : slab.values()) v *= complex(0.6, -0.8);
    slab = apply_boundary(std::move(slab), sc.grid);
    const auto next = range_step(MarchState{slab, 0, step_coefficients(k0, 0.0), &medium});
    p.passed = next.slab.values().size() == slab.values().size() &&
               std::equal(slab.values().begin(), slab.values().end(), next.slab.values().begin());
    p.detail = "8x32 slab, delta_r = 0, bitwise";
    out.push_back(p);
  }

  {
    PropertyResult p{"azimuth-symmetry", true, ""};
    const auto sc = homogeneous_scenario(16, 64, 21, {50.0});
    const auto res = run_frequency(sc, 50.0);
    const double rel = azimuth_spread(res.final_slab) / res.final_slab.max_abs();
    p.passed = rel <= 1e-9;
    p.detail = "16x64, 20 steps, relative spread " + format_error(rel);
    out.push_back(p);
  }

  {
    PropertyResult p{"run-determinism", true, ""};
    const auto sc = homogeneous_scenario(12, 48, 11, {40.0, 50.0, 60.0});
    const auto ref = frequency_farm(sc, ExecutorSpec{1, 1});
    const auto par = frequency_farm(sc, ExecutorSpec{3, 2});
    bool same = ref.all_ok() && par.all_ok();
    for (std::size_t i = 0; same && i < ref.outcomes.size(); ++i)
      same = ref.outcomes[i].result->tl == par.outcomes[i].result->tl &&
             ref.outcomes[i].result->final_slab == par.outcomes[i].result->final_slab;
    p.passed = same;
    p.detail = "3 frequencies, 1x1 vs 2 workers x 3 threads, bitwise";
    out.push_back(p);
  }

  {
    PropertyResult p{"matrix-free-agreement", true, ""};
    const std::size_t L = 24;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<complex> n(L), x(L);
    for (auto& v : n) v = {1.0 + 0.05 * u(rng), 0.01 * std::abs(u(rng))};
    for (auto& v : x) v = {u(rng), u(rng)};
    const complex coeff(0.25, -0.3);
    const auto sys = assemble_depth_system(coeff, n, 0.2, 2.0, x);
    const auto ax = sys.multiply(x);
    const auto xu = apply_X(x, n, 0.2, 2.0);
    std::vector<complex> ref(L);
    for (std::size_t l = 0; l < L; ++l) ref[l] = x[l] + coeff * xu[l];
    const double rel = relative_error(ax, ref);
    p.passed = rel <= 1e-13;
    p.detail = "depth system vs I + c X, relative error " + format_error(rel);
    out.push_back(p);
  }
  return out;
}

inline int cmd_selftest(const SelftestOptions& opt, std::ostream& os) {
  os << "pe3d selftest (seed " << opt.seed << ")\n";
  const auto results = run_selftest(opt);
  int failed = 0;
  for (const auto& r : results) {
    os << (r.passed ? "PASS " : "FAIL ") << r.name << " : " << r.detail << "\n";
    failed += r.passed ? 0 : 1;
  }
  os << (failed == 0 ? "all properties passed" : std::to_string(failed) + " properties failed")
     << "\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace pe3d
