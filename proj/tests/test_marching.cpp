#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pe3d/pe3d.hpp"

using namespace pe3d;

namespace {

struct Small {
  Grid3D grid;
  Environment env;
  MediumTable medium;

  Small(Grid3D g, SoundSpeedField ssp, Absorber absorber)
      : grid(g), env(grid, 1500.0, std::move(ssp), Bathymetry::flat(grid.bottom_depth()), absorber),
        medium(grid, env) {}
};

Grid3D make_grid(std::size_t M, std::size_t L, AzimuthTopology topo) {
  Grid3D g;
  g.n_range = 4;
  g.n_azimuth = M;
  g.n_depth = L;
  g.delta_r = 3.0;
  g.delta_theta = topo == AzimuthTopology::periodic ? two_pi / static_cast<double>(M) : 0.4;
  g.delta_z = 2.0;
  g.r_start = 6.0;
  g.azimuth_topology = topo;
  return g;
}

FieldSlab random_slab(std::mt19937_64& rng, std::size_t M, std::size_t L) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FieldSlab s(M, L);
  for (auto& v : s.values()) v = {u(rng), u(rng)};
  return s;
}

oracle::StepGeometry geometry_of(const Small& s, double k0) {
  oracle::StepGeometry geo;
  geo.M = static_cast<Eigen::Index>(s.grid.n_azimuth);
  geo.L = static_cast<Eigen::Index>(s.grid.n_depth);
  geo.k0 = k0;
  geo.dz = s.grid.delta_z;
  geo.dtheta = s.grid.delta_theta;
  geo.r_old = s.grid.range(0);
  geo.r_new = s.grid.range(1);
  geo.periodic = s.grid.azimuth_topology == AzimuthTopology::periodic;
  for (std::size_t m = 0; m < s.grid.n_azimuth; ++m) {
    const auto a = s.medium.column(geo.r_old, m), b = s.medium.column(geo.r_new, m);
    geo.n_old.emplace_back(a.begin(), a.end());
    geo.n_new.emplace_back(b.begin(), b.end());
  }
  return geo;
}

void expect_matches_dense_step(const Small& s, double k0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto u = random_slab(rng, s.grid.n_azimuth, s.grid.n_depth);
  const auto coeffs = step_coefficients(k0, s.grid.delta_r);
  const auto next = range_step(MarchState{u, 0, coeffs, &s.medium});
  const auto ref = oracle::step(geometry_of(s, k0), coeffs, oracle::to_vec(u.values()));
  EXPECT_LE(oracle::relative_error(next.slab.values(), oracle::to_std(ref)), 1e-10);
}

}  // namespace

TEST(ApplyBoundary, SurfaceZeroedAndIdempotent) {
  std::mt19937_64 rng(31);
  const auto g = make_grid(5, 6, AzimuthTopology::periodic);
  const auto s = random_slab(rng, 5, 6);
  const auto once = apply_boundary(s, g);
  for (std::size_t m = 0; m < 5; ++m) EXPECT_EQ(once(m, 0), complex{});
  EXPECT_EQ(apply_boundary(once, g), once);
  for (std::size_t l = 1; l < 6; ++l) {
    EXPECT_EQ(once(0, l), s(0, l));
    EXPECT_EQ(once(4, l), s(4, l));
  }
}

TEST(ApplyBoundary, SectorEdgesZeroed) {
  std::mt19937_64 rng(32);
  const auto g = make_grid(5, 6, AzimuthTopology::sector);
  const auto b = apply_boundary(random_slab(rng, 5, 6), g);
  for (std::size_t l = 0; l < 6; ++l) {
    EXPECT_EQ(b(0, l), complex{});
    EXPECT_EQ(b(4, l), complex{});
  }
  EXPECT_NE(b(2, 3), complex{});
}

TEST(RangeStep, DenseOracleThreeByThree) {
  const Small s(make_grid(3, 3, AzimuthTopology::periodic), SoundSpeedField::homogeneous(1500.0),
                Absorber{3.0, 0.0});
  expect_matches_dense_step(s, 0.2, 1);
}

TEST(RangeStep, DenseOracleWithIndexAndAbsorber) {
  const DepthProfile p{{0.0, 10.0}, {1480.0, 1530.0}};
  const Small s(make_grid(5, 6, AzimuthTopology::periodic), SoundSpeedField::uniform(p),
                Absorber{4.0, 0.05});
  expect_matches_dense_step(s, 0.3, 2);
}

TEST(RangeStep, DenseOracleSector) {
  const Small s(make_grid(6, 5, AzimuthTopology::sector), SoundSpeedField::homogeneous(1490.0),
                Absorber{5.0, 0.02});
  expect_matches_dense_step(s, 0.25, 3);
}

TEST(RangeStep, DeltaZeroIsBitwiseIdentity) {
  std::mt19937_64 rng(33);
  for (auto topo : {AzimuthTopology::periodic, AzimuthTopology::sector}) {
    const Small s(make_grid(7, 9, topo), SoundSpeedField::homogeneous(1450.0), Absorber{10.0, 0.03});
    const auto u = apply_boundary(random_slab(rng, 7, 9), s.grid);
    const auto next = range_step(MarchState{u, 0, step_coefficients(0.2, 0.0), &s.medium});
    EXPECT_TRUE(std::equal(u.values().begin(), u.values().end(), next.slab.values().begin()));
    EXPECT_EQ(next.step, 1u);
  }
}

TEST(RangeStep, PreservesAzimuthSymmetry) {
  const Small s(make_grid(12, 30, AzimuthTopology::periodic), SoundSpeedField::homogeneous(1500.0),
                Absorber{40.0, 0.01});
  const double k0 = 0.2;
  MarchState st{gaussian_starter(s.grid, {{50.0}, 20.0, StarterKind::gaussian}, k0), 0,
                step_coefficients(k0, s.grid.delta_r), &s.medium};
  st = range_step(std::move(st));
  const double scale = st.slab.max_abs();
  for (std::size_t l = 0; l < 30; ++l)
    for (std::size_t m = 1; m < 12; ++m)
      EXPECT_LE(std::abs(std::abs(st.slab(m, l)) - std::abs(st.slab(0, l))), 1e-12 * scale);
}

TEST(RangeStep, AdvancesRangeAndRespectsLimit) {
  const Small s(make_grid(4, 5, AzimuthTopology::periodic), SoundSpeedField::homogeneous(1500.0),
                Absorber{6.0, 0.01});
  MarchState st{FieldSlab(4, 5, 6.0), 3, step_coefficients(0.2, 3.0), &s.medium};
  st = range_step(std::move(st));
  EXPECT_EQ(st.step, 4u);
  EXPECT_DOUBLE_EQ(st.slab.range(), 6.0 + 4 * 3.0);
  EXPECT_THROW(range_step(std::move(st)), domain_error);
  EXPECT_THROW(range_step(MarchState{FieldSlab(3, 5), 0, step_coefficients(0.2, 3.0), &s.medium}),
               shape_error);
}

TEST(RangeStep, SingularDepthSolveCarriesLocation) {
  const Small s(make_grid(4, 5, AzimuthTopology::periodic), SoundSpeedField::homogeneous(1500.0),
                Absorber{6.0, 0.0});
  auto c = step_coefficients(0.2, 3.0);
  c.cx_lhs = 1.0 / (2.0 * depth_scale(0.2, s.grid.delta_z));
  try {
    range_step(MarchState{FieldSlab(4, 5), 2, c, &s.medium});
    FAIL() << "expected step_error";
  } catch (const step_error& e) {
    EXPECT_EQ(e.step(), 2u);
    EXPECT_EQ(e.sweep(), Sweep::depth);
    EXPECT_EQ(e.index(), 0u);
  }
}

TEST(RangeStep, SingularAzimuthSolveCarriesLocation) {
  const Small s(make_grid(4, 5, AzimuthTopology::sector), SoundSpeedField::homogeneous(1500.0),
                Absorber{6.0, 0.0});
  auto c = step_coefficients(0.2, 3.0);
  c.cy_lhs = 1.0 / (2.0 * azimuth_scale(0.2, s.grid.range(1), s.grid.delta_theta));
  try {
    range_step(MarchState{FieldSlab(4, 5), 0, c, &s.medium});
    FAIL() << "expected step_error";
  } catch (const step_error& e) {
    EXPECT_EQ(e.step(), 0u);
    EXPECT_EQ(e.sweep(), Sweep::azimuth);
    EXPECT_EQ(e.index(), 0u);
  }
}

TEST(RunFrequency, ZeroStepsKeepsOnlyStarter) {
  auto sc = homogeneous_scenario(8, 40, 5, {50.0});
  sc.grid.r_start = sc.grid.max_range();
  const auto res = run_frequency(sc, 50.0);
  EXPECT_EQ(res.n_ranges(), 1u);
  EXPECT_DOUBLE_EQ(res.ranges[0], sc.grid.max_range());
  EXPECT_EQ(res.tl.size(), 8u * 40u);
}

TEST(RunFrequency, StrideAndSampleCount) {
  auto sc = homogeneous_scenario(8, 40, 21, {50.0});
  sc.options.output_stride = 4;
  const auto res = run_frequency(sc, 50.0);
  ASSERT_EQ(res.n_ranges(), 6u);
  for (std::size_t i = 0; i < res.n_ranges(); ++i)
    EXPECT_DOUBLE_EQ(res.ranges[i], sc.grid.range(4 * i));
  EXPECT_EQ(res.tl.size(), 6u * 8u * 40u);
  for (double v : res.tl) EXPECT_TRUE(std::isfinite(v));
}

TEST(RunFrequency, AutoStrideCapsSamples) {
  Grid3D g;
  g.n_range = 2000;
  g.delta_r = 1.0;
  g.r_start = 1.0;
  RunOptions opt;
  const auto k = resolve_output_stride(g, opt);
  EXPECT_LE((g.step_count() / k) + 1, max_auto_range_samples);
  opt.output_stride = 7;
  EXPECT_EQ(resolve_output_stride(g, opt), 7u);
}

TEST(RunFrequency, RejectsUnknownFrequency) {
  const auto sc = homogeneous_scenario(8, 40, 5, {50.0});
  EXPECT_THROW(run_frequency(sc, 51.0), domain_error);
}

TEST(RunFrequency, RerunIsBitwiseIdentical) {
  const auto sc = homogeneous_scenario(10, 50, 15, {40.0});
  const auto a = run_frequency(sc, 40.0, 1);
  const auto b = run_frequency(sc, 40.0, 3);
  EXPECT_EQ(a.tl, b.tl);
  EXPECT_EQ(a.final_slab, b.final_slab);
  EXPECT_EQ(a.ranges, b.ranges);
}

TEST(RunFrequency, NoBlowUpWithAbsorber) {
  const auto sc = homogeneous_scenario(8, 100, 200, {50.0}, 10.0);
  const double k0 = wavenumber(50.0, 1500.0);
  const double start = gaussian_starter(sc.grid, sc.source, k0).max_abs();
  const auto res = run_frequency(sc, 50.0);
  EXPECT_LE(res.final_slab.max_abs(), 10.0 * start);
}

TEST(RunFrequency, EnergyNotGainedWithoutAbsorber) {
  auto sc = homogeneous_scenario(8, 100, 60, {50.0}, 10.0);
  const Environment lossless(sc.grid, 1500.0, SoundSpeedField::homogeneous(1500.0),
                             Bathymetry::flat(sc.grid.bottom_depth()), Absorber{0.0, 0.0});
  sc.environment = lossless;
  const double k0 = wavenumber(50.0, 1500.0);
  auto norm = [](const FieldSlab& s) {
    double e = 0.0;
    for (auto v : s.values()) e += std::norm(v);
    return e;
  };
  const double e0 = norm(apply_boundary(gaussian_starter(sc.grid, sc.source, k0), sc.grid));
  const auto res = run_frequency(sc, 50.0);
  const double ratio = norm(res.final_slab) / e0;
  EXPECT_LE(ratio, 1.0 + 1e-12);
  EXPECT_GT(ratio, 0.5);
}
