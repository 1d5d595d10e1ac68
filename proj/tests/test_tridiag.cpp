#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pe3d/pe3d.hpp"

using namespace pe3d;

namespace {

using Sys = TriDiagSystem<complex>;

Sys open_system(std::vector<complex> sub, std::vector<complex> main, std::vector<complex> sup,
                std::vector<complex> rhs) {
  return {std::move(sub), std::move(main), std::move(sup), std::move(rhs), Topology::open};
}

double inf_norm(const std::vector<complex>& v) {
  double out = 0.0;
  for (auto x : v) out = std::max(out, std::abs(x));
  return out;
}

double residual(const Sys& s, const std::vector<complex>& x) {
  const auto ax = s.multiply(x);
  double out = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) out = std::max(out, std::abs(ax[i] - s.rhs[i]));
  return out;
}

}  // namespace

TEST(Thomas, IdentitySystem) {
  const auto s = open_system({0.0, 0.0}, {1.0, 1.0, 1.0}, {0.0, 0.0}, {3.0, 4.0, 5.0});
  EXPECT_EQ(solve_thomas(s), (std::vector<complex>{3.0, 4.0, 5.0}));
}

TEST(Thomas, SecondDifferenceExample) {
  const auto s = open_system({-1.0, -1.0}, {2.0, 2.0, 2.0}, {-1.0, -1.0}, {1.0, 0.0, 1.0});
  const auto x = solve_thomas(s);
  for (auto v : x) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-15);
  for (auto v : dense_oracle_solve(s)) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-15);
}

TEST(Thomas, SingleUnknown) {
  const auto s = open_system({}, {complex(0.0, 2.0)}, {}, {complex(4.0, 0.0)});
  EXPECT_EQ(solve_thomas(s)[0], complex(0.0, -2.0));
}

TEST(Thomas, ZeroPivotReportsIndex) {
  const auto s = open_system({1.0, 1.0}, {1.0, 1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0, 1.0});
  try {
    solve_thomas(s);
    FAIL() << "expected singular_error";
  } catch (const singular_error& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  const auto z = open_system({0.0}, {0.0, 1.0}, {0.0}, {1.0, 1.0});
  try {
    solve_thomas(z);
    FAIL() << "expected singular_error";
  } catch (const singular_error& e) {
    EXPECT_EQ(e.index(), 0u);
  }
}

TEST(Thomas, RejectsWrongShapeOrTopology) {
  EXPECT_THROW(solve_thomas(open_system({1.0}, {1.0, 1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0, 1.0})),
               shape_error);
  Sys c{{1.0, 1.0, 1.0}, {3.0, 3.0, 3.0}, {1.0, 1.0, 1.0}, {1.0, 1.0, 1.0}, Topology::cyclic};
  EXPECT_THROW(solve_thomas(c), shape_error);
  EXPECT_THROW(solve_cyclic(open_system({0.0, 0.0}, {1.0, 1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0, 1.0})),
               shape_error);
}

TEST(Cyclic, RowSumExample) {
  const Sys s{{-1.0, -1.0, -1.0}, {3.0, 3.0, 3.0}, {-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0},
              Topology::cyclic};
  for (auto v : solve_cyclic(s)) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-14);
  for (auto v : oracle::solve(s)) EXPECT_NEAR(std::abs(v - 1.0), 0.0, 1e-14);
}

TEST(Cyclic, ZeroCornersMatchOpenSolve) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    auto s = random_dominant_system(rng, 17, Topology::cyclic);
    s.sub.back() = 0.0;
    s.sup.back() = 0.0;
    const Sys o{{s.sub.begin(), s.sub.end() - 1}, s.main, {s.sup.begin(), s.sup.end() - 1}, s.rhs,
                Topology::open};
    EXPECT_LE(oracle::relative_error(solve_cyclic(s), solve_thomas(o)), 1e-14);
  }
}

TEST(Cyclic, RejectsTinySystems) {
  const Sys s{{1.0, 1.0}, {3.0, 3.0}, {1.0, 1.0}, {1.0, 1.0}, Topology::cyclic};
  EXPECT_THROW(solve_cyclic(s), shape_error);
}

TEST(Cyclic, SingularRingReported) {
  const Sys s{{-1.0, -1.0, -1.0, -1.0}, {2.0, 2.0, 2.0, 2.0}, {-1.0, -1.0, -1.0, -1.0},
              {1.0, 0.0, 0.0, 0.0}, Topology::cyclic};
  EXPECT_THROW(solve_cyclic(s), singular_error);
}

TEST(Tridiag, RandomInstancesAgainstDenseOracles) {
  std::mt19937_64 rng(20261016);
  std::uniform_int_distribution<std::size_t> size(3, 128);
  for (int k = 0; k < 1200; ++k) {
    const auto topo = k % 2 == 0 ? Topology::open : Topology::cyclic;
    const auto s = random_dominant_system(rng, size(rng), topo);
    const auto x = solve(s);
    EXPECT_LE(residual(s, x), 1e-10 * std::max(1.0, inf_norm(s.rhs))) << "instance " << k;
    EXPECT_LE(oracle::relative_error(x, dense_oracle_solve(s)), 1e-10) << "instance " << k;
    EXPECT_LE(oracle::relative_error(x, oracle::solve(s)), 1e-10) << "instance " << k;
  }
}

TEST(Tridiag, Linearity) {
  std::mt19937_64 rng(22);
  for (auto topo : {Topology::open, Topology::cyclic}) {
    auto s1 = random_dominant_system(rng, 40, topo);
    auto s2 = s1;
    s2.rhs = random_dominant_system(rng, 40, topo).rhs;
    const complex a(0.3, -1.1), b(2.0, 0.5);
    auto s3 = s1;
    for (std::size_t i = 0; i < 40; ++i) s3.rhs[i] = a * s1.rhs[i] + b * s2.rhs[i];
    const auto x1 = solve(s1), x2 = solve(s2), x3 = solve(s3);
    std::vector<complex> ref(40);
    for (std::size_t i = 0; i < 40; ++i) ref[i] = a * x1[i] + b * x2[i];
    EXPECT_LE(oracle::relative_error(x3, ref), 1e-10);
  }
}

TEST(DenseOracle, Examples) {
  const auto id = open_system({0.0, 0.0}, {1.0, 1.0, 1.0}, {0.0, 0.0}, {3.0, -4.0, 5.0});
  EXPECT_EQ(dense_oracle_solve(id), id.rhs);
  const auto two = open_system({0.0}, {1.0, 1.0}, {1.0}, {2.0, 1.0});
  const auto x = dense_oracle_solve(two);
  EXPECT_NEAR(std::abs(x[0] - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(x[1] - 1.0), 0.0, 1e-15);
  EXPECT_THROW(dense_oracle_solve(open_system({1.0}, {1.0, 1.0}, {1.0}, {1.0, 1.0})),
               singular_error);
}

TEST(DenseOracle, PivotsWhereThomasCannot) {
  const auto s = open_system({1.0}, {0.0, 1.0}, {1.0}, {2.0, 3.0});
  EXPECT_THROW(solve_thomas(s), singular_error);
  const auto x = dense_oracle_solve(s);
  EXPECT_NEAR(std::abs(x[0] - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(x[1] - 2.0), 0.0, 1e-15);
}

TEST(Batch, SingleMemberEqualsScalar) {
  std::mt19937_64 rng(23);
  const std::vector<Sys> one{random_dominant_system(rng, 33, Topology::cyclic)};
  const auto out = solve_batch(SolveBatch<complex>::from_systems(one), 4);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], solve(one[0]));
}

TEST(Batch, IdenticalMembersGiveIdenticalSolutions) {
  std::mt19937_64 rng(24);
  const std::vector<Sys> many(100, random_dominant_system(rng, 25, Topology::open));
  const auto out = solve_batch(SolveBatch<complex>::from_systems(many), 3);
  for (const auto& x : out) EXPECT_EQ(x, out.front());
}

TEST(Batch, HintDoesNotChangeBits) {
  std::mt19937_64 rng(25);
  for (auto topo : {Topology::open, Topology::cyclic}) {
    std::vector<Sys> systems;
    for (int k = 0; k < 900; ++k) systems.push_back(random_dominant_system(rng, 24, topo));
    const auto batch = SolveBatch<complex>::from_systems(systems);
    const auto serial = solve_batch(batch, 1);
    EXPECT_EQ(serial, solve_batch(batch, 8));
    EXPECT_EQ(serial, solve_batch(batch, 5));
    for (std::size_t b = 0; b < systems.size(); ++b) ASSERT_EQ(serial[b], solve(systems[b]));
  }
}

TEST(Batch, SingularMemberNamed) {
  std::mt19937_64 rng(26);
  std::vector<Sys> systems;
  for (int k = 0; k < 10; ++k) systems.push_back(random_dominant_system(rng, 6, Topology::open));
  systems[7].main[0] = 0.0;
  systems[4].main[0] = 0.0;
  try {
    solve_batch(SolveBatch<complex>::from_systems(systems), 3);
    FAIL() << "expected batch_error";
  } catch (const batch_error& e) {
    EXPECT_EQ(e.member(), 4u);
    EXPECT_EQ(e.pivot(), 0u);
  }
}

TEST(Batch, RejectsMixedOrEmpty) {
  std::mt19937_64 rng(27);
  const std::vector<Sys> mixed{random_dominant_system(rng, 6, Topology::open),
                               random_dominant_system(rng, 7, Topology::open)};
  EXPECT_THROW(SolveBatch<complex>::from_systems(mixed), shape_error);
  EXPECT_THROW(SolveBatch<complex>::from_systems(std::vector<Sys>{}), shape_error);
}

TEST(Batch, RoundTripThroughLayout) {
  std::mt19937_64 rng(28);
  std::vector<Sys> systems;
  for (int k = 0; k < 5; ++k) systems.push_back(random_dominant_system(rng, 9, Topology::cyclic));
  const auto batch = SolveBatch<complex>::from_systems(systems);
  for (std::size_t b = 0; b < systems.size(); ++b) {
    const auto m = batch.member(b);
    EXPECT_EQ(m.main, systems[b].main);
    EXPECT_EQ(m.sub, systems[b].sub);
    EXPECT_EQ(m.sup, systems[b].sup);
    EXPECT_EQ(m.rhs, systems[b].rhs);
  }
}
