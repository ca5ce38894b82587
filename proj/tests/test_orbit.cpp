#include <gtest/gtest.h>

#include "oracles.hpp"
#include "toruslab/acceptance.hpp"
#include "toruslab/io.hpp"

using namespace toruslab;
namespace acc = toruslab::acceptance::detail;

namespace {

WalkSpec sl2_with(TorusPoint ua, TorusPoint ub) {
  return WalkSpec(2, {{"a", Rational(1, 2), IntMatrix{{1, 1}, {0, 1}}, ua}, {"b", Rational(1, 2), IntMatrix{{1, 0}, {1, 1}}, ub}});
}

TorusPoint ex(long long a, long long b, long long c, long long d) { return TorusPoint::exact({Rational(a, b), Rational(c, d)}); }

// Fixed points of every generator on the grid (1/m) Z^2 / Z^2.
std::vector<RVec> grid_fixed_points(const WalkSpec& s, long long m) {
  std::vector<RVec> out;
  for (long long i = 0; i < m; ++i)
    for (long long j = 0; j < m; ++j) {
      RVec x{Rational(i, m), Rational(j, m)};
      bool fixed = true;
      for (std::size_t g = 0; g < s.size(); ++g) fixed = fixed && oracle::step(s[g], x) == x;
      if (fixed) out.push_back(x);
    }
  return out;
}

}  // namespace

TEST(OrbitHeight, Examples) {
  EXPECT_EQ(orbit_height(std_sl2(), ex(1, 3, 2, 3)), BigInt(3));
  EXPECT_EQ(orbit_height(std_sl2(), ex(0, 1, 0, 1)), BigInt(1));
  EXPECT_EQ(orbit_height(std_sl2(), ex(1, 6, 0, 1)), BigInt(6));
  EXPECT_THROW(orbit_height(std_sl2(), TorusPoint::approx({0.1, 0.2})), Error);
}

TEST(OrbitHeight, MinimalityAndLcmOracle) {
  Engine e = chain_engine(31, 0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + t % 3;
    WalkSpec s = acc::random_exact_spec(e, d, 1 + acc::pick(e, 3), 4);
    const TorusPoint x = acc::random_exact_point(e, d, 5);
    BigInt l = 1;
    for (std::size_t g = 0; g < s.size(); ++g) {
      RVec y = oracle::step(s[g], x.exact_coords());
      for (std::size_t c = 0; c < d; ++c) l = lcm(l, denominator_of(oracle::frac(y[c] - x.exact_coords()[c])));
    }
    const BigInt q = orbit_height(s, x);
    EXPECT_EQ(q, l);
    auto member = is_in_PQ(s, x, q);
    EXPECT_TRUE(member);
    EXPECT_EQ(member.q, q);
    if (q > 1) {
      EXPECT_FALSE(is_in_PQ(s, x, q - 1));
    }
    // BFS enumeration: closed under every generator, every point shares the height.
    // The orbit lies in (q^{-1} Z / Z)^d, so skip it when that grid is large.
    if (pow(q, static_cast<unsigned>(d)) > 20'000) continue;
    auto rep = orbit_closure(s, x, 100'000, OrbitMode::BfsOnly);
    ASSERT_TRUE(rep.enumerated);
    std::set<RVec> pts;
    for (const auto& p : rep.orbit_points) pts.insert(p.exact_coords());
    for (const auto& p : pts)
      for (std::size_t g = 0; g < s.size(); ++g) EXPECT_TRUE(pts.count(oracle::step(s[g], p)));
    EXPECT_EQ(rep.height_q, q);
  }
}

TEST(OrbitClosure, TrappedDatum) {
  auto rep = orbit_closure(std_sl2(), trapped_q3_point());
  EXPECT_TRUE(rep.finite);
  EXPECT_TRUE(rep.enumerated);
  EXPECT_EQ(rep.height_q, BigInt(3));
  EXPECT_EQ(rep.orbit_points.size(), 8u);  // the nonzero points of (1/3 Z / Z)^2
  EXPECT_THROW(orbit_closure(std_sl2(), ex(1, 97, 0, 1), 10, OrbitMode::BfsOnly), Error);
}

TEST(IsInPQ, Examples) {
  EXPECT_TRUE(is_in_PQ(std_sl2(), trapped_q3_point(), BigInt(3)));
  EXPECT_FALSE(is_in_PQ(std_sl2(), trapped_q3_point(), BigInt(2)));
  EXPECT_FALSE(is_in_PQ(std_sl2(), TorusPoint::approx({std::sqrt(2.0) - 1, std::sqrt(3.0) - 1}), BigInt(50)));
  EXPECT_TRUE(is_in_PQ(std_sl2(), TorusPoint::approx({0.5, 0.25}), BigInt(4)));
}

TEST(DistanceToPQ, Examples) {
  auto zero = distance_to_PQ_upper(std_sl2(), trapped_q3_point(), BigInt(3));
  EXPECT_EQ(zero.bound, 0.0);
  EXPECT_TRUE(zero.witness.verify(std_sl2()));

  const TorusPoint pert = TorusPoint::exact({Rational(1, 3) + Rational(1, 1'000'000), Rational(2, 3)});
  auto d = distance_to_PQ_upper(std_sl2(), pert, BigInt(3));
  EXPECT_LE(d.bound, 1e-6 + 1e-9);
  EXPECT_TRUE(d.witness.verify(std_sl2()));
  EXPECT_LE(d.witness.q, BigInt(3));
}

TEST(DistanceToPQ, UpperBoundsTheSnapAtTheCurrentPoint) {
  // For q = 1 and x' = x, the best u' is x - gamma x exactly; its distance to u is a valid bound.
  Engine e = chain_engine(32, 0);
  for (int t = 0; t < 20; ++t) {
    const TorusPoint ua = TorusPoint::approx({uniform01(e), uniform01(e)});
    const TorusPoint ub = TorusPoint::approx({uniform01(e), uniform01(e)});
    WalkSpec s = sl2_with(ua, ub);
    const DVec x{uniform01(e), uniform01(e)};
    double snap = 0;
    for (std::size_t g = 0; g < 2; ++g) {
      const auto& m = s[g].linear;
      DVec base(2);
      for (std::size_t r = 0; r < 2; ++r)
        base[r] = x[r] - (m(r, 0).convert_to<double>() * x[0] + m(r, 1).convert_to<double>() * x[1]);
      snap = std::max(snap, oracle::torus_dist(base, s[g].translation.approx_coords()));
    }
    auto d1 = distance_to_PQ_upper(s, TorusPoint::approx(x), BigInt(1), 1e-3);
    EXPECT_LE(d1.bound, snap + 1e-12);
    EXPECT_TRUE(d1.witness.verify(s));
    auto d3 = distance_to_PQ_upper(s, TorusPoint::approx(x), BigInt(3), 1e-3);
    EXPECT_LE(d3.bound, d1.bound);  // P_1 is inside P_3
  }
}

TEST(IntegerLinearApprox, Examples) {
  auto a = solve_integer_linear_approx({{BigInt(2)}}, {Rational(501, 1000)}, Rational(2, 1000));
  EXPECT_EQ(a.q, BigInt(2));
  EXPECT_EQ(a.lattice_part[0], Rational(1, 2));
  EXPECT_EQ(a.remainder[0], Rational(1, 1000));
  EXPECT_TRUE(a.q_bound_holds);
  EXPECT_TRUE(a.remainder_bound_holds);

  // Point on the kernel of x - y.
  auto k = solve_integer_linear_approx({{BigInt(1), BigInt(-1)}}, {Rational(2, 7), Rational(2, 7)}, Rational(0));
  EXPECT_EQ(k.remainder, (RVec{0, 0}));
  EXPECT_EQ(k.lattice_part, (RVec{0, 0}));

  // Forms spanning the dual, at a perturbed point of (1/3) Z^2.
  IntRows forms{{BigInt(3), BigInt(0)}, {BigInt(0), BigInt(3)}};
  RVec p{Rational(1, 3) + Rational(1, 1'000'000'000), Rational(2, 3)};
  auto s = solve_integer_linear_approx(forms, p, Rational(1, 100'000'000));
  EXPECT_EQ(denominator_of(s.lattice_part[0] * Rational(s.q)), BigInt(1));
  EXPECT_EQ(denominator_of(s.lattice_part[1] * Rational(s.q)), BigInt(1));
  EXPECT_TRUE(s.remainder_bound_holds);

  try {
    (void)solve_integer_linear_approx({{BigInt(2)}}, {Rational(1, 4)}, Rational(1, 100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PreconditionViolated);
  }
}

TEST(FixedPointSolve, ConstructedFixedPoint) {
  const RVec x0{Rational(1, 5), Rational(2, 5)};
  std::vector<Generator> gens;
  const WalkSpec base = std_sl2();
  for (const auto& g : base.generators()) {
    RVec gx = g.linear.apply(x0);
    gens.push_back({g.label, g.weight, g.linear, TorusPoint::exact({x0[0] - gx[0], x0[1] - gx[1]})});
  }
  WalkSpec s(2, gens);
  auto r = fixed_point_solve(s);
  ASSERT_TRUE(r.point);
  for (std::size_t g = 0; g < s.size(); ++g) EXPECT_EQ(oracle::step(s[g], r.point->exact_coords()), r.point->exact_coords());
  auto grid = grid_fixed_points(s, 10);
  EXPECT_NE(std::find(grid.begin(), grid.end(), x0), grid.end());
  EXPECT_TRUE(r.finitely_many);
  EXPECT_EQ(r.class_count, BigInt(grid.size()));
}

TEST(FixedPointSolve, OriginForLinearSpec) {
  auto r = fixed_point_solve(std_sl2());
  ASSERT_TRUE(r.point);
  EXPECT_EQ(r.point->exact_coords(), (RVec{0, 0}));
}

TEST(FixedPointSolve, HalfTranslationHasTheFixedPointZeroHalf) {
  WalkSpec s = sl2_with(ex(1, 2, 0, 1), ex(0, 1, 0, 1));
  auto r = fixed_point_solve(s);
  ASSERT_TRUE(r.point);
  EXPECT_EQ(r.point->exact_coords(), (RVec{Rational(0), Rational(1, 2)}));
  EXPECT_EQ(grid_fixed_points(s, 12), (std::vector<RVec>{{Rational(0), Rational(1, 2)}}));
}

TEST(FixedPointSolve, NoneWhenCongruencesAreInconsistent) {
  WalkSpec s = sl2_with(ex(0, 1, 1, 2), ex(0, 1, 0, 1));
  EXPECT_FALSE(fixed_point_solve(s).point);
  // Every fixed point of the linear parts is 0 mod 1, so checking a fine grid is exhaustive.
  EXPECT_TRUE(grid_fixed_points(s, 60).empty());
}

TEST(FixedPointSolve, RandomSpecsAgreeWithGridEnumeration) {
  Engine e = chain_engine(33, 0);
  for (int t = 0; t < 60; ++t) {
    WalkSpec s = acc::random_exact_spec(e, 2, 1 + acc::pick(e, 2), 4);
    auto r = fixed_point_solve(s);
    // Fixed-point denominators divide (product of Smith invariants <= 4) * (u denominators <= 4).
    auto grid = grid_fixed_points(s, 48);
    EXPECT_EQ(r.point.has_value(), !grid.empty());
    if (r.point) {
      for (std::size_t g = 0; g < s.size(); ++g) EXPECT_EQ(oracle::step(s[g], r.point->exact_coords()), r.point->exact_coords());
      if (r.finitely_many) {
        EXPECT_EQ(r.class_count, BigInt(grid.size()));
      }
    }
  }
}

TEST(ConcentrationProbability, Examples) {
  const auto x = trapped_q3_point();
  EXPECT_EQ(concentration_probability(std_sl2(), x, x, 0), Rational(1));
  EXPECT_EQ(concentration_probability(std_sl2(), x, ex(0, 1, 1, 3), 0), Rational(0));
  auto law = oracle::word_law(std_sl2(), x.exact_coords(), 4);
  EXPECT_EQ(concentration_probability(std_sl2(), x, x, 4), law[x.exact_coords()]);
  WalkSpec fixed = sl2_with(ex(1, 2, 0, 1), ex(0, 1, 0, 1));
  const auto fp = ex(0, 1, 1, 2);
  for (std::size_t n = 0; n <= 6; ++n) EXPECT_EQ(concentration_probability(fixed, fp, fp, n), Rational(1));
}
