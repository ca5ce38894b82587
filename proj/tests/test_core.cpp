#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "toruslab/toruslab.hpp"

using namespace toruslab;

TEST(Rational, ParsesFractionsDecimalsAndExponents) {
  EXPECT_EQ(parse_rational("2/6"), Rational(1, 3));
  EXPECT_EQ(parse_rational("-3"), Rational(-3));
  EXPECT_EQ(parse_rational("0.501"), Rational(501, 1000));
  EXPECT_EQ(parse_rational("-.25"), Rational(-1, 4));
  EXPECT_EQ(parse_rational("1e-6"), Rational(1, 1'000'000));
  EXPECT_EQ(parse_rational("2.5E2"), Rational(250));
  EXPECT_THROW(parse_rational("1/0"), Error);
  EXPECT_THROW(parse_rational("abc"), Error);
  EXPECT_EQ(to_string(Rational(3)), "3/1");
}

TEST(Rational, FracAndRounding) {
  EXPECT_EQ(frac(Rational(-1, 3)), Rational(2, 3));
  EXPECT_EQ(frac(Rational(7, 3)), Rational(1, 3));
  EXPECT_DOUBLE_EQ(frac(-0.25), 0.75);
  EXPECT_EQ(round_nearest(Rational(1, 2)), BigInt(1));
  EXPECT_EQ(round_nearest(Rational(-1, 2)), BigInt(0));
  EXPECT_EQ(round_nearest(Rational(-7, 5)), BigInt(-1));
  EXPECT_EQ(lcm(BigInt(4), BigInt(6)), BigInt(12));
}

TEST(Rational, ExactFromDoubleIsLossless) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(g);
    EXPECT_EQ(to_double(exact_from_double(v)), v);
  }
}

TEST(TorusPoint, ReducesModOne) {
  auto p = TorusPoint::exact({Rational(-1, 3), Rational(5, 2)});
  EXPECT_EQ(p.exact_coords()[0], Rational(2, 3));
  EXPECT_EQ(p.exact_coords()[1], Rational(1, 2));
  auto q = TorusPoint::approx({1.25, -0.5});
  EXPECT_DOUBLE_EQ(q.approx_coords()[0], 0.25);
  EXPECT_DOUBLE_EQ(q.approx_coords()[1], 0.5);
  EXPECT_THROW(TorusPoint::approx({std::nan("")}), Error);
  EXPECT_THROW((void)q.exact_coords(), Error);
}

TEST(TorusDistance, WrapsAroundAndMatchesOracle) {
  EXPECT_NEAR(torus_distance(TorusPoint::approx({0.1}), TorusPoint::approx({0.9})), 0.2, 1e-15);
  EXPECT_NEAR(torus_distance(TorusPoint::exact({0, 0}), TorusPoint::exact({Rational(1, 2), Rational(1, 2)})),
              std::sqrt(0.5), 1e-15);
  std::mt19937_64 g(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 500; ++i) {
    DVec a{u(g), u(g), u(g)}, b{u(g), u(g), u(g)};
    const double d = torus_distance(TorusPoint::approx(a), TorusPoint::approx(b));
    EXPECT_NEAR(d, oracle::torus_dist(a, b), 1e-14);
    EXPECT_LE(d, std::sqrt(3.0) / 2 + 1e-15);
  }
}

TEST(TorusDistance, ExactSquaredForm) {
  RVec a{Rational(1, 10), Rational(0)}, b{Rational(9, 10), Rational(1, 4)};
  EXPECT_EQ(torus_distance_sq(a, b), Rational(1, 25) + Rational(1, 16));
}

TEST(IntMatrix, DeterminantMatchesCofactorExpansion) {
  std::mt19937_64 g(3);
  std::uniform_int_distribution<int> u(-5, 5);
  for (std::size_t n = 1; n <= 5; ++n)
    for (int t = 0; t < 40; ++t) {
      std::vector<BigInt> e;
      std::vector<std::vector<BigInt>> rows(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          e.emplace_back(u(g));
          rows[i].push_back(e.back());
        }
      EXPECT_EQ(IntMatrix(n, e).determinant(), oracle::det(rows));
    }
}

TEST(IntMatrix, ArithmeticAndApply) {
  IntMatrix a{{1, 1}, {0, 1}}, b{{1, 0}, {1, 1}};
  EXPECT_EQ(a * b, (IntMatrix{{2, 1}, {1, 1}}));
  EXPECT_EQ(a.transpose(), b);
  RVec x{Rational(1, 3), Rational(2, 3)};
  auto y = a.apply(x);
  EXPECT_EQ(y[0], Rational(1));
  EXPECT_EQ(y[1], Rational(2, 3));
}

TEST(AffineMap, ComposeAppliesRightFactorFirst) {
  AffineMap g{IntMatrix{{1, 1}, {0, 1}}, TorusPoint::exact({Rational(1, 2), 0})};
  AffineMap h{IntMatrix{{1, 0}, {1, 1}}, TorusPoint::exact({0, Rational(1, 3)})};
  const TorusPoint x = TorusPoint::exact({Rational(1, 5), Rational(2, 7)});
  EXPECT_EQ(apply_affine(compose(g, h), x), apply_affine(g, apply_affine(h, x)));
  EXPECT_EQ(apply_affine(identity_map(2), x), x);
}

TEST(OperatorNorm, BracketContainsEigenSvd) {
  auto b = operator_norm_bounds(IntMatrix{{2, 1}, {1, 1}});
  EXPECT_NEAR(b.estimate, (3 + std::sqrt(5.0)) / 2, 1e-12);
  std::mt19937_64 g(4);
  std::uniform_int_distribution<int> u(-6, 6);
  for (std::size_t n = 1; n <= 4; ++n)
    for (int t = 0; t < 25; ++t) {
      std::vector<BigInt> e;
      Eigen::MatrixXd m(n, n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          e.emplace_back(u(g));
          m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = e.back().convert_to<double>();
        }
      auto nb = operator_norm_bounds(IntMatrix(n, e));
      const double truth = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
      EXPECT_LE(nb.lower, truth + 1e-9);
      EXPECT_GE(nb.upper, truth - 1e-9);
      EXPECT_NEAR(nb.estimate, truth, 1e-6 * std::max(1.0, truth));
    }
}
