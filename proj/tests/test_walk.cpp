#include <gtest/gtest.h>

#include <cstdlib>

#include "oracles.hpp"
#include "toruslab/acceptance.hpp"

using namespace toruslab;
namespace acc = toruslab::acceptance::detail;

namespace {

WalkSpec two_gen(TorusPoint ua, TorusPoint ub) {
  return WalkSpec(2, {{"a", Rational(1, 2), IntMatrix{{1, 1}, {0, 1}}, ua}, {"b", Rational(1, 2), IntMatrix{{1, 0}, {1, 1}}, ub}});
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST(WalkSpec, Validation) {
  const auto zero = TorusPoint::exact({0, 0});
  EXPECT_EQ(kind_of([&] { WalkSpec(2, {{"a", Rational(1), IntMatrix{{2, 0}, {0, 1}}, zero}}); }), ErrorKind::DeterminantNotOne);
  EXPECT_EQ(kind_of([&] { WalkSpec(2, {{"a", Rational(1, 2), IntMatrix::identity(2), zero}}); }), ErrorKind::WeightsInvalid);
  EXPECT_EQ(kind_of([&] {
              WalkSpec(2, {{"a", Rational(3, 2), IntMatrix::identity(2), zero}, {"b", Rational(-1, 2), IntMatrix::identity(2), zero}});
            }),
            ErrorKind::WeightsInvalid);
  EXPECT_EQ(kind_of([&] { WalkSpec(2, {{"a", Rational(1), IntMatrix::identity(3), zero}}); }), ErrorKind::DimensionMismatch);
  EXPECT_EQ(kind_of([&] { (void)two_gen(zero, zero).index_of("c"); }), ErrorKind::UnknownLabel);
  EXPECT_TRUE(two_gen(zero, zero).is_exact());
  EXPECT_FALSE(two_gen(TorusPoint::approx({0.1, 0.2}), zero).is_exact());
}

TEST(Words, ComposeAppliesLastLetterFirst) {
  const auto s = two_gen(TorusPoint::exact({Rational(1, 2), 0}), TorusPoint::exact({0, Rational(1, 3)}));
  const RVec x{Rational(1, 5), Rational(3, 7)};
  const AffineMap w = compose_word(s, Word{"a", "b", "b"});
  RVec y = oracle::step(s[0], oracle::step(s[1], oracle::step(s[1], x)));
  EXPECT_EQ(apply_affine(w, TorusPoint::exact(x)).exact_coords(), y);
  EXPECT_EQ(word_probability(s, {0, 1, 1}), Rational(1, 8));
  const auto z = TorusPoint::exact({0, 0});
  EXPECT_EQ(compose_word(two_gen(z, z), Word{"a", "b"}).linear, (IntMatrix{{2, 1}, {1, 1}}));
}

TEST(ExactPushforward, MatchesWordEnumerationAndConservesMass) {
  Engine e = chain_engine(21, 0);
  for (int t = 0; t < 40; ++t) {
    const std::size_t d = 1 + t % 3;
    WalkSpec s = acc::random_exact_spec(e, d, 1 + acc::pick(e, 3), 5);
    const TorusPoint x = acc::random_exact_point(e, d, 5);
    const std::size_t n = acc::pick(e, 5);
    FiniteMeasure m = exact_pushforward(s, FiniteMeasure::dirac(x), n);
    EXPECT_EQ(m.exact_total_mass(), Rational(1));
    auto law = oracle::word_law(s, x.exact_coords(), n);
    ASSERT_EQ(m.size(), law.size());
    for (const auto& [p, w] : law) EXPECT_EQ(m.exact_mass_at(TorusPoint::exact(p)), w);
  }
}

TEST(ExactPushforward, SemigroupProperty) {
  Engine e = chain_engine(22, 0);
  for (int t = 0; t < 20; ++t) {
    WalkSpec s = acc::random_exact_spec(e, 2, 2, 4);
    auto nu = FiniteMeasure::from_exact({{acc::random_exact_point(e, 2, 4), Rational(1, 3)},
                                         {acc::random_exact_point(e, 2, 4), Rational(2, 3)}});
    auto direct = exact_pushforward(s, nu, 5);
    auto split = exact_pushforward(s, exact_pushforward(s, nu, 2), 3);
    ASSERT_EQ(direct.size(), split.size());
    for (std::size_t i = 0; i < direct.size(); ++i) EXPECT_EQ(direct.exact_mass_at(direct.point(i)), split.exact_mass_at(direct.point(i)));
  }
}

TEST(ExactPushforward, SupportCap) {
  const auto s = two_gen(TorusPoint::exact({Rational(1, 101), 0}), TorusPoint::exact({0, Rational(1, 103)}));
  try {
    (void)exact_pushforward(s, FiniteMeasure::dirac(TorusPoint::exact({Rational(1, 7), 0})), 12, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SupportCapExceeded);
  }
}

TEST(Sampling, ReproducibleAndThreadInvariant) {
  const auto s = two_gen(TorusPoint::approx({0.1, 0.2}), TorusPoint::exact({0, 0}));
  const auto x = TorusPoint::approx({0.3, 0.7});
  setenv("TORUSLAB_THREADS", "1", 1);
  auto a = monte_carlo_measure(s, x, 25, 5000, 9, Arithmetic::Float);
  setenv("TORUSLAB_THREADS", "4", 1);
  auto b = monte_carlo_measure(s, x, 25, 5000, 9, Arithmetic::Float);
  unsetenv("TORUSLAB_THREADS");
  EXPECT_EQ(a.coords, b.coords);
  auto c = monte_carlo_measure(s, x, 25, 5000, 10, Arithmetic::Float);
  EXPECT_NE(a.coords, c.coords);
  // Chain c of the sample is sample_endpoint(seed, c).
  for (std::size_t chain : {0u, 17u, 4999u}) {
    auto p = sample_endpoint(s, x, 25, 9, chain).to_doubles();
    EXPECT_EQ(p, DVec(a.point(chain), a.point(chain) + 2));
  }
}

TEST(Sampling, ExactSamplesFollowTheWordLaw) {
  const auto s = two_gen(TorusPoint::exact({Rational(1, 2), 0}), TorusPoint::exact({0, Rational(1, 3)}));
  const auto x = TorusPoint::exact({Rational(1, 4), 0});
  auto law = oracle::word_law(s, x.exact_coords(), 3);
  for (std::size_t c = 0; c < 200; ++c) {
    auto p = sample_endpoint(s, x, 3, 5, c);
    ASSERT_TRUE(p.is_exact());
    EXPECT_TRUE(law.count(p.exact_coords()));
  }
}

TEST(FiniteMeasure, MergesDuplicatesAndRejectsNegativeWeights) {
  auto m = FiniteMeasure::from_exact({{TorusPoint::exact({Rational(1, 3)}), Rational(1, 4)},
                                      {TorusPoint::exact({Rational(4, 3)}), Rational(1, 4)},
                                      {TorusPoint::exact({Rational(1, 2)}), Rational(1, 2)}});
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.exact_mass_at(TorusPoint::exact({Rational(1, 3)})), Rational(1, 2));
  EXPECT_THROW(FiniteMeasure::from_exact({{TorusPoint::exact({0}), Rational(-1)}}), Error);
  auto f = FiniteMeasure::from_float({{TorusPoint::approx({0.25}), 0.5}, {TorusPoint::approx({0.25 + 1e-14}), 0.5}});
  EXPECT_EQ(f.size(), 1u);
}

TEST(Lyapunov, HyperbolicAndIsometricSpecs) {
  WalkSpec hyp(2, {{"A", Rational(1), IntMatrix{{2, 1}, {1, 1}}, TorusPoint::exact({0, 0})}});
  auto est = estimate_lyapunov(hyp, 2000, 4, 1);
  EXPECT_NEAR(est.value, std::log((3 + std::sqrt(5.0)) / 2), 2e-3);
  WalkSpec iso(2, {{"I", Rational(1), IntMatrix::identity(2), TorusPoint::exact({Rational(1, 3), 0})}});
  EXPECT_NEAR(estimate_lyapunov(iso, 500, 4, 1).value, 0.0, 1e-12);
  auto sl2 = estimate_lyapunov(two_gen(TorusPoint::exact({0, 0}), TorusPoint::exact({0, 0})), 3000, 32, 2);
  EXPECT_GT(sl2.value, 0.2);
  EXPECT_LT(sl2.value, 0.6);
}
