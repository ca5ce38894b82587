#include <gtest/gtest.h>

#include <cstdlib>

#include "oracles.hpp"
#include "toruslab/acceptance.hpp"

using namespace toruslab;
namespace acc = toruslab::acceptance::detail;

namespace {

// Direct sum of w e(<a, x>) in long double.
std::complex<double> direct_coefficient(const WeightedCloud& c, const Frequency& a) {
  long double re = 0, im = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    long double ph = 0;
    for (std::size_t k = 0; k < c.dim; ++k) ph += static_cast<long double>(a[k]) * c.point(i)[k];
    ph *= 2 * std::numbers::pi_v<long double>;
    re += c.weights[i] * std::cos(ph);
    im += c.weights[i] * std::sin(ph);
  }
  return {static_cast<double>(re), static_cast<double>(im)};
}

}  // namespace

TEST(Fourier, DiracHasUnitModulusAndExactPhase) {
  auto m = FiniteMeasure::dirac(TorusPoint::exact({Rational(1, 3), Rational(1, 4)}));
  auto z = fourier_coefficient(m, {1, 2});
  EXPECT_NEAR(std::abs(z), 1.0, 1e-15);
  EXPECT_NEAR(std::arg(z), 2 * std::numbers::pi * (1.0 / 3 + 0.5) - 2 * std::numbers::pi, 1e-12);
  EXPECT_NEAR(std::abs(fourier_coefficient(m, {3, 4}) - 1.0), 0.0, 1e-15);
}

TEST(Fourier, UniformGridMeasureKillsNonMultiples) {
  const long long q = 5;
  std::vector<std::pair<TorusPoint, Rational>> atoms;
  for (long long i = 0; i < q; ++i)
    for (long long j = 0; j < q; ++j) atoms.emplace_back(TorusPoint::exact({Rational(i, q), Rational(j, q)}), Rational(1, q * q));
  auto m = FiniteMeasure::from_exact(atoms);
  for (auto& a : frequency_box(2, 6)) {
    const bool multiple = a[0] % q == 0 && a[1] % q == 0;
    EXPECT_NEAR(std::abs(fourier_coefficient(m, a)), multiple ? 1.0 : 0.0, 1e-12);
  }
}

TEST(Fourier, CloudMatchesDirectSum) {
  Engine e = chain_engine(41, 0);
  for (int t = 0; t < 10; ++t) {
    WeightedCloud c = acc::random_cloud(e, 2, 200);
    for (auto& a : frequency_box(2, 3)) EXPECT_LT(std::abs(fourier_coefficient(c, a) - direct_coefficient(c, a)), 1e-12);
  }
}

TEST(Fourier, TransferRelationOnExactMeasures) {
  // (mu * nu)^(a) = sum_w p(w) e(<a, u(w)>) nu^(gamma(w)^T a).
  Engine e = chain_engine(42, 0);
  for (int t = 0; t < 30; ++t) {
    WalkSpec s = acc::random_exact_spec(e, 2, 1 + acc::pick(e, 3), 6);
    auto nu = FiniteMeasure::from_exact({{acc::random_exact_point(e, 2, 7), Rational(1, 2)},
                                         {acc::random_exact_point(e, 2, 7), Rational(1, 4)},
                                         {acc::random_exact_point(e, 2, 7), Rational(1, 4)}});
    Frequency a{static_cast<long long>(acc::pick(e, 7)) - 3, static_cast<long long>(acc::pick(e, 7)) - 3};
    const auto lhs = fourier_coefficient(exact_pushforward(s, nu, 1), a);
    std::complex<double> rhs = 0;
    for (std::size_t g = 0; g < s.size(); ++g) {
      Frequency b(2, 0);
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t r = 0; r < 2; ++r) b[c] += s[g].linear(r, c).convert_to<long long>() * a[r];
      double ph = 0;
      for (std::size_t c = 0; c < 2; ++c) ph += static_cast<double>(a[c]) * to_double(s[g].translation.exact_coords()[c]);
      rhs += to_double(s[g].weight) * std::polar(1.0, 2 * std::numbers::pi * ph) * fourier_coefficient(nu, b);
    }
    EXPECT_LT(std::abs(lhs - rhs), 1e-12);
  }
}

TEST(DecayScan, FirstRowIsOneAndRunsAreReproducible) {
  const auto x = TorusPoint::approx({0.3, 0.4});
  auto r1 = decay_scan(std_sl2(), x, {1, 0}, {0, 5, 10, 20}, 4000, 7);
  EXPECT_NEAR(r1.rows[0].value, 1.0, 1e-12);
  setenv("TORUSLAB_THREADS", "3", 1);
  auto r2 = decay_scan(std_sl2(), x, {1, 0}, {20, 10, 5, 0}, 4000, 7);
  unsetenv("TORUSLAB_THREADS");
  ASSERT_EQ(r1.rows.size(), r2.rows.size());
  for (std::size_t i = 0; i < r1.rows.size(); ++i) EXPECT_EQ(r1.rows[i].value, r2.rows[i].value);
  EXPECT_EQ(r1.spec_fingerprint, r2.spec_fingerprint);
  EXPECT_LT(r1.rows.back().value, 0.1);
}

TEST(DecayScan, MatchesExactCurveWithinNoise) {
  const auto x = TorusPoint::exact({Rational(1, 7), Rational(3, 11)});
  auto exact = exact_decay_curve(std_sl2(), x, {1, 1}, 8);
  std::vector<std::size_t> ns{0, 1, 2, 3, 4, 5, 6, 7, 8};
  auto mc = decay_scan(std_sl2(), x, {1, 1}, ns, 40'000, 3);
  for (std::size_t i = 0; i < ns.size(); ++i) EXPECT_LE(std::fabs(mc.rows[i].value - exact[i].value), 5 * mc.rows[i].stderr_ + 0.02);
}

TEST(DecayFit, RecoversSyntheticRate) {
  std::vector<DecayRow> rows;
  for (std::size_t n = 0; n <= 30; ++n) rows.push_back({n, 0.8 * std::exp(-0.25 * static_cast<double>(n)), 1e-6});
  auto fit = fit_decay(rows);
  ASSERT_TRUE(fit.valid);
  EXPECT_NEAR(fit.rate, 0.25, 1e-6);
}

TEST(TrappingCheck, ExactTrapAndDivisibility) {
  std::vector<std::size_t> ns{0, 10, 20, 30};
  auto rep = trapping_lowerbound_check(std_sl2(), trapped_q3_point(), 3, {3, 0}, ns, 2000, 1);
  EXPECT_TRUE(rep.exact_trap);
  for (const auto& r : rep.rows) EXPECT_NEAR(r.value, 1.0, 1e-9);
  EXPECT_TRUE(rep.lower_bound_holds);
  try {
    (void)trapping_lowerbound_check(std_sl2(), trapped_q3_point(), 3, {1, 0}, ns, 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::FrequencyNotDivisible);
  }
  const auto pert = TorusPoint::approx({1.0 / 3 + 1e-6, 2.0 / 3});
  std::vector<std::size_t> all;
  for (std::size_t n = 0; n <= 60; ++n) all.push_back(n);
  auto p = trapping_lowerbound_check(std_sl2(), pert, 3, {3, 0}, all, 4000, 2);
  EXPECT_FALSE(p.exact_trap);
  ASSERT_TRUE(p.crossover);
  EXPECT_GT(*p.crossover, 10u);
  EXPECT_LT(*p.crossover, 50u);
  EXPECT_TRUE(p.lower_bound_holds);
}

TEST(RateDichotomy, TrappedDatumIsConsistent) {
  auto v = rate_dichotomy_check(std_sl2(), trapped_q3_point(), {3, 0}, 0.45, 10, 1.0, 0.1, 1000, 1);
  EXPECT_TRUE(v.exact_measurement);
  EXPECT_TRUE(v.horn_decay_violated);
  EXPECT_TRUE(v.horn_trapped);
  EXPECT_TRUE(v.consistent);
  EXPECT_TRUE(v.witness.verify(std_sl2()));
  EXPECT_THROW(rate_dichotomy_check(std_sl2(), trapped_q3_point(), {3, 0}, 0.9, 10, 1.0, 0.1, 10, 1), Error);
}

TEST(RateDichotomy, GenericPointDecays) {
  const auto x = TorusPoint::approx({std::sqrt(2.0) - 1, std::sqrt(3.0) - 1});
  auto v = rate_dichotomy_check(std_sl2(), x, {1, 0}, 0.2, 40, 2.0, 0.05, 20'000, 4);
  EXPECT_FALSE(v.horn_decay_violated);
  EXPECT_TRUE(v.consistent);
}

TEST(ConvolutionBound, SmallInstancesAndBudget) {
  Engine e = chain_engine(43, 0);
  for (int t = 0; t < 30; ++t) {
    WalkSpec s = acc::random_exact_spec(e, 2, 1 + acc::pick(e, 3), 5);
    auto eta = FiniteMeasure::from_exact({{acc::random_exact_point(e, 2, 5), Rational(2, 3)},
                                          {acc::random_exact_point(e, 2, 5), Rational(1, 3)}});
    auto rep = mu0k_convolution_bound_check(s, eta, {1, 2}, 1 + t % 2);
    EXPECT_TRUE(rep.inequality_holds);
    EXPECT_TRUE(rep.set_bound_holds);
    EXPECT_EQ(rep.tuples, static_cast<std::size_t>(std::pow(s.size(), 2 * (1 + t % 2))));
  }
  try {
    (void)mu0k_convolution_bound_check(std_sl2(), FiniteMeasure::dirac(trapped_q3_point()), {1, 0}, 10, 1000);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EnumerationTooLarge);
  }
}

TEST(Granules, FindsTwoSeparatedClusters) {
  WeightedCloud c;
  c.dim = 2;
  for (int i = 0; i < 50; ++i) {
    c.coords.insert(c.coords.end(), {0.2 + 0.001 * (i % 7), 0.2 + 0.001 * (i % 5)});
    c.coords.insert(c.coords.end(), {0.7 + 0.001 * (i % 3), 0.6 + 0.001 * (i % 4)});
    c.weights.insert(c.weights.end(), {0.01, 0.01});
  }
  auto g = granule_detect(c, 0.3, 0.02, 0.9);
  ASSERT_TRUE(g.found);
  EXPECT_EQ(g.centers.size(), 2u);
  EXPECT_NEAR(g.captured_mass, 1.0, 1e-12);
  EXPECT_GE(torus_distance(g.centers[0].data(), g.centers[1].data(), 2), 0.3);
}

TEST(Weyl, BoxSizeAndArgmax) {
  EXPECT_EQ(frequency_box(2, 3).size(), 48u);
  EXPECT_EQ(frequency_box(1, 2).size(), 4u);
  auto m = FiniteMeasure::from_exact({{TorusPoint::exact({Rational(0), Rational(0)}), Rational(1, 2)},
                                      {TorusPoint::exact({Rational(1, 2), Rational(0)}), Rational(1, 2)}});
  auto t = weyl_scan(m, 2);
  EXPECT_NEAR(t.max_modulus, 1.0, 1e-15);
  EXPECT_EQ(t.argmax[0] % 2, 0);
}
