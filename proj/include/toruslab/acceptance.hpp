#pragma once

// Acceptance suite: one verdict per criterion with its runtime budget.

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "toruslab/io.hpp"
#include "toruslab/toruslab.hpp"

namespace toruslab::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool ok = false;        // the numerical assertions
  double seconds = 0;
  double budget = 0;      // seconds
  std::string detail;

  bool pass() const { return ok && seconds <= budget; }
};

namespace detail {

inline const std::vector<IntMatrix>& sl2_pool() {
  static const std::vector<IntMatrix> pool{
      IntMatrix{{1, 1}, {0, 1}},  IntMatrix{{1, 0}, {1, 1}},  IntMatrix{{1, -1}, {0, 1}}, IntMatrix{{1, 0}, {-1, 1}},
      IntMatrix{{2, 1}, {1, 1}},  IntMatrix{{0, -1}, {1, 0}}, IntMatrix{{1, 2}, {0, 1}},  IntMatrix{{-1, 0}, {0, -1}},
      IntMatrix{{1, 1}, {1, 2}},  IntMatrix{{3, 2}, {1, 1}},  IntMatrix{{2, 3}, {1, 2}}};
  return pool;
}

inline std::size_t pick(Engine& e, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(e) * static_cast<double>(n)));
}

inline Rational random_rational(Engine& e, long long max_den) {
  const long long q = 1 + static_cast<long long>(pick(e, static_cast<std::size_t>(max_den)));
  return Rational(static_cast<long long>(pick(e, static_cast<std::size_t>(q))), q);
}

inline TorusPoint random_exact_point(Engine& e, std::size_t d, long long max_den) {
  RVec c;
  for (std::size_t i = 0; i < d; ++i) c.push_back(random_rational(e, max_den));
  return TorusPoint::exact(std::move(c));
}

inline std::vector<Rational> random_weights(Engine& e, std::size_t m) {
  std::vector<Rational> w;
  long long total = 0;
  std::vector<long long> raw;
  for (std::size_t i = 0; i < m; ++i) total += raw.emplace_back(1 + static_cast<long long>(pick(e, 4)));
  for (auto r : raw) w.emplace_back(r, total);
  return w;
}

// d in {1, 2, 3}; d = 3 embeds the 2x2 pool in the top-left or bottom-right block.
inline WalkSpec random_exact_spec(Engine& e, std::size_t d, std::size_t m, long long max_den) {
  const auto w = random_weights(e, m);
  std::vector<Generator> gens;
  for (std::size_t i = 0; i < m; ++i) {
    IntMatrix lin = IntMatrix::identity(d);
    if (d == 2) {
      lin = sl2_pool()[pick(e, sl2_pool().size())];
    } else if (d == 3) {
      const IntMatrix& b = sl2_pool()[pick(e, sl2_pool().size())];
      const std::size_t off = pick(e, 2);
      for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c) lin(r + off, c + off) = b(r, c);
    }
    gens.push_back({std::string(1, static_cast<char>('a' + i)), w[i], lin, random_exact_point(e, d, max_den)});
  }
  return WalkSpec(d, std::move(gens));
}

inline FpWalkSpec random_fp_spec(Engine& e, i64 p, std::size_t m) {
  std::vector<std::string> labels;
  std::vector<std::vector<i64>> mats, trans;
  for (std::size_t i = 0; i < m; ++i) {
    labels.emplace_back(1, static_cast<char>('a' + i));
    const IntMatrix& b = sl2_pool()[pick(e, sl2_pool().size())];
    std::vector<i64> mm;
    for (const auto& v : b.entries()) mm.push_back(mod_p(v, p));
    mats.push_back(mm);
    trans.push_back({static_cast<i64>(pick(e, static_cast<std::size_t>(p))), static_cast<i64>(pick(e, static_cast<std::size_t>(p)))});
  }
  return FpWalkSpec(p, 2, labels, random_weights(e, m), mats, trans);
}

// Random finite measure: a few clusters plus uniform background atoms.
inline WeightedCloud random_cloud(Engine& e, std::size_t d, std::size_t atoms) {
  WeightedCloud c;
  c.dim = d;
  const std::size_t clusters = 1 + pick(e, 4);
  std::vector<DVec> centres(clusters, DVec(d));
  for (auto& ctr : centres)
    for (auto& v : ctr) v = uniform01(e);
  const double spread = std::ldexp(1.0, -static_cast<int>(2 + pick(e, 8)));
  for (std::size_t i = 0; i < atoms; ++i) {
    const bool clustered = uniform01(e) < 0.7;
    const auto& ctr = centres[pick(e, clusters)];
    for (std::size_t k = 0; k < d; ++k)
      c.coords.push_back(clustered ? frac(ctr[k] + spread * (uniform01(e) - 0.5)) : uniform01(e));
    c.weights.push_back(0.05 + uniform01(e));
  }
  const double total = c.total_mass();
  for (auto& w : c.weights) w /= total;
  return c;
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// Sequential letter-by-letter application with plain rationals.
inline RVec apply_letter(const Generator& g, const RVec& x) {
  const std::size_t d = x.size();
  RVec y(d, Rational(0));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) y[i] += Rational(g.linear(i, j)) * x[j];
    y[i] = frac(y[i] + g.translation.exact_coords()[i]);
  }
  return y;
}

}  // namespace detail

// 1. Trapped frequency: |^|(3,0) = 1 for n <= 20 on the height-3 datum.
inline CriterionResult trapped_frequency_identity() {
  CriterionResult r{1, "trapped-frequency identity", false, 0, 1.0, ""};
  auto rows = exact_decay_curve(std_sl2(), trapped_q3_point(), {3, 0}, 20);
  double worst = 0;
  for (const auto& row : rows) worst = std::max(worst, std::fabs(row.value - 1.0));
  r.ok = rows.size() == 21 && worst <= 1e-12;
  r.detail = "max | |^| - 1 | over n<=20 = " + detail::fmt(worst);
  return r;
}

// 2. Equidistribution: max 0 < |a|_inf <= 3 of |^| <= 0.02 at n = 60, N = 1e5, 5 seeds.
inline CriterionResult equidistribution_decay() {
  CriterionResult r{2, "equidistribution decay", true, 0, 120.0, ""};
  const TorusPoint x = TorusPoint::approx({std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0});
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    WeylTable t = weyl_scan(monte_carlo_measure(std_sl2(), x, 60, 100'000, seed, Arithmetic::Float), 3);
    worst = std::max(worst, t.max_modulus);
  }
  r.ok = worst <= 0.02;
  r.detail = "max |^| over seeds = " + detail::fmt(worst);
  return r;
}

// 3. Trapping crossover of the perturbed height-3 datum at a = (3,0).
inline CriterionResult trapping_crossover() {
  CriterionResult r{3, "trapping crossover", true, 0, 300.0, ""};
  const std::size_t N = 10'000, n_max = 100;
  std::vector<std::size_t> ns;
  for (std::size_t n = 0; n <= n_max; ++n) ns.push_back(n);
  auto run = [&](double delta, std::uint64_t seed) {
    const TorusPoint x = TorusPoint::approx({1.0 / 3.0 + delta, 2.0 / 3.0});
    return decay_scan(std_sl2(), x, {3, 0}, ns, N, seed).rows;
  };
  auto half_life = [](const std::vector<DecayRow>& rows) {
    for (const auto& row : rows)
      if (row.value <= 0.5) return static_cast<long long>(row.n);
    return static_cast<long long>(-1);
  };
  long long max_n1 = -1, min_n2 = -1, max_n2 = -1;
  bool monotone = true;
  std::string windows;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto rows = run(1e-6, seed);
    long long n1 = -1, n2 = -1;
    for (const auto& row : rows) {
      if (row.value < 0.9) break;
      n1 = static_cast<long long>(row.n);
    }
    for (const auto& row : rows)
      if (row.value <= 0.1) {
        n2 = static_cast<long long>(row.n);
        break;
      }
    if (n1 < 0 || n2 < 0 || n1 >= n2) r.ok = false;
    max_n1 = std::max(max_n1, n1);
    min_n2 = min_n2 < 0 ? n2 : std::min(min_n2, n2);
    max_n2 = std::max(max_n2, n2);
    windows += (seed > 1 ? " " : "") + std::to_string(n1) + ".." + std::to_string(n2);
    const long long coarse = half_life(run(1e-3, seed)), fine = half_life(run(1e-9, seed));
    monotone = monotone && coarse >= 0 && fine >= 0 && coarse < fine;
  }
  r.ok = r.ok && max_n1 < min_n2 && monotone;
  r.detail = "windows [" + windows + "], common window " + std::to_string(max_n1) + " < n* < " +
             std::to_string(min_n2) + ", delta-monotone " + (monotone ? "yes" : "no");
  return r;
}

// 4. Checkerboard certificate over random measures, both test functions, r in {0.3, 0.1}.
inline CriterionResult checkerboard_certificate() {
  CriterionResult r{4, "checkerboard certificate", true, 0, 30.0, ""};
  Engine e = chain_engine(4, 0);
  const std::function<double(const double*)> one = [](const double*) { return 1.0; };
  // Smoothed indicator of {x_1 in [1/4, 3/4]} with ramps of width 0.1.
  const std::function<double(const double*)> half = [](const double* p) {
    const double dist = std::fabs(p[0] - 0.5);
    return std::clamp(0.5 + (0.25 - dist) / 0.1, 0.0, 1.0);
  };
  std::size_t runs = 0, failures = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t d = 1 + i % 3;
    WeightedCloud nu = detail::random_cloud(e, d, 1 + detail::pick(e, 1000));
    for (const auto* f : {&one, &half})
      for (double rad : {0.3, 0.1}) {
        double fm = 0;
        for (std::size_t k = 0; k < nu.size(); ++k) fm += nu.weights[k] * (*f)(nu.point(k));
        if (fm <= 0) continue;
        Decomposition dec = checkerboard_decompose(nu, *f, rad, 0.5, 1000 + i);
        ++runs;
        if (!(dec.f_mass_ok && dec.diagonal_ok && dec.separation_ok)) ++failures;
      }
  }
  r.ok = failures == 0;
  r.detail = std::to_string(runs) + " decompositions, " + std::to_string(failures) + " failures";
  return r;
}

// 5. Convolution bound on random small instances.
inline CriterionResult convolution_bound() {
  CriterionResult r{5, "convolution bound", true, 0, 30.0, ""};
  Engine e = chain_engine(5, 0);
  std::size_t failures = 0;
  double worst_gap = -1e300;
  for (std::size_t i = 0; i < 100; ++i) {
    const std::size_t m = 1 + detail::pick(e, 3), k = 1 + detail::pick(e, 2), atoms = 1 + detail::pick(e, 6);
    WalkSpec spec = detail::random_exact_spec(e, 2, m, 6);
    std::vector<std::pair<TorusPoint, Rational>> at;
    for (const auto& w : detail::random_weights(e, atoms)) at.emplace_back(detail::random_exact_point(e, 2, 7), w);
    FiniteMeasure eta = FiniteMeasure::from_exact(at);
    Frequency a{static_cast<long long>(detail::pick(e, 7)) - 3, static_cast<long long>(detail::pick(e, 7)) - 3};
    if (a[0] == 0 && a[1] == 0) a[0] = 1;
    auto rep = mu0k_convolution_bound_check(spec, eta, a, k);
    worst_gap = std::max(worst_gap, rep.lhs - rep.rhs);
    if (!rep.inequality_holds || !rep.set_bound_holds) ++failures;
  }
  r.ok = failures == 0;
  r.detail = "100 instances, " + std::to_string(failures) + " failures, max lhs-rhs = " + detail::fmt(worst_gap);
  return r;
}

// 6. Integer-linear approximation bounds, checked exactly outside the solver.
inline CriterionResult integer_linear_solver() {
  CriterionResult r{6, "integer-linear approximation", true, 0, 10.0, ""};
  Engine e = chain_engine(6, 0);
  std::size_t failures = 0, small_r = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const std::size_t D = 1 + i % 3, k = 1 + detail::pick(e, D + 1);
    const long long M = 1 + static_cast<long long>(detail::pick(e, 10));
    IntRows forms(k, std::vector<BigInt>(D));
    for (auto& f : forms)
      for (auto& v : f) v = static_cast<long long>(detail::pick(e, static_cast<std::size_t>(2 * M + 1))) - M;
    forms[0][detail::pick(e, D)] = M;  // at least one nonzero form
    BigInt m2 = 0;
    for (const auto& f : forms) {
      BigInt s = 0;
      for (const auto& v : f) s += v * v;
      m2 = std::max(m2, s);
    }
    // Base point with phi(y) in Z: a random rational point whose images are integers, else 0.
    RVec y(D, Rational(0));
    for (int attempt = 0; attempt < 50; ++attempt) {
      RVec cand;
      const long long L = 1 + static_cast<long long>(detail::pick(e, 12));
      for (std::size_t c = 0; c < D; ++c) cand.emplace_back(static_cast<long long>(detail::pick(e, static_cast<std::size_t>(L))), L);
      bool integral = true;
      for (const auto& f : forms) {
        Rational s = 0;
        for (std::size_t c = 0; c < D; ++c) s += Rational(f[c]) * cand[c];
        integral = integral && denominator_of(s) == 1;
      }
      if (integral) {
        y = cand;
        break;
      }
    }
    Rational rad;
    RVec x = y;
    if (i % 2 == 0) {
      rad = Rational(1 + static_cast<long long>(detail::pick(e, 10)), 1000);
      const Rational step = rad / Rational(static_cast<long long>(D) * M * 2);
      for (auto& c : x) c += step * Rational(static_cast<long long>(detail::pick(e, 2001)) - 1000, 1000);
      ++small_r;
    } else {
      x = detail::random_exact_point(e, D, 50).exact_coords();
      rad = 0;
      for (const auto& f : forms) {
        Rational s = 0;
        for (std::size_t c = 0; c < D; ++c) s += Rational(f[c]) * x[c];
        rad = std::max(rad, Rational(abs(s - Rational(round_nearest(s)))));
      }
    }
    auto res = solve_integer_linear_approx(forms, x, rad);
    BigInt bound_q = 1;
    for (std::size_t c = 0; c < D; ++c) bound_q *= m2;  // q^2 <= M^{2D}
    Rational rem2 = 0;
    for (const auto& v : res.remainder) rem2 += v * v;
    Rational bound_rem = rad * rad;
    for (std::size_t c = 0; c < D; ++c) bound_rem *= Rational(static_cast<long long>(D));
    for (std::size_t c = 0; c + 1 < D; ++c) bound_rem *= Rational(m2);
    bool ok = res.q >= 1 && res.q * res.q <= bound_q && rem2 <= bound_rem;
    for (std::size_t c = 0; c < D; ++c) {
      ok = ok && res.kernel_part[c] + res.lattice_part[c] + res.remainder[c] == x[c];
      ok = ok && denominator_of(res.lattice_part[c] * Rational(res.q)) == 1;
    }
    for (const auto& f : forms) {
      Rational s = 0;
      for (std::size_t c = 0; c < D; ++c) s += Rational(f[c]) * res.kernel_part[c];
      ok = ok && s == 0;
    }
    if (!ok) ++failures;
  }
  r.ok = failures == 0;
  r.detail = "200 systems (" + std::to_string(small_r) + " near-lattice), " + std::to_string(failures) + " failures";
  return r;
}

// 7. Contraction fit on std-sl2 and an isometric control.
inline CriterionResult contraction_hypothesis() {
  CriterionResult r{7, "contraction hypothesis", false, 0, 120.0, ""};
  auto pairs = dyadic_pairs(2, 1000, 7);
  ContractionFit fit = fit_contraction(std_sl2(), 0.05, 20, pairs, 1000, 7);
  WalkSpec control(2, {{"s", Rational(1, 2), IntMatrix::identity(2), TorusPoint::exact({Rational(1, 3), Rational(1, 5)})},
                       {"t", Rational(1, 2), IntMatrix::identity(2), TorusPoint::exact({Rational(2, 7), 0})}});
  ContractionFit ctl = fit_contraction(control, 0.05, 20, pairs, 1000, 7);
  r.ok = fit.a_hat < 1 && std::fabs(ctl.a_hat - 1) <= 1e-9;
  r.detail = "a_hat = " + detail::fmt(fit.a_hat) + ", C_hat = " + detail::fmt(fit.C_hat) +
             ", control a_hat - 1 = " + detail::fmt(ctl.a_hat - 1);
  return r;
}

// 8. Margulis inequality: C2 calibrated on one suite, checked on a disjoint one.
inline CriterionResult margulis_inequality() {
  CriterionResult r{8, "margulis inequality", false, 0, 300.0, ""};
  const double alpha = 0.5, lambda = 0.1;
  std::vector<WalkSpec> specs{std_sl2(), hyperbolic_pair(),
                              WalkSpec(2, {{"a", Rational(1, 2), IntMatrix{{1, 1}, {0, 1}}, TorusPoint::exact({Rational(1, 7), 0})},
                                           {"b", Rational(1, 2), IntMatrix{{1, 0}, {1, 1}}, TorusPoint::exact({0, Rational(2, 5)})}})};
  auto measure = [](Engine& e, std::size_t atoms) {
    std::vector<std::pair<TorusPoint, Rational>> at;
    const TorusPoint ctr = detail::random_exact_point(e, 2, 16);
    for (const auto& w : detail::random_weights(e, atoms)) {
      // Half the atoms sit within 1/64 of a common centre.
      if (detail::pick(e, 2) == 0) {
        RVec c = ctr.exact_coords();
        for (auto& v : c) v += Rational(static_cast<long long>(detail::pick(e, 9)) - 4, 256);
        at.emplace_back(TorusPoint::exact(c), w);
      } else {
        at.emplace_back(detail::random_exact_point(e, 2, 64), w);
      }
    }
    return FiniteMeasure::from_exact(at);
  };
  auto suite = [&](std::uint64_t seed, const std::vector<double>& rhos, const std::vector<std::size_t>& n2s) {
    Engine e = chain_engine(seed, 0);
    std::vector<MargulisTerms> out;
    for (const auto& spec : specs)
      for (std::size_t j = 0; j < 4; ++j) {
        FiniteMeasure nu = measure(e, 4 + detail::pick(e, 12));
        for (double rho : rhos)
          for (std::size_t n2 : n2s) out.push_back(margulis_terms(spec, nu, n2, rho, alpha, 20'000, seed + j));
      }
    return out;
  };
  const auto calib = suite(81, {0.05, 0.1, 0.2, 0.3}, {2, 4, 6, 8});
  const double c2 = calibrate_c2(calib, lambda);
  const auto held = suite(82, {0.07, 0.15, 0.25}, {3, 5, 7});
  std::size_t holds = 0, noisy = 0;
  for (const auto& t : held) {
    auto c = margulis_inequality_check(t, lambda, c2);
    if (c.holds) {
      ++holds;
    } else if (!c.within_noise) {
      ++noisy;
    }
  }
  const double frac_ok = static_cast<double>(holds) / static_cast<double>(held.size());
  r.ok = frac_ok >= 0.99 && noisy == 0;
  r.detail = "C2 = " + detail::fmt(c2) + " from " + std::to_string(calib.size()) + " cases; held-out " +
             std::to_string(holds) + "/" + std::to_string(held.size()) + " hold, " + std::to_string(noisy) +
             " beyond 2 stderr";
  return r;
}

// 9. Lyapunov exponent of the single hyperbolic matrix.
inline CriterionResult lyapunov_oracle() {
  CriterionResult r{9, "lyapunov oracle", false, 0, 30.0, ""};
  WalkSpec spec(2, {{"A", Rational(1), IntMatrix{{2, 1}, {1, 1}}, TorusPoint::exact({0, 0})}});
  auto est = estimate_lyapunov(spec, 10'000, 32, 9);
  const double truth = std::log((3.0 + std::sqrt(5.0)) / 2.0);
  r.ok = std::fabs(est.value - truth) <= 1e-3;
  r.detail = "estimate " + detail::fmt(est.value) + " vs " + detail::fmt(truth);
  return r;
}

inline FpWalkSpec std_sl2_mod(i64 p) { return reduce_spec_mod_p(std_sl2(), p); }

// 10. F_p exactness block.
inline CriterionResult fp_exactness() {
  CriterionResult r{10, "F_p exactness", true, 0, 60.0, ""};
  std::ostringstream det;
  for (i64 p : {5, 7, 11}) {
    FpWalkSpec s = std_sl2_mod(p);
    FpWalkSpec affine(p, 2, {"a", "b"}, {Rational(1, 3), Rational(2, 3)}, {s.matrix(0), s.matrix(1)}, {{1, 0}, {2, p - 1}});
    Engine e = chain_engine(10, static_cast<std::uint64_t>(p));
    std::vector<double> f(s.points());
    for (auto& v : f) v = uniform01(e) - 0.3;
    double parseval = 0, dual = 0, dom = -1;
    for (const FpWalkSpec* t : {&s, &affine}) {
      auto c = fp_dual_action_check(*t, f);
      parseval = std::max(parseval, c.parseval_error);
      dual = std::max(dual, c.dual_action_error);
      dom = std::max(dom, c.domination_excess);
    }
    auto census = fp_orbit_census(s);
    bool census_ok = !census.orbits.empty() && census.orbits[0] == std::vector<std::size_t>{0};
    for (std::size_t i = 1; i < census.orbits.size(); ++i)
      census_ok = census_ok && static_cast<i64>(census.orbits[i].size()) >= p;
    const std::size_t start = s.index({1, 0});
    const std::size_t orbit = fp_affine_orbit(s, start).size();
    const double linf = primal_norm(fp_evolve(s, fp_dirac<double>(s, start), 50), kInfNorm);
    const double rel = std::fabs(linf * static_cast<double>(orbit) - 1.0);
    const bool ok = parseval <= 1e-10 && dual <= 1e-10 && dom <= 1e-12 && census_ok && rel <= 0.1;
    r.ok = r.ok && ok;
    det << (p == 5 ? "" : "; ") << "p=" << p << " parseval " << detail::fmt(parseval) << " dual " << detail::fmt(dual)
        << " domination " << (dom <= 1e-12 ? "ok" : "FAIL") << " orbits " << census.orbits.size() << " linf*orbit "
        << detail::fmt(linf * static_cast<double>(orbit));
  }
  r.detail = det.str();
  return r;
}

inline FpWalkSpec sl2_f5_symmetric() {
  return FpWalkSpec(5, 2, {"A", "a", "B", "b"}, {Rational(1, 4), Rational(1, 4), Rational(1, 4), Rational(1, 4)},
                    {{1, 1, 0, 1}, {1, 4, 0, 1}, {1, 0, 1, 1}, {1, 0, 4, 1}}, {{0, 0}, {0, 0}, {0, 0}, {0, 0}});
}

// 11. Spectral gap block on SL_2(F_5).
inline CriterionResult spectral_gap() {
  CriterionResult r{11, "spectral gap", false, 0, 120.0, ""};
  FpWalkSpec s = sl2_f5_symmetric();
  GroupTable g(s);
  const double gap = regular_rep_gap(g, 1).norm;
  bool submult = true;
  for (std::size_t k = 2; k <= 12; ++k) submult = submult && regular_rep_gap(g, k).norm <= std::pow(gap, k) + 1e-9;
  std::size_t k = 1;
  while (std::pow(gap, static_cast<double>(k)) > std::exp2(-5.0)) ++k;
  const bool orbit_hyp = fp_orbit_census(s).small_orbits_only_zero;
  Engine e = chain_engine(11, 0);
  std::size_t qualifying = 0, violations = 0;
  bool certified = false;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    std::vector<double> eta(s.points(), 0.0);
    const std::size_t support = 1 + detail::pick(e, s.points());
    double total = 0;
    for (std::size_t i = 0; i < support; ++i) total += (eta[detail::pick(e, s.points())] += uniform01(e));
    for (auto& v : eta) v /= total;
    auto c = l4_decay_check(s, g, k, eta, orbit_hyp);
    certified = c.norm_hypothesis;
    if (c.qualifying) ++qualifying;
    if (!c.holds) ++violations;
  }
  r.ok = g.order() == 120 && gap < 1 && submult && certified && violations == 0;
  r.detail = "order " + std::to_string(g.order()) + ", g = " + detail::fmt(gap) + ", k = " + std::to_string(k) +
             " (g^k = " + detail::fmt(std::pow(gap, k)) + "), qualifying eta " + std::to_string(qualifying) + "/50";
  return r;
}

// 12. Fixed-point dichotomy mod p and the initial decay bound.
inline CriterionResult fixed_point_dichotomy() {
  CriterionResult r{12, "fixed-point dichotomy", false, 0, 60.0, ""};
  FpWalkSpec fixed = fp_fixedpoint();
  auto v1 = gap_dichotomy_verdict(fixed, 0.1, 50);
  auto fp = fp_fixed_point(fixed);
  const bool trapped = v1.verdict == Dichotomy::Trapped && v1.fixed_point &&
                       *v1.fixed_point == std::vector<i64>{2, 3} && fp.solution_dim == 0;
  FpWalkSpec s7 = std_sl2_mod(7);
  auto v2 = gap_dichotomy_verdict(s7, 0.1, 50, s7.index({1, 0}));
  const bool decay = v2.verdict == Dichotomy::Decay && v2.first_below_practical.has_value();
  Engine e = chain_engine(12, 0);
  std::size_t init_fail = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    FpWalkSpec s = detail::random_fp_spec(e, i % 2 ? 7 : 5, 2 + detail::pick(e, 2));
    if (!initial_decay_check(s, 30).holds) ++init_fail;
  }
  r.ok = trapped && decay && init_fail == 0;
  r.detail = std::string("fixed-point spec ") + (trapped ? "TRAPPED at (2,3)" : "not trapped") + "; std-sl2 mod 7 " +
             (v2.verdict == Dichotomy::Decay ? "DECAY" : "TRAPPED") + ", first L^inf <= 2/" +
             std::to_string(v2.orbit_size) + " at n = " +
             (v2.first_below_practical ? std::to_string(*v2.first_below_practical) : "never") +
             "; initial decay failures " + std::to_string(init_fail) + "/20";
  return r;
}

// 13. Concentration probability against brute-force word enumeration.
inline CriterionResult exhaustive_words() {
  CriterionResult r{13, "exhaustive-word oracle", true, 0, 60.0, ""};
  Engine e = chain_engine(13, 0);
  std::size_t checks = 0, failures = 0;
  for (std::size_t i = 0; i < 50; ++i) {
    const std::size_t d = 1 + i % 2, m = 1 + detail::pick(e, 3);
    WalkSpec spec = detail::random_exact_spec(e, d, m, 6);
    const TorusPoint x = detail::random_exact_point(e, d, 6);
    for (std::size_t n = 0; n <= 6; ++n) {
      // Endpoints and probabilities of every word, letter by letter.
      std::vector<std::pair<RVec, Rational>> ends{{x.exact_coords(), Rational(1)}};
      for (std::size_t s = 0; s < n; ++s) {
        std::vector<std::pair<RVec, Rational>> next;
        for (const auto& [pt, pr] : ends)
          for (std::size_t g = 0; g < m; ++g) next.emplace_back(detail::apply_letter(spec[g], pt), pr * spec[g].weight);
        ends = std::move(next);
      }
      // Targets: the endpoint of one word, and a point that is usually missed.
      std::vector<RVec> targets{ends[detail::pick(e, ends.size())].first, detail::random_exact_point(e, d, 6).exact_coords()};
      for (const auto& y : targets) {
        Rational brute = 0;
        for (const auto& [pt, pr] : ends)
          if (pt == y) brute += pr;
        ++checks;
        if (concentration_probability(spec, x, TorusPoint::exact(y), n) != brute) ++failures;
      }
    }
  }
  r.ok = failures == 0;
  r.detail = std::to_string(checks) + " comparisons, " + std::to_string(failures) + " mismatches";
  return r;
}

inline std::vector<std::function<CriterionResult()>> criteria() {
  return {trapped_frequency_identity, equidistribution_decay, trapping_crossover, checkerboard_certificate,
          convolution_bound,          integer_linear_solver,  contraction_hypothesis, margulis_inequality,
          lyapunov_oracle,            fp_exactness,           spectral_gap,          fixed_point_dichotomy,
          exhaustive_words};
}

// Runs one criterion, timing it; exceptions count as failures.
inline CriterionResult run_timed(const std::function<CriterionResult()>& c, int id) {
  const auto t0 = std::chrono::steady_clock::now();
  CriterionResult res;
  try {
    res = c();
  } catch (const std::exception& ex) {
    res.id = id;
    res.name = "criterion " + std::to_string(id);
    res.ok = false;
    res.budget = 0;
    res.detail = std::string("exception: ") + ex.what();
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

inline std::string format_line(const CriterionResult& c) {
  std::ostringstream s;
  s << (c.pass() ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << c.detail << " ("
    << detail::fmt(c.seconds) << " s / " << detail::fmt(c.budget) << " s)";
  return s.str();
}

inline Json to_json(const CriterionResult& c) {
  return {{"id", c.id}, {"name", c.name}, {"pass", c.pass()}, {"assertions_ok", c.ok},
          {"seconds", c.seconds}, {"budget_seconds", c.budget}, {"detail", c.detail}};
}

}  // namespace toruslab::acceptance
