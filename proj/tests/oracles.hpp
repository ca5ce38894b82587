#pragma once

// Test-side oracles: direct computations that share no code paths with the library
// beyond the basic types.

#include <complex>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include "toruslab/toruslab.hpp"

namespace oracle {

using toruslab::BigInt;
using toruslab::Rational;
using toruslab::RVec;

inline Rational frac(const Rational& r) {
  BigInt n = toruslab::numerator_of(r), d = toruslab::denominator_of(r);
  BigInt m = n % d;
  if (m < 0) m += d;
  return Rational(m, d);
}

// Affine step with plain loops.
inline RVec step(const toruslab::Generator& g, const RVec& x) {
  RVec y(x.size(), Rational(0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += Rational(g.linear(i, j)) * x[j];
    y[i] = frac(y[i] + g.translation.exact_coords()[i]);
  }
  return y;
}

// Law of the endpoint after n steps, by enumerating all |Omega|^n words.
inline std::map<RVec, Rational> word_law(const toruslab::WalkSpec& s, const RVec& x, std::size_t n) {
  std::vector<std::pair<RVec, Rational>> ends{{x, Rational(1)}};
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::pair<RVec, Rational>> next;
    for (const auto& [p, w] : ends)
      for (std::size_t g = 0; g < s.size(); ++g) next.emplace_back(step(s[g], p), w * s[g].weight);
    ends = std::move(next);
  }
  std::map<RVec, Rational> law;
  for (const auto& [p, w] : ends) law[p] += w;
  return law;
}

inline std::vector<BigInt> lcm_denominators(const RVec& v) {
  std::vector<BigInt> out;
  for (const auto& c : v) out.push_back(toruslab::denominator_of(c));
  return out;
}

// Cofactor-expansion determinant.
inline BigInt det(const std::vector<std::vector<BigInt>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  BigInt s = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<BigInt>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<BigInt> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(row);
    }
    BigInt t = m[0][c] * det(minor);
    s += (c % 2 == 0) ? t : BigInt(-t);
  }
  return s;
}

inline double torus_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = std::fabs(a[i] - b[i]);
    t -= std::floor(t);
    t = std::min(t, 1 - t);
    s += t * t;
  }
  return std::sqrt(s);
}

}  // namespace oracle
