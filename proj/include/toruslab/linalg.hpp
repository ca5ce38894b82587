#pragma once

// Exact linear algebra over Q and Z for small dense systems.

#include <cstddef>
#include <utility>
#include <vector>

#include "toruslab/rational.hpp"

namespace toruslab {

using IntRows = std::vector<std::vector<BigInt>>;
using RatRows = std::vector<std::vector<Rational>>;

inline RatRows to_rational(const IntRows& a) {
  RatRows out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (const auto& v : a[i]) out[i].emplace_back(v);
  return out;
}

// Basis of {x in Q^cols : A x = 0}, scaled to primitive integer vectors.
inline IntRows integer_kernel(const IntRows& a, std::size_t cols) {
  RatRows m = to_rational(a);
  std::vector<std::size_t> pivot_cols;
  std::size_t row = 0;
  for (std::size_t c = 0; c < cols && row < m.size(); ++c) {
    std::size_t p = row;
    while (p < m.size() && m[p][c] == 0) ++p;
    if (p == m.size()) continue;
    std::swap(m[p], m[row]);
    Rational inv = 1 / m[row][c];
    for (auto& v : m[row]) v *= inv;
    for (std::size_t r = 0; r < m.size(); ++r) {
      if (r == row || m[r][c] == 0) continue;
      Rational f = m[r][c];
      for (std::size_t k = 0; k < cols; ++k) m[r][k] -= f * m[row][k];
    }
    pivot_cols.push_back(c);
    ++row;
  }
  IntRows basis;
  std::vector<bool> is_pivot(cols, false);
  for (auto c : pivot_cols) is_pivot[c] = true;
  for (std::size_t f = 0; f < cols; ++f) {
    if (is_pivot[f]) continue;
    std::vector<Rational> v(cols, Rational(0));
    v[f] = 1;
    for (std::size_t i = 0; i < pivot_cols.size(); ++i) v[pivot_cols[i]] = -m[i][f];
    BigInt den = 1;
    for (const auto& x : v) den = lcm(den, denominator_of(x));
    std::vector<BigInt> iv(cols);
    BigInt g = 0;
    for (std::size_t k = 0; k < cols; ++k) {
      iv[k] = numerator_of(v[k] * Rational(den));
      g = gcd(g, iv[k]);
    }
    if (g > 1)
      for (auto& x : iv) x /= g;
    basis.push_back(std::move(iv));
  }
  return basis;
}

// Solve the square system A z = b exactly; A must be nonsingular.
inline std::vector<Rational> solve_square(RatRows a, std::vector<Rational> b) {
  const std::size_t n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (p < n && a[p][c] == 0) ++p;
    require(p < n, ErrorKind::InvalidArgument, "singular system");
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c] == 0) continue;
      Rational f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

inline BigInt det_int(const IntRows& a) {
  const std::size_t n = a.size();
  if (n == 0) return 1;
  IntRows m = a;
  BigInt prev = 1;
  int sign = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (m[k][k] == 0) {
      std::size_t p = k + 1;
      while (p < n && m[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(m[p], m[k]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
    prev = m[k][k];
  }
  return sign * m[n - 1][n - 1];
}

// U A V = D with U, V unimodular and D diagonal (divisibility of the diagonal not enforced).
struct Diagonalization {
  IntRows u, d, v;
  std::size_t rank = 0;
};

inline Diagonalization unimodular_diagonalize(const IntRows& a, std::size_t cols) {
  const std::size_t rows = a.size();
  Diagonalization r;
  r.d = a;
  r.u.assign(rows, std::vector<BigInt>(rows, 0));
  for (std::size_t i = 0; i < rows; ++i) r.u[i][i] = 1;
  r.v.assign(cols, std::vector<BigInt>(cols, 0));
  for (std::size_t i = 0; i < cols; ++i) r.v[i][i] = 1;
  auto& D = r.d;
  auto swap_rows = [&](std::size_t i, std::size_t j) {
    std::swap(D[i], D[j]);
    std::swap(r.u[i], r.u[j]);
  };
  auto swap_cols = [&](std::size_t i, std::size_t j) {
    for (auto& row : D) std::swap(row[i], row[j]);
    for (auto& row : r.v) std::swap(row[i], row[j]);
  };
  // row_i -= f * row_j
  auto row_op = [&](std::size_t i, std::size_t j, const BigInt& f) {
    for (std::size_t k = 0; k < cols; ++k) D[i][k] -= f * D[j][k];
    for (std::size_t k = 0; k < rows; ++k) r.u[i][k] -= f * r.u[j][k];
  };
  // col_i -= f * col_j
  auto col_op = [&](std::size_t i, std::size_t j, const BigInt& f) {
    for (std::size_t k = 0; k < rows; ++k) D[k][i] -= f * D[k][j];
    for (std::size_t k = 0; k < cols; ++k) r.v[k][i] -= f * r.v[k][j];
  };
  std::size_t t = 0;
  for (; t < rows && t < cols; ++t) {
    for (;;) {
      std::size_t bi = rows, bj = cols;
      for (std::size_t i = t; i < rows; ++i)
        for (std::size_t j = t; j < cols; ++j)
          if (D[i][j] != 0 && (bi == rows || abs(D[i][j]) < abs(D[bi][bj]))) {
            bi = i;
            bj = j;
          }
      if (bi == rows) {
        r.rank = t;
        return r;
      }
      swap_rows(t, bi);
      swap_cols(t, bj);
      bool clean = true;
      for (std::size_t i = t + 1; i < rows; ++i) {
        if (D[i][t] == 0) continue;
        row_op(i, t, floor_div(D[i][t], D[t][t]));
        if (D[i][t] != 0) clean = false;
      }
      for (std::size_t j = t + 1; j < cols; ++j) {
        if (D[t][j] == 0) continue;
        col_op(j, t, floor_div(D[t][j], D[t][t]));
        if (D[t][j] != 0) clean = false;
      }
      if (clean) break;
    }
  }
  r.rank = t;
  return r;
}

}  // namespace toruslab
