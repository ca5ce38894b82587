#pragma once

// The walk reduced to F_p^d: evolution, orbit census, Fourier transform with its dual
// action, the regular-representation gap on Gamma <= SL_d(F_p), and the trapped/decay
// dichotomy.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <tuple>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "toruslab/walk.hpp"

namespace toruslab {

using i64 = std::int64_t;

inline bool is_prime(i64 p) {
  if (p < 2) return false;
  for (i64 q = 2; q * q <= p; ++q)
    if (p % q == 0) return false;
  return true;
}

inline i64 mod_p(i64 a, i64 p) {
  a %= p;
  return a < 0 ? a + p : a;
}

inline i64 mod_p(const BigInt& a, i64 p) {
  BigInt r = a % p;
  if (r < 0) r += p;
  return r.convert_to<i64>();
}

inline i64 inverse_mod(i64 a, i64 p) {
  i64 t = 0, nt = 1, r = p, nr = mod_p(a, p);
  while (nr != 0) {
    i64 q = r / nr;
    std::tie(t, nt) = std::make_pair(nt, t - q * nt);
    std::tie(r, nr) = std::make_pair(nr, r - q * nr);
  }
  require(r == 1, ErrorKind::InvalidArgument, "not invertible mod p");
  return mod_p(t, p);
}

// Walk on F_p^d: x -> gamma x + u with gamma in SL_d(F_p).
class FpWalkSpec {
 public:
  FpWalkSpec() = default;

  FpWalkSpec(i64 p, std::size_t d, std::vector<std::string> labels, std::vector<Rational> weights,
             std::vector<std::vector<i64>> mats, std::vector<std::vector<i64>> trans)
      : p_(p), d_(d), labels_(std::move(labels)), weights_(std::move(weights)), mats_(std::move(mats)),
        trans_(std::move(trans)) {
    require(is_prime(p_), ErrorKind::NotPrime, std::to_string(p_) + " is not prime");
    require(d_ >= 1 && d_ <= 4, ErrorKind::DimensionMismatch, "dimension must be in 1..4");
    const std::size_t m = labels_.size();
    require(m >= 1 && weights_.size() == m && mats_.size() == m && trans_.size() == m,
            ErrorKind::DimensionMismatch, "generator arrays differ in length");
    Rational total = 0;
    for (std::size_t i = 0; i < m; ++i) {
      require(mats_[i].size() == d_ * d_ && trans_[i].size() == d_, ErrorKind::DimensionMismatch,
              "generator '" + labels_[i] + "' has wrong dimension");
      for (auto& v : mats_[i]) v = mod_p(v, p_);
      for (auto& v : trans_[i]) v = mod_p(v, p_);
      require(det_mod(mats_[i]) == 1, ErrorKind::DeterminantNotOne, "generator '" + labels_[i] + "' has det != 1 mod p");
      require(weights_[i] > 0, ErrorKind::WeightsInvalid, "non-positive weight");
      total += weights_[i];
    }
    require(total == 1, ErrorKind::WeightsInvalid, "weights sum to " + to_string(total));
    std::size_t n = 1;
    for (std::size_t k = 0; k < d_; ++k) n *= static_cast<std::size_t>(p_);
    n_points_ = n;
    perms_.assign(m, std::vector<std::uint32_t>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t x = 0; x < n; ++x) perms_[i][x] = static_cast<std::uint32_t>(index(apply(i, point(x))));
  }

  i64 p() const noexcept { return p_; }
  std::size_t dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t points() const noexcept { return n_points_; }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  const Rational& weight(std::size_t i) const { return weights_[i]; }
  const std::vector<i64>& matrix(std::size_t i) const { return mats_[i]; }
  const std::vector<i64>& translation(std::size_t i) const { return trans_[i]; }
  const std::vector<std::uint32_t>& perm(std::size_t i) const { return perms_[i]; }

  // Row-major in x_0 (most significant) ... x_{d-1}.
  std::size_t index(const std::vector<i64>& x) const {
    std::size_t k = 0;
    for (auto v : x) k = k * static_cast<std::size_t>(p_) + static_cast<std::size_t>(mod_p(v, p_));
    return k;
  }

  std::vector<i64> point(std::size_t k) const {
    std::vector<i64> x(d_);
    for (std::size_t i = d_; i-- > 0;) {
      x[i] = static_cast<i64>(k % static_cast<std::size_t>(p_));
      k /= static_cast<std::size_t>(p_);
    }
    return x;
  }

  std::vector<i64> apply(std::size_t i, const std::vector<i64>& x) const {
    std::vector<i64> y(d_);
    for (std::size_t r = 0; r < d_; ++r) {
      i64 s = trans_[i][r];
      for (std::size_t c = 0; c < d_; ++c) s += mats_[i][r * d_ + c] * x[c];
      y[r] = mod_p(s, p_);
    }
    return y;
  }

  i64 det_mod(const std::vector<i64>& m) const {
    std::vector<BigInt> e(m.begin(), m.end());
    return mod_p(IntMatrix(d_, e).determinant(), p_);
  }

 private:
  i64 p_ = 2;
  std::size_t d_ = 0;
  std::vector<std::string> labels_;
  std::vector<Rational> weights_;
  std::vector<std::vector<i64>> mats_, trans_;
  std::size_t n_points_ = 0;
  std::vector<std::vector<std::uint32_t>> perms_;
};

inline FpWalkSpec reduce_spec_mod_p(const WalkSpec& spec, i64 p) {
  require(is_prime(p), ErrorKind::NotPrime, std::to_string(p) + " is not prime");
  require(spec.is_exact(), ErrorKind::InvalidArgument, "reduction needs exact translations");
  std::vector<std::string> labels;
  std::vector<Rational> weights;
  std::vector<std::vector<i64>> mats, trans;
  for (const auto& g : spec.generators()) {
    labels.push_back(g.label);
    weights.push_back(g.weight);
    std::vector<i64> m;
    for (const auto& v : g.linear.entries()) m.push_back(mod_p(v, p));
    mats.push_back(std::move(m));
    std::vector<i64> u;
    for (const auto& c : g.translation.exact_coords()) {
      const BigInt den = denominator_of(c);
      if (den % p == 0)
        throw Error(ErrorKind::DenominatorDividesP,
                    "translation of '" + g.label + "' has denominator divisible by " + std::to_string(p));
      u.push_back(mod_p(mod_p(numerator_of(c), p) * inverse_mod(mod_p(den, p), p), p));
    }
    trans.push_back(std::move(u));
  }
  return FpWalkSpec(p, spec.dim(), labels, weights, mats, trans);
}

template <class T>
using FpDistribution = std::vector<T>;

template <class T>
FpDistribution<T> fp_dirac(const FpWalkSpec& s, std::size_t x) {
  FpDistribution<T> f(s.points(), T(0));
  f[x] = T(1);
  return f;
}

// One step of nu -> mu * nu.
template <class T>
FpDistribution<T> fp_step(const FpWalkSpec& s, const FpDistribution<T>& f) {
  FpDistribution<T> g(f.size(), T(0));
  for (std::size_t i = 0; i < s.size(); ++i) {
    T w;
    if constexpr (std::is_same_v<T, Rational>) {
      w = s.weight(i);
    } else {
      w = static_cast<T>(to_double(s.weight(i)));
    }
    const auto& perm = s.perm(i);
    for (std::size_t x = 0; x < f.size(); ++x)
      if (f[x] != T(0)) g[perm[x]] += w * f[x];
  }
  return g;
}

template <class T>
FpDistribution<T> fp_evolve(const FpWalkSpec& s, FpDistribution<T> f, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) f = fp_step(s, f);
  return f;
}

struct FpCensus {
  std::vector<std::vector<std::size_t>> orbits;  // sorted, ordered by smallest element
  bool small_orbits_only_zero = false;           // every orbit of size < p is {0}
};

// Orbits of Gamma (linear parts only) on F_p^d.
inline FpCensus fp_orbit_census(const FpWalkSpec& s) {
  std::vector<std::vector<std::uint32_t>> lin(s.size(), std::vector<std::uint32_t>(s.points()));
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t x = 0; x < s.points(); ++x) {
      auto px = s.point(x);
      std::vector<i64> y(s.dim(), 0);
      for (std::size_t r = 0; r < s.dim(); ++r)
        for (std::size_t c = 0; c < s.dim(); ++c) y[r] += s.matrix(i)[r * s.dim() + c] * px[c];
      lin[i][x] = static_cast<std::uint32_t>(s.index(y));
    }
  FpCensus c;
  std::vector<bool> seen(s.points(), false);
  for (std::size_t x = 0; x < s.points(); ++x) {
    if (seen[x]) continue;
    std::vector<std::size_t> orb{x};
    seen[x] = true;
    for (std::size_t h = 0; h < orb.size(); ++h)
      for (const auto& perm : lin)
        if (!seen[perm[orb[h]]]) {
          seen[perm[orb[h]]] = true;
          orb.push_back(perm[orb[h]]);
        }
    std::sort(orb.begin(), orb.end());
    c.orbits.push_back(std::move(orb));
  }
  c.small_orbits_only_zero = true;
  for (const auto& o : c.orbits)
    if (static_cast<i64>(o.size()) < s.p() && !(o.size() == 1 && o[0] == 0)) c.small_orbits_only_zero = false;
  return c;
}

// Orbit of x under the affine maps.
inline std::vector<std::size_t> fp_affine_orbit(const FpWalkSpec& s, std::size_t x) {
  std::vector<bool> seen(s.points(), false);
  std::vector<std::size_t> orb{x};
  seen[x] = true;
  for (std::size_t h = 0; h < orb.size(); ++h)
    for (std::size_t i = 0; i < s.size(); ++i) {
      auto y = s.perm(i)[orb[h]];
      if (!seen[y]) {
        seen[y] = true;
        orb.push_back(y);
      }
    }
  std::sort(orb.begin(), orb.end());
  return orb;
}

using DualFunction = std::vector<std::complex<double>>;

namespace detail {

inline std::vector<std::complex<double>> roots_of_unity(i64 p) {
  std::vector<std::complex<double>> e(static_cast<std::size_t>(p));
  for (i64 k = 0; k < p; ++k) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(p);
    e[static_cast<std::size_t>(k)] = {std::cos(t), std::sin(t)};
  }
  return e;
}

// One-dimensional transform along every axis in turn; sign +1 forward, -1 inverse (unscaled).
inline DualFunction separable_dft(DualFunction f, i64 p, std::size_t d, int sign) {
  const auto e = roots_of_unity(p);
  const std::size_t P = static_cast<std::size_t>(p);
  std::size_t stride = 1;
  std::vector<std::complex<double>> line(P), out(P);
  for (std::size_t axis = 0; axis < d; ++axis) {
    for (std::size_t base = 0; base < f.size(); ++base) {
      if ((base / stride) % P != 0) continue;
      for (std::size_t t = 0; t < P; ++t) line[t] = f[base + t * stride];
      for (std::size_t a = 0; a < P; ++a) {
        std::complex<double> s = 0;
        for (std::size_t t = 0; t < P; ++t) {
          std::size_t k = (a * t) % P;
          s += (sign > 0 ? e[k] : std::conj(e[k])) * line[t];
        }
        out[a] = s;
      }
      for (std::size_t t = 0; t < P; ++t) f[base + t * stride] = out[t];
    }
    stride *= P;
  }
  return f;
}

}  // namespace detail

// f^(a) = sum_x e(<a, x>) f(x), e(t) = exp(2 pi i t / p).
inline DualFunction fp_dft(const FpWalkSpec& s, const std::vector<double>& f) {
  require(f.size() == s.points(), ErrorKind::DimensionMismatch, "function size");
  return detail::separable_dft(DualFunction(f.begin(), f.end()), s.p(), s.dim(), +1);
}

inline DualFunction fp_dft(const FpWalkSpec& s, const DualFunction& f) {
  require(f.size() == s.points(), ErrorKind::DimensionMismatch, "function size");
  return detail::separable_dft(f, s.p(), s.dim(), +1);
}

// f(x) = p^{-d} sum_a e(-<a, x>) f^(a).
inline DualFunction fp_idft(const FpWalkSpec& s, const DualFunction& phi) {
  require(phi.size() == s.points(), ErrorKind::DimensionMismatch, "function size");
  DualFunction f = detail::separable_dft(phi, s.p(), s.dim(), -1);
  for (auto& v : f) v /= static_cast<double>(s.points());
  return f;
}

inline constexpr double kInfNorm = std::numeric_limits<double>::infinity();

// Counting-measure norm on F_p^d.
template <class Range>
double primal_norm(const Range& f, double q) {
  double s = 0;
  for (const auto& v : f) {
    const double a = std::abs(v);
    if (q == kInfNorm) {
      s = std::max(s, a);
    } else {
      s += std::pow(a, q);
    }
  }
  return q == kInfNorm ? s : std::pow(s, 1.0 / q);
}

// Normalised (probability) measure on the dual group.
inline double dual_norm(const DualFunction& phi, double q) {
  if (q == kInfNorm) return primal_norm(phi, q);
  return primal_norm(phi, q) / std::pow(static_cast<double>(phi.size()), 1.0 / q);
}

// (A^(gamma, u) phi)(a) = e(<a, u>) phi(gamma^T a).
inline DualFunction dual_action(const FpWalkSpec& s, std::size_t i, const DualFunction& phi, bool translation = true) {
  const auto e = detail::roots_of_unity(s.p());
  const std::size_t d = s.dim();
  DualFunction out(phi.size());
  for (std::size_t k = 0; k < phi.size(); ++k) {
    auto a = s.point(k);
    std::vector<i64> b(d, 0);
    i64 ph = 0;
    for (std::size_t c = 0; c < d; ++c) {
      for (std::size_t r = 0; r < d; ++r) b[c] += s.matrix(i)[r * d + c] * a[r];
      ph += a[c] * s.translation(i)[c];
    }
    out[k] = (translation ? e[static_cast<std::size_t>(mod_p(ph, s.p()))] : std::complex<double>(1.0)) * phi[s.index(b)];
  }
  return out;
}

// A^(mu) phi = sum_w P(w) A^(g_w) phi; with translation = false this is A^theta(mu0).
inline DualFunction dual_action_mu(const FpWalkSpec& s, const DualFunction& phi, bool translation = true) {
  DualFunction out(phi.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto t = dual_action(s, i, phi, translation);
    const double w = to_double(s.weight(i));
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * t[k];
  }
  return out;
}

// Koopman action (A(g) f)(x) = f(g^{-1} x), computed as a pushforward.
inline DualFunction koopman(const FpWalkSpec& s, std::size_t i, const DualFunction& f) {
  DualFunction out(f.size());
  for (std::size_t x = 0; x < f.size(); ++x) out[s.perm(i)[x]] = f[x];
  return out;
}

struct DualActionCheck {
  double parseval_error = 0;     // | ||f||_2 - ||f^||_L^2 |
  double dual_action_error = 0;  // max over generators of ||(A(g) f)^ - A^(g) f^||_inf
  double domination_excess = 0;  // max over a of |A^(mu) phi| - A^theta(mu0)|phi|, <= 0 when it holds
};

inline DualActionCheck fp_dual_action_check(const FpWalkSpec& s, const std::vector<double>& f) {
  DualActionCheck c;
  DualFunction fc(f.begin(), f.end());
  DualFunction fh = fp_dft(s, fc);
  c.parseval_error = std::fabs(primal_norm(f, 2.0) - dual_norm(fh, 2.0));
  for (std::size_t i = 0; i < s.size(); ++i) {
    DualFunction lhs = fp_dft(s, koopman(s, i, fc));
    DualFunction rhs = dual_action(s, i, fh);
    for (std::size_t k = 0; k < lhs.size(); ++k) c.dual_action_error = std::max(c.dual_action_error, std::abs(lhs[k] - rhs[k]));
  }
  DualFunction a = dual_action_mu(s, fh, true);
  DualFunction mod(fh.size());
  for (std::size_t k = 0; k < fh.size(); ++k) mod[k] = std::abs(fh[k]);
  DualFunction b = dual_action_mu(s, mod, false);
  c.domination_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a.size(); ++k) c.domination_excess = std::max(c.domination_excess, std::abs(a[k]) - b[k].real());
  return c;
}

struct FpFixedPoint {
  std::optional<std::vector<i64>> point;
  std::size_t solution_dim = 0;  // dimension of the affine solution space
  std::size_t product_kernel_dim = 0;  // dim {x : g x = g' x for all g, g' in Pi^d S}
};

namespace detail {

// Row reduction mod p; returns (rank, pivot columns) and reduces in place.
inline std::vector<std::size_t> rref_mod(std::vector<std::vector<i64>>& m, std::size_t cols, i64 p) {
  std::vector<std::size_t> piv;
  std::size_t row = 0;
  for (std::size_t c = 0; c < cols && row < m.size(); ++c) {
    std::size_t r = row;
    while (r < m.size() && m[r][c] == 0) ++r;
    if (r == m.size()) continue;
    std::swap(m[r], m[row]);
    const i64 inv = inverse_mod(m[row][c], p);
    for (auto& v : m[row]) v = mod_p(v * inv, p);
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (k == row || m[k][c] == 0) continue;
      const i64 f = m[k][c];
      for (std::size_t j = 0; j < m[k].size(); ++j) m[k][j] = mod_p(m[k][j] - f * m[row][j], p);
    }
    piv.push_back(c);
    ++row;
  }
  return piv;
}

inline std::vector<i64> mat_mul_mod(const std::vector<i64>& a, const std::vector<i64>& b, std::size_t d, i64 p) {
  std::vector<i64> c(d * d, 0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t j = 0; j < d; ++j) c[i * d + j] = mod_p(c[i * d + j] + a[i * d + k] * b[k * d + j], p);
  return c;
}

}  // namespace detail

// Solves (gamma(w) - I) x = -u(w) over F_p for all w.
inline FpFixedPoint fp_fixed_point(const FpWalkSpec& s) {
  const std::size_t d = s.dim();
  const i64 p = s.p();
  std::vector<std::vector<i64>> m;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t r = 0; r < d; ++r) {
      std::vector<i64> row(d + 1);
      for (std::size_t c = 0; c < d; ++c) row[c] = mod_p(s.matrix(i)[r * d + c] - (r == c ? 1 : 0), p);
      row[d] = mod_p(-s.translation(i)[r], p);
      m.push_back(std::move(row));
    }
  auto piv = detail::rref_mod(m, d + 1, p);
  FpFixedPoint out;
  bool consistent = std::find(piv.begin(), piv.end(), d) == piv.end();
  if (consistent) {
    std::vector<i64> x(d, 0);
    for (std::size_t k = 0; k < piv.size(); ++k) x[piv[k]] = m[k][d];
    out.point = x;
    out.solution_dim = d - piv.size();
  }
  // Products of d elements of S.
  std::vector<std::vector<i64>> prods{std::vector<i64>()};
  {
    std::vector<i64> id(d * d, 0);
    for (std::size_t i = 0; i < d; ++i) id[i * d + i] = 1;
    prods[0] = id;
  }
  for (std::size_t t = 0; t < d; ++t) {
    std::vector<std::vector<i64>> next;
    for (const auto& g : prods)
      for (std::size_t i = 0; i < s.size(); ++i) next.push_back(detail::mat_mul_mod(s.matrix(i), g, d, p));
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    prods = std::move(next);
  }
  std::vector<std::vector<i64>> k;
  for (std::size_t j = 1; j < prods.size(); ++j)
    for (std::size_t r = 0; r < d; ++r) {
      std::vector<i64> row(d);
      for (std::size_t c = 0; c < d; ++c) row[c] = mod_p(prods[j][r * d + c] - prods[0][r * d + c], p);
      k.push_back(std::move(row));
    }
  out.product_kernel_dim = d - detail::rref_mod(k, d, p).size();
  return out;
}

// Gamma = <gamma(w)> in SL_d(F_p) with left-multiplication tables for the generators.
class GroupTable {
 public:
  GroupTable(const FpWalkSpec& s, std::size_t cap = 10'000) : d_(s.dim()), p_(s.p()) {
    std::vector<i64> id(d_ * d_, 0);
    for (std::size_t i = 0; i < d_; ++i) id[i * d_ + i] = 1;
    add(id);
    for (std::size_t h = 0; h < elems_.size(); ++h)
      for (std::size_t i = 0; i < s.size(); ++i) {
        auto g = detail::mat_mul_mod(s.matrix(i), elems_[h], d_, p_);
        if (lookup_.count(key(g)) == 0) {
          add(g);
          if (elems_.size() > cap)
            throw Error(ErrorKind::GroupTooLarge, "group exceeds " + std::to_string(cap) + " elements");
        }
      }
    for (std::size_t i = 0; i < s.size(); ++i) {
      std::vector<std::uint32_t> perm(elems_.size());
      for (std::size_t h = 0; h < elems_.size(); ++h)
        perm[h] = lookup_.at(key(detail::mat_mul_mod(s.matrix(i), elems_[h], d_, p_)));
      left_.push_back(std::move(perm));
      weights_.push_back(to_double(s.weight(i)));
    }
  }

  std::size_t order() const noexcept { return elems_.size(); }
  const std::vector<i64>& element(std::size_t i) const { return elems_[i]; }
  const std::vector<std::uint32_t>& left(std::size_t gen) const { return left_[gen]; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  // (L(mu0) f)(h) = sum_s mu0(s) f(s^{-1} h).
  std::vector<double> convolve(const std::vector<double>& f) const {
    std::vector<double> g(f.size(), 0.0);
    for (std::size_t i = 0; i < left_.size(); ++i)
      for (std::size_t h = 0; h < f.size(); ++h) g[left_[i][h]] += weights_[i] * f[h];
    return g;
  }

  std::vector<double> convolve_adjoint(const std::vector<double>& f) const {
    std::vector<double> g(f.size(), 0.0);
    for (std::size_t i = 0; i < left_.size(); ++i)
      for (std::size_t h = 0; h < f.size(); ++h) g[h] += weights_[i] * f[left_[i][h]];
    return g;
  }

 private:
  std::uint64_t key(const std::vector<i64>& g) const {
    std::uint64_t k = 0;
    for (auto v : g) k = k * static_cast<std::uint64_t>(p_) + static_cast<std::uint64_t>(v);
    return k;
  }
  void add(const std::vector<i64>& g) {
    lookup_.emplace(key(g), static_cast<std::uint32_t>(elems_.size()));
    elems_.push_back(g);
  }

  std::size_t d_;
  i64 p_;
  std::vector<std::vector<i64>> elems_;
  std::unordered_map<std::uint64_t, std::uint32_t> lookup_;
  std::vector<std::vector<std::uint32_t>> left_;
  std::vector<double> weights_;
};

struct GapEstimate {
  double norm = 0;  // || L_0(mu0^{*k}) || on mean-zero functions
  std::size_t iterations = 0;
  bool converged = false;
};

// Power iteration on (L^k)^T L^k restricted to mean-zero functions (the constant
// eigenvector is deflated), best of `restarts` random starts.
inline GapEstimate regular_rep_gap(const GroupTable& g, std::size_t k = 1, std::size_t restarts = 3,
                                   double tol = 1e-12, std::size_t max_iter = 200'000, std::uint64_t seed = 0) {
  const std::size_t n = g.order();
  GapEstimate best;
  if (n <= 1) {
    best.converged = true;
    return best;
  }
  auto deflate = [&](std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(n);
    for (double& x : v) x -= m;
  };
  auto norm = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  for (std::size_t r = 0; r < restarts; ++r) {
    Engine e = chain_engine(seed, r);
    std::vector<double> v(n);
    for (double& x : v) x = uniform01(e) - 0.5;
    deflate(v);
    double nv = norm(v);
    for (double& x : v) x /= nv;
    double rq = 0, prev = -1;
    GapEstimate est;
    for (std::size_t it = 1; it <= max_iter; ++it) {
      std::vector<double> w = v;
      for (std::size_t t = 0; t < k; ++t) w = g.convolve(w);
      std::vector<double> z = w;
      for (std::size_t t = 0; t < k; ++t) z = g.convolve_adjoint(z);
      deflate(z);
      rq = 0;
      for (std::size_t i = 0; i < n; ++i) rq += v[i] * z[i];
      est.iterations = it;
      const double nz = norm(z);
      if (nz == 0) {
        rq = 0;
        est.converged = true;
        break;
      }
      for (std::size_t i = 0; i < n; ++i) v[i] = z[i] / nz;
      if (std::fabs(rq - prev) <= tol * std::max(rq, 1e-300)) {
        est.converged = true;
        break;
      }
      prev = rq;
    }
    est.norm = std::sqrt(std::max(0.0, rq));
    if (r == 0 || est.norm > best.norm) best = est;
  }
  return best;
}

struct LvRow {
  std::size_t l = 0;
  double l2 = 0, linf = 0, dual4 = 0;
};

struct LvDecayRun {
  std::vector<LvRow> rows;
  std::optional<std::size_t> first_l2_below_threshold;  // ||.||_2 <= 19 p^{-1/4}
  std::optional<std::size_t> first_linf_below_practical;  // ||.||_inf <= 2 / orbit size
  std::size_t orbit_size = 0;
};

// Norms of mu^{*l} * delta_x from exact rational evolution.
inline LvDecayRun lv_decay_run(const FpWalkSpec& s, std::size_t x0, std::size_t l_max) {
  LvDecayRun run;
  run.orbit_size = fp_affine_orbit(s, x0).size();
  const double thr = 19.0 * std::pow(static_cast<double>(s.p()), -0.25);
  const double practical = 2.0 / static_cast<double>(run.orbit_size);
  auto f = fp_dirac<Rational>(s, x0);
  for (std::size_t l = 0;; ++l) {
    std::vector<double> fd(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) fd[i] = to_double(f[i]);
    LvRow row{l, primal_norm(fd, 2.0), primal_norm(fd, kInfNorm), dual_norm(fp_dft(s, fd), 4.0)};
    if (!run.first_l2_below_threshold && row.l2 <= thr) run.first_l2_below_threshold = l;
    if (!run.first_linf_below_practical && row.linf <= practical * (1 + 1e-12)) run.first_linf_below_practical = l;
    run.rows.push_back(row);
    if (l == l_max) break;
    f = fp_step(s, f);
  }
  return run;
}

// max over x, y of mu({g : g x = y}), exactly, with a maximising pair.
struct OneStepConcentration {
  Rational value = 0;
  std::size_t x = 0, y = 0;
};

inline OneStepConcentration one_step_concentration(const FpWalkSpec& s,
                                                   std::optional<std::size_t> only = std::nullopt) {
  OneStepConcentration best;
  for (std::size_t x = only ? *only : 0; x < (only ? *only + 1 : s.points()); ++x) {
    std::map<std::size_t, Rational> to;
    for (std::size_t i = 0; i < s.size(); ++i) to[s.perm(i)[x]] += s.weight(i);
    for (const auto& [y, m] : to)
      if (m > best.value) best = {m, x, y};
  }
  return best;
}

struct InitialDecayCheck {
  double epsilon = 0;       // 1 - one-step concentration
  double max_excess = 0;    // max over x, k of ||A(mu)^k delta_x||_inf - (1/2 + (1 - eps)^k)
  bool holds = false;
};

// If max_x ||A(mu) delta_x||_inf <= 1 - eps then ||A(mu)^k delta_x||_inf <= 1/2 + (1 - eps)^k.
inline InitialDecayCheck initial_decay_check(const FpWalkSpec& s, std::size_t k_max) {
  InitialDecayCheck c;
  c.epsilon = to_double(1 - one_step_concentration(s).value);
  c.max_excess = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < s.points(); ++x) {
    auto f = fp_dirac<double>(s, x);
    for (std::size_t k = 1; k <= k_max; ++k) {
      f = fp_step(s, f);
      const double bound = 0.5 + std::pow(1 - c.epsilon, static_cast<double>(k));
      c.max_excess = std::max(c.max_excess, primal_norm(f, kInfNorm) - bound);
    }
  }
  c.holds = c.max_excess <= 1e-12;
  return c;
}

enum class Dichotomy { Trapped, Decay };

struct DichotomyVerdict {
  Dichotomy verdict = Dichotomy::Decay;
  Rational one_step = 0;
  std::size_t x = 0, y = 0;         // trapping pair when Trapped
  std::optional<std::vector<i64>> fixed_point;
  std::size_t worst_start = 0;      // start with the largest final L^inf when Decay
  std::vector<double> linf;         // L^inf curve from worst_start
  double c_fit = 0;                 // least C on the grid with linf(n) <= C max(p^{-1/4}, e^{-n/C})
  std::size_t orbit_size = 0;
  std::optional<std::size_t> first_below_practical;  // first n with linf <= 2 / orbit size
};

// Without a start the scan covers every x (a common fixed point is then TRAPPED);
// with a start it covers that point only.
inline DichotomyVerdict gap_dichotomy_verdict(const FpWalkSpec& s, double eps, std::size_t n_max,
                                              std::optional<std::size_t> start = std::nullopt) {
  require(eps > 0 && eps < 1, ErrorKind::InvalidArgument, "eps must lie in (0, 1)");
  DichotomyVerdict v;
  if (start) require(*start < s.points(), ErrorKind::InvalidArgument, "start outside F_p^d");
  auto one = one_step_concentration(s, start);
  v.one_step = one.value;
  if (to_double(one.value) >= 1 - eps) {
    v.verdict = Dichotomy::Trapped;
    v.x = one.x;
    v.y = one.y;
    v.fixed_point = fp_fixed_point(s).point;
    return v;
  }
  v.verdict = Dichotomy::Decay;
  double worst = -1;
  for (std::size_t x = start ? *start : 0; x < (start ? *start + 1 : s.points()); ++x) {
    auto f = fp_evolve(s, fp_dirac<double>(s, x), n_max);
    const double m = primal_norm(f, kInfNorm);
    if (m > worst + 1e-15) {
      worst = m;
      v.worst_start = x;
    }
  }
  auto f = fp_dirac<double>(s, v.worst_start);
  for (std::size_t n = 0;; ++n) {
    v.linf.push_back(primal_norm(f, kInfNorm));
    if (n == n_max) break;
    f = fp_step(s, f);
  }
  v.orbit_size = fp_affine_orbit(s, v.worst_start).size();
  const double floor_term = std::pow(static_cast<double>(s.p()), -0.25);
  for (double C = 1.0; C < 1e6; C *= 1.05) {
    bool ok = true;
    for (std::size_t n = 0; n < v.linf.size() && ok; ++n)
      ok = v.linf[n] <= C * std::max(floor_term, std::exp(-static_cast<double>(n) / C)) + 1e-12;
    if (ok) {
      v.c_fit = C;
      break;
    }
  }
  for (std::size_t n = 0; n < v.linf.size(); ++n)
    if (v.linf[n] <= 2.0 / static_cast<double>(v.orbit_size) * (1 + 1e-12)) {
      v.first_below_practical = n;
      break;
    }
  return v;
}

struct L4DecayCheck {
  bool orbit_hypothesis = false;    // only orbit of size < p is {0}
  double operator_norm = 0;         // || L_0(mu0^{*k}) ||
  bool norm_hypothesis = false;     // <= 2^{-5}
  bool pointwise_hypothesis = false;  // eta(x) <= (40/41) ||eta||_2
  double dual4 = 0;                 // ||eta^||_L^4
  bool dual4_hypothesis = false;    // >= 19 p^{-1/4}
  double ratio = 0;                 // ||A^theta(mu0^{*k}) |eta^| ||_L^4 / ||eta^||_L^4
  bool qualifying = false;
  double bound = 0;                 // 2^{-2^{-34}}
  bool holds = false;               // ratio <= bound + 1e-9 (checked only when qualifying)
};

inline L4DecayCheck l4_decay_check(const FpWalkSpec& s, const GroupTable& g, std::size_t k,
                                   const std::vector<double>& eta, bool orbit_hypothesis) {
  L4DecayCheck c;
  c.orbit_hypothesis = orbit_hypothesis;
  c.operator_norm = regular_rep_gap(g, k).norm;
  c.norm_hypothesis = c.operator_norm <= std::pow(2.0, -5);
  const double l2 = primal_norm(eta, 2.0);
  c.pointwise_hypothesis = *std::max_element(eta.begin(), eta.end()) <= 40.0 / 41.0 * l2;
  DualFunction h = fp_dft(s, eta);
  DualFunction mod(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) mod[i] = std::abs(h[i]);
  c.dual4 = dual_norm(h, 4.0);
  c.dual4_hypothesis = c.dual4 >= 19.0 * std::pow(static_cast<double>(s.p()), -0.25);
  DualFunction t = mod;
  for (std::size_t j = 0; j < k; ++j) t = dual_action_mu(s, t, false);
  c.ratio = dual_norm(t, 4.0) / c.dual4;
  c.qualifying = c.orbit_hypothesis && c.norm_hypothesis && c.pointwise_hypothesis && c.dual4_hypothesis;
  c.bound = std::exp2(-std::exp2(-34.0));
  c.holds = !c.qualifying || c.ratio <= c.bound + 1e-9;
  return c;
}

struct GapInL4Check {
  bool pointwise_hypothesis = false;  // eta(x) <= (40/41) ||eta||_2
  bool dual4_hypothesis = false;      // ||eta^||_L^4 >= 19 p^{-1/4}
  bool orbit_hypothesis = false;
  double max_gap = 0;                 // max_h || |eta^| - A^theta(h) |eta^| ||_L^4
  double dual4 = 0;
  bool qualifying = false;
  bool holds = false;                 // max_gap >= (7/100) ||eta^||_L^4 when qualifying
};

inline GapInL4Check gap_in_l4_check(const FpWalkSpec& s, const GroupTable& g, const std::vector<double>& eta,
                                    bool orbit_hypothesis) {
  GapInL4Check c;
  c.orbit_hypothesis = orbit_hypothesis;
  const double l2 = primal_norm(eta, 2.0);
  c.pointwise_hypothesis = *std::max_element(eta.begin(), eta.end()) <= 40.0 / 41.0 * l2;
  DualFunction h = fp_dft(s, eta);
  DualFunction mod(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) mod[i] = std::abs(h[i]);
  c.dual4 = dual_norm(h, 4.0);
  c.dual4_hypothesis = c.dual4 >= 19.0 * std::pow(static_cast<double>(s.p()), -0.25);
  const std::size_t d = s.dim();
  for (std::size_t e = 0; e < g.order(); ++e) {
    const auto& m = g.element(e);
    DualFunction diff(mod.size());
    for (std::size_t k = 0; k < mod.size(); ++k) {
      auto a = s.point(k);
      std::vector<i64> b(d, 0);
      for (std::size_t col = 0; col < d; ++col)
        for (std::size_t r = 0; r < d; ++r) b[col] += m[r * d + col] * a[r];
      diff[k] = mod[k] - mod[s.index(b)];
    }
    c.max_gap = std::max(c.max_gap, dual_norm(diff, 4.0));
  }
  c.qualifying = c.orbit_hypothesis && c.pointwise_hypothesis && c.dual4_hypothesis;
  c.holds = !c.qualifying || c.max_gap >= 0.07 * c.dual4;
  return c;
}

}  // namespace toruslab
