#pragma once

// Exact and floating arithmetic on the torus T^d = R^d / Z^d and on SL_d(Z).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <variant>
#include <vector>

#include "toruslab/error.hpp"
#include "toruslab/rational.hpp"

namespace toruslab {

// Point of T^d. Coordinates are always stored reduced to [0, 1).
class TorusPoint {
 public:
  TorusPoint() = default;

  static TorusPoint exact(RVec coords) {
    for (auto& c : coords) c = frac(c);
    TorusPoint p;
    p.coords_ = std::move(coords);
    return p;
  }

  static TorusPoint approx(DVec coords) {
    for (auto& c : coords) {
      require(std::isfinite(c), ErrorKind::InvalidArgument, "non-finite torus coordinate");
      c = frac(c);
    }
    TorusPoint p;
    p.coords_ = std::move(coords);
    return p;
  }

  bool is_exact() const noexcept { return std::holds_alternative<RVec>(coords_); }

  std::size_t dim() const noexcept {
    return is_exact() ? std::get<RVec>(coords_).size() : std::get<DVec>(coords_).size();
  }

  const RVec& exact_coords() const {
    require(is_exact(), ErrorKind::InvalidArgument, "point carries floating coordinates");
    return std::get<RVec>(coords_);
  }

  const DVec& approx_coords() const {
    require(!is_exact(), ErrorKind::InvalidArgument, "point carries exact coordinates");
    return std::get<DVec>(coords_);
  }

  DVec to_doubles() const {
    if (!is_exact()) return std::get<DVec>(coords_);
    DVec out = toruslab::to_doubles(std::get<RVec>(coords_));
    for (auto& c : out) c = frac(c);
    return out;
  }

  // Exact rational image of the stored coordinates (floating coordinates are dyadic).
  RVec to_exact() const {
    if (is_exact()) return std::get<RVec>(coords_);
    return exact_from_doubles(std::get<DVec>(coords_));
  }

  TorusPoint as_approx() const { return approx(to_doubles()); }

  friend bool operator==(const TorusPoint& a, const TorusPoint& b) { return a.coords_ == b.coords_; }

  // Total order used by exact measure maps; exact points sort before floating ones.
  friend bool operator<(const TorusPoint& a, const TorusPoint& b) {
    if (a.coords_.index() != b.coords_.index()) return a.coords_.index() < b.coords_.index();
    if (a.is_exact()) {
      const auto& x = std::get<RVec>(a.coords_);
      const auto& y = std::get<RVec>(b.coords_);
      return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
    }
    return std::get<DVec>(a.coords_) < std::get<DVec>(b.coords_);
  }

 private:
  std::variant<RVec, DVec> coords_{RVec{}};
};

inline TorusPoint reduce_mod1(const RVec& v) { return TorusPoint::exact(v); }
inline TorusPoint reduce_mod1(const DVec& v) { return TorusPoint::approx(v); }

// Square integer matrix, row-major, arbitrary precision.
class IntMatrix {
 public:
  IntMatrix() = default;

  IntMatrix(std::size_t dim, std::vector<BigInt> row_major) : dim_(dim), a_(std::move(row_major)) {
    require(a_.size() == dim_ * dim_, ErrorKind::DimensionMismatch, "matrix entry count is not dim^2");
  }

  IntMatrix(std::initializer_list<std::initializer_list<long long>> rows) {
    dim_ = rows.size();
    for (const auto& r : rows) {
      require(r.size() == dim_, ErrorKind::DimensionMismatch, "matrix is not square");
      for (long long v : r) a_.emplace_back(v);
    }
  }

  static IntMatrix identity(std::size_t d) {
    std::vector<BigInt> a(d * d, 0);
    for (std::size_t i = 0; i < d; ++i) a[i * d + i] = 1;
    return IntMatrix(d, std::move(a));
  }

  std::size_t dim() const noexcept { return dim_; }
  const BigInt& operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }
  BigInt& operator()(std::size_t i, std::size_t j) { return a_[i * dim_ + j]; }
  const std::vector<BigInt>& entries() const noexcept { return a_; }

  IntMatrix transpose() const {
    IntMatrix t = *this;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) t(i, j) = (*this)(j, i);
    return t;
  }

  // Bareiss fraction-free elimination.
  BigInt determinant() const {
    if (dim_ == 0) return 1;
    std::vector<BigInt> m = a_;
    const std::size_t n = dim_;
    BigInt prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (m[k * n + k] == 0) {
        std::size_t piv = k + 1;
        while (piv < n && m[piv * n + k] == 0) ++piv;
        if (piv == n) return 0;
        for (std::size_t j = 0; j < n; ++j) std::swap(m[k * n + j], m[piv * n + j]);
        sign = -sign;
      }
      for (std::size_t i = k + 1; i < n; ++i)
        for (std::size_t j = k + 1; j < n; ++j)
          m[i * n + j] = (m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j]) / prev;
      prev = m[k * n + k];
    }
    return sign * m[(n - 1) * n + (n - 1)];
  }

  RVec apply(const RVec& x) const {
    require(x.size() == dim_, ErrorKind::DimensionMismatch, "vector length differs from matrix dim");
    RVec y(dim_, Rational(0));
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) y[i] += Rational((*this)(i, j)) * x[j];
    return y;
  }

  DVec apply(const DVec& x) const {
    require(x.size() == dim_, ErrorKind::DimensionMismatch, "vector length differs from matrix dim");
    DVec y(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) y[i] += to_double((*this)(i, j)) * x[j];
    return y;
  }

  std::vector<BigInt> apply(const std::vector<BigInt>& x) const {
    std::vector<BigInt> y(dim_, 0);
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t j = 0; j < dim_; ++j) y[i] += (*this)(i, j) * x[j];
    return y;
  }

  DVec to_doubles() const {
    DVec out(a_.size());
    for (std::size_t i = 0; i < a_.size(); ++i) out[i] = to_double(a_[i]);
    return out;
  }

  friend IntMatrix operator*(const IntMatrix& x, const IntMatrix& y) {
    require(x.dim_ == y.dim_, ErrorKind::DimensionMismatch, "matrix product of different dims");
    const std::size_t n = x.dim_;
    std::vector<BigInt> c(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        if (x(i, k) == 0) continue;
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] += x(i, k) * y(k, j);
      }
    return IntMatrix(n, std::move(c));
  }

  friend IntMatrix operator+(const IntMatrix& x, const IntMatrix& y) {
    require(x.dim_ == y.dim_, ErrorKind::DimensionMismatch, "matrix sum of different dims");
    std::vector<BigInt> c(x.a_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = x.a_[i] + y.a_[i];
    return IntMatrix(x.dim_, std::move(c));
  }

  friend IntMatrix operator-(const IntMatrix& x, const IntMatrix& y) {
    require(x.dim_ == y.dim_, ErrorKind::DimensionMismatch, "matrix difference of different dims");
    std::vector<BigInt> c(x.a_.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = x.a_[i] - y.a_[i];
    return IntMatrix(x.dim_, std::move(c));
  }

  friend bool operator==(const IntMatrix& x, const IntMatrix& y) { return x.dim_ == y.dim_ && x.a_ == y.a_; }

  friend bool operator<(const IntMatrix& x, const IntMatrix& y) {
    if (x.dim_ != y.dim_) return x.dim_ < y.dim_;
    return x.a_ < y.a_;
  }

 private:
  std::size_t dim_ = 0;
  std::vector<BigInt> a_;
};

// x -> linear * x + translation (mod 1).
struct AffineMap {
  IntMatrix linear;
  TorusPoint translation;

  std::size_t dim() const noexcept { return linear.dim(); }
};

inline TorusPoint apply_affine(const AffineMap& g, const TorusPoint& x) {
  require(g.dim() == x.dim() && g.translation.dim() == x.dim(), ErrorKind::DimensionMismatch,
          "affine map and point dims differ");
  if (x.is_exact() && g.translation.is_exact()) {
    RVec y = g.linear.apply(x.exact_coords());
    const auto& u = g.translation.exact_coords();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += u[i];
    return TorusPoint::exact(std::move(y));
  }
  DVec y = g.linear.apply(x.to_doubles());
  DVec u = g.translation.to_doubles();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += u[i];
  return TorusPoint::approx(std::move(y));
}

// (g o h)(x) = g(h(x)).
inline AffineMap compose(const AffineMap& g, const AffineMap& h) {
  AffineMap out;
  out.linear = g.linear * h.linear;
  out.translation = apply_affine(g, h.translation);
  return out;
}

inline AffineMap identity_map(std::size_t d) {
  return AffineMap{IntMatrix::identity(d), TorusPoint::exact(RVec(d, Rational(0)))};
}

// Quotient of the Euclidean metric: per-coordinate wrap, then l2.
inline double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  require(x.dim() == y.dim(), ErrorKind::DimensionMismatch, "points of different dims");
  if (x.is_exact() && y.is_exact()) {
    const auto& a = x.exact_coords();
    const auto& b = y.exact_coords();
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      Rational t = frac(a[i] - b[i]);
      if (t > Rational(1, 2)) t = 1 - t;
      s += t * t;
    }
    return std::sqrt(to_double(s));
  }
  DVec a = x.to_doubles();
  DVec b = y.to_doubles();
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double t = std::fabs(a[i] - b[i]);
    t = std::min(t, 1.0 - t);
    s += t * t;
  }
  return std::sqrt(s);
}

inline double torus_distance(const double* a, const double* b, std::size_t d) {
  double s = 0;
  for (std::size_t i = 0; i < d; ++i) {
    double t = std::fabs(a[i] - b[i]);
    t = std::min(t, 1.0 - t);
    s += t * t;
  }
  return std::sqrt(s);
}

// Squared wrapped distance of exact coordinate vectors.
inline Rational torus_distance_sq(const RVec& a, const RVec& b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Rational t = frac(a[i] - b[i]);
    if (t > Rational(1, 2)) t = 1 - t;
    s += t * t;
  }
  return s;
}

struct NormBracket {
  double lower = 0;     // max column l2 norm
  double upper = 0;     // Frobenius norm
  double estimate = 0;  // power iteration on M^T M, clamped into [lower, upper]
};

namespace detail {

// Largest singular value of a dense double matrix by power iteration on M^T M.
inline double spectral_norm(const DVec& m, std::size_t d, int max_iter = 1000, double tol = 1e-15) {
  DVec v(d, 1.0), w(d), z(d);
  double lambda = 0;
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < d; ++i) {
      w[i] = 0;
      for (std::size_t j = 0; j < d; ++j) w[i] += m[i * d + j] * v[j];
    }
    for (std::size_t j = 0; j < d; ++j) {
      z[j] = 0;
      for (std::size_t i = 0; i < d; ++i) z[j] += m[i * d + j] * w[i];
    }
    double nz = 0;
    for (double t : z) nz += t * t;
    nz = std::sqrt(nz);
    if (nz == 0) return 0;
    double nv = 0;
    for (double t : v) nv += t * t;
    double next = nz / std::sqrt(nv);
    for (std::size_t j = 0; j < d; ++j) v[j] = z[j] / nz;
    if (std::fabs(next - lambda) <= tol * next) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(lambda);
}

}  // namespace detail

inline NormBracket operator_norm_bounds(const IntMatrix& m) {
  const std::size_t d = m.dim();
  BigInt frob = 0, best_col = 0;
  for (std::size_t j = 0; j < d; ++j) {
    BigInt col = 0;
    for (std::size_t i = 0; i < d; ++i) col += m(i, j) * m(i, j);
    frob += col;
    if (col > best_col) best_col = col;
  }
  NormBracket b;
  b.lower = std::sqrt(to_double(best_col));
  b.upper = std::sqrt(to_double(frob));
  b.estimate = std::clamp(detail::spectral_norm(m.to_doubles(), d), b.lower, b.upper);
  return b;
}

}  // namespace toruslab
