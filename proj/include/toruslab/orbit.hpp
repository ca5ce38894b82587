#pragma once

// Finite orbits, heights, distance to the periodic locus P_Q, integer-linear
// approximation, and fixed points over Q/Z.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toruslab/core.hpp"
#include "toruslab/linalg.hpp"
#include "toruslab/walk.hpp"

namespace toruslab {

namespace detail {

inline void require_exact_inputs(const WalkSpec& spec, const TorusPoint& x, const char* op) {
  require(x.dim() == spec.dim(), ErrorKind::DimensionMismatch, std::string(op) + ": point dimension");
  require(spec.is_exact() && x.is_exact(), ErrorKind::InvalidArgument,
          std::string(op) + ": floating inputs cannot certify finiteness");
}

// gamma x + u - x reduced to [0,1)^d.
inline RVec displacement(const Generator& g, const RVec& x) {
  RVec y = g.linear.apply(x);
  const auto& u = g.translation.exact_coords();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = frac(y[i] + u[i] - x[i]);
  return y;
}

inline BigInt denominator_lcm(const RVec& v) {
  BigInt l = 1;
  for (const auto& c : v) l = lcm(l, denominator_of(c));
  return l;
}

}  // namespace detail

// Minimal q with gamma(w) x + u(w) - x in (1/q) Z^d for every generator.
inline BigInt orbit_height(const WalkSpec& spec, const TorusPoint& x) {
  require(x.dim() == spec.dim(), ErrorKind::DimensionMismatch, "orbit_height: point dimension");
  if (!spec.is_exact() || !x.is_exact())
    throw Error(ErrorKind::NotFinite, "orbit_height: floating data has no certified height");
  BigInt q = 1;
  for (const auto& g : spec.generators()) q = lcm(q, detail::denominator_lcm(detail::displacement(g, x.exact_coords())));
  return q;
}

enum class OrbitMode {
  Certify,  // finiteness from the lcm certificate; enumeration may stop at the cap
  BfsOnly,  // finiteness only from a completed BFS; exceeding the cap is undecided
};

struct OrbitReport {
  bool finite = false;
  bool enumerated = false;  // orbit_points is the complete orbit
  BigInt height_q = 0;
  std::vector<TorusPoint> orbit_points;
  std::vector<std::pair<std::string, RVec>> displacements;  // certificate: per-generator displacement
};

inline OrbitReport orbit_closure(const WalkSpec& spec, const TorusPoint& x, std::size_t cap = 1'000'000,
                                 OrbitMode mode = OrbitMode::Certify) {
  detail::require_exact_inputs(spec, x, "orbit_closure");
  OrbitReport rep;
  if (mode == OrbitMode::Certify) {
    for (const auto& g : spec.generators())
      rep.displacements.emplace_back(g.label, detail::displacement(g, x.exact_coords()));
    rep.height_q = orbit_height(spec, x);
    rep.finite = true;
  }
  std::set<TorusPoint> seen{x};
  std::deque<TorusPoint> queue{x};
  rep.orbit_points.push_back(x);
  while (!queue.empty()) {
    TorusPoint p = queue.front();
    queue.pop_front();
    for (std::size_t i = 0; i < spec.size(); ++i) {
      TorusPoint y = apply_affine(spec.map(i), p);
      if (!seen.insert(y).second) continue;
      if (seen.size() > cap) {
        if (mode == OrbitMode::BfsOnly)
          throw Error(ErrorKind::CapExceeded, "orbit enumeration passed " + std::to_string(cap) + " points");
        return rep;
      }
      rep.orbit_points.push_back(y);
      queue.push_back(std::move(y));
    }
  }
  std::sort(rep.orbit_points.begin(), rep.orbit_points.end());
  rep.enumerated = true;
  if (mode == OrbitMode::BfsOnly) {
    rep.finite = true;
    rep.height_q = orbit_height(spec, x);
  }
  return rep;
}

struct PQMembership {
  bool member = false;
  BigInt q = 0;  // minimal witness height when member

  explicit operator bool() const noexcept { return member; }
};

// (u, x) in P_Q iff the height of x is at most Q. Floating data is accepted and
// tested with tolerance 1e-12 on q * displacement.
inline PQMembership is_in_PQ(const WalkSpec& spec, const TorusPoint& x, const BigInt& Q) {
  require(Q >= 1, ErrorKind::InvalidArgument, "Q must be positive");
  if (spec.is_exact() && x.is_exact()) {
    const BigInt q = orbit_height(spec, x);
    return q <= Q ? PQMembership{true, q} : PQMembership{};
  }
  FloatKernel k(spec);
  const std::size_t d = spec.dim();
  const std::uint64_t qmax = Q > BigInt(1'000'000) ? 1'000'000u : Q.convert_to<std::uint64_t>();
  std::vector<DVec> disp;
  DVec x0 = x.to_doubles(), tmp(d);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    DVec y = x0;
    k.apply(i, y.data(), tmp.data());
    for (std::size_t c = 0; c < d; ++c) y[c] = frac(y[c] - x0[c]);
    disp.push_back(y);
  }
  for (std::uint64_t q = 1; q <= qmax; ++q) {
    bool ok = true;
    for (const auto& v : disp)
      for (double c : v) {
        double t = c * static_cast<double>(q);
        if (std::fabs(t - std::round(t)) > 1e-12) ok = false;
      }
    if (ok) return {true, BigInt(q)};
  }
  return {};
}

// A periodic datum: gamma(w) x + u(w) - x in (1/q) Z^d for every w.
struct PeriodicDatum {
  BigInt q = 1;
  TorusPoint x;
  std::vector<TorusPoint> u;

  bool verify(const WalkSpec& spec) const {
    if (u.size() != spec.size() || !x.is_exact()) return false;
    for (std::size_t i = 0; i < spec.size(); ++i) {
      if (!u[i].is_exact()) return false;
      RVec y = spec[i].linear.apply(x.exact_coords());
      for (std::size_t c = 0; c < y.size(); ++c) {
        Rational t = (y[c] + u[i].exact_coords()[c] - x.exact_coords()[c]) * Rational(q);
        if (denominator_of(t) != 1) return false;
      }
    }
    return true;
  }
};

struct PQDistance {
  double bound = 0;
  BigInt Q_used = 0;
  bool Q_capped = false;
  PeriodicDatum witness;
};

namespace detail {

struct PQSearch {
  const WalkSpec& spec;
  RVec x;
  std::vector<RVec> u;

  // Squared distance of (u, x) to the best datum with this x' and q, and its u'.
  Rational cost_sq(const RVec& xp, const BigInt& q, std::vector<RVec>* u_out) const {
    Rational best = torus_distance_sq(x, xp);
    const Rational qr(q);
    for (std::size_t i = 0; i < spec.size(); ++i) {
      RVec gx = spec[i].linear.apply(xp);
      RVec up(xp.size());
      for (std::size_t c = 0; c < xp.size(); ++c) {
        Rational base = frac(xp[c] - gx[c]);
        Rational diff = frac(u[i][c] - base);
        if (diff > Rational(1, 2)) diff -= 1;
        BigInt k = round_nearest(diff * qr);
        up[c] = frac(base + Rational(k) / qr);
      }
      Rational s = torus_distance_sq(u[i], up);
      if (s > best) best = s;
      if (u_out) u_out->push_back(std::move(up));
    }
    return best;
  }
};

}  // namespace detail

// Upper bound on d((u, x), P_Q) under the max metric, with an exact witness.
// Q above q_cap is clamped to q_cap; the result stays an upper bound since P_qcap is a subset of P_Q.
inline PQDistance distance_to_PQ_upper(const WalkSpec& spec, const TorusPoint& x, const BigInt& Q, double eps = 1e-9,
                                       std::size_t refine_depth = 12, std::uint64_t q_cap = 32) {
  require(x.dim() == spec.dim(), ErrorKind::DimensionMismatch, "distance_to_PQ_upper: point dimension");
  require(Q >= 1, ErrorKind::InvalidArgument, "Q must be positive");
  require(eps > 0, ErrorKind::InvalidArgument, "eps must be positive");
  const std::size_t d = spec.dim();
  detail::PQSearch s{spec, x.to_exact(), {}};
  for (const auto& g : spec.generators()) s.u.push_back(g.translation.to_exact());

  PQDistance out;
  out.Q_capped = Q > BigInt(q_cap);
  const std::uint64_t qmax = out.Q_capped ? q_cap : Q.convert_to<std::uint64_t>();
  out.Q_used = qmax;
  const Rational eps_r = exact_from_double(eps);

  std::optional<Rational> best_sq;
  RVec best_x;
  BigInt best_q = 1;
  auto consider = [&](const RVec& xp, const BigInt& q, Rational& local_best, RVec& local_x) {
    Rational c = s.cost_sq(xp, q, nullptr);
    if (c < local_best) {
      local_best = c;
      local_x = xp;
    }
  };
  for (std::uint64_t qi = 1; qi <= qmax; ++qi) {
    const BigInt q = qi;
    const std::uint64_t n = 4 * qi;
    Rational local_best = s.cost_sq(s.x, q, nullptr);
    RVec local_x = s.x;
    std::vector<std::uint64_t> idx(d, 0);
    for (;;) {
      RVec xp(d);
      for (std::size_t c = 0; c < d; ++c) xp[c] = Rational(idx[c], n);
      consider(xp, q, local_best, local_x);
      std::size_t c = 0;
      while (c < d && ++idx[c] == n) idx[c++] = 0;
      if (c == d) break;
    }
    Rational h(1, n);
    for (std::size_t depth = 1; depth <= refine_depth; ++depth) {
      h /= 4;
      if (h < eps_r) break;
      const RVec center = local_x;
      std::vector<int> k(d, -4);
      for (;;) {
        RVec xp(d);
        for (std::size_t c = 0; c < d; ++c) xp[c] = frac(center[c] + Rational(k[c]) * h);
        consider(xp, q, local_best, local_x);
        std::size_t c = 0;
        while (c < d && ++k[c] == 5) k[c++] = -4;
        if (c == d) break;
      }
    }
    if (!best_sq || local_best < *best_sq) {
      best_sq = local_best;
      best_x = local_x;
      best_q = q;
    }
  }
  std::vector<RVec> up;
  s.cost_sq(best_x, best_q, &up);
  out.witness.q = best_q;
  out.witness.x = TorusPoint::exact(best_x);
  for (auto& v : up) out.witness.u.push_back(TorusPoint::exact(std::move(v)));
  out.bound = std::sqrt(to_double(*best_sq));
  return out;
}

// Integer-linear approximation for a system of integer linear forms on R^D.
struct LinearApprox {
  BigInt q = 1;                    // |det| of the selected minor
  std::vector<std::size_t> rows;   // selected forms
  std::vector<std::size_t> cols;   // coordinates spanning the complement of the kernel
  IntRows kernel_basis;
  RVec kernel_part, lattice_part, remainder;
  BigInt max_norm_sq = 0;          // M^2
  Rational remainder_norm_sq = 0;
  Rational remainder_bound_sq = 0; // (D^{D/2} M^{D-1} r)^2
  bool q_bound_holds = false;      // q <= M^D
  bool remainder_bound_holds = false;
};

inline LinearApprox solve_integer_linear_approx(const IntRows& forms, const RVec& point, const Rational& r) {
  const std::size_t D = point.size();
  require(D >= 1, ErrorKind::InvalidArgument, "empty point");
  require(r >= 0, ErrorKind::InvalidArgument, "radius must be non-negative");
  for (const auto& f : forms) require(f.size() == D, ErrorKind::DimensionMismatch, "form length differs from D");

  LinearApprox out;
  std::vector<Rational> values(forms.size());
  for (std::size_t i = 0; i < forms.size(); ++i) {
    BigInt n2 = 0;
    for (std::size_t j = 0; j < D; ++j) {
      values[i] += Rational(forms[i][j]) * point[j];
      n2 += forms[i][j] * forms[i][j];
    }
    out.max_norm_sq = std::max(out.max_norm_sq, n2);
    Rational off = values[i] - Rational(round_nearest(values[i]));
    if (off < 0) off = -off;
    if (off > r)
      throw Error(ErrorKind::PreconditionViolated,
                  "form " + std::to_string(i) + " is " + to_string(off) + " from Z, above r = " + to_string(r));
  }
  require(out.max_norm_sq > 0, ErrorKind::PreconditionViolated, "system has no nonzero form");

  // Greedy full pivoting by largest |entry| of the Schur complement, ties to the lowest index.
  RatRows m = to_rational(forms);
  std::vector<bool> row_used(forms.size(), false), col_used(D, false);
  for (;;) {
    std::size_t bi = forms.size(), bj = D;
    Rational best = 0;
    for (std::size_t i = 0; i < forms.size(); ++i) {
      if (row_used[i]) continue;
      for (std::size_t j = 0; j < D; ++j) {
        if (col_used[j]) continue;
        Rational a = m[i][j] < 0 ? Rational(-m[i][j]) : m[i][j];
        if (a > best) {
          best = a;
          bi = i;
          bj = j;
        }
      }
    }
    if (best == 0) break;
    row_used[bi] = col_used[bj] = true;
    out.rows.push_back(bi);
    out.cols.push_back(bj);
    for (std::size_t i = 0; i < forms.size(); ++i) {
      if (row_used[i] || m[i][bj] == 0) continue;
      Rational f = m[i][bj] / m[bi][bj];
      for (std::size_t j = 0; j < D; ++j) m[i][j] -= f * m[bi][j];
    }
  }
  std::sort(out.rows.begin(), out.rows.end());
  std::sort(out.cols.begin(), out.cols.end());
  const std::size_t k = out.rows.size();

  IntRows minor(k, std::vector<BigInt>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) minor[i][j] = forms[out.rows[i]][out.cols[j]];
  out.q = abs(det_int(minor));

  RVec nint(k), err(k);
  for (std::size_t i = 0; i < k; ++i) {
    nint[i] = Rational(round_nearest(values[out.rows[i]]));
    err[i] = values[out.rows[i]] - nint[i];
  }
  RVec lat = solve_square(to_rational(minor), nint);
  RVec rem = solve_square(to_rational(minor), err);
  out.lattice_part.assign(D, Rational(0));
  out.remainder.assign(D, Rational(0));
  for (std::size_t j = 0; j < k; ++j) {
    out.lattice_part[out.cols[j]] = lat[j];
    out.remainder[out.cols[j]] = rem[j];
  }
  out.kernel_part.resize(D);
  for (std::size_t j = 0; j < D; ++j) out.kernel_part[j] = point[j] - out.lattice_part[j] - out.remainder[j];
  out.kernel_basis = integer_kernel(forms, D);

  for (const auto& f : forms) {
    Rational t = 0;
    for (std::size_t j = 0; j < D; ++j) t += Rational(f[j]) * out.kernel_part[j];
    require(t == 0, ErrorKind::InvalidArgument, "internal: kernel part leaves the kernel");
  }
  for (const auto& c : out.lattice_part)
    require(denominator_of(c * Rational(out.q)) == 1, ErrorKind::InvalidArgument,
            "internal: lattice part outside (1/q) Z^D");

  for (const auto& c : out.remainder) out.remainder_norm_sq += c * c;
  const BigInt Dd = D;
  out.remainder_bound_sq = Rational(boost::multiprecision::pow(Dd, static_cast<unsigned>(D)) *
                                    boost::multiprecision::pow(out.max_norm_sq, static_cast<unsigned>(D - 1))) *
                           r * r;
  out.q_bound_holds = out.q * out.q <= boost::multiprecision::pow(out.max_norm_sq, static_cast<unsigned>(D));
  out.remainder_bound_holds = out.remainder_norm_sq <= out.remainder_bound_sq;
  return out;
}

struct FixedPointResult {
  std::optional<TorusPoint> point;
  bool finitely_many = false;  // false with a point means a positive-dimensional family
  BigInt class_count = 0;      // number of fixed points when finitely_many
};

// Common fixed point of all generators: (gamma(w) - I) x = -u(w) mod Z^d.
inline FixedPointResult fixed_point_solve(const WalkSpec& spec) {
  require(spec.is_exact(), ErrorKind::InvalidArgument, "fixed_point_solve needs exact translations");
  const std::size_t d = spec.dim();
  IntRows m;
  RVec b;
  for (const auto& g : spec.generators()) {
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<BigInt> row(d);
      for (std::size_t j = 0; j < d; ++j) row[j] = g.linear(i, j) - (i == j ? 1 : 0);
      m.push_back(std::move(row));
      b.push_back(-g.translation.exact_coords()[i]);
    }
  }
  Diagonalization diag = unimodular_diagonalize(m, d);
  RVec c(m.size(), Rational(0));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) c[i] += Rational(diag.u[i][j]) * b[j];
  FixedPointResult res;
  for (std::size_t i = diag.rank; i < m.size(); ++i)
    if (denominator_of(c[i]) != 1) return res;
  RVec y(d, Rational(0));
  res.class_count = 1;
  for (std::size_t i = 0; i < diag.rank; ++i) {
    y[i] = c[i] / Rational(diag.d[i][i]);
    res.class_count *= abs(diag.d[i][i]);
  }
  res.finitely_many = diag.rank == d;
  if (!res.finitely_many) res.class_count = 0;
  RVec x(d, Rational(0));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) x[i] += Rational(diag.v[i][j]) * y[j];
  TorusPoint p = TorusPoint::exact(std::move(x));
  for (std::size_t i = 0; i < spec.size(); ++i)
    require(apply_affine(spec.map(i), p) == p, ErrorKind::InvalidArgument, "internal: fixed point check failed");
  res.point = std::move(p);
  return res;
}

// P(gamma(w) x + u(w) = y) over words of length n, exactly.
inline Rational concentration_probability(const WalkSpec& spec, const TorusPoint& x, const TorusPoint& y,
                                          std::size_t n, std::size_t support_cap = 1'000'000) {
  detail::require_exact_inputs(spec, x, "concentration_probability");
  require(y.is_exact() && y.dim() == spec.dim(), ErrorKind::InvalidArgument, "target must be exact");
  return exact_pushforward(spec, FiniteMeasure::dirac(x), n, support_cap).exact_mass_at(y);
}

}  // namespace toruslab
