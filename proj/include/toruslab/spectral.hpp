#pragma once

// Fourier coefficients of walk measures, decay scans, and the rate, trapping and
// convolution-bound checks built on them.

#include <complex>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "toruslab/cloud.hpp"
#include "toruslab/orbit.hpp"

namespace toruslab {

using Frequency = std::vector<long long>;
using Complex = std::complex<double>;

namespace detail {

inline Complex unit(double phase) {
  const double t = 2.0 * std::numbers::pi * phase;
  return {std::cos(t), std::sin(t)};
}

// <a, x> mod 1, exactly for exact x.
inline double phase_of(const Frequency& a, const TorusPoint& x) {
  require(a.size() == x.dim(), ErrorKind::DimensionMismatch, "frequency and point dims differ");
  if (x.is_exact()) {
    Rational s = 0;
    const auto& c = x.exact_coords();
    for (std::size_t i = 0; i < a.size(); ++i) s += Rational(a[i]) * c[i];
    return to_double(frac(s));
  }
  const auto& c = x.approx_coords();
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * c[i];
  return frac(s);
}

inline double phase_of(const Frequency& a, const double* x) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * x[i];
  return frac(s);
}

inline double norm2(const Frequency& a) {
  double s = 0;
  for (auto v : a) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

}  // namespace detail

// sum_x w(x) e^{2 pi i <a, x>}
inline Complex fourier_coefficient(const FiniteMeasure& m, const Frequency& a) {
  Complex s = 0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.weight(i) * detail::unit(detail::phase_of(a, m.point(i)));
  return s;
}

inline Complex fourier_coefficient(const WeightedCloud& c, const Frequency& a) {
  Complex s = 0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c.weights[i] * detail::unit(detail::phase_of(a, c.point(i)));
  return s;
}

struct FourierEstimate {
  Complex value;
  double modulus = 0;
  double stderr_ = 0;  // of the complex mean; bounds the modulus error to first order
};

inline FourierEstimate fourier_estimate(const EmpiricalSample& s, const Frequency& a) {
  require(a.size() == s.dim, ErrorKind::DimensionMismatch, "frequency dimension");
  const std::size_t n = s.size();
  Complex sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += detail::unit(detail::phase_of(a, s.point(i)));
  FourierEstimate e;
  e.value = sum / static_cast<double>(n);
  e.modulus = std::abs(e.value);
  e.stderr_ = std::sqrt(std::max(0.0, 1.0 - e.modulus * e.modulus) / static_cast<double>(n));
  return e;
}

struct WeylRow {
  Frequency a;
  double modulus = 0;
  double stderr_ = 0;
};

struct WeylTable {
  std::vector<WeylRow> rows;
  double max_modulus = 0;
  Frequency argmax;
};

// All a with 0 < ||a||_inf <= a_max, in lexicographic order.
inline std::vector<Frequency> frequency_box(std::size_t d, long long a_max) {
  std::vector<Frequency> out;
  Frequency a(d, -a_max);
  for (;;) {
    bool zero = true;
    for (auto v : a) zero = zero && v == 0;
    if (!zero) out.push_back(a);
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++a[k] <= a_max) break;
      a[k] = -a_max;
      if (k == 0) return out;
    }
  }
}

inline WeylTable weyl_scan(const EmpiricalSample& s, long long a_max) {
  WeylTable t;
  for (auto& a : frequency_box(s.dim, a_max)) {
    FourierEstimate e = fourier_estimate(s, a);
    if (e.modulus > t.max_modulus || t.rows.empty()) {
      t.max_modulus = e.modulus;
      t.argmax = a;
    }
    t.rows.push_back({a, e.modulus, e.stderr_});
  }
  return t;
}

inline WeylTable weyl_scan(const FiniteMeasure& m, long long a_max) {
  WeylTable t;
  for (auto& a : frequency_box(m.dim(), a_max)) {
    double mod = std::abs(fourier_coefficient(m, a));
    if (mod > t.max_modulus || t.rows.empty()) {
      t.max_modulus = mod;
      t.argmax = a;
    }
    t.rows.push_back({a, mod, 0.0});
  }
  return t;
}

struct DecayRow {
  std::size_t n = 0;
  double value = 0;
  double stderr_ = 0;
};

struct DecayFit {
  bool valid = false;
  double rate = 0;       // c in value ~ exp(intercept - c n)
  double intercept = 0;
  std::size_t window_lo = 0, window_hi = 0;
};

struct DecayReport {
  std::string spec_fingerprint;
  std::uint64_t seed = 0;
  std::size_t samples = 0;
  Frequency a;
  std::vector<DecayRow> rows;
  DecayFit fit;
};

inline std::string spec_fingerprint(const WalkSpec& spec) {
  std::string s = std::to_string(spec.dim());
  for (const auto& g : spec.generators()) {
    s += "|" + g.label + ":" + to_string(g.weight) + ":";
    for (const auto& v : g.linear.entries()) s += v.str() + ",";
    for (const auto& v : g.translation.to_exact()) s += to_string(v) + ",";
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(std::hash<std::string>{}(s)));
  return buf;
}

// Least-squares fit of log(value) on the rows whose value exceeds 3 standard errors.
inline DecayFit fit_decay(const std::vector<DecayRow>& rows) {
  std::vector<const DecayRow*> w;
  for (const auto& r : rows)
    if (r.value > 3.0 * r.stderr_ && r.value > 0) w.push_back(&r);
  DecayFit f;
  if (w.size() < 2) return f;
  double sn = 0, sy = 0, snn = 0, sny = 0;
  for (auto* r : w) {
    double n = static_cast<double>(r->n), y = std::log(r->value);
    sn += n;
    sy += y;
    snn += n * n;
    sny += n * y;
  }
  const double k = static_cast<double>(w.size());
  const double den = k * snn - sn * sn;
  if (den == 0) return f;
  const double slope = (k * sny - sn * sy) / den;
  f.valid = true;
  f.rate = -slope;
  f.intercept = (sy - slope * sn) / k;
  f.window_lo = w.front()->n;
  f.window_hi = w.back()->n;
  return f;
}

// Monte Carlo estimate of |(mu^{*n} * delta_x)^(a)| for each n in n_list; all n share chains.
inline DecayReport decay_scan(const WalkSpec& spec, const TorusPoint& x, const Frequency& a,
                              std::vector<std::size_t> n_list, std::size_t N, std::uint64_t seed) {
  require(a.size() == spec.dim() && x.dim() == spec.dim(), ErrorKind::DimensionMismatch, "decay_scan dims");
  require(N >= 1 && !n_list.empty(), ErrorKind::InvalidArgument, "decay_scan needs samples and steps");
  std::sort(n_list.begin(), n_list.end());
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  const std::size_t d = spec.dim(), nn = n_list.size(), n_max = n_list.back();
  FloatKernel k(spec);
  const DVec x0 = x.to_doubles();
  const std::size_t nblocks = (N + kChainBlock - 1) / kChainBlock;
  std::vector<std::vector<Complex>> partial(nblocks, std::vector<Complex>(nn));
  for_each_block(N, kChainBlock, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    DVec y(d), tmp(d);
    auto& acc = partial[b];
    for (std::size_t c = lo; c < hi; ++c) {
      Engine e = chain_engine(seed, c);
      y = x0;
      std::size_t next = 0;
      for (std::size_t s = 0;; ++s) {
        while (next < nn && n_list[next] == s) acc[next++] += detail::unit(detail::phase_of(a, y.data()));
        if (s == n_max) break;
        k.apply(k.pick(e), y.data(), tmp.data());
      }
    }
  });
  DecayReport rep{spec_fingerprint(spec), seed, N, a, {}, {}};
  for (std::size_t i = 0; i < nn; ++i) {
    Complex s = 0;
    for (const auto& p : partial) s += p[i];
    const double mod = std::abs(s / static_cast<double>(N));
    rep.rows.push_back({n_list[i], mod, std::sqrt(std::max(0.0, 1.0 - mod * mod) / static_cast<double>(N))});
  }
  rep.fit = fit_decay(rep.rows);
  return rep;
}

// Exact |(mu^{*n} * delta_x)^(a)| for n = 0..n_max from the exact pushforward.
inline std::vector<DecayRow> exact_decay_curve(const WalkSpec& spec, const TorusPoint& x, const Frequency& a,
                                               std::size_t n_max, std::size_t support_cap = 200'000) {
  std::vector<DecayRow> rows;
  FiniteMeasure m = FiniteMeasure::dirac(x);
  for (std::size_t n = 0;; ++n) {
    rows.push_back({n, std::abs(fourier_coefficient(m, a)), 0.0});
    if (n == n_max) break;
    m = exact_pushforward(spec, m, 1, support_cap);
  }
  return rows;
}

struct RateDichotomyVerdict {
  bool applicable = false;  // n >= C log(||a|| / t)
  double modulus = 0;
  double stderr_ = 0;
  bool exact_measurement = false;
  bool horn_decay_violated = false;  // modulus >= t
  BigInt Q = 0;
  double distance_bound = 0;
  double threshold = 0;              // exp(-lambda n)
  bool horn_trapped = false;         // distance_bound <= threshold
  bool consistent = false;
  PeriodicDatum witness;
};

// If |^|(a) >= t at step n, the datum must lie within exp(-lambda n) of P_Q,
// Q = (||a|| / t)^C. Consistent when the first horn implies the second.
inline RateDichotomyVerdict rate_dichotomy_check(const WalkSpec& spec, const TorusPoint& x, const Frequency& a,
                                                 double t, std::size_t n, double C, double lambda, std::size_t N,
                                                 std::uint64_t seed) {
  require(t > 0 && t < 0.5, ErrorKind::InvalidArgument, "t must lie in (0, 1/2)");
  require(C > 0 && lambda > 0, ErrorKind::InvalidArgument, "C and lambda must be positive");
  const double an = detail::norm2(a);
  require(an > 0, ErrorKind::InvalidArgument, "frequency must be nonzero");
  RateDichotomyVerdict v;
  v.applicable = static_cast<double>(n) >= C * std::log(an / t);
  bool measured = false;
  if (spec.is_exact() && x.is_exact()) {
    try {
      v.modulus = exact_decay_curve(spec, x, a, n).back().value;
      v.exact_measurement = measured = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SupportCapExceeded) throw;
    }
  }
  if (!measured) {
    DecayReport r = decay_scan(spec, x, a, {n}, N, seed);
    v.modulus = r.rows[0].value;
    v.stderr_ = r.rows[0].stderr_;
  }
  v.horn_decay_violated = v.modulus >= t;
  const double qd = std::floor(std::pow(an / t, C));
  v.Q = qd >= 1e18 ? BigInt(std::numeric_limits<std::int64_t>::max()) : BigInt(static_cast<std::int64_t>(std::max(1.0, qd)));
  v.threshold = std::exp(-lambda * static_cast<double>(n));
  PQDistance dist = distance_to_PQ_upper(spec, x, v.Q, std::max(1e-12, v.threshold * 1e-3));
  v.distance_bound = dist.bound;
  v.witness = dist.witness;
  v.horn_trapped = v.distance_bound <= v.threshold;
  v.consistent = !v.applicable || !v.horn_decay_violated || v.horn_trapped;
  return v;
}

struct TrapReport {
  bool exact_trap = false;         // x has height dividing q: |^|(a) = 1 for every n
  std::vector<DecayRow> rows;
  std::optional<std::size_t> crossover;  // last n with |^| >= 0.99 at every earlier step
  double rate_envelope = std::numeric_limits<double>::infinity();  // largest c consistent with all rows
  double rate_origin_fit = std::numeric_limits<double>::quiet_NaN();
  bool lower_bound_holds = true;   // value >= 1 - ||a|| e^{-c n} - 3 stderr with c = rate_envelope
};

inline TrapReport trapping_lowerbound_check(const WalkSpec& spec, const TorusPoint& x, long long q,
                                            const Frequency& a, const std::vector<std::size_t>& n_list,
                                            std::size_t N, std::uint64_t seed) {
  require(q >= 1, ErrorKind::InvalidArgument, "q must be positive");
  for (auto v : a)
    if (v % q != 0) throw Error(ErrorKind::FrequencyNotDivisible, "frequency is not in q Z^d");
  TrapReport rep;
  if (spec.is_exact() && x.is_exact()) rep.exact_trap = BigInt(q) % orbit_height(spec, x) == 0;
  rep.rows = decay_scan(spec, x, a, n_list, N, seed).rows;
  const double an = detail::norm2(a);
  for (const auto& r : rep.rows) {
    if (r.value < 0.99) break;
    rep.crossover = r.n;
  }
  double sny = 0, snn = 0;
  for (const auto& r : rep.rows) {
    const double gap = 1.0 - r.value - 3.0 * r.stderr_;
    if (r.n == 0 || gap <= 0) continue;
    const double y = std::log(gap / an), n = static_cast<double>(r.n);
    rep.rate_envelope = std::min(rep.rate_envelope, -y / n);
    sny += n * y;
    snn += n * n;
  }
  if (snn > 0) rep.rate_origin_fit = -sny / snn;
  for (const auto& r : rep.rows) {
    const double bound = 1.0 - an * std::exp(-rep.rate_envelope * static_cast<double>(r.n)) - 3.0 * r.stderr_;
    if (r.value < bound - 1e-12) rep.lower_bound_holds = false;
  }
  return rep;
}

struct ConvolutionBoundReport {
  double t = 0;                  // |(mu * eta)^(a)|
  double lhs = 0;                // t^{2k}
  double rhs = 0;                // sum over mu0^{(2k)} of |eta^((S)^T a)|
  double set_threshold = 0;      // t^{2k} / 2
  double set_mass = 0;           // mu0^{(k)} mass of A
  std::size_t tuples = 0;
  bool inequality_holds = false;
  bool set_bound_holds = false;
};

// S ranges over gamma_1 + ... + gamma_k - gamma_{k+1} - ... - gamma_{2k} with
// gamma_i drawn independently from mu0.
inline ConvolutionBoundReport mu0k_convolution_bound_check(const WalkSpec& spec, const FiniteMeasure& eta,
                                                           const Frequency& a, std::size_t k,
                                                           std::size_t budget = 10'000'000) {
  require(k >= 1, ErrorKind::InvalidArgument, "k must be positive");
  require(a.size() == spec.dim() && eta.dim() == spec.dim(), ErrorKind::DimensionMismatch, "convolution check dims");
  const std::size_t m = spec.size(), d = spec.dim();
  double count = 1;
  for (std::size_t i = 0; i < 2 * k; ++i) count *= static_cast<double>(m);
  if (count > static_cast<double>(budget))
    throw Error(ErrorKind::EnumerationTooLarge, std::to_string(count) + " tuples exceed budget " + std::to_string(budget));

  ConvolutionBoundReport rep;
  rep.t = std::abs(fourier_coefficient(exact_pushforward(spec, eta, 1), a));
  rep.lhs = std::pow(rep.t, static_cast<double>(2 * k));
  rep.set_threshold = rep.lhs / 2;

  std::map<Frequency, double> cache;
  auto eta_hat = [&](const Frequency& b) {
    auto it = cache.find(b);
    if (it != cache.end()) return it->second;
    double v = std::abs(fourier_coefficient(eta, b));
    cache.emplace(b, v);
    return v;
  };
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = to_double(spec[i].weight);
  std::vector<std::size_t> idx(2 * k, 0);
  for (;;) {
    double p = 1;
    std::vector<BigInt> s(d * d, 0);
    for (std::size_t j = 0; j < 2 * k; ++j) {
      p *= w[idx[j]];
      const auto& e = spec[idx[j]].linear.entries();
      for (std::size_t r = 0; r < d * d; ++r) s[r] += j < k ? e[r] : BigInt(-e[r]);
    }
    Frequency b(d, 0);
    for (std::size_t c = 0; c < d; ++c) {
      BigInt acc = 0;
      for (std::size_t r = 0; r < d; ++r) acc += s[r * d + c] * a[r];
      b[c] = acc.convert_to<long long>();
    }
    const double v = eta_hat(b);
    rep.rhs += p * v;
    if (v >= rep.set_threshold * (1 - 1e-12)) rep.set_mass += p;
    ++rep.tuples;
    std::size_t j = 0;
    while (j < 2 * k && ++idx[j] == m) idx[j++] = 0;
    if (j == 2 * k) break;
  }
  rep.inequality_holds = rep.lhs <= rep.rhs + 1e-9;
  rep.set_bound_holds = rep.set_mass >= rep.set_threshold - 1e-12;
  return rep;
}

struct GranuleResult {
  bool found = false;
  std::vector<DVec> centers;  // pairwise at least r apart
  double captured_mass = 0;   // mass of the union of closed rho-balls around the centres
};

// Bins of side >= rho, heaviest first; a bin's mass centroid is kept when it is r-far
// from every kept centre.
inline GranuleResult granule_detect(const WeightedCloud& c, double r, double rho, double mass_threshold) {
  require(r > 0 && rho > 0, ErrorKind::InvalidArgument, "radii must be positive");
  const std::size_t d = c.dim;
  BinIndex index(c, rho);
  std::vector<std::pair<double, std::uint64_t>> order;
  for (const auto& [key, members] : index.bins()) order.emplace_back(index.bin_mass(key), key);
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  GranuleResult g;
  for (const auto& [mass, key] : order) {
    if (mass <= 0) continue;
    DVec centre(d, 0.0);
    const auto& members = index.bins().at(key);
    double wsum = 0;
    for (auto i : members) {
      for (std::size_t k = 0; k < d; ++k) centre[k] += c.weights[i] * c.point(i)[k];
      wsum += c.weights[i];
    }
    for (auto& v : centre) v /= wsum;
    bool far = true;
    for (const auto& e : g.centers)
      if (torus_distance(centre.data(), e.data(), d) < r) far = false;
    if (far) g.centers.push_back(std::move(centre));
  }
  std::vector<bool> hit(c.size(), false);
  for (const auto& e : g.centers)
    for (auto key : index.neighbourhood(index.cell_of(e.data()))) {
      auto it = index.bins().find(key);
      if (it == index.bins().end()) continue;
      for (auto i : it->second)
        if (torus_distance(e.data(), c.point(i), d) <= rho) hit[i] = true;
    }
  for (std::size_t i = 0; i < c.size(); ++i)
    if (hit[i]) g.captured_mass += c.weights[i];
  g.found = g.captured_mass >= mass_threshold;
  if (!g.found) g.centers.clear();
  return g;
}

}  // namespace toruslab
