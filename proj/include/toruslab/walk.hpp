#pragma once

// Affine random walks on T^d: specification, exact pushforward, Monte Carlo sampling,
// and the top Lyapunov exponent of the linear part.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "toruslab/core.hpp"
#include "toruslab/parallel.hpp"
#include "toruslab/rng.hpp"

namespace toruslab {

struct Generator {
  std::string label;
  Rational weight;
  IntMatrix linear;
  TorusPoint translation;
};

using Word = std::vector<std::string>;

enum class Arithmetic { Exact, Float };

// Finitely supported probability measure on labelled affine maps of T^d.
class WalkSpec {
 public:
  WalkSpec() = default;

  WalkSpec(std::size_t dim, std::vector<Generator> gens) : dim_(dim), gens_(std::move(gens)) {
    require(dim_ >= 1, ErrorKind::DimensionMismatch, "dimension must be positive");
    require(!gens_.empty(), ErrorKind::WeightsInvalid, "no generators");
    Rational total = 0;
    for (const auto& g : gens_) {
      require(g.linear.dim() == dim_ && g.translation.dim() == dim_, ErrorKind::DimensionMismatch,
              "generator '" + g.label + "' has wrong dimension");
      require(g.linear.determinant() == 1, ErrorKind::DeterminantNotOne,
              "generator '" + g.label + "' is not in SL_d(Z)");
      require(g.weight > 0, ErrorKind::WeightsInvalid, "generator '" + g.label + "' has non-positive weight");
      total += g.weight;
    }
    require(total == 1, ErrorKind::WeightsInvalid, "weights sum to " + to_string(total));
    for (std::size_t i = 0; i < gens_.size(); ++i)
      for (std::size_t j = 0; j < i; ++j)
        require(gens_[i].label != gens_[j].label, ErrorKind::WeightsInvalid, "duplicate label " + gens_[i].label);
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return gens_.size(); }
  const std::vector<Generator>& generators() const noexcept { return gens_; }
  const Generator& operator[](std::size_t i) const { return gens_[i]; }

  bool is_exact() const {
    return std::all_of(gens_.begin(), gens_.end(), [](const Generator& g) { return g.translation.is_exact(); });
  }

  std::size_t index_of(const std::string& label) const {
    for (std::size_t i = 0; i < gens_.size(); ++i)
      if (gens_[i].label == label) return i;
    throw Error(ErrorKind::UnknownLabel, "no generator labelled '" + label + "'");
  }

  AffineMap map(std::size_t i) const { return AffineMap{gens_[i].linear, gens_[i].translation}; }

 private:
  std::size_t dim_ = 0;
  std::vector<Generator> gens_;
};

inline WalkSpec validate_spec(std::size_t dim, std::vector<Generator> gens) { return WalkSpec(dim, std::move(gens)); }

// Word (w_n, ..., w_1) acts as g(w_n) o ... o g(w_1): the last letter is applied first.
inline AffineMap compose_word(const WalkSpec& spec, const std::vector<std::size_t>& word) {
  AffineMap acc = identity_map(spec.dim());
  for (std::size_t idx : word) acc = compose(acc, spec.map(idx));
  return acc;
}

inline AffineMap compose_word(const WalkSpec& spec, const Word& word) {
  std::vector<std::size_t> idx;
  idx.reserve(word.size());
  for (const auto& l : word) idx.push_back(spec.index_of(l));
  return compose_word(spec, idx);
}

inline Rational word_probability(const WalkSpec& spec, const std::vector<std::size_t>& word) {
  Rational p = 1;
  for (std::size_t i : word) p *= spec[i].weight;
  return p;
}

// Finite measure on T^d. Exact when every weight and every point is exact.
class FiniteMeasure {
 public:
  static constexpr double kMergeTol = 1e-12;

  FiniteMeasure() = default;

  static FiniteMeasure dirac(const TorusPoint& x) { return from_exact({{x, Rational(1)}}); }

  static FiniteMeasure from_exact(const std::vector<std::pair<TorusPoint, Rational>>& atoms) {
    FiniteMeasure m;
    m.exact_weights_ = true;
    for (const auto& [p, w] : atoms) {
      require(w >= 0, ErrorKind::WeightsInvalid, "negative atom weight");
      m.points_.push_back(p);
      m.rw_.push_back(w);
      m.dw_.push_back(to_double(w));
    }
    m.check_dims();
    m.merge();
    return m;
  }

  static FiniteMeasure from_float(const std::vector<std::pair<TorusPoint, double>>& atoms) {
    FiniteMeasure m;
    m.exact_weights_ = false;
    for (const auto& [p, w] : atoms) {
      require(w >= 0 && std::isfinite(w), ErrorKind::WeightsInvalid, "invalid atom weight");
      m.points_.push_back(p);
      m.dw_.push_back(w);
    }
    m.check_dims();
    m.merge();
    return m;
  }

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dim() const noexcept { return points_.empty() ? 0 : points_.front().dim(); }
  const TorusPoint& point(std::size_t i) const { return points_[i]; }
  double weight(std::size_t i) const { return dw_[i]; }
  const Rational& exact_weight(std::size_t i) const {
    require(exact_weights_, ErrorKind::InvalidArgument, "measure carries floating weights");
    return rw_[i];
  }
  bool has_exact_weights() const noexcept { return exact_weights_; }
  bool is_exact() const {
    return exact_weights_ &&
           std::all_of(points_.begin(), points_.end(), [](const TorusPoint& p) { return p.is_exact(); });
  }

  double total_mass() const {
    double s = 0;
    for (double w : dw_) s += w;
    return s;
  }

  Rational exact_total_mass() const {
    require(exact_weights_, ErrorKind::InvalidArgument, "measure carries floating weights");
    Rational s = 0;
    for (const auto& w : rw_) s += w;
    return s;
  }

  // Mass at exactly the point y (after the same merge rule as construction).
  double mass_at(const TorusPoint& y) const {
    for (std::size_t i = 0; i < size(); ++i)
      if (same_point(points_[i], y)) return dw_[i];
    return 0.0;
  }

  Rational exact_mass_at(const TorusPoint& y) const {
    for (std::size_t i = 0; i < size(); ++i)
      if (points_[i] == y) return exact_weight(i);
    return Rational(0);
  }

 private:
  void check_dims() const {
    for (const auto& p : points_)
      require(p.dim() == points_.front().dim(), ErrorKind::DimensionMismatch, "atoms of different dims");
  }

  static bool same_point(const TorusPoint& a, const TorusPoint& b) {
    if (a.is_exact() && b.is_exact()) return a == b;
    DVec x = a.to_doubles(), y = b.to_doubles();
    for (std::size_t i = 0; i < x.size(); ++i) {
      double t = std::fabs(x[i] - y[i]);
      if (std::min(t, 1.0 - t) > kMergeTol) return false;
    }
    return true;
  }

  void merge() {
    const bool exact = is_exact();
    if (!exact) {
      // Snap seam dust so that 1 - 1e-15 and 0 merge.
      for (auto& p : points_) {
        DVec c = p.to_doubles();
        for (auto& v : c)
          if (v > 1.0 - kMergeTol) v = 0.0;
        p = TorusPoint::approx(std::move(c));
      }
    }
    std::vector<std::size_t> order(points_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return points_[a] < points_[b]; });
    std::vector<TorusPoint> np;
    std::vector<Rational> nr;
    std::vector<double> nd;
    for (std::size_t k : order) {
      if (dw_[k] == 0 && (!exact_weights_ || rw_[k] == 0)) continue;
      if (!np.empty() && same_point(np.back(), points_[k])) {
        nd.back() += dw_[k];
        if (exact_weights_) nr.back() += rw_[k];
        continue;
      }
      np.push_back(points_[k]);
      nd.push_back(dw_[k]);
      if (exact_weights_) nr.push_back(rw_[k]);
    }
    if (exact_weights_)
      for (std::size_t i = 0; i < nr.size(); ++i) nd[i] = to_double(nr[i]);
    points_ = std::move(np);
    rw_ = std::move(nr);
    dw_ = std::move(nd);
  }

  std::vector<TorusPoint> points_;
  std::vector<Rational> rw_;
  std::vector<double> dw_;
  bool exact_weights_ = true;
};

// N floating points of T^d stored contiguously, equal weight 1/N.
struct EmpiricalSample {
  std::size_t dim = 0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  DVec coords;

  std::size_t size() const noexcept { return dim == 0 ? 0 : coords.size() / dim; }
  const double* point(std::size_t i) const { return coords.data() + i * dim; }
};

// Floating-point image of a spec used by the samplers.
class FloatKernel {
 public:
  explicit FloatKernel(const WalkSpec& spec) : d_(spec.dim()) {
    Rational acc = 0;
    for (const auto& g : spec.generators()) {
      DVec m = g.linear.to_doubles();
      mats_.insert(mats_.end(), m.begin(), m.end());
      DVec u = g.translation.to_doubles();
      trans_.insert(trans_.end(), u.begin(), u.end());
      acc += g.weight;
      cum_.push_back(to_double(acc));
    }
    cum_.back() = 1.0;
  }

  std::size_t dim() const noexcept { return d_; }
  std::size_t size() const noexcept { return cum_.size(); }

  std::size_t pick(Engine& e) const {
    double u = uniform01(e);
    auto it = std::upper_bound(cum_.begin(), cum_.end(), u);
    return it == cum_.end() ? cum_.size() - 1 : static_cast<std::size_t>(it - cum_.begin());
  }

  // x <- gamma x + u (mod 1); tmp needs dim() slots.
  void apply(std::size_t i, double* x, double* tmp) const {
    const double* m = mats_.data() + i * d_ * d_;
    const double* u = trans_.data() + i * d_;
    for (std::size_t r = 0; r < d_; ++r) {
      double s = u[r];
      for (std::size_t c = 0; c < d_; ++c) s += m[r * d_ + c] * x[c];
      tmp[r] = s;
    }
    for (std::size_t r = 0; r < d_; ++r) x[r] = frac(tmp[r]);
  }

  // Linear part only, no reduction: v <- gamma v.
  void apply_linear(std::size_t i, double* v, double* tmp) const {
    const double* m = mats_.data() + i * d_ * d_;
    for (std::size_t r = 0; r < d_; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < d_; ++c) s += m[r * d_ + c] * v[c];
      tmp[r] = s;
    }
    for (std::size_t r = 0; r < d_; ++r) v[r] = tmp[r];
  }

  const double* matrix(std::size_t i) const { return mats_.data() + i * d_ * d_; }

 private:
  std::size_t d_;
  DVec mats_, trans_, cum_;
};

inline constexpr std::size_t kChainBlock = 2048;

// Single chain endpoint; exact when the spec and x are exact. Chain index 0 of the
// Monte Carlo stream for the same seed.
inline TorusPoint sample_endpoint(const WalkSpec& spec, const TorusPoint& x, std::size_t n, std::uint64_t seed,
                                  std::uint64_t chain = 0) {
  require(x.dim() == spec.dim(), ErrorKind::DimensionMismatch, "start point dimension");
  FloatKernel k(spec);
  Engine e = chain_engine(seed, chain);
  if (spec.is_exact() && x.is_exact()) {
    TorusPoint y = x;
    for (std::size_t s = 0; s < n; ++s) y = apply_affine(spec.map(k.pick(e)), y);
    return y;
  }
  DVec y = x.to_doubles(), tmp(spec.dim());
  for (std::size_t s = 0; s < n; ++s) k.apply(k.pick(e), y.data(), tmp.data());
  return TorusPoint::approx(std::move(y));
}

inline EmpiricalSample monte_carlo_measure(const WalkSpec& spec, const TorusPoint& x, std::size_t n, std::size_t N,
                                           std::uint64_t seed, Arithmetic mode = Arithmetic::Float) {
  require(x.dim() == spec.dim(), ErrorKind::DimensionMismatch, "start point dimension");
  require(N >= 1, ErrorKind::InvalidArgument, "sample count must be positive");
  const std::size_t d = spec.dim();
  EmpiricalSample out{d, n, seed, DVec(N * d)};
  const bool exact = mode == Arithmetic::Exact && spec.is_exact() && x.is_exact();
  FloatKernel k(spec);
  const DVec x0 = x.to_doubles();
  for_each_block(N, kChainBlock, [&](std::size_t, std::size_t lo, std::size_t hi) {
    DVec tmp(d);
    for (std::size_t c = lo; c < hi; ++c) {
      double* y = out.coords.data() + c * d;
      if (exact) {
        DVec p = sample_endpoint(spec, x, n, seed, c).to_doubles();
        std::copy(p.begin(), p.end(), y);
        continue;
      }
      Engine e = chain_engine(seed, c);
      std::copy(x0.begin(), x0.end(), y);
      for (std::size_t s = 0; s < n; ++s) k.apply(k.pick(e), y, tmp.data());
    }
  });
  return out;
}

// mu^{*n} * nu. Exact when the spec and nu are exact; otherwise atoms are merged within 1e-12.
inline FiniteMeasure exact_pushforward(const WalkSpec& spec, const FiniteMeasure& nu, std::size_t n,
                                       std::size_t support_cap = 1'000'000) {
  require(nu.size() == 0 || nu.dim() == spec.dim(), ErrorKind::DimensionMismatch, "measure dimension");
  FiniteMeasure cur = nu;
  const bool exact = spec.is_exact() && nu.is_exact();
  for (std::size_t s = 0; s < n; ++s) {
    if (exact) {
      std::map<TorusPoint, Rational> next;
      for (std::size_t i = 0; i < cur.size(); ++i)
        for (std::size_t j = 0; j < spec.size(); ++j) {
          next[apply_affine(spec.map(j), cur.point(i))] += cur.exact_weight(i) * spec[j].weight;
          if (next.size() > support_cap)
            throw Error(ErrorKind::SupportCapExceeded, "support exceeds " + std::to_string(support_cap) +
                                                           " at step " + std::to_string(s + 1));
        }
      cur = FiniteMeasure::from_exact({next.begin(), next.end()});
    } else {
      if (cur.size() * spec.size() > 4 * support_cap)
        throw Error(ErrorKind::SupportCapExceeded, "support exceeds " + std::to_string(support_cap));
      std::vector<std::pair<TorusPoint, double>> atoms;
      atoms.reserve(cur.size() * spec.size());
      for (std::size_t i = 0; i < cur.size(); ++i)
        for (std::size_t j = 0; j < spec.size(); ++j)
          atoms.emplace_back(apply_affine(spec.map(j), cur.point(i).as_approx()),
                             cur.weight(i) * to_double(spec[j].weight));
      cur = FiniteMeasure::from_float(atoms);
      if (cur.size() > support_cap)
        throw Error(ErrorKind::SupportCapExceeded, "support exceeds " + std::to_string(support_cap) +
                                                       " at step " + std::to_string(s + 1));
    }
  }
  return cur;
}

struct LyapunovEstimate {
  double value = 0;
  double stderr_ = 0;
  std::size_t steps = 0;
  std::size_t chains = 0;
};

// Mean of (1/n) log ||gamma(w)|| over chains; the running product is rescaled every 32 steps.
inline LyapunovEstimate estimate_lyapunov(const WalkSpec& spec, std::size_t n, std::size_t N, std::uint64_t seed) {
  require(n >= 1 && N >= 1, ErrorKind::InvalidArgument, "steps and chains must be positive");
  const std::size_t d = spec.dim();
  FloatKernel k(spec);
  DVec vals(N);
  for_each_block(N, 64, [&](std::size_t, std::size_t lo, std::size_t hi) {
    DVec p(d * d), q(d * d);
    for (std::size_t c = lo; c < hi; ++c) {
      Engine e = chain_engine(seed, c);
      std::fill(p.begin(), p.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) p[i * d + i] = 1.0;
      double log_scale = 0;
      for (std::size_t s = 1; s <= n; ++s) {
        const double* m = k.matrix(k.pick(e));
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) {
            double t = 0;
            for (std::size_t r = 0; r < d; ++r) t += m[i * d + r] * p[r * d + j];
            q[i * d + j] = t;
          }
        std::swap(p, q);
        if (s % 32 == 0) {
          double f = 0;
          for (double t : p) f += t * t;
          f = std::sqrt(f);
          for (double& t : p) t /= f;
          log_scale += std::log(f);
        }
      }
      vals[c] = (log_scale + std::log(detail::spectral_norm(p, d))) / static_cast<double>(n);
    }
  });
  LyapunovEstimate est{0, 0, n, N};
  for (double v : vals) est.value += v;
  est.value /= static_cast<double>(N);
  if (N > 1) {
    double var = 0;
    for (double v : vals) var += (v - est.value) * (v - est.value);
    var /= static_cast<double>(N - 1);
    est.stderr_ = std::sqrt(var / static_cast<double>(N));
  }
  return est;
}

}  // namespace toruslab
