#pragma once

// Alpha-energy, ball masses, the contraction hypothesis fit, the Margulis-function
// inequality, and the checkerboard decomposition.

#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <tuple>
#include <limits>
#include <string>
#include <vector>

#include "toruslab/cloud.hpp"

namespace toruslab {

// sum over x != y of w(x) w(y) d(x, y)^{-alpha}
inline double alpha_energy(const WeightedCloud& c, double alpha) {
  require(alpha > 0, ErrorKind::InvalidArgument, "alpha must be positive");
  double s = 0;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      const double dist = torus_distance(c.point(i), c.point(j), c.dim);
      if (dist > 0) s += 2.0 * c.weights[i] * c.weights[j] * std::pow(dist, -alpha);
    }
  return s;
}

// nu (x) nu of the diagonal.
inline double diagonal_mass(const WeightedCloud& c) {
  double s = 0;
  for (double w : c.weights) s += w * w;
  return s;
}

inline Rational diagonal_mass(const FiniteMeasure& m) {
  Rational s = 0;
  for (std::size_t i = 0; i < m.size(); ++i) s += m.exact_weight(i) * m.exact_weight(i);
  return s;
}

struct BallMass {
  double value = 0;  // max over atom centres of nu(B(centre, rho)), closed balls
  double upper = 0;  // max over bins of the 3^d block mass; bounds every ball of radius rho
  DVec centre;
};

inline BallMass max_ball_mass(const WeightedCloud& c, double rho) {
  require(rho > 0, ErrorKind::InvalidArgument, "rho must be positive");
  BallMass out;
  if (c.size() == 0) return out;
  BinIndex index(c, rho);
  // Block mass of every cell, occupied or not, that touches an occupied bin.
  std::map<std::uint64_t, double> block;
  for (const auto& kv : index.bins()) {
    const double m = index.bin_mass(kv.first);
    for (auto key : index.neighbourhood(index.cell_from_key(kv.first))) block[key] += m;
  }
  double best_block = 0;
  for (const auto& kv : block) best_block = std::max(best_block, kv.second);
  std::vector<std::pair<double, std::uint64_t>> blocks;
  for (const auto& kv : index.bins()) blocks.emplace_back(block[kv.first], kv.first);
  std::sort(blocks.begin(), blocks.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  out.upper = std::min(best_block, c.total_mass());
  for (const auto& [bound, key] : blocks) {
    if (bound <= out.value) break;
    for (auto i : index.bins().at(key)) {
      const double m = index.ball_mass(c.point(i), rho);
      if (m > out.value) {
        out.value = m;
        out.centre.assign(c.point(i), c.point(i) + c.dim);
      }
    }
  }
  return out;
}

struct PairSample {
  DVec x, y;
  int scale = -1;  // j for pairs at distance 2^{-j}, -1 for uniform pairs
};

// Half the pairs at distance 2^{-j}, j = 3..20, cycling through 8 directions (random
// unit directions when d != 2); the rest uniform.
inline std::vector<PairSample> dyadic_pairs(std::size_t d, std::size_t count, std::uint64_t seed) {
  std::vector<PairSample> out;
  Engine e = chain_engine(seed, 0);
  const std::size_t near = count / 2;
  for (std::size_t i = 0; i < count; ++i) {
    PairSample p;
    p.x.resize(d);
    for (auto& v : p.x) v = uniform01(e);
    if (i < near) {
      const int j = 3 + static_cast<int>((i / 8) % 18);
      DVec dir(d, 0.0);
      if (d == 2) {
        const double ang = std::numbers::pi / 4.0 * static_cast<double>(i % 8);
        dir = {std::cos(ang), std::sin(ang)};
      } else {
        std::normal_distribution<double> g;
        double n = 0;
        for (auto& v : dir) {
          v = g(e);
          n += v * v;
        }
        for (auto& v : dir) v /= std::sqrt(n);
      }
      p.y.resize(d);
      for (std::size_t k = 0; k < d; ++k) p.y[k] = frac(p.x[k] + std::ldexp(dir[k], -j));
      p.scale = j;
    } else {
      p.y.resize(d);
      for (auto& v : p.y) v = uniform01(e);
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct PairEstimate {
  double distance = 0;
  double potential = 0;  // d(x, y)^{-alpha}
  double estimate = 0;   // mean over words of d(gx, gy)^{-alpha}
  double stderr_ = 0;
  int scale = -1;
};

struct ContractionFit {
  double a_hat = 0;
  double C_hat = 0;
  int fit_scale = -1;
  std::vector<PairEstimate> pairs;
};

// Estimates E[d(g x, g y)^{-alpha}] over words of length m for each pair. a_hat is the
// largest ratio estimate / potential among the pairs at the finest sampled scale, where
// the word acts linearly on the difference; C_hat is the least constant making
// estimate <= a_hat potential + C_hat hold on every pair.
inline ContractionFit fit_contraction(const WalkSpec& spec, double alpha, std::size_t m,
                                      const std::vector<PairSample>& pairs, std::size_t n_walk,
                                      std::uint64_t seed) {
  require(alpha > 0 && n_walk >= 1 && !pairs.empty(), ErrorKind::InvalidArgument, "fit_contraction arguments");
  const std::size_t d = spec.dim();
  FloatKernel k(spec);
  ContractionFit fit;
  fit.pairs.resize(pairs.size());
  for_each_block(pairs.size(), 8, [&](std::size_t, std::size_t lo, std::size_t hi) {
    DVec v(d), tmp(d);
    for (std::size_t p = lo; p < hi; ++p) {
      const auto& pr = pairs[p];
      require(pr.x.size() == d && pr.y.size() == d, ErrorKind::DimensionMismatch, "pair dimension");
      PairEstimate est;
      est.scale = pr.scale;
      est.distance = torus_distance(pr.x.data(), pr.y.data(), d);
      require(est.distance > 0, ErrorKind::InvalidArgument, "pair points coincide");
      est.potential = std::pow(est.distance, -alpha);
      double sum = 0, sum2 = 0;
      Engine e = chain_engine(seed, p);  // one stream per pair; walks draw from it in order
      for (std::size_t w = 0; w < n_walk; ++w) {
        for (std::size_t c = 0; c < d; ++c) v[c] = pr.y[c] - pr.x[c] - std::round(pr.y[c] - pr.x[c]);
        for (std::size_t s = 0; s < m; ++s) {
          k.apply_linear(k.pick(e), v.data(), tmp.data());
          for (auto& c : v) c -= std::round(c);
        }
        double n2 = 0;
        for (double c : v) n2 += c * c;
        const double val = std::pow(std::sqrt(n2), -alpha);
        sum += val;
        sum2 += val * val;
      }
      const double nw = static_cast<double>(n_walk);
      est.estimate = sum / nw;
      est.stderr_ = n_walk > 1 ? std::sqrt(std::max(0.0, sum2 / nw - est.estimate * est.estimate) / (nw - 1)) : 0.0;
      fit.pairs[p] = est;
    }
  });
  for (const auto& p : fit.pairs) fit.fit_scale = std::max(fit.fit_scale, p.scale);
  for (const auto& p : fit.pairs)
    if (p.scale == fit.fit_scale) fit.a_hat = std::max(fit.a_hat, p.estimate / p.potential);
  for (const auto& p : fit.pairs) fit.C_hat = std::max(fit.C_hat, p.estimate - fit.a_hat * p.potential);
  return fit;
}

struct MargulisTerms {
  double lhs = 0;         // max ball mass of mu^{*n2} * nu, squared
  double lhs_stderr = 0;
  bool exact = false;     // pushforward computed exactly rather than sampled
  double diag = 0;        // nu (x) nu (Delta)
  double energy = 0;      // E_alpha(nu)
  double rho = 0, alpha = 0;
  std::size_t n2 = 0;
};

inline MargulisTerms margulis_terms(const WalkSpec& spec, const FiniteMeasure& nu, std::size_t n2, double rho,
                                    double alpha, std::size_t N, std::uint64_t seed,
                                    std::size_t support_cap = 200'000) {
  MargulisTerms t;
  t.rho = rho;
  t.alpha = alpha;
  t.n2 = n2;
  WeightedCloud base = to_cloud(nu);
  t.diag = diagonal_mass(base);
  t.energy = alpha_energy(base, alpha);
  double mass = 0;
  try {
    FiniteMeasure pushed = exact_pushforward(spec, nu, n2, support_cap);
    mass = max_ball_mass(to_cloud(pushed), rho).value;
    t.exact = true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::SupportCapExceeded) throw;
  }
  if (!t.exact) {
    const std::size_t d = spec.dim();
    FloatKernel k(spec);
    DVec cum;
    double acc = 0;
    for (double w : base.weights) cum.push_back(acc += w / base.total_mass());
    EmpiricalSample s{d, n2, seed, DVec(N * d)};
    for_each_block(N, kChainBlock, [&](std::size_t, std::size_t lo, std::size_t hi) {
      DVec tmp(d);
      for (std::size_t c = lo; c < hi; ++c) {
        Engine e = chain_engine(seed, c);
        std::size_t a = std::min<std::size_t>(std::upper_bound(cum.begin(), cum.end(), uniform01(e)) - cum.begin(),
                                              base.size() - 1);
        double* y = s.coords.data() + c * d;
        std::copy(base.point(a), base.point(a) + d, y);
        for (std::size_t st = 0; st < n2; ++st) k.apply(k.pick(e), y, tmp.data());
      }
    });
    mass = max_ball_mass(to_cloud(s), rho).value;
    t.lhs_stderr = 2.0 * mass * std::sqrt(mass * (1.0 - mass) / static_cast<double>(N));
  }
  t.lhs = mass * mass;
  return t;
}

inline double margulis_rhs(const MargulisTerms& t, double lambda, double C2) {
  return t.diag + std::pow(2.0, t.alpha) * std::pow(t.rho, t.alpha) *
                      (std::exp(-t.alpha * lambda * static_cast<double>(t.n2)) * t.energy + C2);
}

// Least C2 >= 0 for which every row of the suite satisfies the inequality.
inline double calibrate_c2(const std::vector<MargulisTerms>& suite, double lambda) {
  double c2 = 0;
  for (const auto& t : suite) {
    const double need = (t.lhs - t.diag) / (std::pow(2.0, t.alpha) * std::pow(t.rho, t.alpha)) -
                        std::exp(-t.alpha * lambda * static_cast<double>(t.n2)) * t.energy;
    c2 = std::max(c2, need);
  }
  return c2;
}

struct MargulisCheck {
  MargulisTerms terms;
  double rhs = 0;
  bool holds = false;
  bool within_noise = false;  // lhs <= rhs + 2 stderr
};

inline MargulisCheck margulis_inequality_check(const MargulisTerms& t, double lambda, double C2) {
  MargulisCheck c{t, margulis_rhs(t, lambda, C2), false, false};
  c.holds = t.lhs <= c.rhs;
  c.within_noise = t.lhs <= c.rhs + 2.0 * t.lhs_stderr;
  return c;
}

struct Decomposition {
  WeightedCloud nu_prime;
  std::size_t colour = 0;
  std::size_t tiles_per_axis = 0;
  double tile_side = 0;
  bool max_f_representatives = false;  // sampled representatives fell short; used the f-maximising atom per tile
  bool already_separated = false;      // nu itself was r-separated, so nu' is nu normalised
  double f_mass = 0;        // int f d nu
  double f_mass_prime = 0;  // int f d nu'
  double diag_prime = 0;    // nu' (x) nu' (Delta)
  double s_upper = 0;       // bound on max_z nu(B(z, r)) and on every tile mass
  double min_separation = 0;
  double energy_prime = 0;
  bool f_mass_ok = false;       // f_mass_prime >= 2^{-d} f_mass
  bool diagonal_ok = false;     // diag_prime <= 2^d s_upper / f_mass
  bool separation_ok = false;   // support of nu' is r-separated
  bool energy_ok = false;       // E_alpha(nu') <= r^{-alpha}
};

// Tiles are cubes of side 1/B with B the largest even integer <= 1/r, coloured by the
// parity of their index in each axis. Side >= r makes same-colour tiles r-separated;
// B even keeps the colouring consistent across the seam.
inline Decomposition checkerboard_decompose(const WeightedCloud& nu, const std::function<double(const double*)>& f,
                                            double r, double alpha, std::uint64_t seed) {
  require(r > 0 && r <= 0.5, ErrorKind::InvalidArgument, "r must lie in (0, 1/2]");
  const std::size_t d = nu.dim;
  Decomposition out;
  std::vector<double> fv(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    fv[i] = f(nu.point(i));
    require(fv[i] >= 0 && fv[i] <= 1, ErrorKind::InvalidArgument, "f must take values in [0, 1]");
    out.f_mass += nu.weights[i] * fv[i];
  }
  if (!(out.f_mass > 0)) throw Error(ErrorKind::ZeroMass, "int f d nu is zero");

  std::uint64_t B = static_cast<std::uint64_t>(std::floor(1.0 / r));
  B -= B % 2;
  out.tiles_per_axis = B;
  out.tile_side = 1.0 / static_cast<double>(B);
  const std::size_t ncol = std::size_t(1) << d;
  auto tile_of = [&](const double* p, std::size_t& colour) {
    std::uint64_t key = 0;
    colour = 0;
    for (std::size_t k = 0; k < d; ++k) {
      auto c = std::min<std::uint64_t>(static_cast<std::uint64_t>(p[k] * static_cast<double>(B)), B - 1);
      key = key * B + c;
      colour |= static_cast<std::size_t>(c & 1u) << k;
    }
    return key;
  };
  std::vector<double> colour_f(ncol, 0.0);
  std::vector<std::size_t> colour_of(nu.size());
  std::vector<std::uint64_t> tile(nu.size());
  for (std::size_t i = 0; i < nu.size(); ++i) {
    tile[i] = tile_of(nu.point(i), colour_of[i]);
    colour_f[colour_of[i]] += nu.weights[i] * fv[i];
  }
  out.colour = static_cast<std::size_t>(std::max_element(colour_f.begin(), colour_f.end()) - colour_f.begin());

  std::map<std::uint64_t, std::vector<std::size_t>> tiles;
  double colour_mass = 0;
  for (std::size_t i = 0; i < nu.size(); ++i)
    if (colour_of[i] == out.colour && nu.weights[i] > 0) {
      tiles[tile[i]].push_back(i);
      colour_mass += nu.weights[i];
    }

  auto build = [&](bool max_f) {
    WeightedCloud np;
    np.dim = d;
    double fm = 0;
    for (const auto& [key, members] : tiles) {
      double tm = 0;
      for (auto i : members) tm += nu.weights[i];
      std::size_t pick = members.front();
      if (max_f) {
        for (auto i : members)
          if (fv[i] > fv[pick]) pick = i;
      } else {
        Engine e = chain_engine(seed, key);
        double u = uniform01(e) * tm, acc = 0;
        for (auto i : members) {
          pick = i;
          acc += nu.weights[i];
          if (u < acc) break;
        }
      }
      np.coords.insert(np.coords.end(), nu.point(pick), nu.point(pick) + d);
      np.weights.push_back(tm / colour_mass);
      fm += tm / colour_mass * fv[pick];
    }
    return std::make_pair(np, fm);
  };
  const double target = out.f_mass / static_cast<double>(ncol);
  // An r-separated nu of mass <= 2^d satisfies every certificate inequality as it stands.
  // The pairwise scan is quadratic, so large clouds always take the tiling.
  const double total = nu.total_mass();
  bool separated = nu.size() <= 4096 && total <= static_cast<double>(ncol);
  for (std::size_t i = 0; separated && i < nu.size(); ++i)
    for (std::size_t j = i + 1; separated && j < nu.size(); ++j)
      separated = torus_distance(nu.point(i), nu.point(j), d) >= r;
  if (separated) {
    out.already_separated = true;
    out.nu_prime = nu;
    for (auto& w : out.nu_prime.weights) w /= total;
    out.f_mass_prime = out.f_mass / total;
  } else {
    auto [np, fm] = build(false);
    if (fm < target) {
      std::tie(np, fm) = build(true);
      out.max_f_representatives = true;
    }
    out.nu_prime = std::move(np);
    out.f_mass_prime = fm;
  }
  out.diag_prime = diagonal_mass(out.nu_prime);
  out.s_upper = max_ball_mass(nu, r).upper;
  out.min_separation = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.nu_prime.size(); ++i)
    for (std::size_t j = i + 1; j < out.nu_prime.size(); ++j)
      out.min_separation =
          std::min(out.min_separation, torus_distance(out.nu_prime.point(i), out.nu_prime.point(j), d));
  out.energy_prime = alpha_energy(out.nu_prime, alpha);
  out.f_mass_ok = out.f_mass_prime >= target * (1 - 1e-12);
  out.diagonal_ok = out.diag_prime <= static_cast<double>(ncol) * out.s_upper / out.f_mass * (1 + 1e-12);
  out.separation_ok = out.min_separation >= r;
  out.energy_ok = out.energy_prime <= std::pow(r, -alpha) * (1 + 1e-12);
  return out;
}

}  // namespace toruslab
