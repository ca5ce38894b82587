#pragma once

// Batch runner: validates a config, dispatches one command and persists its outputs.

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <set>

#include "toruslab/acceptance.hpp"
#include "toruslab/io.hpp"

#ifndef TORUSLAB_VERSION
#define TORUSLAB_VERSION "0.0.0"
#endif

namespace toruslab {

struct RunRecord {
  std::string command;
  std::string config_hash;
  std::string version = TORUSLAB_VERSION;
  double seconds = 0;
  std::map<std::string, std::string> outputs;  // file name -> content
  std::vector<std::string> written;            // paths on disk, when an out dir was given
  Json result;
  Json verdicts = Json::object();               // name -> bool
  bool ok = true;                               // every verdict true

  Json to_json() const {
    Json files = Json::array();
    for (const auto& [name, content] : outputs) files.push_back(name);
    return {{"command", command},   {"config_hash", config_hash}, {"version", version}, {"seconds", seconds},
            {"outputs", files},     {"verdicts", verdicts},       {"ok", ok}};
  }
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"orbit",       "height",        "pq-distance", "simulate",  "decay-scan",
                                              "weyl",        "trap-check",    "lyapunov",    "energy",    "ch-fit",
                                              "margulis-check", "decompose",  "fp-census",   "fp-evolve", "fp-gap",
                                              "fp-dichotomy", "solzlin",      "verify-all"};
  return names;
}

// FNV-1a over the canonical dump; nlohmann objects keep keys sorted, so the dump is stable.
inline std::string config_hash(const Json& config) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

// Typed parameter access over a params object whose keys were checked up front.
class Params {
 public:
  Params(const Json& p, const std::set<std::string>& allowed, const std::string& command) : p_(p) {
    require(p_.is_object(), ErrorKind::ConfigInvalid, "params must be an object");
    for (const auto& [k, v] : p_.items())
      require(allowed.count(k) > 0, ErrorKind::ConfigInvalid, "unknown parameter '" + k + "' for " + command);
  }

  bool has(const std::string& k) const { return p_.contains(k); }
  const Json& raw(const std::string& k) const {
    require(has(k), ErrorKind::ConfigInvalid, "missing parameter '" + k + "'");
    return p_.at(k);
  }

  double real(const std::string& k, std::optional<double> def = std::nullopt) const {
    if (!has(k)) return required(k, def);
    const Json& v = p_.at(k);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return to_double(parse_rational(v.get<std::string>()));
    throw Error(ErrorKind::ConfigInvalid, "parameter '" + k + "' must be a number");
  }

  std::size_t count(const std::string& k, std::optional<std::size_t> def = std::nullopt) const {
    if (!has(k)) return required(k, def);
    const double v = real(k);
    require(v >= 0 && v == std::floor(v) && v < 9.0e15, ErrorKind::ConfigInvalid,
            "parameter '" + k + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  std::string text(const std::string& k, std::optional<std::string> def = std::nullopt) const {
    if (!has(k)) return required(k, def);
    require(p_.at(k).is_string(), ErrorKind::ConfigInvalid, "parameter '" + k + "' must be a string");
    return p_.at(k).get<std::string>();
  }

  // "1/3,2/3", ["1/3", "2/3"] or [0.41, 0.73].
  TorusPoint point(const std::string& k) const { return point_from_json(as_list(raw(k))); }

  RVec rationals(const std::string& k) const {
    RVec out;
    for (const auto& v : as_list(raw(k))) out.push_back(rational_from_json(v));
    return out;
  }

  std::vector<double> reals(const std::string& k, std::vector<double> def) const {
    if (!has(k)) return def;
    std::vector<double> out;
    for (const auto& v : as_list(p_.at(k))) {
      require(v.is_number() || v.is_string(), ErrorKind::ConfigInvalid, "parameter '" + k + "' must hold numbers");
      out.push_back(v.is_number() ? v.get<double>() : to_double(parse_rational(v.get<std::string>())));
    }
    return out;
  }

  std::vector<long long> integers(const std::string& k, std::optional<std::vector<long long>> def = std::nullopt) const {
    if (!has(k)) return required(k, def);
    std::vector<long long> out;
    for (const auto& v : as_list(p_.at(k))) {
      const Rational r = rational_from_json(v);
      require(denominator_of(r) == 1, ErrorKind::ConfigInvalid, "parameter '" + k + "' must hold integers");
      out.push_back(numerator_of(r).convert_to<long long>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const std::string& k, std::vector<std::size_t> def) const {
    if (!has(k)) return def;
    std::vector<std::size_t> out;
    for (auto v : integers(k)) {
      require(v >= 0, ErrorKind::ConfigInvalid, "parameter '" + k + "' must be non-negative");
      out.push_back(static_cast<std::size_t>(v));
    }
    return out;
  }

 private:
  template <class T>
  T required(const std::string& k, const std::optional<T>& def) const {
    if (!def) throw Error(ErrorKind::ConfigInvalid, "missing parameter '" + k + "'");
    return *def;
  }

  static Json as_list(const Json& v) {
    if (v.is_array()) return v;
    if (v.is_number()) return Json::array({v});
    require(v.is_string(), ErrorKind::ConfigInvalid, "expected a list or comma-separated string");
    Json out = Json::array();
    std::stringstream ss(v.get<std::string>());
    for (std::string item; std::getline(ss, item, ',');) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      out.push_back(item);  // text is read exactly, decimals included
    }
    return out;
  }

  const Json& p_;
};

inline std::string point_csv(const std::vector<TorusPoint>& pts) {
  const std::size_t d = pts.empty() ? 0 : pts.front().dim();
  std::vector<std::string> header{"point_id"};
  for (std::size_t c = 0; c < d; ++c) header.push_back("x" + std::to_string(c));
  CsvWriter w(header);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    if (pts[i].is_exact()) {
      for (const auto& v : pts[i].exact_coords()) row.push_back(to_string(v));
    } else {
      for (double v : pts[i].approx_coords()) row.push_back(format_double(v));
    }
    w.row(row);
  }
  return w.str();
}

inline std::string cloud_csv(const WeightedCloud& c) {
  std::vector<std::string> header{"point_id"};
  for (std::size_t k = 0; k < c.dim; ++k) header.push_back("x" + std::to_string(k));
  header.push_back("weight");
  CsvWriter w(header);
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (std::size_t k = 0; k < c.dim; ++k) row.push_back(format_double(c.point(i)[k]));
    row.push_back(format_double(c.weights[i]));
    w.row(row);
  }
  return w.str();
}

inline std::string frequency_text(const Frequency& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? " " : "") + std::to_string(a[i]);
  return s;
}

inline std::vector<std::size_t> range_counts(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> v;
  for (std::size_t i = lo; i <= hi; ++i) v.push_back(i);
  return v;
}

struct Context {
  const Json& config;
  std::uint64_t seed;
  std::optional<Arithmetic> arithmetic;
  RunRecord& rec;

  void verdict(const std::string& name, bool v) {
    rec.verdicts[name] = v;
    rec.ok = rec.ok && v;
  }

  WalkSpec spec(std::optional<TorusPoint>* start = nullptr) const {
    require(config.contains("spec"), ErrorKind::ConfigInvalid, "command needs a spec");
    return spec_from_config(config.at("spec"), start);
  }

  TorusPoint start_point(const Params& p, const std::optional<TorusPoint>& named) const {
    TorusPoint x = p.has("x") ? p.point("x") : (named ? *named : p.point("x"));
    if (arithmetic == Arithmetic::Float) return x.as_approx();
    if (arithmetic == Arithmetic::Exact) return TorusPoint::exact(x.to_exact());
    return x;
  }

  FpWalkSpec fp_spec(const Params& p) const {
    if (config.contains("fp_spec")) return fp_spec_from_config(config.at("fp_spec"));
    require(config.contains("spec") && p.has("p"), ErrorKind::ConfigInvalid, "F_p commands need fp_spec, or spec with p");
    return reduce_spec_mod_p(spec(), static_cast<i64>(p.count("p")));
  }
};

using Handler = std::function<void(Context&, const Params&)>;

struct CommandDef {
  std::set<std::string> params;
  Handler run;
};

inline Json fp_point_json(const FpWalkSpec& s, std::size_t idx) { return s.point(idx); }

inline std::size_t fp_start(const FpWalkSpec& s, const Params& p, const std::string& key, std::vector<long long> def) {
  auto v = p.integers(key, def);
  require(v.size() == s.dim(), ErrorKind::DimensionMismatch, "start point dimension");
  std::vector<i64> pt;
  for (auto c : v) pt.push_back(mod_p(c, s.p()));
  return s.index(pt);
}

inline const std::map<std::string, CommandDef>& commands() {
  static const std::map<std::string, CommandDef> table{
      {"orbit",
       {{"x", "cap", "mode"},
        [](Context& c, const Params& p) {
          std::optional<TorusPoint> named;
          WalkSpec spec = c.spec(&named);
          TorusPoint x = c.start_point(p, named);
          const std::string mode = p.text("mode", "certify");
          require(mode == "certify" || mode == "bfs", ErrorKind::ConfigInvalid, "mode must be certify or bfs");
          auto rep = orbit_closure(spec, x, p.count("cap", 1'000'000),
                                   mode == "bfs" ? OrbitMode::BfsOnly : OrbitMode::Certify);
          c.rec.result = to_json(rep);
          c.rec.result["q"] = rep.finite ? Json(rep.height_q.convert_to<long long>()) : Json(nullptr);
          if (rep.enumerated) c.rec.outputs["orbit_points.csv"] = point_csv(rep.orbit_points);
        }}},
      {"height",
       {{"x"},
        [](Context& c, const Params& p) {
          std::optional<TorusPoint> named;
          WalkSpec spec = c.spec(&named);
          const BigInt q = orbit_height(spec, c.start_point(p, named));
          c.rec.result = {{"q", q.str()}};
        }}},
      {"pq-distance",
       {{"x", "Q", "eps", "refine_depth"},
        [](Context& c, const Params& p) {
          std::optional<TorusPoint> named;
          WalkSpec spec = c.spec(&named);
          auto d = distance_to_PQ_upper(spec, c.start_point(p, named), BigInt(p.count("Q", 3)), p.real("eps", 1e-9),
                                        static_cast<int>(p.count("refine_depth", 12)));
          c.rec.result = {{"bound", d.bound}, {"Q_used", d.Q_used.str()}, {"Q_capped", d.Q_capped},
                          {"witness", to_json(d.witness)}};
          c.verdict("witness_valid", d.witness.verify(spec));
        }}},
      {"simulate",
       {{"x", "n", "N"},
        [](Context& c, const Params& p) {
          std::optional<TorusPoint> named;
          WalkSpec spec = c.spec(&named);
          TorusPoint x = c.start_point(p, named);
          const std::size_t n = p.count("n", 10), N = p.count("N", 1000);
          auto s = monte_carlo_measure(spec, x, n, N, c.seed, c.arithmetic.value_or(Arithmetic::Float));
          std::vector<TorusPoint> pts;
          for (std::size_t i = 0; i < s.size(); ++i) pts.push_back(TorusPoint::approx(DVec(s.point(i), s.point(i) + s.dim)));
          c.rec.outputs["samples.csv"] = point_csv(pts);
          c.rec.result = {{"n", n}, {"N", N}, {"seed", c.seed}};
        }}},
      {"decay-scan",
       {{"x", "a", "n", "N", "support_cap"},
        [](Context& c, const Params& p) {
          std::optional<TorusPoint> named;
          WalkSpec spec = c.spec(&named);
          TorusPoint x = c.start_point(p, named);
          const Frequency a = p.integers("a");
          auto ns = p.counts("n", range_counts(0, 30));
          DecayReport rep;
          if (c.arithmetic == Arithmetic::Exact) {
            std::sort(ns.begin(), ns.end());
            auto all = exact_decay_curve(spec, x, a, ns.back(), p.count("support_cap", 200'000));
            rep = {spec_fingerprint(spec), c.seed, 0, a, {}, {}};
            for (auto n : ns) rep.rows.push_back(all[n]);
            rep.fit = fit_decay(rep.rows);
          } else {
            rep = decay_scan(spec, x, a, ns, p.count("N", 10'000), c.seed);
          }
          c.rec.result = to_json(rep);
          c.rec.outputs["decay.csv"] = decay_csv(rep.rows);
        }}},
      {"weyl",
       {{"x", "n", "N", "a_max"},
        [](Context& c, const Params& p) {
          std::optional<TorusPoint> named;
          WalkSpec spec = c.spec(&named);
          TorusPoint x = c.start_point(p, named);
          auto s = monte_carlo_measure(spec, x, p.count("n", 60), p.count("N", 100'000), c.seed, Arithmetic::Float);
          auto t = weyl_scan(s, static_cast<long long>(p.count("a_max", 3)));
          CsvWriter w({"frequency", "value", "stderr"});
          for (const auto& row : t.rows) w.values(frequency_text(row.a), row.modulus, row.stderr_);
          c.rec.outputs["weyl.csv"] = w.str();
          c.rec.result = {{"max_modulus", t.max_modulus}, {"argmax", t.argmax}};
        }}},
      {"trap-check",
       {{"x", "q", "a", "n", "N"},
        [](Context& c, const Params& p) {
          std::optional<TorusPoint> named;
          WalkSpec spec = c.spec(&named);
          TorusPoint x = c.start_point(p, named);
          auto rep = trapping_lowerbound_check(spec, x, static_cast<long long>(p.count("q")), p.integers("a"),
                                               p.counts("n", range_counts(0, 40)), p.count("N", 10'000), c.seed);
          c.rec.outputs["trap.csv"] = decay_csv(rep.rows);
          c.rec.result = {{"exact_trap", rep.exact_trap},
                          {"crossover", rep.crossover ? Json(*rep.crossover) : Json(nullptr)},
                          {"rate_envelope", std::isfinite(rep.rate_envelope) ? Json(rep.rate_envelope) : Json(nullptr)},
                          {"rate_origin_fit", std::isfinite(rep.rate_origin_fit) ? Json(rep.rate_origin_fit) : Json(nullptr)}};
          c.verdict("lower_bound_holds", rep.lower_bound_holds);
        }}},
      {"lyapunov",
       {{"n", "N"},
        [](Context& c, const Params& p) {
          auto est = estimate_lyapunov(c.spec(), p.count("n", 10'000), p.count("N", 32), c.seed);
          c.rec.result = {{"value", est.value}, {"stderr", est.stderr_}, {"n", est.steps}, {"N", est.chains}};
        }}},
      {"energy",
       {{"measure", "alpha", "rho"},
        [](Context& c, const Params& p) {
          FiniteMeasure m = measure_from_json(p.raw("measure"));
          WeightedCloud cl = to_cloud(m);
          const double alpha = p.real("alpha", 0.5), rho = p.real("rho", 0.1);
          auto ball = max_ball_mass(cl, rho);
          c.rec.result = {{"energy", alpha_energy(cl, alpha)}, {"diagonal", diagonal_mass(cl)},
                          {"max_ball_mass", ball.value}, {"max_ball_upper", ball.upper}};
        }}},
      {"ch-fit",
       {{"alpha", "m", "pairs", "n_walk"},
        [](Context& c, const Params& p) {
          WalkSpec spec = c.spec();
          auto pairs = dyadic_pairs(spec.dim(), p.count("pairs", 1000), c.seed);
          auto fit = fit_contraction(spec, p.real("alpha", 0.05), p.count("m", 20), pairs, p.count("n_walk", 1000), c.seed);
          c.rec.outputs["ch_pairs.csv"] = pairs_csv(fit);
          c.rec.result = {{"a_hat", fit.a_hat}, {"C_hat", fit.C_hat}, {"fit_scale", fit.fit_scale}};
          c.verdict("contracting", fit.a_hat < 1);
        }}},
      {"margulis-check",
       {{"measure", "n2", "rho", "alpha", "lambda", "C2", "N"},
        [](Context& c, const Params& p) {
          WalkSpec spec = c.spec();
          FiniteMeasure nu = measure_from_json(p.raw("measure"));
          const double alpha = p.real("alpha", 0.5), lambda = p.real("lambda", 0.1), c2 = p.real("C2", 0.0);
          const std::vector<double> rhos = p.reals("rho", {0.1});
          CsvWriter w({"rho", "lhs", "rhs", "stderr", "holds"});
          bool all = true;
          for (double rho : rhos) {
            auto t = margulis_terms(spec, nu, p.count("n2", 5), rho, alpha, p.count("N", 20'000), c.seed);
            auto chk = margulis_inequality_check(t, lambda, c2);
            w.values(rho, t.lhs, chk.rhs, t.lhs_stderr, chk.holds ? "true" : "false");
            all = all && chk.within_noise;
          }
          c.rec.outputs["margulis.csv"] = w.str();
          c.rec.result = {{"cases", rhos.size()}, {"C2", c2}, {"lambda", lambda}};
          c.verdict("holds_within_noise", all);
        }}},
      {"decompose",
       {{"measure", "r", "alpha", "f"},
        [](Context& c, const Params& p) {
          WeightedCloud nu = to_cloud(measure_from_json(p.raw("measure")));
          const std::string fname = p.text("f", "one");
          require(fname == "one" || fname == "half", ErrorKind::ConfigInvalid, "f must be one or half");
          std::function<double(const double*)> f = [](const double*) { return 1.0; };
          if (fname == "half")
            f = [](const double* x) { return std::clamp(0.5 + (0.25 - std::fabs(x[0] - 0.5)) / 0.1, 0.0, 1.0); };
          auto dec = checkerboard_decompose(nu, f, p.real("r", 0.1), p.real("alpha", 0.5), c.seed);
          c.rec.outputs["nu_prime.csv"] = cloud_csv(dec.nu_prime);
          c.rec.result = {{"colour", dec.colour},        {"tiles_per_axis", dec.tiles_per_axis},
                          {"f_mass", dec.f_mass},        {"f_mass_prime", dec.f_mass_prime},
                          {"diag_prime", dec.diag_prime}, {"s_upper", dec.s_upper},
                          {"min_separation", std::isfinite(dec.min_separation) ? Json(dec.min_separation) : Json(nullptr)},
                          {"energy_prime", dec.energy_prime}, {"max_f_representatives", dec.max_f_representatives},
                          {"already_separated", dec.already_separated}};
          c.verdict("f_mass", dec.f_mass_ok);
          c.verdict("diagonal", dec.diagonal_ok);
          c.verdict("separation", dec.separation_ok);
        }}},
      {"fp-census",
       {{"p"},
        [](Context& c, const Params& p) {
          FpWalkSpec s = c.fp_spec(p);
          auto census = fp_orbit_census(s);
          c.rec.outputs["census.csv"] = census_csv(census);
          c.rec.result = {{"p", s.p()}, {"orbits", census.orbits.size()}, {"small_orbits_only_zero", census.small_orbits_only_zero}};
        }}},
      {"fp-evolve",
       {{"p", "start", "n"},
        [](Context& c, const Params& p) {
          FpWalkSpec s = c.fp_spec(p);
          const std::size_t x0 = fp_start(s, p, "start", {1, 0});
          auto run = lv_decay_run(s, x0, p.count("n", 50));
          CsvWriter w({"n", "quantity", "value", "stderr"});
          for (const auto& row : run.rows) {
            w.values(row.l, "l2", row.l2, 0.0);
            w.values(row.l, "linf", row.linf, 0.0);
            w.values(row.l, "dual_l4", row.dual4, 0.0);
          }
          c.rec.outputs["fp_evolve.csv"] = w.str();
          auto opt = [](const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); };
          c.rec.result = {{"orbit_size", run.orbit_size}, {"final_linf", run.rows.back().linf},
                          {"first_linf_below_2_over_orbit", opt(run.first_linf_below_practical)},
                          {"first_l2_below_19p^-1/4", opt(run.first_l2_below_threshold)}};
        }}},
      {"fp-gap",
       {{"p", "k_max"},
        [](Context& c, const Params& p) {
          FpWalkSpec s = c.fp_spec(p);
          GroupTable g(s);
          const double gap = regular_rep_gap(g, 1, 3, 1e-12, 200'000, c.seed).norm;
          CsvWriter w({"k", "norm", "g_pow_k"});
          bool submult = true;
          for (std::size_t k = 1; k <= p.count("k_max", 12); ++k) {
            const double nk = regular_rep_gap(g, k, 3, 1e-12, 200'000, c.seed).norm;
            w.values(k, nk, std::pow(gap, static_cast<double>(k)));
            submult = submult && nk <= std::pow(gap, static_cast<double>(k)) + 1e-9;
          }
          c.rec.outputs["fp_gap.csv"] = w.str();
          Json k_cert = nullptr;
          if (gap < 1) {
            std::size_t k = 1;
            while (std::pow(gap, static_cast<double>(k)) > std::exp2(-5.0)) ++k;
            k_cert = k;
          }
          c.rec.result = {{"order", g.order()}, {"g", gap}, {"k_for_2^-5", k_cert}};
          c.verdict("submultiplicative", submult);
        }}},
      {"fp-dichotomy",
       {{"p", "eps", "n_max", "start"},
        [](Context& c, const Params& p) {
          FpWalkSpec s = c.fp_spec(p);
          std::optional<std::size_t> start;
          if (p.has("start")) start = fp_start(s, p, "start", {});
          auto v = gap_dichotomy_verdict(s, p.real("eps", 0.1), p.count("n_max", 50), start);
          c.rec.result = {{"verdict", v.verdict == Dichotomy::Trapped ? "TRAPPED" : "DECAY"},
                          {"one_step", to_string(v.one_step)}};
          if (v.verdict == Dichotomy::Trapped) {
            c.rec.result["pair"] = {fp_point_json(s, v.x), fp_point_json(s, v.y)};
            c.rec.result["fixed_point"] = v.fixed_point ? Json(*v.fixed_point) : Json(nullptr);
          } else {
            CsvWriter w({"n", "value", "stderr"});
            for (std::size_t n = 0; n < v.linf.size(); ++n) w.values(n, v.linf[n], 0.0);
            c.rec.outputs["linf.csv"] = w.str();
            c.rec.result["worst_start"] = fp_point_json(s, v.worst_start);
            c.rec.result["orbit_size"] = v.orbit_size;
            c.rec.result["c_fit"] = v.c_fit;
            c.rec.result["first_below_2_over_orbit"] = v.first_below_practical ? Json(*v.first_below_practical) : Json(nullptr);
          }
        }}},
      {"solzlin",
       {{"forms", "point", "r"},
        [](Context& c, const Params& p) {
          IntRows forms;
          const Json& fj = p.raw("forms");
          require(fj.is_array(), ErrorKind::ConfigInvalid, "forms must be an array of integer rows");
          for (const auto& row : fj) {
            std::vector<BigInt> f;
            for (const auto& v : row) f.push_back(bigint_from_json(v));
            forms.push_back(std::move(f));
          }
          const Json& rj = p.raw("r");
          auto res = solve_integer_linear_approx(forms, p.rationals("point"), rational_from_json(rj));
          auto vec = [](const RVec& v) {
            Json a = Json::array();
            for (const auto& x : v) a.push_back(to_string(x));
            return a;
          };
          c.rec.result = {{"q", res.q.str()},
                          {"kernel_part", vec(res.kernel_part)},
                          {"lattice_part", vec(res.lattice_part)},
                          {"remainder", vec(res.remainder)},
                          {"remainder_norm_sq", to_string(res.remainder_norm_sq)},
                          {"remainder_bound_sq", to_string(res.remainder_bound_sq)}};
          c.verdict("q_bound", res.q_bound_holds);
          c.verdict("remainder_bound", res.remainder_bound_holds);
        }}},
      {"verify-all",
       {{"only"},
        [](Context& c, const Params& p) {
          auto only = p.integers("only", std::vector<long long>{});
          auto all = acceptance::criteria();
          Json rows = Json::array();
          std::string log;
          for (std::size_t i = 0; i < all.size(); ++i) {
            const int id = static_cast<int>(i + 1);
            if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
            auto res = acceptance::run_timed(all[i], id);
            rows.push_back(acceptance::to_json(res));
            log += acceptance::format_line(res) + "\n";
            c.verdict("criterion_" + std::to_string(id), res.pass());
          }
          c.rec.result = {{"criteria", rows}};
          c.rec.outputs["acceptance.txt"] = log;
        }}},
  };
  return table;
}

// Atomic write: content goes to a temporary sibling that is then renamed into place.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  write_file(tmp, content);
  std::filesystem::rename(tmp, path);
}

// Validates the whole config before any computation.
inline RunRecord run_impl(const Json& config) {
  reject_unknown(config, {"command", "spec", "fp_spec", "params", "seed", "arithmetic", "out"}, "config");
  require(config.contains("command") && config.at("command").is_string(), ErrorKind::ConfigInvalid,
          "config needs a command");
  const auto command = config.at("command").get<std::string>();
  const auto& table = detail::commands();
  auto it = table.find(command);
  require(it != table.end(), ErrorKind::ConfigInvalid, "unknown command '" + command + "'");

  std::uint64_t seed = 0;
  if (config.contains("seed")) {
    const Json& v = config.at("seed");
    require(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0), ErrorKind::ConfigInvalid,
            "seed must be a non-negative integer");
    seed = config.at("seed").get<std::uint64_t>();
  }
  std::optional<Arithmetic> arith;
  if (config.contains("arithmetic")) {
    require(config.at("arithmetic").is_string(), ErrorKind::ConfigInvalid, "arithmetic must be exact or float");
    const auto a = config.at("arithmetic").get<std::string>();
    require(a == "exact" || a == "float", ErrorKind::ConfigInvalid, "arithmetic must be exact or float");
    arith = a == "exact" ? Arithmetic::Exact : Arithmetic::Float;
  }
  if (config.contains("out"))
    require(config.at("out").is_string(), ErrorKind::ConfigInvalid, "out must be a directory path");
  const Json empty = Json::object();
  const Json& params = config.contains("params") ? config.at("params") : empty;
  detail::Params p(params, it->second.params, command);
  // Parse the specs now so a malformed spec fails before any output exists.
  if (config.contains("spec")) (void)spec_from_config(config.at("spec"));
  if (config.contains("fp_spec")) (void)fp_spec_from_config(config.at("fp_spec"));

  RunRecord rec;
  rec.command = command;
  rec.config_hash = config_hash(config);
  const auto t0 = std::chrono::steady_clock::now();
  detail::Context ctx{config, seed, arith, rec};
  try {
    it->second.run(ctx, p);
  } catch (const Error& e) {
    throw Error(e.kind(), command + ": " + e.message());
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (config.contains("out")) {
    const std::filesystem::path dir = config.at("out").get<std::string>();
    std::filesystem::create_directories(dir);
    Json result = rec.result;
    result["verdicts"] = rec.verdicts;
    rec.outputs["result.json"] = result.dump(2) + "\n";
    for (const auto& [name, content] : rec.outputs) {
      write_atomically(dir / name, content);
      rec.written.push_back((dir / name).string());
    }
    write_atomically(dir / "run_record.json", rec.to_json().dump(2) + "\n");
    rec.written.push_back((dir / "run_record.json").string());
  }
  return rec;
}

}  // namespace detail

// A JSON value of the wrong type anywhere in the config is a config error. Outputs are
// written only after the command finishes, so a rejected config leaves nothing behind.
inline RunRecord run(const Json& config) {
  try {
    return detail::run_impl(config);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ConfigInvalid, e.what());
  }
}

}  // namespace toruslab
