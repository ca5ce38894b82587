#pragma once

// JSON and CSV encodings, named specs.

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toruslab/energy.hpp"
#include "toruslab/fp.hpp"
#include "toruslab/spectral.hpp"

namespace toruslab {

using Json = nlohmann::json;

inline void reject_unknown(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  require(obj.is_object(), ErrorKind::ConfigInvalid, where + " must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    require(ok, ErrorKind::ConfigInvalid, "unknown field '" + k + "' in " + where);
  }
}

// Shortest round-trip decimal.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline Json to_json(const Rational& r) { return to_string(r); }

inline Rational rational_from_json(const Json& j) {
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const Error& e) {
      throw Error(ErrorKind::ConfigInvalid, e.message());
    }
  }
  if (j.is_number_integer()) return Rational(j.get<long long>());
  // A JSON float stands for its shortest round-trip decimal, so 0.002 reads as 1/500.
  if (j.is_number_float()) return parse_rational(format_double(j.get<double>()));
  throw Error(ErrorKind::ConfigInvalid, "expected a rational, got " + j.dump());
}

inline Json to_json(const TorusPoint& p) {
  Json a = Json::array();
  if (p.is_exact()) {
    for (const auto& c : p.exact_coords()) a.push_back(to_string(c));
  } else {
    for (double c : p.approx_coords()) a.push_back(c);
  }
  return a;
}

// Strings and integers give an exact point; any JSON float makes the point floating.
inline TorusPoint point_from_json(const Json& j) {
  require(j.is_array() && !j.empty(), ErrorKind::ConfigInvalid, "point must be a non-empty array");
  bool any_float = false;
  for (const auto& v : j) any_float = any_float || v.is_number_float();
  if (any_float) {
    DVec c;
    for (const auto& v : j) {
      require(v.is_number(), ErrorKind::ConfigInvalid, "floating point coordinates must be numbers");
      c.push_back(v.get<double>());
    }
    return TorusPoint::approx(std::move(c));
  }
  RVec c;
  for (const auto& v : j) c.push_back(rational_from_json(v));
  return TorusPoint::exact(std::move(c));
}

inline Json to_json(const IntMatrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    Json r = Json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) {
      const BigInt& v = m(i, j);
      if (abs(v) < BigInt(1) << 52) {
        r.push_back(v.convert_to<long long>());
      } else {
        r.push_back(v.str());
      }
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline BigInt bigint_from_json(const Json& v) {
  if (v.is_number_integer()) return BigInt(v.get<long long>());
  if (v.is_string()) {
    Rational r = parse_rational(v.get<std::string>());
    require(denominator_of(r) == 1, ErrorKind::ConfigInvalid, "expected an integer");
    return numerator_of(r);
  }
  throw Error(ErrorKind::ConfigInvalid, "expected an integer, got " + v.dump());
}

inline IntMatrix matrix_from_json(const Json& j) {
  require(j.is_array(), ErrorKind::ConfigInvalid, "matrix must be an array of rows");
  const std::size_t d = j.size();
  std::vector<BigInt> e;
  for (const auto& row : j) {
    require(row.is_array() && row.size() == d, ErrorKind::DimensionMismatch, "matrix must be square");
    for (const auto& v : row) e.push_back(bigint_from_json(v));
  }
  return IntMatrix(d, std::move(e));
}

inline Json to_json(const WalkSpec& s) {
  Json gens = Json::array();
  for (const auto& g : s.generators())
    gens.push_back({{"label", g.label}, {"weight", to_string(g.weight)}, {"matrix", to_json(g.linear)},
                    {"translation", to_json(g.translation)}});
  return {{"dim", s.dim()}, {"generators", gens}};
}

inline WalkSpec spec_from_json(const Json& j) {
  reject_unknown(j, {"dim", "generators"}, "spec");
  require(j.contains("dim") && j.contains("generators"), ErrorKind::ConfigInvalid, "spec needs dim and generators");
  const auto d = j.at("dim").get<std::size_t>();
  std::vector<Generator> gens;
  for (const auto& g : j.at("generators")) {
    reject_unknown(g, {"label", "weight", "matrix", "translation"}, "generator");
    gens.push_back({g.at("label").get<std::string>(), rational_from_json(g.at("weight")),
                    matrix_from_json(g.at("matrix")),
                    g.contains("translation") ? point_from_json(g.at("translation"))
                                              : TorusPoint::exact(RVec(d, Rational(0)))});
  }
  return WalkSpec(d, std::move(gens));
}

inline Json to_json(const FpWalkSpec& s) {
  Json gens = Json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    Json m = Json::array();
    for (std::size_t r = 0; r < s.dim(); ++r) {
      Json row = Json::array();
      for (std::size_t c = 0; c < s.dim(); ++c) row.push_back(s.matrix(i)[r * s.dim() + c]);
      m.push_back(row);
    }
    gens.push_back({{"label", s.label(i)}, {"weight", to_string(s.weight(i))}, {"matrix", m},
                    {"translation", s.translation(i)}});
  }
  return {{"p", s.p()}, {"dim", s.dim()}, {"generators", gens}};
}

inline FpWalkSpec fp_spec_from_json(const Json& j) {
  reject_unknown(j, {"p", "dim", "generators"}, "fp_spec");
  const auto d = j.at("dim").get<std::size_t>();
  std::vector<std::string> labels;
  std::vector<Rational> weights;
  std::vector<std::vector<i64>> mats, trans;
  for (const auto& g : j.at("generators")) {
    reject_unknown(g, {"label", "weight", "matrix", "translation"}, "fp generator");
    labels.push_back(g.at("label").get<std::string>());
    weights.push_back(rational_from_json(g.at("weight")));
    std::vector<i64> m;
    for (const auto& row : g.at("matrix")) {
      require(row.size() == d, ErrorKind::DimensionMismatch, "fp matrix row length");
      for (const auto& v : row) m.push_back(v.get<i64>());
    }
    mats.push_back(std::move(m));
    trans.push_back(g.contains("translation") ? g.at("translation").get<std::vector<i64>>() : std::vector<i64>(d, 0));
  }
  return FpWalkSpec(j.at("p").get<i64>(), d, labels, weights, mats, trans);
}

inline WalkSpec std_sl2() {
  return WalkSpec(2, {{"a", Rational(1, 2), IntMatrix{{1, 1}, {0, 1}}, TorusPoint::exact({0, 0})},
                      {"b", Rational(1, 2), IntMatrix{{1, 0}, {1, 1}}, TorusPoint::exact({0, 0})}});
}

inline WalkSpec hyperbolic_pair() {
  return WalkSpec(2, {{"h", Rational(1, 2), IntMatrix{{2, 1}, {1, 1}}, TorusPoint::exact({0, 0})},
                      {"t", Rational(1, 2), IntMatrix{{2, 1}, {1, 1}}.transpose(), TorusPoint::exact({0, 0})}});
}

inline TorusPoint trapped_q3_point() { return TorusPoint::exact({Rational(1, 3), Rational(2, 3)}); }

// std-sl2 generators mod 5 with u(w) = (I - gamma(w)) x0, x0 = (2, 3): x0 is the unique fixed point.
inline FpWalkSpec fp_fixedpoint() {
  const i64 p = 5;
  const std::vector<i64> x0{2, 3};
  std::vector<std::vector<i64>> mats{{1, 1, 0, 1}, {1, 0, 1, 1}}, trans;
  for (const auto& m : mats) {
    std::vector<i64> u(2);
    for (std::size_t r = 0; r < 2; ++r) u[r] = mod_p(x0[r] - (m[r * 2] * x0[0] + m[r * 2 + 1] * x0[1]), p);
    trans.push_back(u);
  }
  return FpWalkSpec(p, 2, {"a", "b"}, {Rational(1, 2), Rational(1, 2)}, mats, trans);
}

struct NamedSpec {
  WalkSpec spec;
  std::optional<TorusPoint> start;
};

inline std::vector<std::string> spec_names() { return {"std-sl2", "hyperbolic-pair", "trapped-q3", "fp-fixedpoint"}; }

inline NamedSpec named_spec(const std::string& name) {
  if (name == "std-sl2") return {std_sl2(), std::nullopt};
  if (name == "hyperbolic-pair") return {hyperbolic_pair(), std::nullopt};
  if (name == "trapped-q3") return {std_sl2(), trapped_q3_point()};
  throw Error(ErrorKind::ConfigInvalid, "unknown torus spec name '" + name + "'");
}

inline WalkSpec spec_from_config(const Json& j, std::optional<TorusPoint>* start = nullptr) {
  if (j.is_string()) {
    NamedSpec n = named_spec(j.get<std::string>());
    if (start && !*start) *start = n.start;
    return n.spec;
  }
  return spec_from_json(j);
}

inline FpWalkSpec fp_spec_from_config(const Json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "fp-fixedpoint") return fp_fixedpoint();
    throw Error(ErrorKind::ConfigInvalid, "unknown F_p spec name '" + name + "'");
  }
  return fp_spec_from_json(j);
}

inline Json to_json(const FiniteMeasure& m) {
  Json atoms = Json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    Json w = m.has_exact_weights() ? Json(to_string(m.exact_weight(i))) : Json(m.weight(i));
    atoms.push_back({{"point", to_json(m.point(i))}, {"weight", w}});
  }
  return {{"atoms", atoms}};
}

inline FiniteMeasure measure_from_json(const Json& j) {
  reject_unknown(j, {"atoms"}, "measure");
  bool exact = true;
  for (const auto& a : j.at("atoms")) {
    reject_unknown(a, {"point", "weight"}, "atom");
    exact = exact && !a.at("weight").is_number_float();
  }
  if (exact) {
    std::vector<std::pair<TorusPoint, Rational>> atoms;
    for (const auto& a : j.at("atoms")) atoms.emplace_back(point_from_json(a.at("point")), rational_from_json(a.at("weight")));
    return FiniteMeasure::from_exact(atoms);
  }
  std::vector<std::pair<TorusPoint, double>> atoms;
  for (const auto& a : j.at("atoms")) atoms.emplace_back(point_from_json(a.at("point")), a.at("weight").get<double>());
  return FiniteMeasure::from_float(atoms);
}

inline Json to_json(const PeriodicDatum& p) {
  Json u = Json::array();
  for (const auto& v : p.u) u.push_back(to_json(v));
  return {{"q", p.q.str()}, {"x", to_json(p.x)}, {"u", u}};
}

inline Json to_json(const OrbitReport& r) {
  Json pts = Json::array();
  for (const auto& p : r.orbit_points) pts.push_back(to_json(p));
  Json disp = Json::array();
  for (const auto& [label, v] : r.displacements) {
    Json c = Json::array();
    for (const auto& x : v) c.push_back(to_string(x));
    disp.push_back({{"label", label}, {"displacement", c}});
  }
  return {{"finite", r.finite}, {"enumerated", r.enumerated}, {"height_q", r.height_q.str()},
          {"orbit_size", r.orbit_points.size()}, {"orbit_points", pts}, {"certificate", disp}};
}

inline Json to_json(const DecayReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) rows.push_back({{"n", row.n}, {"value", row.value}, {"stderr", row.stderr_}});
  Json fit = {{"valid", r.fit.valid}};
  if (r.fit.valid)
    fit.update({{"rate", r.fit.rate}, {"intercept", r.fit.intercept}, {"window_lo", r.fit.window_lo},
                {"window_hi", r.fit.window_hi}});
  return {{"spec_fingerprint", r.spec_fingerprint}, {"seed", r.seed}, {"samples", r.samples}, {"a", r.a},
          {"rows", rows}, {"fit", fit}};
}

// RFC 4180 writer.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row(header); }

  template <class... Ts>
  void values(const Ts&... v) {
    std::vector<std::string> cells{cell(v)...};
    row(cells);
  }

  void row(const std::vector<std::string>& cells) {
    require(cells.size() == cols_, ErrorKind::InvalidArgument, "CSV row width differs from header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << quote(cells[i]);
    }
    out_ << "\r\n";
  }

  std::string str() const { return out_.str(); }

  static std::string cell(double v) { return format_double(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class T, std::enable_if_t<std::is_integral_v<T>, int> = 0>
  static std::string cell(T v) { return std::to_string(v); }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }

  std::size_t cols_;
  std::ostringstream out_;
};

inline std::string decay_csv(const std::vector<DecayRow>& rows) {
  CsvWriter w({"n", "value", "stderr"});
  for (const auto& r : rows) w.values(r.n, r.value, r.stderr_);
  return w.str();
}

inline std::string census_csv(const FpCensus& c) {
  CsvWriter w({"orbit_id", "size"});
  for (std::size_t i = 0; i < c.orbits.size(); ++i) w.values(i, c.orbits[i].size());
  return w.str();
}

inline std::string pairs_csv(const ContractionFit& f) {
  CsvWriter w({"pair_id", "distance", "estimate"});
  for (std::size_t i = 0; i < f.pairs.size(); ++i) w.values(i, f.pairs[i].distance, f.pairs[i].estimate);
  return w.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::InvalidArgument, "cannot write " + path);
  f << content;
}

}  // namespace toruslab
