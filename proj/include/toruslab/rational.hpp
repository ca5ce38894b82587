#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "toruslab/error.hpp"

namespace toruslab {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline Rational make_rational(const BigInt& num, const BigInt& den) { return Rational(num, den); }

inline BigInt numerator_of(const Rational& r) { return boost::multiprecision::numerator(r); }
inline BigInt denominator_of(const Rational& r) { return boost::multiprecision::denominator(r); }

// Floor division; cpp_int division truncates toward zero.
inline BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  BigInt r = a % b;
  if (r != 0 && ((r < 0) != (b < 0))) --q;
  return q;
}

inline BigInt floor_of(const Rational& r) { return floor_div(numerator_of(r), denominator_of(r)); }

// Representative in [0, 1).
inline Rational frac(const Rational& r) { return r - Rational(floor_of(r)); }

// Nearest integer, ties toward +infinity.
inline BigInt round_nearest(const Rational& r) { return floor_of(r + Rational(1, 2)); }

inline double frac(double x) {
  double f = x - std::floor(x);
  return f >= 1.0 ? 0.0 : f;
}

inline BigInt gcd(const BigInt& a, const BigInt& b) { return boost::multiprecision::gcd(a, b); }

inline BigInt lcm(const BigInt& a, const BigInt& b) {
  if (a == 0 || b == 0) return 0;
  BigInt l = boost::multiprecision::lcm(a, b);
  return l < 0 ? BigInt(-l) : l;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(const BigInt& b) { return b.convert_to<double>(); }

// Every finite double is a dyadic rational; the conversion is exact.
inline Rational exact_from_double(double x) {
  require(std::isfinite(x), ErrorKind::InvalidArgument, "non-finite double");
  if (x == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(x, &exp);
  auto m = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  BigInt num = m;
  BigInt den = 1;
  if (exp >= 0) {
    num <<= exp;
  } else {
    den <<= -exp;
  }
  return Rational(num, den);
}

// Always "num/den" so that the form is uniform in serialized output.
inline std::string to_string(const Rational& r) {
  return numerator_of(r).str() + "/" + denominator_of(r).str();
}

// Accepts "n", "n/d", and finite decimal literals such as "-0.501".
inline Rational parse_rational(std::string_view s) {
  auto fail = [&] { throw Error(ErrorKind::InvalidArgument, "cannot parse rational '" + std::string(s) + "'"); };
  auto parse_int = [&](std::string_view t) -> BigInt {
    if (t.empty()) fail();
    std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) fail();
    for (std::size_t j = i; j < t.size(); ++j)
      if (t[j] < '0' || t[j] > '9') fail();
    BigInt v(std::string(t.substr(i)));
    return t[0] == '-' ? BigInt(-v) : v;
  };
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos && s.find('/') == std::string_view::npos) {
    const std::string_view ex = s.substr(e + 1);
    const BigInt k = parse_int(ex);
    if (abs(k) > 4000) fail();
    const Rational m = parse_rational(s.substr(0, e));
    const Rational p = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(abs(k).convert_to<long long>()));
    return k < 0 ? Rational(m / p) : Rational(m * p);
  }
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    BigInt den = parse_int(s.substr(slash + 1));
    if (den == 0) fail();
    return Rational(parse_int(s.substr(0, slash)), den);
  }
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view ip = s.substr(0, dot);
    std::string_view fp = s.substr(dot + 1);
    bool neg = !ip.empty() && ip[0] == '-';
    if (!ip.empty() && (ip[0] == '-' || ip[0] == '+')) ip.remove_prefix(1);
    if (ip.empty() && fp.empty()) fail();
    BigInt whole = ip.empty() ? BigInt(0) : parse_int(ip);
    BigInt part = fp.empty() ? BigInt(0) : parse_int(fp);
    if (!fp.empty() && (fp[0] == '-' || fp[0] == '+')) fail();
    BigInt scale = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(fp.size()));
    Rational v = Rational(whole) + Rational(part, scale);
    return neg ? Rational(-v) : v;
  }
  return Rational(parse_int(s));
}

using RVec = std::vector<Rational>;
using DVec = std::vector<double>;

inline DVec to_doubles(const RVec& v) {
  DVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = to_double(v[i]);
  return out;
}

inline RVec exact_from_doubles(const DVec& v) {
  RVec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = exact_from_double(v[i]);
  return out;
}

}  // namespace toruslab
