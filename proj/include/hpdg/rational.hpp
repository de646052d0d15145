// SPDX-License-Identifier: MIT

#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hpdg {

// Exact rational with a small numerator/denominator. Used wherever a config
// value must stay exact under integer arithmetic (mesh geometry, the degree
// law); transcendental uses convert to double at the last moment.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num(n), den(1) {}
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { reduce(); }

  void reduce() {
    if (den == 0) throw std::invalid_argument("rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  [[nodiscard]] double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }

  // floor(this * k) for integer k >= 0, exact. Requires num >= 0.
  [[nodiscard]] std::int64_t floor_scaled(std::int64_t k) const {
    if (num < 0 || k < 0) throw std::invalid_argument("rational: floor_scaled needs nonnegative operands");
    return (num * k) / den;
  }

  [[nodiscard]] bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
  [[nodiscard]] bool operator<(const Rational& o) const { return num * o.den < o.num * den; }

  [[nodiscard]] std::string str() const {
    return std::to_string(num) + "/" + std::to_string(den);
  }
};

// Accepts "3", "-1/2", or an exact decimal like "0.25". Decimals are converted
// via powers of ten, so every representable input round-trips exactly.
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("rational: empty string");
  // std::stoll alone would accept trailing junk ("3x", "1.2.3"); insist the
  // whole token is consumed.
  const auto parse_int = [](const std::string& s) {
    std::size_t pos = 0;
    const std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size())
      throw std::invalid_argument("rational: cannot parse '" + s + "'");
    return v;
  };
  try {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
      return Rational(parse_int(text.substr(0, slash)),
                      parse_int(text.substr(slash + 1)));
    }
    const auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(parse_int(text));
    const std::string head = text.substr(0, dot);
    const std::string frac = text.substr(dot + 1);
    if (frac.size() > 15) throw std::invalid_argument("rational: too many decimal digits");
    for (char c : frac) {
      if (c < '0' || c > '9')
        throw std::invalid_argument("rational: cannot parse '" + text + "'");
    }
    const bool sign_only = head.empty() || head == "-" || head == "+";
    if (sign_only && frac.empty())
      throw std::invalid_argument("rational: cannot parse '" + text + "'");
    const std::int64_t whole = sign_only ? 0 : parse_int(head);
    const bool negative = !head.empty() && head[0] == '-';
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const std::int64_t part = frac.empty() ? 0 : parse_int(frac);
    const std::int64_t n = whole * scale + (negative ? -part : part);
    return Rational(n, scale);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("rational: cannot parse '" + text + "'");
  }
}

// Reduced fraction for a value k / 2^e, e >= 0. Geometry code stores lengths
// in integer units of the finest cell size and prints through this.
inline std::string format_dyadic(std::int64_t k, int e) {
  std::int64_t den = std::int64_t(1) << e;
  while (k != 0 && k % 2 == 0 && den > 1) {
    k /= 2;
    den /= 2;
  }
  if (k == 0) return "0/1";
  return std::to_string(k) + "/" + std::to_string(den);
}

}  // namespace hpdg
