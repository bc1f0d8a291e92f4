#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "kakeya/errors.hpp"

namespace kakeya {

using Rational = mpq_class;
using BigInt = mpz_class;

inline Rational make_rational(long long num, long long den = 1) {
  Rational q(BigInt(std::to_string(num)), BigInt(std::to_string(den)));
  q.canonicalize();
  return q;
}

inline Rational from_u64(std::uint64_t num, std::uint64_t den = 1) {
  Rational q(BigInt(std::to_string(num)), BigInt(std::to_string(den)));
  q.canonicalize();
  return q;
}

// Parses "p", "p/q" or a decimal literal such as "0.25".
inline Rational parse_rational(const std::string& s) {
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    Rational q(s);
    q.canonicalize();
    return q;
  }
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  BigInt den = 1;
  for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
  Rational q{BigInt(digits), den};
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }
inline double to_double(const Rational& q) { return q.get_d(); }

// 2^{-k}
inline Rational half_pow(unsigned k) {
  BigInt den = 1;
  den <<= k;
  return Rational(BigInt(1), den);
}

inline Rational rpow(const Rational& base, unsigned e) {
  Rational r = 1;
  for (unsigned i = 0; i < e; ++i) r *= base;
  return r;
}

inline std::int64_t floor_to_int(double x) {
  return static_cast<std::int64_t>(std::floor(x));
}

inline std::int64_t floor_to_int(const Rational& q) {
  BigInt f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  if (!f.fits_slong_p()) throw DomainError("floor out of 64-bit range");
  return f.get_si();
}

// base^e with overflow detection.
inline std::uint64_t ipow(std::uint64_t base, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) {
    if (base != 0 && r > std::numeric_limits<std::uint64_t>::max() / base)
      throw ResourceError("integer power overflows 64 bits");
    r *= base;
  }
  return r;
}

}  // namespace kakeya
