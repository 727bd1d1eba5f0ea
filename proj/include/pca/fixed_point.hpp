#pragma once

// Fixed-point encoding [x] = floor(x * 2^e) with a shared exponent e. Every
// actor evaluates norms and payments through these functions so that the
// resulting integers match bit for bit.

#include <compare>
#include <string>

#include <gmpxx.h>

#include "pca/arith.hpp"

namespace pca {

/// Exact non-negative rational (bids, valuations, utilities).
using Rational = mpq_class;

inline constexpr unsigned kDefaultExponent = 16;

struct FixedPoint {
  BigUint raw = 0;
  unsigned exponent = kDefaultExponent;

  bool operator==(const FixedPoint& other) const = default;

  /// Exact rational value raw / 2^e.
  Rational decode() const;
  std::string to_string() const;
  /// Throws Error{Overflow} unless raw < 2^(value_bits + exponent).
  void check_range(unsigned value_bits) const;
};

/// floor(x * 2^e); throws Error{NegativeInput} for x < 0.
FixedPoint encode(const Rational& x, unsigned e);
FixedPoint from_raw(BigUint raw, unsigned e);

FixedPoint add(const FixedPoint& a, const FixedPoint& b);
/// floor(a.raw * b.raw / 2^e)
FixedPoint mul(const FixedPoint& a, const FixedPoint& b);
/// floor(a.raw * 2^e / b.raw)
FixedPoint div(const FixedPoint& a, const FixedPoint& b);
/// isqrt(k * 2^(2e)), i.e. floor(sqrt(k) * 2^e) exactly.
FixedPoint sqrt_of_int(unsigned long k, unsigned e);

/// Ranking norm b / sqrt(|S|): div(encode(b, e), sqrt_of_int(|S|, e)).
FixedPoint norm_of(const Rational& bid, unsigned long bundle_size, unsigned e);
/// Critical-value payment psi_j * sqrt(|S_i|): mul(psi_j, sqrt_of_int(|S_i|, e)).
FixedPoint payment_of(const FixedPoint& candidate_norm, unsigned long bundle_size);

/// Parses "7", "7/2", "3.25" into an exact rational.
Rational parse_rational(const std::string& text);
/// Canonical text ("7", "7/2"); round-trips through parse_rational.
std::string format_rational(const Rational& value);

}  // namespace pca
