#include "pca/fixed_point.hpp"

#include <algorithm>
#include <cctype>

#include "pca/error.hpp"

namespace pca {
namespace {

void require_same_exponent(const FixedPoint& a, const FixedPoint& b) {
  if (a.exponent != b.exponent) {
    throw Error(ErrorCode::ExponentMismatch,
                "exponents " + std::to_string(a.exponent) + " and " + std::to_string(b.exponent));
  }
}

BigUint pow2(unsigned e) {
  BigUint out = 1;
  out <<= e;
  return out;
}

}  // namespace

Rational FixedPoint::decode() const {
  Rational out(raw, pow2(exponent));
  out.canonicalize();
  return out;
}

std::string FixedPoint::to_string() const {
  // Decimal rendering truncated to 6 places; raw is the authoritative value.
  const Rational v = decode();
  BigUint whole = v.get_num() / v.get_den();
  BigUint frac = (v.get_num() % v.get_den()) * 1000000 / v.get_den();
  std::string f = frac.get_str();
  f.insert(0, 6 - f.size(), '0');
  return whole.get_str() + "." + f;
}

void FixedPoint::check_range(unsigned value_bits) const {
  if (bit_length(raw) > value_bits + exponent) {
    throw Error(ErrorCode::Overflow, "fixed-point raw " + raw.get_str() + " exceeds " +
                                         std::to_string(value_bits) + " value bits");
  }
}

FixedPoint encode(const Rational& x, unsigned e) {
  if (x < 0) throw Error(ErrorCode::NegativeInput, "cannot encode " + x.get_str());
  BigUint scaled = x.get_num() * pow2(e);
  BigUint raw;
  mpz_fdiv_q(raw.get_mpz_t(), scaled.get_mpz_t(), x.get_den().get_mpz_t());
  return {raw, e};
}

FixedPoint from_raw(BigUint raw, unsigned e) {
  if (raw < 0) throw Error(ErrorCode::NegativeInput, "negative raw value");
  return {std::move(raw), e};
}

FixedPoint add(const FixedPoint& a, const FixedPoint& b) {
  require_same_exponent(a, b);
  return {a.raw + b.raw, a.exponent};
}

FixedPoint mul(const FixedPoint& a, const FixedPoint& b) {
  require_same_exponent(a, b);
  BigUint raw = a.raw * b.raw;
  raw >>= a.exponent;  // floor for non-negative values
  return {raw, a.exponent};
}

FixedPoint div(const FixedPoint& a, const FixedPoint& b) {
  require_same_exponent(a, b);
  if (b.raw == 0) throw Error(ErrorCode::DivisionByZero, "fixed-point division by zero");
  BigUint num = a.raw << a.exponent;
  BigUint raw;
  mpz_fdiv_q(raw.get_mpz_t(), num.get_mpz_t(), b.raw.get_mpz_t());
  return {raw, a.exponent};
}

FixedPoint sqrt_of_int(unsigned long k, unsigned e) {
  if (k == 0) throw Error(ErrorCode::InvalidParameters, "sqrt_of_int needs k >= 1");
  BigUint scaled = BigUint(k) << (2 * e);
  return {isqrt(scaled), e};
}

FixedPoint norm_of(const Rational& bid, unsigned long bundle_size, unsigned e) {
  return div(encode(bid, e), sqrt_of_int(bundle_size, e));
}

FixedPoint payment_of(const FixedPoint& candidate_norm, unsigned long bundle_size) {
  return mul(candidate_norm, sqrt_of_int(bundle_size, candidate_norm.exponent));
}

Rational parse_rational(const std::string& text) {
  auto fail = [&] { return Error(ErrorCode::ParseError, "not a rational number: '" + text + "'"); };
  if (text.empty()) throw fail();
  const auto dot = text.find('.');
  const auto slash = text.find('/');
  auto all_digits = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
  };
  Rational out;
  if (dot != std::string::npos) {
    if (slash != std::string::npos) throw fail();
    std::string whole = text.substr(0, dot);
    std::string frac = text.substr(dot + 1);
    if (whole.empty()) whole = "0";
    if (!all_digits(whole) || !all_digits(frac)) throw fail();
    BigUint den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    out = Rational(BigUint(whole + frac), den);
  } else if (slash != std::string::npos) {
    std::string num = text.substr(0, slash);
    std::string den = text.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den) || BigUint(den) == 0) throw fail();
    out = Rational(BigUint(num), BigUint(den));
  } else {
    if (!all_digits(text)) throw fail();
    out = Rational(BigUint(text));
  }
  out.canonicalize();
  return out;
}

std::string format_rational(const Rational& value) {
  Rational v = value;
  v.canonicalize();
  return v.get_str();
}

}  // namespace pca
