#include "pca/arith.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>

#include <sodium.h>

#include "pca/error.hpp"

namespace pca {
namespace {

void ensure_sodium() {
  static std::once_flag flag;
  std::call_once(flag, [] {
    if (sodium_init() < 0) {
      throw Error(ErrorCode::InvalidParameters, "libsodium initialization failed");
    }
  });
}

std::array<std::uint8_t, 32> derive_key(std::span<const std::uint8_t> material) {
  std::array<std::uint8_t, 32> key{};
  crypto_generichash(key.data(), key.size(), material.data(), material.size(), nullptr, 0);
  return key;
}

constexpr std::array<unsigned, 25> kSmallPrimes = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                                   43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

}  // namespace

RandomSource::RandomSource(std::uint64_t seed) {
  ensure_sodium();
  std::array<std::uint8_t, 16> material{};
  const char tag[8] = {'p', 'c', 'a', '-', 'r', 'n', 'g', '1'};
  std::memcpy(material.data(), tag, 8);
  for (int i = 0; i < 8; ++i) material[8 + i] = static_cast<std::uint8_t>(seed >> (56 - 8 * i));
  key_ = derive_key(material);
}

RandomSource::RandomSource(const std::array<std::uint8_t, 32>& key) : key_(key) { ensure_sodium(); }

RandomSource RandomSource::fork(std::string_view label) const {
  std::vector<std::uint8_t> material(key_.begin(), key_.end());
  material.insert(material.end(), label.begin(), label.end());
  return RandomSource(derive_key(material));
}

void RandomSource::refill() {
  std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
  for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<std::uint8_t>(block_ >> (56 - 8 * i));
  ++block_;
  crypto_stream_chacha20_ietf(buffer_.data(), buffer_.size(), nonce.data(), key_.data());
  offset_ = 0;
}

void RandomSource::fill(std::span<std::uint8_t> out) {
  std::size_t done = 0;
  while (done < out.size()) {
    if (offset_ == buffer_.size()) refill();
    const std::size_t n = std::min(out.size() - done, buffer_.size() - offset_);
    std::memcpy(out.data() + done, buffer_.data() + offset_, n);
    offset_ += n;
    done += n;
  }
}

std::uint64_t RandomSource::next_u64() {
  std::array<std::uint8_t, 8> b{};
  fill(b);
  std::uint64_t v = 0;
  for (auto byte : b) v = (v << 8) | byte;
  return v;
}

std::uint64_t RandomSource::uniform_u64(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::InvalidParameters, "uniform_u64 bound must be positive");
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  for (;;) {
    const std::uint64_t v = next_u64();
    if (v < limit) return v % bound;
  }
}

BigUint RandomSource::bits(std::size_t nbits) {
  if (nbits == 0) return 0;
  std::vector<std::uint8_t> bytes((nbits + 7) / 8);
  fill(bytes);
  const std::size_t excess = bytes.size() * 8 - nbits;
  bytes[0] &= static_cast<std::uint8_t>(0xFFu >> excess);
  return from_bytes(bytes);
}

BigUint RandomSource::uniform_below(const BigUint& bound) {
  if (bound <= 0) throw Error(ErrorCode::InvalidParameters, "uniform_below bound must be positive");
  const std::size_t nbits = bit_length(bound - 1);
  for (;;) {
    BigUint v = bits(nbits);
    if (v < bound) return v;
  }
}

BigUint mod_pow(const BigUint& base, const BigUint& exp, const BigUint& modulus) {
  if (modulus < 2) throw Error(ErrorCode::InvalidParameters, "mod_pow modulus must be >= 2");
  BigUint out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), modulus.get_mpz_t());
  return out;
}

BigUint mod_inv(const BigUint& a, const BigUint& modulus) {
  BigUint out;
  if (modulus < 2 || mpz_invert(out.get_mpz_t(), a.get_mpz_t(), modulus.get_mpz_t()) == 0) {
    throw Error(ErrorCode::NotInvertible, a.get_str() + " has no inverse modulo " + modulus.get_str());
  }
  return out;
}

BigUint isqrt(const BigUint& a) {
  if (a < 0) throw Error(ErrorCode::NegativeInput, "isqrt of a negative value");
  BigUint out;
  mpz_sqrt(out.get_mpz_t(), a.get_mpz_t());
  return out;
}

BigUint lcm(const BigUint& a, const BigUint& b) {
  BigUint out;
  mpz_lcm(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return out;
}

BigUint gcd(const BigUint& a, const BigUint& b) {
  BigUint out;
  mpz_gcd(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return out;
}

BigUint rand_below(const BigUint& bound, RandomSource& rng) {
  if (bound < 2) throw Error(ErrorCode::InvalidParameters, "rand_below bound must be >= 2");
  return rng.uniform_below(bound - 1) + 1;
}

BigUint rand_unit(const BigUint& modulus, RandomSource& rng) {
  for (;;) {
    BigUint r = rand_below(modulus, rng);
    if (gcd(r, modulus) == 1) return r;
  }
}

bool is_probable_prime(const BigUint& n, RandomSource& rng, int rounds) {
  if (n < 2) return false;
  for (unsigned p : kSmallPrimes) {
    if (n == p) return true;
    if (mpz_divisible_ui_p(n.get_mpz_t(), p) != 0) return false;
  }
  const BigUint n_minus_1 = n - 1;
  BigUint d = n_minus_1;
  unsigned s = 0;
  while (mpz_even_p(d.get_mpz_t()) != 0) {
    d >>= 1;
    ++s;
  }
  for (int i = 0; i < rounds; ++i) {
    // base in [2, n-2]
    const BigUint a = rng.uniform_below(n - 3) + 2;
    BigUint x = mod_pow(a, d, n);
    if (x == 1 || x == n_minus_1) continue;
    bool composite = true;
    for (unsigned r = 1; r < s; ++r) {
      x = x * x % n;
      if (x == n_minus_1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

BigUint gen_prime(std::size_t bits, RandomSource& rng) {
  if (bits < 8) throw Error(ErrorCode::InvalidParameters, "gen_prime needs at least 8 bits");
  for (;;) {
    BigUint candidate = rng.bits(bits);
    mpz_setbit(candidate.get_mpz_t(), bits - 1);
    mpz_setbit(candidate.get_mpz_t(), 0);
    if (is_probable_prime(candidate, rng)) return candidate;
  }
}

std::size_t bit_length(const BigUint& a) {
  if (a == 0) return 0;
  return mpz_sizeinbase(a.get_mpz_t(), 2);
}

std::vector<std::uint8_t> to_bytes(const BigUint& a) {
  if (a < 0) throw Error(ErrorCode::NegativeInput, "to_bytes of a negative value");
  if (a == 0) return {0};
  std::vector<std::uint8_t> out((bit_length(a) + 7) / 8);
  std::size_t written = 0;
  mpz_export(out.data(), &written, 1, 1, 1, 0, a.get_mpz_t());
  out.resize(written);
  return out;
}

BigUint from_bytes(std::span<const std::uint8_t> bytes) {
  BigUint out;
  if (!bytes.empty()) mpz_import(out.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return out;
}

}  // namespace pca
