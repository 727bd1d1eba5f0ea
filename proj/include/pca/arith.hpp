#pragma once

// Arbitrary-precision modular arithmetic shared by the Paillier and
// Nyberg-Rueppel code. Residues are GMP integers; every randomized routine
// draws from an explicit RandomSource so protocol runs replay from a seed.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace pca {

/// Non-negative arbitrary-precision integer. Functions in this module only
/// produce non-negative residues; negative protocol values are carried as
/// n - |v|.
using BigUint = mpz_class;

/// Deterministic cryptographic byte stream (ChaCha20 keyed from a seed).
/// Instances are cheap to fork; each actor owns its own fork.
class RandomSource {
public:
  explicit RandomSource(std::uint64_t seed);

  /// Independent child stream; the parent state is not advanced.
  RandomSource fork(std::string_view label) const;

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();
  /// Uniform in [0, bound); bound > 0.
  std::uint64_t uniform_u64(std::uint64_t bound);
  /// Uniform integer with at most `bits` bits.
  BigUint bits(std::size_t bits);
  /// Uniform in [0, bound); bound >= 1.
  BigUint uniform_below(const BigUint& bound);

private:
  explicit RandomSource(const std::array<std::uint8_t, 32>& key);
  void refill();

  std::array<std::uint8_t, 32> key_{};
  std::uint64_t block_ = 0;
  std::array<std::uint8_t, 512> buffer_{};
  std::size_t offset_ = 512;
};

/// base^exp mod modulus, modulus >= 2.
BigUint mod_pow(const BigUint& base, const BigUint& exp, const BigUint& modulus);

/// Inverse of a modulo modulus; throws Error{NotInvertible} when gcd != 1.
BigUint mod_inv(const BigUint& a, const BigUint& modulus);

/// Largest r with r*r <= a.
BigUint isqrt(const BigUint& a);

BigUint lcm(const BigUint& a, const BigUint& b);
BigUint gcd(const BigUint& a, const BigUint& b);

/// Uniform in [1, bound - 1]; bound >= 2. Never returns 0.
BigUint rand_below(const BigUint& bound, RandomSource& rng);

/// Uniform element of Z*_modulus (in [1, modulus-1], coprime to modulus).
BigUint rand_unit(const BigUint& modulus, RandomSource& rng);

/// Miller-Rabin with `rounds` random bases after trial division.
/// 40 rounds bound the error by 2^-80.
bool is_probable_prime(const BigUint& n, RandomSource& rng, int rounds = 40);

/// Probable prime with exactly `bits` bits (bits >= 8).
BigUint gen_prime(std::size_t bits, RandomSource& rng);

std::size_t bit_length(const BigUint& a);

/// Minimal big-endian magnitude bytes; zero encodes as a single 0x00 byte.
std::vector<std::uint8_t> to_bytes(const BigUint& a);
BigUint from_bytes(std::span<const std::uint8_t> bytes);

}  // namespace pca
