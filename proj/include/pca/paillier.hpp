#pragma once

// Paillier cryptosystem in the g^(m + n r) form:
//   E(m, r) = g^(m + n r) mod n^2,   D(c) = L(c^lambda) / L(g^lambda) mod n,
// with L(x) = (x - 1) / n. g is a random element of Z*_{n^2} validated at
// key generation.

#include <cstddef>

#include "pca/arith.hpp"

namespace pca::paillier {

struct PublicKey {
  BigUint n;
  BigUint g;
  BigUint n_squared;
  /// g^n mod n^2, so that E(m, r) = g^m * (g^n)^r.
  BigUint g_to_n;

  bool operator==(const PublicKey&) const = default;
};

struct PrivateKey {
  BigUint p;
  BigUint q;
  BigUint lambda;  // lcm(p - 1, q - 1)
  BigUint mu;      // L(g^lambda mod n^2)^-1 mod n
  BigUint n;
  BigUint n_squared;
  // CRT decryption
  BigUint p_squared;
  BigUint q_squared;
  BigUint h_p;  // L_p(g^(p-1) mod p^2)^-1 mod p
  BigUint h_q;
  BigUint p_inv_q;  // p^-1 mod q
};

struct KeyPair {
  PublicKey pub;
  PrivateKey priv;
};

struct Ciphertext {
  BigUint value;

  bool operator==(const Ciphertext&) const = default;
};

inline constexpr std::size_t kDefaultKeyBits = 2048;

/// Random primes of bits/2 each and a random valid g. bits >= 16.
KeyPair keygen(std::size_t bits, RandomSource& rng);

/// Key pair from explicit primes with a random valid g (toy keys: 5, 7).
/// Sampled g additionally satisfies g^n != 1 mod n^2; otherwise g^(m + n r)
/// would not depend on r.
KeyPair from_primes(const BigUint& p, const BigUint& q, RandomSource& rng);

/// Key pair from explicit primes and generator. Throws
/// Error{InvalidParameters} when g fails the decryptability check
/// gcd(L(g^lambda mod n^2), n) = 1. Accepts g = n + 1, for which encryption
/// is deterministic; only use it for worked examples.
KeyPair from_primes(const BigUint& p, const BigUint& q, const BigUint& g);

Ciphertext encrypt(const PublicKey& pk, const BigUint& m, RandomSource& rng);
/// E(m, r) for a caller-supplied r in Z*_n.
Ciphertext encrypt_with(const PublicKey& pk, const BigUint& m, const BigUint& r);

BigUint decrypt(const PrivateKey& sk, const Ciphertext& c);

/// D(result) = m1 + m2 mod n
Ciphertext add_ct(const PublicKey& pk, const Ciphertext& c1, const Ciphertext& c2);
/// c * g^m2; D(result) = m1 + m2 mod n. m2 < n.
Ciphertext add_plain(const PublicKey& pk, const Ciphertext& c, const BigUint& m2);
/// c^k; D(result) = k * m mod n. k < n.
Ciphertext mul_plain(const PublicKey& pk, const Ciphertext& c, const BigUint& k);
/// c * g^(n r') for a fresh r'; same plaintext, new ciphertext.
Ciphertext self_blind(const PublicKey& pk, const Ciphertext& c, RandomSource& rng);

/// Throws Error{MalformedCiphertext} unless 1 <= c < n^2 and gcd(c, n) = 1.
void validate(const PublicKey& pk, const Ciphertext& c);
bool is_valid(const PublicKey& pk, const Ciphertext& c);

}  // namespace pca::paillier
