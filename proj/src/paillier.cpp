#include "pca/paillier.hpp"

#include "pca/error.hpp"

namespace pca::paillier {
namespace {

BigUint l_function(const BigUint& x, const BigUint& n) { return (x - 1) / n; }

void require_plaintext(const PublicKey& pk, const BigUint& m) {
  if (m < 0 || m >= pk.n) {
    throw Error(ErrorCode::PlaintextOutOfRange, "plaintext must lie in [0, n)");
  }
}

}  // namespace

KeyPair from_primes(const BigUint& p, const BigUint& q, const BigUint& g) {
  if (p == q) throw Error(ErrorCode::InvalidParameters, "Paillier primes must differ");
  const BigUint n = p * q;
  const BigUint n_squared = n * n;
  if (gcd(n, (p - 1) * (q - 1)) != 1) {
    throw Error(ErrorCode::InvalidParameters, "gcd(n, phi(n)) must be 1");
  }
  if (g <= 0 || g >= n_squared || gcd(g, n) != 1) {
    throw Error(ErrorCode::InvalidParameters, "g must lie in Z*_{n^2}");
  }
  const BigUint lambda = lcm(p - 1, q - 1);
  const BigUint denom = l_function(mod_pow(g, lambda, n_squared), n) % n;
  if (gcd(denom, n) != 1) {
    throw Error(ErrorCode::InvalidParameters, "L(g^lambda mod n^2) is not invertible mod n");
  }
  const BigUint g_to_n = mod_pow(g, n, n_squared);
  KeyPair keys;
  keys.pub = PublicKey{n, g, n_squared, g_to_n};
  const BigUint p_squared = p * p;
  const BigUint q_squared = q * q;
  const BigUint h_p = mod_inv(l_function(mod_pow(g % p_squared, p - 1, p_squared), p) % p, p);
  const BigUint h_q = mod_inv(l_function(mod_pow(g % q_squared, q - 1, q_squared), q) % q, q);
  keys.priv = PrivateKey{p, q, lambda, mod_inv(denom, n), n, n_squared, p_squared, q_squared, h_p, h_q, mod_inv(p, q)};
  return keys;
}

KeyPair from_primes(const BigUint& p, const BigUint& q, RandomSource& rng) {
  const BigUint n_squared = p * q * p * q;
  for (;;) {
    const BigUint g = rand_unit(n_squared, rng);
    try {
      KeyPair keys = from_primes(p, q, g);
      if (keys.pub.g_to_n != 1) return keys;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InvalidParameters) throw;
    }
  }
}

KeyPair keygen(std::size_t bits, RandomSource& rng) {
  if (bits < 16) throw Error(ErrorCode::InvalidParameters, "Paillier modulus needs >= 16 bits");
  for (;;) {
    const BigUint p = gen_prime(bits / 2, rng);
    const BigUint q = gen_prime(bits - bits / 2, rng);
    if (p == q || gcd(p * q, (p - 1) * (q - 1)) != 1) continue;
    return from_primes(p, q, rng);
  }
}

Ciphertext encrypt_with(const PublicKey& pk, const BigUint& m, const BigUint& r) {
  require_plaintext(pk, m);
  // g^(m + n r) = g^m * (g^n)^r mod n^2
  BigUint c = mod_pow(pk.g, m, pk.n_squared) * mod_pow(pk.g_to_n, r, pk.n_squared) % pk.n_squared;
  return {c};
}

Ciphertext encrypt(const PublicKey& pk, const BigUint& m, RandomSource& rng) {
  return encrypt_with(pk, m, rand_unit(pk.n, rng));
}

bool is_valid(const PublicKey& pk, const Ciphertext& c) {
  return c.value >= 1 && c.value < pk.n_squared && gcd(c.value, pk.n) == 1;
}

void validate(const PublicKey& pk, const Ciphertext& c) {
  if (!is_valid(pk, c)) throw Error(ErrorCode::MalformedCiphertext, "ciphertext outside Z*_{n^2}");
}

BigUint decrypt(const PrivateKey& sk, const Ciphertext& c) {
  if (c.value < 1 || c.value >= sk.n_squared || gcd(c.value, sk.n) != 1) {
    throw Error(ErrorCode::MalformedCiphertext, "ciphertext outside Z*_{n^2}");
  }
  const BigUint m_p = l_function(mod_pow(c.value % sk.p_squared, sk.p - 1, sk.p_squared), sk.p) * sk.h_p % sk.p;
  const BigUint m_q = l_function(mod_pow(c.value % sk.q_squared, sk.q - 1, sk.q_squared), sk.q) * sk.h_q % sk.q;
  BigUint diff = (m_q - m_p) % sk.q;
  if (diff < 0) diff += sk.q;
  return m_p + sk.p * (diff * sk.p_inv_q % sk.q);
}

Ciphertext add_ct(const PublicKey& pk, const Ciphertext& c1, const Ciphertext& c2) {
  return {c1.value * c2.value % pk.n_squared};
}

Ciphertext add_plain(const PublicKey& pk, const Ciphertext& c, const BigUint& m2) {
  require_plaintext(pk, m2);
  return {c.value * mod_pow(pk.g, m2, pk.n_squared) % pk.n_squared};
}

Ciphertext mul_plain(const PublicKey& pk, const Ciphertext& c, const BigUint& k) {
  require_plaintext(pk, k);
  return {mod_pow(c.value, k, pk.n_squared)};
}

Ciphertext self_blind(const PublicKey& pk, const Ciphertext& c, RandomSource& rng) {
  const BigUint r = rand_below(pk.n, rng);
  return {c.value * mod_pow(pk.g_to_n, r, pk.n_squared) % pk.n_squared};
}

}  // namespace pca::paillier
