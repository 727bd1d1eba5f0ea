#pragma once

// Blinded Nyberg-Rueppel message-recovering signatures.
//
// Signer                          Signee (message m in Z*_p)
//   k^ <- Z_q, r^ = g^k^   --r^-->
//                                  alpha <- Z_q, beta <- Z*_q
//                                  r = m g^alpha [r^^beta]
//                          <--m^-- m^ = r beta^-1 mod q  (resample while 0)
//   s^ = m^ x + k^ mod q   --s^-->
//                                  s = s^ beta + alpha mod q
// Verification: m = g^-s y^r r mod p. The bracketed factor is what makes the
// identity close; BlindingVariant::AsPrinted omits it and cannot produce a
// verifying signature (except when k^ beta = 0 mod q).

#include <cstdint>
#include <optional>

#include "pca/arith.hpp"

namespace pca::nr {

struct GroupParams {
  BigUint p;  // prime
  BigUint q;  // prime, q | p - 1
  BigUint g;  // order q modulo p

  bool operator==(const GroupParams&) const = default;

  /// p = 23, q = 11, g = 2.
  static GroupParams toy();
  /// Random q of q_bits, p = k q + 1 of p_bits, g = h^((p-1)/q) != 1.
  static GroupParams generate(std::size_t p_bits, std::size_t q_bits, RandomSource& rng);
  /// Throws Error{InvalidParameters} unless the invariants hold.
  void validate(RandomSource& rng) const;
};

struct KeyPair {
  BigUint x;  // secret, in Z_q
  BigUint y;  // g^x mod p

  static KeyPair generate(const GroupParams& group, RandomSource& rng);
  static KeyPair from_secret(const GroupParams& group, const BigUint& x);
};

struct Signature {
  BigUint r;  // in Z_p
  BigUint s;  // in Z_q

  bool operator==(const Signature&) const = default;
};

enum class BlindingVariant : std::uint8_t {
  CommitmentMixed = 0,  // r = m g^alpha r^^beta
  AsPrinted = 1,        // r = m g^alpha
};

struct SignerSession {
  BigUint k_hat;
  BigUint r_hat;
};

struct SigneeSession {
  BlindingVariant variant = BlindingVariant::CommitmentMixed;
  BigUint message;
  BigUint alpha;
  BigUint beta;
  BigUint r;
  BigUint m_hat;
};

/// Step 1: fresh k^ in [1, q-1], r^ = g^k^ mod p.
SignerSession signer_commit(const GroupParams& group, RandomSource& rng);
SignerSession signer_commit_with(const GroupParams& group, const BigUint& k_hat);

/// Step 2 with fresh alpha, beta; resamples until m^ != 0.
/// Throws Error{InvalidMessage} unless 1 <= m < p.
SigneeSession signee_blind(const GroupParams& group, BlindingVariant variant, const BigUint& m,
                           const BigUint& r_hat, RandomSource& rng);
/// Step 2 with fixed alpha, beta. nullopt when m^ = 0 (caller resamples).
std::optional<SigneeSession> signee_blind_with(const GroupParams& group, BlindingVariant variant,
                                               const BigUint& m, const BigUint& r_hat,
                                               const BigUint& alpha, const BigUint& beta);

/// Step 3: s^ = m^ x + k^ mod q. Throws Error{InvalidBlindedMessage} if m^ = 0.
BigUint signer_respond(const GroupParams& group, const KeyPair& keys, const SignerSession& session,
                       const BigUint& m_hat);

/// Step 4: s = s^ beta + alpha mod q. Throws Error{VerificationFailedAtCreation}
/// when the result does not verify.
Signature signee_unblind(const GroupParams& group, const BigUint& y, const SigneeSession& session,
                         const BigUint& s_hat);

/// m == g^-s y^r r mod p, with range checks on m, r, s.
bool verify(const GroupParams& group, const BigUint& y, const BigUint& m, const Signature& sig);

/// Message recovery: g^-s y^r r mod p.
BigUint recover(const GroupParams& group, const BigUint& y, const Signature& sig);

/// Injective embedding of a non-negative value v < p - 1 into Z*_p (v + 1).
/// Throws Error{InvalidMessage} when v is out of range.
BigUint embed(const GroupParams& group, const BigUint& value);
/// Inverse of embed.
BigUint extract(const BigUint& message);
/// Largest value accepted by embed.
BigUint max_embeddable(const GroupParams& group);

/// Full four-step session run locally; used by tests and the key ceremony.
Signature sign_blind(const GroupParams& group, const KeyPair& keys, const BigUint& m,
                     RandomSource& signer_rng, RandomSource& signee_rng,
                     BlindingVariant variant = BlindingVariant::CommitmentMixed);

}  // namespace pca::nr
