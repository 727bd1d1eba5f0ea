#include "pca/blind_sig.hpp"

#include "pca/error.hpp"

namespace pca::nr {

GroupParams GroupParams::toy() { return {23, 11, 2}; }

GroupParams GroupParams::generate(std::size_t p_bits, std::size_t q_bits, RandomSource& rng) {
  if (q_bits < 8 || p_bits <= q_bits + 1) {
    throw Error(ErrorCode::InvalidParameters, "need 8 <= q_bits < p_bits - 1");
  }
  const BigUint q = gen_prime(q_bits, rng);
  for (;;) {
    // p = k q + 1 with exactly p_bits bits
    BigUint k = rng.bits(p_bits - q_bits);
    mpz_setbit(k.get_mpz_t(), p_bits - q_bits - 1);
    mpz_clrbit(k.get_mpz_t(), 0);
    const BigUint p = k * q + 1;
    if (bit_length(p) != p_bits || !is_probable_prime(p, rng)) continue;
    const BigUint cofactor = (p - 1) / q;
    for (;;) {
      const BigUint h = rand_below(p - 1, rng) + 1;
      const BigUint g = mod_pow(h, cofactor, p);
      if (g != 1) return {p, q, g};
    }
  }
}

void GroupParams::validate(RandomSource& rng) const {
  if (!is_probable_prime(p, rng) || !is_probable_prime(q, rng)) {
    throw Error(ErrorCode::InvalidParameters, "NR group moduli must be prime");
  }
  if ((p - 1) % q != 0) throw Error(ErrorCode::InvalidParameters, "q must divide p - 1");
  if (g <= 1 || g >= p || mod_pow(g, q, p) != 1) {
    throw Error(ErrorCode::InvalidParameters, "g must have order q modulo p");
  }
}

KeyPair KeyPair::generate(const GroupParams& group, RandomSource& rng) {
  return from_secret(group, rand_below(group.q, rng));
}

KeyPair KeyPair::from_secret(const GroupParams& group, const BigUint& x) {
  return {x, mod_pow(group.g, x, group.p)};
}

SignerSession signer_commit_with(const GroupParams& group, const BigUint& k_hat) {
  return {k_hat, mod_pow(group.g, k_hat, group.p)};
}

SignerSession signer_commit(const GroupParams& group, RandomSource& rng) {
  return signer_commit_with(group, rand_below(group.q, rng));
}

std::optional<SigneeSession> signee_blind_with(const GroupParams& group, BlindingVariant variant,
                                               const BigUint& m, const BigUint& r_hat,
                                               const BigUint& alpha, const BigUint& beta) {
  if (m < 1 || m >= group.p) throw Error(ErrorCode::InvalidMessage, "message must lie in Z*_p");
  if (r_hat < 1 || r_hat >= group.p) throw Error(ErrorCode::InvalidMessage, "commitment must lie in Z*_p");
  BigUint r = m * mod_pow(group.g, alpha, group.p) % group.p;
  if (variant == BlindingVariant::CommitmentMixed) r = r * mod_pow(r_hat, beta, group.p) % group.p;
  const BigUint m_hat = r * mod_inv(beta, group.q) % group.q;
  if (m_hat == 0) return std::nullopt;
  return SigneeSession{variant, m, alpha, beta, r, m_hat};
}

SigneeSession signee_blind(const GroupParams& group, BlindingVariant variant, const BigUint& m,
                           const BigUint& r_hat, RandomSource& rng) {
  for (;;) {
    const BigUint alpha = rng.uniform_below(group.q);
    const BigUint beta = rand_below(group.q, rng);
    if (auto session = signee_blind_with(group, variant, m, r_hat, alpha, beta)) return *session;
  }
}

BigUint signer_respond(const GroupParams& group, const KeyPair& keys, const SignerSession& session,
                       const BigUint& m_hat) {
  if (m_hat <= 0 || m_hat >= group.q) {
    throw Error(ErrorCode::InvalidBlindedMessage, "blinded message must lie in Z*_q");
  }
  return (m_hat * keys.x + session.k_hat) % group.q;
}

Signature signee_unblind(const GroupParams& group, const BigUint& y, const SigneeSession& session,
                         const BigUint& s_hat) {
  Signature sig{session.r, (s_hat * session.beta + session.alpha) % group.q};
  if (!verify(group, y, session.message, sig)) {
    throw Error(ErrorCode::VerificationFailedAtCreation, "unblinded signature does not verify");
  }
  return sig;
}

BigUint recover(const GroupParams& group, const BigUint& y, const Signature& sig) {
  const BigUint neg_s = (group.q - sig.s % group.q) % group.q;
  return mod_pow(group.g, neg_s, group.p) * mod_pow(y, sig.r, group.p) % group.p * sig.r % group.p;
}

bool verify(const GroupParams& group, const BigUint& y, const BigUint& m, const Signature& sig) {
  if (m < 1 || m >= group.p) return false;
  if (sig.r < 1 || sig.r >= group.p) return false;
  if (sig.s < 0 || sig.s >= group.q) return false;
  return recover(group, y, sig) == m;
}

BigUint max_embeddable(const GroupParams& group) { return group.p - 2; }

BigUint embed(const GroupParams& group, const BigUint& value) {
  if (value < 0 || value > max_embeddable(group)) {
    throw Error(ErrorCode::InvalidMessage, "value " + value.get_str() + " does not fit the NR group");
  }
  return value + 1;
}

BigUint extract(const BigUint& message) { return message - 1; }

Signature sign_blind(const GroupParams& group, const KeyPair& keys, const BigUint& m,
                     RandomSource& signer_rng, RandomSource& signee_rng, BlindingVariant variant) {
  const SignerSession signer = signer_commit(group, signer_rng);
  const SigneeSession signee = signee_blind(group, variant, m, signer.r_hat, signee_rng);
  const BigUint s_hat = signer_respond(group, keys, signer, signee.m_hat);
  return signee_unblind(group, keys.y, signee, s_hat);
}

}  // namespace pca::nr
