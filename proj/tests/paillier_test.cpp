#include "pca/paillier.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "pca/error.hpp"

using namespace pca;
using namespace pca::paillier;

namespace {

KeyPair toy_keys(std::uint64_t seed = 1) {
  RandomSource rng(seed);
  return from_primes(5, 7, rng);
}

const KeyPair& keys512() {
  static const KeyPair keys = [] {
    RandomSource rng(512);
    return keygen(512, rng);
  }();
  return keys;
}

}  // namespace

TEST(PaillierKeys, ToyParameters) {
  const KeyPair k = toy_keys();
  EXPECT_EQ(k.pub.n, 35);
  EXPECT_EQ(k.pub.n_squared, 1225);
  EXPECT_EQ(k.priv.lambda, 12);
  const BigUint l = (mod_pow(k.pub.g, k.priv.lambda, k.pub.n_squared) - 1) / k.pub.n;
  EXPECT_EQ(gcd(l, k.pub.n), 1);
  EXPECT_NE(k.pub.g_to_n, 1);
}

TEST(PaillierKeys, DeterministicFromSeed) {
  RandomSource a(16), b(16);
  const KeyPair ka = keygen(64, a), kb = keygen(64, b);
  EXPECT_EQ(ka.pub, kb.pub);
  EXPECT_EQ(ka.priv.lambda, kb.priv.lambda);
}

TEST(PaillierKeys, GeneratedModulusHasRequestedSize) {
  const KeyPair& k = keys512();
  EXPECT_EQ(bit_length(k.pub.n), 512U);
  EXPECT_EQ(k.priv.lambda, lcm(k.priv.p - 1, k.priv.q - 1));
}

TEST(PaillierKeys, RejectsUndecryptableGenerator) {
  // g = 1 gives L(g^lambda) = 0.
  EXPECT_THROW(from_primes(5, 7, BigUint(1)), Error);
  EXPECT_THROW(from_primes(5, 5, BigUint(2)), Error);
}

TEST(PaillierToy, WorkedExampleWithGEqualNPlusOne) {
  // g = 36 = n + 1: E(3, r = 2) = 36^(3 + 35*2) mod 1225.
  const KeyPair k = from_primes(5, 7, BigUint(36));
  const Ciphertext c = encrypt_with(k.pub, 3, 2);
  EXPECT_EQ(c.value, mod_pow(36, 73, 1225));
  EXPECT_EQ(decrypt(k.priv, c), 3);
  // (n+1)^(n r) = 1 mod n^2, so this generator ignores r entirely.
  EXPECT_EQ(encrypt_with(k.pub, 3, 4), c);
}

TEST(PaillierToy, DecryptEncryptExhaustive) {
  const KeyPair k = toy_keys();
  for (int m = 0; m < 35; ++m) {
    for (int r = 1; r < 35; ++r) {
      if (gcd(r, 35) != 1) continue;
      ASSERT_EQ(decrypt(k.priv, encrypt_with(k.pub, m, r)), m) << "m=" << m << " r=" << r;
    }
  }
}

TEST(PaillierToy, HomomorphicIdentitiesExhaustive) {
  const KeyPair k = toy_keys(3);
  RandomSource rng(9);
  for (int m1 = 0; m1 < 35; ++m1) {
    const Ciphertext c1 = encrypt(k.pub, m1, rng);
    for (int m2 = 0; m2 < 35; ++m2) {
      const Ciphertext c2 = encrypt(k.pub, m2, rng);
      ASSERT_EQ(decrypt(k.priv, add_ct(k.pub, c1, c2)), (m1 + m2) % 35);
      ASSERT_EQ(decrypt(k.priv, add_plain(k.pub, c1, m2)), (m1 + m2) % 35);
      ASSERT_EQ(decrypt(k.priv, mul_plain(k.pub, c1, m2)), (m1 * m2) % 35);
    }
  }
}

TEST(PaillierToy, AdditionExamples) {
  const KeyPair k = toy_keys();
  RandomSource rng(4);
  EXPECT_EQ(decrypt(k.priv, add_ct(k.pub, encrypt(k.pub, 3, rng), encrypt(k.pub, 4, rng))), 7);
  const Ciphertext c = encrypt(k.pub, 11, rng);
  EXPECT_EQ(decrypt(k.priv, add_ct(k.pub, c, encrypt(k.pub, 0, rng))), 11);
  EXPECT_EQ(decrypt(k.priv, add_ct(k.pub, encrypt(k.pub, 34, rng), encrypt(k.pub, 2, rng))), 1);
  EXPECT_EQ(decrypt(k.priv, add_plain(k.pub, encrypt(k.pub, 3, rng), 4)), 7);
  EXPECT_EQ(add_plain(k.pub, c, 0), c);
}

TEST(PaillierToy, DifferenceEncodingIsZeroExactlyOnEquality) {
  const KeyPair k = toy_keys();
  RandomSource rng(6);
  for (int guess = 0; guess < 35; ++guess) {
    const Ciphertext e_guess = encrypt(k.pub, guess, rng);
    for (int psi = 0; psi < 35; ++psi) {
      const Ciphertext diff = add_plain(k.pub, e_guess, (BigUint(35) - psi) % 35);
      ASSERT_EQ(decrypt(k.priv, diff) == 0, guess == psi);
    }
  }
}

TEST(PaillierToy, ScalarMultiplicationExamples) {
  const KeyPair k = toy_keys();
  RandomSource rng(5);
  EXPECT_EQ(decrypt(k.priv, mul_plain(k.pub, encrypt(k.pub, 3, rng), 5)), 15);
  const Ciphertext c = encrypt(k.pub, 12, rng);
  EXPECT_EQ(decrypt(k.priv, mul_plain(k.pub, c, 1)), 12);
  EXPECT_EQ(decrypt(k.priv, mul_plain(k.pub, c, 0)), 0);
}

TEST(PaillierToy, SelfBlindingExhaustive) {
  const KeyPair k = toy_keys();
  RandomSource rng(10);
  for (int m = 0; m < 35; ++m) {
    const Ciphertext c = encrypt(k.pub, m, rng);
    const Ciphertext once = self_blind(k.pub, c, rng);
    ASSERT_EQ(decrypt(k.priv, once), m);
    ASSERT_EQ(decrypt(k.priv, self_blind(k.pub, once, rng)), m);
  }
}

TEST(Paillier512, RoundTripAndBoundaries) {
  const KeyPair& k = keys512();
  RandomSource rng(12);
  EXPECT_EQ(decrypt(k.priv, encrypt(k.pub, 0, rng)), 0);
  EXPECT_EQ(decrypt(k.priv, encrypt(k.pub, k.pub.n - 1, rng)), k.pub.n - 1);
  for (int i = 0; i < 50; ++i) {
    const BigUint m = rng.uniform_below(k.pub.n);
    ASSERT_EQ(decrypt(k.priv, encrypt(k.pub, m, rng)), m);
  }
}

TEST(Paillier512, HomomorphicIdentitiesRandomized) {
  const KeyPair& k = keys512();
  RandomSource rng(13);
  for (int i = 0; i < 50; ++i) {
    const BigUint m1 = rng.uniform_below(k.pub.n), m2 = rng.uniform_below(k.pub.n);
    const Ciphertext c1 = encrypt(k.pub, m1, rng), c2 = encrypt(k.pub, m2, rng);
    ASSERT_EQ(decrypt(k.priv, add_ct(k.pub, c1, c2)), (m1 + m2) % k.pub.n);
    ASSERT_EQ(decrypt(k.priv, mul_plain(k.pub, c1, m2)), (m1 * m2) % k.pub.n);
  }
}

TEST(Paillier512, EncryptionAndBlindingAreRandomized) {
  const KeyPair& k = keys512();
  RandomSource rng(14);
  std::set<std::string> seen;
  for (int i = 0; i < 100; ++i) seen.insert(encrypt(k.pub, 42, rng).value.get_str());
  EXPECT_EQ(seen.size(), 100U);
  const Ciphertext c = encrypt(k.pub, 42, rng);
  const Ciphertext blinded = self_blind(k.pub, c, rng);
  EXPECT_NE(blinded, c);
  EXPECT_EQ(decrypt(k.priv, blinded), 42);
}

TEST(Paillier512, IndistinguishabilityRankTripwire) {
  // Mann-Whitney U between ciphertext values of E(0) and E(1); a regression
  // tripwire only. |z| < 3.89 corresponds to a two-sided p > 1e-4.
  const KeyPair& k = keys512();
  RandomSource rng(15);
  const int samples = 1000;
  std::vector<std::pair<BigUint, int>> pooled;
  for (int i = 0; i < samples; ++i) {
    pooled.emplace_back(encrypt(k.pub, 0, rng).value, 0);
    pooled.emplace_back(encrypt(k.pub, 1, rng).value, 1);
  }
  std::sort(pooled.begin(), pooled.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  double rank_sum0 = 0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (pooled[i].second == 0) rank_sum0 += static_cast<double>(i + 1);
  }
  const double n = samples;
  const double u = rank_sum0 - n * (n + 1) / 2;
  const double z = (u - n * n / 2) / std::sqrt(n * n * (2 * n + 1) / 12);
  EXPECT_LT(std::abs(z), 3.89);
}

TEST(PaillierErrors, PlaintextOutOfRange) {
  const KeyPair k = toy_keys();
  RandomSource rng(1);
  for (auto call : {+[](const KeyPair& kp, RandomSource& r) { encrypt(kp.pub, 35, r); },
                    +[](const KeyPair& kp, RandomSource& r) { add_plain(kp.pub, encrypt(kp.pub, 1, r), 40); }}) {
    try {
      call(k, rng);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::PlaintextOutOfRange);
    }
  }
}

TEST(PaillierErrors, MalformedCiphertext) {
  const KeyPair k = toy_keys();
  for (const BigUint& bad : {BigUint(0), BigUint(1225), BigUint(5), BigUint(14), BigUint(5000)}) {
    try {
      decrypt(k.priv, Ciphertext{bad});
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedCiphertext);
    }
    EXPECT_FALSE(is_valid(k.pub, Ciphertext{bad}));
  }
}

TEST(Paillier512, CrtDecryptionMatchesLambdaMuFormula) {
  RandomSource rng(91);
  const KeyPair keys = keygen(512, rng);
  const auto& sk = keys.priv;
  for (int t = 0; t < 50; ++t) {
    const Ciphertext c = encrypt(keys.pub, rand_below(keys.pub.n, rng), rng);
    const BigUint u = mod_pow(c.value, sk.lambda, sk.n_squared);
    EXPECT_EQ(decrypt(sk, c), BigUint((u - 1) / sk.n * sk.mu % sk.n));
  }
}
