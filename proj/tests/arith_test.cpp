#include "pca/arith.hpp"

#include <gtest/gtest.h>

#include <array>
#include <set>
#include <vector>

#include "pca/error.hpp"

using namespace pca;

namespace {

std::uint64_t naive_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t mod) {
  std::uint64_t acc = 1 % mod;
  for (std::uint64_t i = 0; i < exp; ++i) acc = acc * (base % mod) % mod;
  return acc;
}

bool trial_division_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

}  // namespace

TEST(ModPow, SubgroupGeneratorExample) {
  EXPECT_EQ(mod_pow(2, 11, 23), 1);
}

TEST(ModPow, ZeroAndUnitExponent) {
  for (int x : {0, 1, 5, 22, 1000}) {
    for (int m : {2, 7, 23, 1024}) {
      EXPECT_EQ(mod_pow(x, 0, m), 1);
      EXPECT_EQ(mod_pow(x, 1, m), x % m);
    }
  }
}

TEST(ModPow, AgreesWithRepeatedMultiplicationOnSmallInputs) {
  for (std::uint64_t m = 2; m < 48; ++m) {
    for (std::uint64_t b = 0; b < 48; ++b) {
      for (std::uint64_t e = 0; e < 48; ++e) {
        ASSERT_EQ(mod_pow(b, e, m), naive_pow(b, e, m)) << b << "^" << e << " mod " << m;
      }
    }
  }
  RandomSource rng(7);
  for (int i = 0; i < 300; ++i) {
    const std::uint64_t m = 2 + rng.uniform_u64(65534);
    const std::uint64_t b = rng.uniform_u64(65536);
    const std::uint64_t e = rng.uniform_u64(65536);
    ASSERT_EQ(mod_pow(b, e, m), naive_pow(b, e, m));
  }
}

TEST(ModPow, RejectsModulusBelowTwo) {
  EXPECT_THROW(mod_pow(3, 4, 1), Error);
}

TEST(ModInv, Examples) {
  EXPECT_EQ(mod_inv(3, 11), 4);
  EXPECT_EQ(mod_inv(1, 97), 1);
  try {
    mod_inv(4, 8);
    FAIL() << "expected NotInvertible";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotInvertible);
  }
}

TEST(ModInv, InverseProperty) {
  for (int m = 2; m < 200; ++m) {
    for (int a = 1; a < m; ++a) {
      if (gcd(a, m) != 1) continue;
      const BigUint inv = mod_inv(a, m);
      ASSERT_EQ(inv * a % m, 1 % m);
    }
  }
}

TEST(Isqrt, Examples) {
  EXPECT_EQ(isqrt(2), 1);
  EXPECT_EQ(isqrt(144), 12);
  const BigUint two_pow_33 = BigUint(1) << 33;
  const BigUint r = isqrt(two_pow_33);
  EXPECT_EQ(r, 92681);
  EXPECT_LE(BigUint(92681) * 92681, two_pow_33);
  EXPECT_GT(BigUint(92682) * 92682, two_pow_33);
}

TEST(Isqrt, FloorProperty) {
  RandomSource rng(11);
  for (int i = 0; i < 2000; ++i) {
    const BigUint a = rng.bits(1 + rng.uniform_u64(300));
    const BigUint r = isqrt(a);
    ASSERT_LE(r * r, a);
    ASSERT_GT((r + 1) * (r + 1), a);
  }
}

TEST(Primality, MatchesTrialDivision) {
  RandomSource rng(3);
  for (std::uint64_t n = 0; n < 20000; ++n) {
    ASSERT_EQ(is_probable_prime(n, rng), trial_division_prime(n)) << n;
  }
}

TEST(Primality, RejectsCarmichaelNumbers) {
  RandomSource rng(5);
  for (int c : {561, 1105, 1729, 2465, 2821, 6601, 8911, 41041, 825265}) {
    EXPECT_FALSE(is_probable_prime(c, rng)) << c;
  }
}

TEST(GenPrime, EightBitPrimePassesTrialDivision) {
  RandomSource rng(42);
  for (int i = 0; i < 50; ++i) {
    const BigUint p = gen_prime(8, rng);
    EXPECT_EQ(bit_length(p), 8U);
    EXPECT_TRUE(trial_division_prime(p.get_ui()));
  }
}

TEST(GenPrime, DeterministicForFixedSeed) {
  RandomSource a(99), b(99);
  EXPECT_EQ(gen_prime(256, a), gen_prime(256, b));
}

TEST(GenPrime, IndependentSeedsGiveDistinctPrimes) {
  std::set<std::string> seen;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RandomSource rng(seed);
    const BigUint p = gen_prime(128, rng);
    EXPECT_EQ(bit_length(p), 128U);
    seen.insert(p.get_str());
  }
  EXPECT_EQ(seen.size(), 20U);
}

TEST(RandBelow, SingletonRange) {
  RandomSource rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(rand_below(2, rng), 1);
}

TEST(RandBelow, ChiSquareUniformOnElevenRange) {
  // 10 categories (1..10), 9 degrees of freedom; the 0.001 critical value is 27.877.
  RandomSource rng(2024);
  std::array<long, 11> counts{};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const BigUint v = rand_below(11, rng);
    ASSERT_GE(v, 1);
    ASSERT_LT(v, 11);
    ++counts[v.get_ui()];
  }
  EXPECT_EQ(counts[0], 0);
  const double expected = draws / 10.0;
  double chi2 = 0;
  for (int k = 1; k <= 10; ++k) chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
  EXPECT_LT(chi2, 27.877);
}

TEST(RandBelow, StaysInRangeForLargeBound) {
  RandomSource rng(8);
  const BigUint n = gen_prime(512, rng) * gen_prime(512, rng);
  for (int i = 0; i < 500; ++i) {
    const BigUint v = rand_below(n, rng);
    ASSERT_GE(v, 1);
    ASSERT_LT(v, n);
  }
}

TEST(RandomSource, ReproducibleAndForkIndependent) {
  RandomSource a(17), b(17);
  for (int i = 0; i < 64; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  RandomSource base(17);
  RandomSource f1 = base.fork("bidder:1");
  RandomSource f2 = base.fork("bidder:2");
  RandomSource f1_again = RandomSource(17).fork("bidder:1");
  const auto x = f1.next_u64();
  EXPECT_NE(x, f2.next_u64());
  EXPECT_EQ(x, f1_again.next_u64());
  RandomSource c(18);
  EXPECT_NE(RandomSource(17).next_u64(), c.next_u64());
}

TEST(Bytes, RoundTripProperty) {
  RandomSource rng(4);
  EXPECT_EQ(to_bytes(0), std::vector<std::uint8_t>{0});
  EXPECT_EQ(to_bytes(0x1234), (std::vector<std::uint8_t>{0x12, 0x34}));
  for (int i = 0; i < 1000; ++i) {
    const BigUint v = rng.bits(rng.uniform_u64(600));
    ASSERT_EQ(from_bytes(to_bytes(v)), v);
  }
}
