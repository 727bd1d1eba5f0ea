#include "pca/protocol.hpp"

#include <gtest/gtest.h>

#include <set>

#include "pca/error.hpp"
#include "pca/harness.hpp"

using namespace pca;
using namespace pca::protocol;

namespace {

const nr::GroupParams& test_group() {
  static const nr::GroupParams g = [] {
    RandomSource rng(77);
    return nr::GroupParams::generate(256, 128, rng);
  }();
  return g;
}

ProtocolConfig small_config(unsigned e = 2, CandidateMode mode = CandidateMode::PaperResidual) {
  ProtocolConfig c;
  c.paillier_bits = 256;
  c.nr_group = test_group();
  c.exponent = e;
  c.candidate_mode = mode;
  return c;
}

AuctionInstance make(std::size_t m, const std::vector<std::pair<std::vector<std::size_t>, long>>& specs) {
  AuctionInstance inst;
  inst.goods = m;
  for (const auto& [goods, bid] : specs) inst.bidders.push_back({GoodSet::from_indices(m, goods), Rational(bid), {}});
  return inst;
}

const AuctionInstance kThree = make(3, {{{0, 1}, 10}, {{1, 2}, 8}, {{2}, 5}});
const AuctionInstance kPriced = make(3, {{{0, 1}, 10}, {{1}, 4}, {{2}, 5}});

struct ToyKeys {
  paillier::KeyPair keys;
  ToyKeys() {
    RandomSource rng(5);
    keys = paillier::from_primes(5, 7, rng);
  }
};

std::vector<paillier::Ciphertext> encrypt_vector(const paillier::PublicKey& pk, const std::vector<int>& bits,
                                                 RandomSource& rng) {
  std::vector<paillier::Ciphertext> out;
  for (int b : bits) out.push_back(paillier::encrypt(pk, b, rng));
  return out;
}

}  // namespace

// ---- wire -----------------------------------------------------------------

TEST(Wire, RoundTripsEveryMessage) {
  const nr::Signature sig{12345, 678};
  const std::vector<wire::Message> messages = {
      wire::PublishKeys{35, 36, 23, 11, 2, 8},
      wire::BlindCommit{wire::SignPurpose::Bundle, 16},
      wire::BlindChallenge{wire::SignPurpose::Norm, 5},
      wire::BlindResponse{wire::SignPurpose::Norm, 8},
      wire::ProbeGuess{BigUint("123456789012345678901234567890")},
      wire::EncAlloc{{1, 2, 3}},
      wire::ProbeResponse{0},
      wire::DeclareWinner{0xfedcba9876543210ULL, 99, wire::Role::Candidate},
      wire::WinnerReveal{40, 3, sig, sig},
      wire::CandidateReveal{16, sig},
      wire::Decline{},
      wire::PaymentNotice{20, false, sig},
      wire::PaymentNotice{0, true, std::nullopt},
      wire::VerifyVerdict{true},
  };
  for (const auto& m : messages) {
    const wire::Bytes bytes = wire::encode(m);
    EXPECT_EQ(static_cast<wire::MessageType>(bytes[0]), wire::type_of(m));
    EXPECT_EQ(wire::decode(bytes), m);
  }
}

TEST(Wire, StrictDecoding) {
  wire::Bytes bytes = wire::encode(wire::ProbeResponse{77});
  wire::Bytes extra = bytes;
  wire::append_integer(extra, 5);
  EXPECT_THROW(wire::decode(extra), Error);
  EXPECT_EQ(wire::decode(extra, wire::Trailing::Ignore), wire::Message(wire::ProbeResponse{77}));
  bytes.pop_back();
  EXPECT_THROW(wire::decode(bytes), Error);
  EXPECT_THROW(wire::decode(wire::Bytes{0x7f}), Error);
  // leading zero byte in an integer
  EXPECT_THROW(wire::decode(wire::Bytes{7, 'I', 0, 0, 0, 2, 0, 5}), Error);
  // flag byte other than 0/1
  EXPECT_THROW(wire::decode(wire::Bytes{13, 2}), Error);
  // reserve notice carrying a signature, and the reverse
  EXPECT_THROW(wire::encode(wire::PaymentNotice{0, true, nr::Signature{1, 1}}), Error);
  EXPECT_THROW(wire::encode(wire::PaymentNotice{0, false, std::nullopt}), Error);
}

TEST(Wire, CanonicalIntegerPattern) {
  EXPECT_EQ(wire::canonical_integer(0), (wire::Bytes{'I', 0, 0, 0, 1, 0}));
  EXPECT_EQ(wire::canonical_integer(258), (wire::Bytes{'I', 0, 0, 0, 2, 1, 2}));
}

// ---- scalar product and probe -----------------------------------------------

TEST(ScalarProduct, ToyKeyExamples) {
  ToyKeys t;
  RandomSource rng(1);
  const auto& pk = t.keys.pub;
  const GoodSet s = GoodSet::from_indices(3, {1, 2});
  EXPECT_EQ(paillier::decrypt(t.keys.priv, scalar_product(pk, encrypt_vector(pk, {1, 0, 0}, rng), s, 7)), 0);
  EXPECT_EQ(paillier::decrypt(t.keys.priv, scalar_product(pk, encrypt_vector(pk, {1, 0, 1}, rng), s, 7)), 7);
  for (std::uint64_t mask = 1; mask < 8; ++mask) {
    const GoodSet any = GoodSet::from_integer(3, mask);
    EXPECT_EQ(paillier::decrypt(t.keys.priv, scalar_product(pk, encrypt_vector(pk, {0, 0, 0}, rng), any, 9)), 0);
  }
}

TEST(ScalarProduct, ExhaustiveAgainstPlainDotProduct) {
  ToyKeys t;
  RandomSource rng(2);
  for (std::uint64_t a = 0; a < 16; ++a) {
    for (std::uint64_t s = 1; s < 16; ++s) {
      std::vector<int> bits;
      for (int k = 0; k < 4; ++k) bits.push_back(static_cast<int>(a >> k & 1));
      const GoodSet bundle = GoodSet::from_integer(4, s);
      const BigUint delta = 3;
      const long dot = __builtin_popcountll(a & s);
      EXPECT_EQ(paillier::decrypt(t.keys.priv, scalar_product(t.keys.pub, encrypt_vector(t.keys.pub, bits, rng),
                                                              bundle, delta)),
                (delta * dot) % 35);
    }
  }
}

TEST(Probe, ZeroExactlyOnEqualNormAndFeasibleBundle) {
  RandomSource rng(3);
  const paillier::KeyPair keys = paillier::keygen(512, rng);
  const auto& pk = keys.pub;
  const GoodSet s = GoodSet::from_indices(3, {1, 2});
  auto run = [&](long guess, long psi, const std::vector<int>& alloc) {
    const auto ct = probe_response(pk, paillier::encrypt(pk, guess, rng), encrypt_vector(pk, alloc, rng), psi, s,
                                   rand_below(pk.n, rng), rand_below(pk.n, rng));
    return paillier::decrypt(keys.priv, ct);
  };
  for (int trial = 0; trial < 20; ++trial) {
    EXPECT_EQ(run(40, 40, {1, 0, 0}), 0);
    EXPECT_NE(run(41, 40, {1, 0, 0}), 0);
    EXPECT_NE(run(40, 40, {0, 1, 0}), 0);
    EXPECT_NE(run(39, 40, {1, 1, 1}), 0);
  }
}

// ---- confirmation and payment checks --------------------------------------

TEST(Confirmation, RevealChecks) {
  const auto& group = test_group();
  RandomSource rng(4);
  const nr::KeyPair signer_keys = nr::KeyPair::generate(group, rng);
  const SignerPublic signer{group, signer_keys.y};
  auto sign = [&](const BigUint& v) { return nr::sign_blind(group, signer_keys, nr::embed(group, v), rng, rng); };
  const wire::WinnerReveal honest{40, 6, sign(40), sign(6)};
  const Allocation empty(3);
  EXPECT_EQ(check_winner_reveal(honest, 40, empty, signer), std::nullopt);
  EXPECT_EQ(check_winner_reveal(honest, 41, empty, signer), ErrorCode::NormMismatch);
  wire::WinnerReveal tampered = honest;
  tampered.sig_bundle.s = (tampered.sig_bundle.s + 1) % group.q;
  EXPECT_EQ(check_winner_reveal(tampered, 40, empty, signer), ErrorCode::SignatureInvalid);
  wire::WinnerReveal lying = honest;
  lying.psi = 80;
  EXPECT_EQ(check_winner_reveal(lying, 80, empty, signer), ErrorCode::SignatureInvalid);
  EXPECT_EQ(check_winner_reveal(honest, 40, GoodSet::from_indices(3, {2}), signer), ErrorCode::BundleConflict);

  EXPECT_EQ(check_candidate_reveal(wire::CandidateReveal{16, sign(16)}, 16, signer), std::nullopt);
  EXPECT_EQ(check_candidate_reveal(wire::CandidateReveal{16, sign(16)}, 17, signer), ErrorCode::NormMismatch);
  EXPECT_EQ(check_candidate_reveal(wire::CandidateReveal{17, sign(16)}, 17, signer), ErrorCode::SignatureInvalid);
}

TEST(VerifyPayment, HonestAcceptedAndAnyOtherPriceRejected) {
  const auto& group = test_group();
  RandomSource rng(5);
  const nr::KeyPair signer_keys = nr::KeyPair::generate(group, rng);
  const SignerPublic signer{group, signer_keys.y};
  ProtocolConfig config = small_config(16);
  const BigUint psi_j = norm(4, 1, 16).raw;
  const wire::PaymentNotice honest{370724, false, nr::sign_blind(group, signer_keys, nr::embed(group, psi_j), rng, rng)};
  EXPECT_TRUE(verify_payment(honest, 2, config, BigUint(1) << 24, signer));
  for (long d : {-3L, -1L, 1L, 2L, 1000L}) {
    wire::PaymentNotice bad = honest;
    bad.price = BigUint(370724 + d);
    EXPECT_FALSE(verify_payment(bad, 2, config, BigUint(1) << 24, signer));
  }
  EXPECT_FALSE(verify_payment(honest, 3, config, BigUint(1) << 24, signer));
  EXPECT_TRUE(verify_payment(wire::PaymentNotice{0, true, std::nullopt}, 2, config, 100, signer));
  EXPECT_FALSE(verify_payment(wire::PaymentNotice{1, true, std::nullopt}, 2, config, 100, signer));
  config.reserve_price = Rational(1, 2);
  EXPECT_TRUE(verify_payment(wire::PaymentNotice{32768, true, std::nullopt}, 2, config, 100, signer));
}

TEST(Config, Validation) {
  ProtocolConfig c = small_config(2);
  c.norm_domain_max = BigUint(10);
  EXPECT_THROW(c.validate(kThree), Error);  // norm(10, 2, 2) = 32 > 10
  c.norm_domain_max = BigUint(64 * 4);
  EXPECT_NO_THROW(c.validate(kThree));
  EXPECT_EQ(small_config(2).domain_max(kThree), norm(10, 2, 2).raw);
}

// ---- end-to-end -----------------------------------------------------------

TEST(Protocol, ThreeBidderExampleMatchesOracle) {
  ProtocolConfig c = small_config(2);
  c.norm_domain_max = BigUint(64 * 4);
  const auto cmp = harness::compare_with_oracle(kThree, c, 11);
  ASSERT_TRUE(cmp.run.ok) << cmp.run.error;
  EXPECT_TRUE(cmp.equivalent) << (cmp.diff.empty() ? "" : cmp.diff.front());
  EXPECT_TRUE(cmp.audit.pass);
  EXPECT_EQ(cmp.run.outcome.winners, (std::vector<std::size_t>{0, 2}));
  // the first DeclareWinner names B1 at psi* = norm(10, 2, e)
  for (const auto& e : cmp.run.transcript.entries) {
    if (e.type != wire::MessageType::DeclareWinner) continue;
    const auto d = std::get<wire::DeclareWinner>(wire::decode(e.payload));
    EXPECT_EQ(d.psi_star, norm(10, 2, 2).raw);
    EXPECT_EQ(d.session_id, cmp.run.session_ids[0]);
    break;
  }
}

TEST(Protocol, PaymentNoticeCarriesCandidateSignature) {
  const auto run = harness::run_auction(kPriced, small_config(2), 12);
  ASSERT_TRUE(run.ok) << run.error;
  const auto& notice = run.notices.at(0);
  ASSERT_FALSE(notice.reserve);
  ASSERT_TRUE(notice.sig_psi.has_value());
  EXPECT_EQ(nr::extract(nr::recover(run.signer.group, run.signer.y, *notice.sig_psi)), norm(4, 1, 2).raw);
  EXPECT_EQ(notice.price, payment_of(norm(4, 1, 2), 2).raw);
  EXPECT_EQ(run.outcome.candidates.at(0), Candidate(1));
  EXPECT_TRUE(run.verdicts.at(0));
}

TEST(Protocol, CandidateModesDivergeLikeTheOracle) {
  const auto paper = harness::run_auction(kThree, small_config(2, CandidateMode::PaperResidual), 13);
  const auto lehmann = harness::run_auction(kThree, small_config(2, CandidateMode::LehmannRerun), 13);
  ASSERT_TRUE(paper.ok && lehmann.ok);
  EXPECT_TRUE(paper.notices.at(0).reserve);
  EXPECT_FALSE(lehmann.notices.at(0).reserve);
  EXPECT_EQ(lehmann.outcome.candidates.at(0), Candidate(1));
  EXPECT_EQ(lehmann.outcome.payments.at(0).raw, payment_of(norm(8, 2, 2), 2).raw);
  for (auto mode : {CandidateMode::PaperResidual, CandidateMode::LehmannRerun}) {
    EXPECT_TRUE(harness::compare_with_oracle(kThree, small_config(2, mode), 13).equivalent);
  }
  // negative control: oracle in the other mode
  EXPECT_FALSE(harness::compare_with_oracle(kThree, small_config(2), 13, CandidateMode::LehmannRerun).equivalent);
}

TEST(Protocol, SoleBidderPaysReserve) {
  ProtocolConfig c = small_config(2);
  c.reserve_price = Rational(1, 4);
  const auto cmp = harness::compare_with_oracle(make(2, {{{0}, 3}}), c, 14);
  EXPECT_TRUE(cmp.equivalent);
  EXPECT_TRUE(cmp.run.notices.at(0).reserve);
  EXPECT_EQ(cmp.run.outcome.payments.at(0).raw, 1);
  EXPECT_TRUE(cmp.run.verdicts.at(0));
}

TEST(Protocol, TiedNormsConfirmedInSessionOrder) {
  const auto inst = make(2, {{{0}, 3}, {{1}, 3}, {{0, 1}, 1}});
  for (std::uint64_t seed : {15, 16, 17}) {
    const auto cmp = harness::compare_with_oracle(inst, small_config(2), seed);
    EXPECT_TRUE(cmp.equivalent);
    ASSERT_EQ(cmp.run.outcome.winners.size(), 2U);
    const auto& ids = cmp.run.session_ids;
    EXPECT_LT(ids[cmp.run.outcome.winners[0]], ids[cmp.run.outcome.winners[1]]);
  }
}

TEST(Protocol, LehmannRerunWithWinnersBelow) {
  // B0 wins first; B1 and B2 win later; B3 is the rerun candidate for B0.
  const auto inst = make(4, {{{0, 1}, 9}, {{2}, 5}, {{3}, 4}, {{1, 2}, 6}, {{0}, 1}});
  for (auto mode : {CandidateMode::PaperResidual, CandidateMode::LehmannRerun}) {
    const auto cmp = harness::compare_with_oracle(inst, small_config(2, mode), 18);
    EXPECT_TRUE(cmp.equivalent) << (cmp.diff.empty() ? "" : cmp.diff.front());
    EXPECT_TRUE(cmp.audit.pass);
  }
}

TEST(Protocol, ZeroBidderRunOnlyPublishesKeys) {
  AuctionInstance empty;
  empty.goods = 2;
  const auto run = harness::run_auction(empty, small_config(2), 19);
  ASSERT_TRUE(run.ok) << run.error;
  EXPECT_TRUE(run.outcome.winners.empty());
  ASSERT_EQ(run.transcript.entries.size(), 1U);
  EXPECT_EQ(run.transcript.entries[0].type, wire::MessageType::PublishKeys);
  EXPECT_EQ(run.transcript.entries[0].to, "*");
  EXPECT_TRUE(harness::audit_transcript(run, empty, 2).pass);
}

TEST(Protocol, OutcomeIndependentOfSeedButCiphertextsAreNot) {
  const auto a = harness::run_auction(kPriced, small_config(2), 20);
  const auto b = harness::run_auction(kPriced, small_config(2), 21);
  const auto a2 = harness::run_auction(kPriced, small_config(2), 20);
  ASSERT_TRUE(a.ok && b.ok && a2.ok);
  EXPECT_TRUE(harness::outcome_diff(a.outcome, b.outcome).empty());
  EXPECT_EQ(a.transcript.types(), a2.transcript.types());
  EXPECT_EQ(a.transcript.to_jsonl(), a2.transcript.to_jsonl());
  EXPECT_NE(a.transcript.to_jsonl(), b.transcript.to_jsonl());
}

TEST(Protocol, TranscriptSequenceAndExport) {
  const auto run = harness::run_auction(kThree, small_config(2), 22);
  ASSERT_TRUE(run.ok);
  for (std::size_t k = 0; k < run.transcript.entries.size(); ++k) {
    EXPECT_EQ(run.transcript.entries[k].seq, k + 1);
  }
  const std::string jsonl = run.transcript.to_jsonl();
  EXPECT_EQ(static_cast<std::size_t>(std::count(jsonl.begin(), jsonl.end(), '\n')), run.transcript.entries.size());
  EXPECT_NE(jsonl.find("\"type\":\"PublishKeys\""), std::string::npos);
}

TEST(Protocol, RandomizersNeverRepeat) {
  auto c = small_config(2);
  c.capture_probe_values = true;
  const auto run = harness::run_auction(kThree, c, 23);
  ASSERT_TRUE(run.ok);
  EXPECT_EQ(run.randomizers.size(), 2 * run.probes);
  EXPECT_EQ(std::set<BigUint>(run.randomizers.begin(), run.randomizers.end()).size(), run.randomizers.size());
  EXPECT_EQ(std::set<BigUint>(run.probe_values.begin(), run.probe_values.end()).size(), run.probe_values.size());
}

TEST(Protocol, BinarySearchOnDenseNorms) {
  // disjoint singletons with norms 0..5 raw at e = 0: every level is occupied
  AuctionInstance inst;
  inst.goods = 6;
  for (long v = 0; v < 6; ++v) inst.bidders.push_back({GoodSet::from_indices(6, {std::size_t(v)}), Rational(v), {}});
  auto c = small_config(0);
  c.guess_strategy = GuessStrategy::BinarySearchEquality;
  c.norm_domain_max = BigUint(40);
  const auto cmp = harness::compare_with_oracle(inst, c, 24);
  EXPECT_TRUE(cmp.equivalent) << (cmp.diff.empty() ? "" : cmp.diff.front());
  c.guess_strategy = GuessStrategy::DescendingScan;
  const auto scan = harness::compare_with_oracle(inst, c, 24);
  EXPECT_TRUE(scan.equivalent);
  EXPECT_LT(cmp.run.probes, scan.run.probes);
}

TEST(Protocol, BinarySearchMissesSparseNorms) {
  // Gaps between norms break the bisection: it never lands on 10 or 3.
  auto c = small_config(0);
  c.guess_strategy = GuessStrategy::BinarySearchEquality;
  c.norm_domain_max = BigUint(16);
  const auto cmp = harness::compare_with_oracle(make(2, {{{0}, 10}, {{1}, 3}}), c, 25);
  ASSERT_TRUE(cmp.run.ok);
  EXPECT_FALSE(cmp.equivalent);
  EXPECT_TRUE(cmp.run.outcome.winners.empty());
}

// ---- audit and faults -----------------------------------------------------

TEST(Audit, HonestRunPassesAndLeakIsCaught) {
  const auto honest = harness::run_auction(kThree, small_config(2), 26);
  EXPECT_TRUE(harness::audit_transcript(honest, kThree, 2).pass);
  harness::FaultPlan plan;
  plan.bidder = {1, BidderFault::LeakPlaintext};
  const auto leaky = harness::run_auction(kThree, small_config(2), 26, plan);
  ASSERT_TRUE(leaky.ok) << leaky.error;
  EXPECT_TRUE(harness::outcome_diff(honest.outcome, leaky.outcome).empty());
  const auto report = harness::audit_transcript(leaky, kThree, 2);
  EXPECT_FALSE(report.pass);
  std::set<int> rules;
  for (const auto& v : report.violations) {
    rules.insert(v.rule);
    EXPECT_EQ(v.bidder, bidder_name(leaky.session_ids[1]));
    EXPECT_EQ(leaky.transcript.entries.at(v.seq - 1).type, wire::MessageType::ProbeResponse);
  }
  EXPECT_TRUE(rules.count(1));
  EXPECT_TRUE(rules.count(2));
  EXPECT_FALSE(report.bidder_verdicts.at(bidder_name(leaky.session_ids[1])));
  EXPECT_TRUE(report.bidder_verdicts.at(bidder_name(leaky.session_ids[0])));
}

TEST(Audit, NoLosersIsVacuous) {
  const auto inst = make(3, {{{0}, 1}, {{1}, 2}, {{2}, 3}});
  const auto run = harness::run_auction(inst, small_config(2), 27);
  EXPECT_EQ(run.outcome.winners.size(), 3U);
  EXPECT_TRUE(harness::audit_transcript(run, inst, 2).pass);
}

TEST(Faults, EveryDrillFiresItsDefense) {
  const auto config = small_config(2);
  for (auto kind : harness::all_fault_kinds()) {
    const auto drill = harness::inject_fault(kind, kPriced, config, 28);
    ASSERT_TRUE(drill.applicable) << harness::to_string(kind);
    ASSERT_TRUE(drill.run.ok) << drill.run.error;
    if (kind == harness::FaultKind::SignatureSubstitution) {
      EXPECT_TRUE(drill.expected_pass_through) << drill.detail;
      EXPECT_FALSE(drill.detected);
    } else {
      EXPECT_TRUE(drill.detected) << harness::to_string(kind) << ": " << drill.detail;
    }
  }
}

TEST(Faults, HonestActorsUnaffectedByAnotherBiddersFault) {
  harness::FaultPlan plan;
  plan.bidder = {0, BidderFault::FakeReveal};
  const auto run = harness::run_auction(kPriced, small_config(2), 29, plan);
  ASSERT_TRUE(run.ok);
  ASSERT_EQ(run.flagged.size(), 1U);
  EXPECT_EQ(run.flagged[0], std::make_pair(std::size_t{0}, ErrorCode::NormMismatch));
  for (const auto& [w, ok] : run.verdicts) EXPECT_TRUE(ok);
}
