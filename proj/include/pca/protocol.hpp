#pragma once

// The encrypted auction: auctioneer, bidder and signer actors.
//
// All ciphertexts are under the auctioneer's Paillier key. To test bidder i
// against a guess psi*, the auctioneer sends E(psi*) and a fresh E(a_k) for
// every good; the bidder answers with
//   E(delta' (psi* - psi_i) + delta sum_k a_k s_ik)
// which decrypts to zero exactly when psi_i = psi* and S_i avoids the
// allocation (up to a negligible accidental cancellation mod n).

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pca/blind_sig.hpp"
#include "pca/error.hpp"
#include "pca/mechanism.hpp"
#include "pca/paillier.hpp"
#include "pca/wire.hpp"

namespace pca::protocol {

enum class GuessStrategy : std::uint8_t {
  DescendingScan = 0,
  /// Bisection on the equality probe. Only correct when every level between
  /// 0 and the next winner's norm is occupied by a feasible bidder.
  BinarySearchEquality = 1,
};

std::string to_string(GuessStrategy strategy);
GuessStrategy parse_guess_strategy(const std::string& text);

struct ProtocolConfig {
  unsigned paillier_bits = paillier::kDefaultKeyBits;
  std::size_t nr_p_bits = 2048;
  std::size_t nr_q_bits = 256;
  /// Fixed signer group; generated from the seed when absent.
  std::optional<nr::GroupParams> nr_group;
  nr::BlindingVariant blinding = nr::BlindingVariant::CommitmentMixed;
  unsigned exponent = kDefaultExponent;
  GuessStrategy guess_strategy = GuessStrategy::DescendingScan;
  /// Largest norm raw value the auctioneer guesses. Defaults to the largest
  /// norm in the instance.
  std::optional<BigUint> norm_domain_max;
  CandidateMode candidate_mode = CandidateMode::PaperResidual;
  Rational reserve_price = 0;
  /// Leave confirmed winners out of the candidate pool (residual mode only).
  bool exclude_winners_from_candidates = false;
  /// Keep every nonzero probe decryption for statistical checks.
  bool capture_probe_values = false;

  FixedPoint reserve() const;
  BigUint domain_max(const AuctionInstance& instance) const;
  MechanismConfig mechanism(std::vector<std::uint64_t> tie_break = {}) const;
  /// Throws Error{InvalidConfig} when the instance does not fit the configuration.
  void validate(const AuctionInstance& instance) const;
};

enum class Phase : std::uint8_t { Setup = 0, BlindSigning = 1, WinnerDetermination = 2, PaymentDetermination = 3 };

std::string to_string(Phase phase);

struct Envelope {
  std::string from;
  std::string to;
  wire::Bytes payload;
};

class Outbox {
public:
  virtual ~Outbox() = default;
  virtual void send(const std::string& from, const std::string& to, const wire::Message& message) = 0;
  /// Unchecked payload; only adversarial test doubles use this.
  virtual void send_raw(const std::string& from, const std::string& to, wire::Bytes payload) = 0;
};

class Actor {
public:
  virtual ~Actor() = default;
  virtual const std::string& name() const = 0;
  virtual void on_message(const Envelope& envelope, Outbox& out) = 0;
};

/// What the auctioneer needs from the network: send, broadcast, and block
/// until the next message addressed to it.
class Channel : public Outbox {
public:
  virtual void broadcast(const std::string& from, const wire::Message& message) = 0;
  virtual Envelope await(const std::string& recipient) = 0;
  virtual void set_phase(Phase phase) = 0;
};

inline const std::string kAuctioneerName = "auctioneer";
inline const std::string kSignerName = "signer";
std::string bidder_name(std::uint64_t session_id);

struct SignerPublic {
  nr::GroupParams group;
  BigUint y;
};

// ---- building blocks ------------------------------------------------------

/// prod_k E(a_k)^(delta s_k): encrypts delta (A . S).
paillier::Ciphertext scalar_product(const paillier::PublicKey& pk, const std::vector<paillier::Ciphertext>& alloc,
                                    const GoodSet& bundle, const BigUint& delta);

/// The bidder's probe answer before re-randomization.
paillier::Ciphertext probe_response(const paillier::PublicKey& pk, const paillier::Ciphertext& guess,
                                    const std::vector<paillier::Ciphertext>& alloc, const BigUint& psi,
                                    const GoodSet& bundle, const BigUint& delta, const BigUint& delta_prime);

/// nullopt when the reveal is acceptable for a probe that hit at psi_star.
/// Signatures are checked first, then the norm, then feasibility.
std::optional<ErrorCode> check_winner_reveal(const wire::WinnerReveal& reveal, const BigUint& psi_star,
                                             const Allocation& allocation, const SignerPublic& signer);
std::optional<ErrorCode> check_candidate_reveal(const wire::CandidateReveal& reveal, const BigUint& psi_star,
                                                const SignerPublic& signer);

/// The winner's check of a payment notice: reserve notices must carry exactly
/// the reserve price; otherwise recover psi_j from the signature and require
/// the price to equal the canonical payment integer bit for bit.
bool verify_payment(const wire::PaymentNotice& notice, std::size_t bundle_size, const ProtocolConfig& config,
                    const BigUint& norm_domain_max, const SignerPublic& signer);

// ---- actors ---------------------------------------------------------------

enum class BidderFault : std::uint8_t {
  None = 0,
  /// Reveals 2 psi with the signature (r^2 mod p, 2s mod q).
  ForgeSignature = 1,
  /// Gets psi + 1 signed during blind signing and reveals that.
  FakeReveal = 2,
  /// Appends its plaintext norm to every probe response.
  LeakPlaintext = 3,
};

/// Out-of-band record of every delta and delta' a bidder draws.
struct RandomizerLog {
  std::vector<BigUint> values;
};

class BidderActor : public Actor {
public:
  BidderActor(std::uint64_t session_id, BidderInput input, std::size_t goods, const ProtocolConfig& config,
              const BigUint& norm_domain_max, RandomSource rng, BidderFault fault = BidderFault::None,
              RandomizerLog* log = nullptr);

  const std::string& name() const override { return name_; }
  void on_message(const Envelope& envelope, Outbox& out) override;

  std::uint64_t session_id() const { return session_id_; }
  const FixedPoint& psi() const { return psi_; }
  bool signed_up() const { return sig_psi_.has_value() && sig_bundle_.has_value(); }
  std::optional<bool> payment_verdict() const { return verdict_; }

private:
  void handle(const wire::PublishKeys& m, Outbox& out);
  void handle(const wire::BlindCommit& m, Outbox& out);
  void handle(const wire::BlindResponse& m, Outbox& out);
  void handle(const wire::ProbeGuess& m, Outbox& out);
  void handle(const wire::EncAlloc& m, Outbox& out);
  void handle(const wire::DeclareWinner& m, Outbox& out);
  void handle(const wire::PaymentNotice& m, Outbox& out);
  template <typename T>
  void handle(const T&, Outbox&) {
    throw Error(ErrorCode::ProtocolViolation, name_ + " received an unexpected message");
  }

  std::uint64_t session_id_;
  std::string name_;
  BidderInput input_;
  std::size_t goods_;
  ProtocolConfig config_;
  BigUint norm_domain_max_;
  RandomSource rng_;
  BidderFault fault_;
  RandomizerLog* log_;
  FixedPoint psi_;
  std::optional<paillier::PublicKey> pk_;
  std::optional<SignerPublic> signer_;
  std::map<wire::SignPurpose, nr::SigneeSession> pending_;
  std::optional<nr::Signature> sig_psi_;
  std::optional<nr::Signature> sig_bundle_;
  std::optional<paillier::Ciphertext> guess_;
  std::optional<bool> verdict_;
};

class SignerActor : public Actor {
public:
  SignerActor(nr::GroupParams group, nr::KeyPair keys, RandomSource rng);

  const std::string& name() const override { return kSignerName; }
  void on_message(const Envelope& envelope, Outbox& out) override;

  /// Step 1 of two sessions (norm and bundle) per bidder.
  void open_sessions(Outbox& out, const std::vector<std::string>& bidders);
  SignerPublic public_key() const { return {group_, keys_.y}; }

private:
  nr::GroupParams group_;
  nr::KeyPair keys_;
  RandomSource rng_;
  std::map<std::pair<std::string, wire::SignPurpose>, nr::SignerSession> sessions_;
};

enum class AuctioneerFault : std::uint8_t {
  None = 0,
  /// Adds `delta` raw units to the target's payment, keeping the honest signature.
  InflatePayment = 1,
  /// Prices the target with the highest-norm signature it holds (another
  /// winner's Sig(psi) or the target's own) and a matching price.
  SubstituteSignature = 2,
};

struct AuctioneerFaultPlan {
  AuctioneerFault kind = AuctioneerFault::None;
  std::uint64_t target = 0;
  long delta = 1;
};

struct FlagEvent {
  std::uint64_t session_id = 0;
  ErrorCode code = ErrorCode::ProtocolViolation;
  Phase phase = Phase::WinnerDetermination;
};

struct AuctioneerResult {
  /// Confirmation order, which is the greedy order.
  std::vector<std::uint64_t> winners;
  std::map<std::uint64_t, GoodSet> bundles;
  std::map<std::uint64_t, BigUint> norms;
  std::map<std::uint64_t, nr::Signature> norm_signatures;
  Allocation allocation;
  std::map<std::uint64_t, FixedPoint> payments;
  std::map<std::uint64_t, std::optional<std::uint64_t>> candidates;
  std::map<std::uint64_t, wire::PaymentNotice> notices;
  std::map<std::uint64_t, bool> verdicts;
  std::vector<FlagEvent> flags;
  std::size_t probes = 0;
  std::vector<BigUint> nonzero_probe_values;
};

class Auctioneer {
public:
  Auctioneer(const ProtocolConfig& config, std::size_t goods, std::vector<std::uint64_t> session_ids,
             paillier::KeyPair keys, SignerPublic signer, const BigUint& norm_domain_max, RandomSource rng,
             AuctioneerFaultPlan fault = {});

  const std::string& name() const { return kAuctioneerName; }
  const paillier::PublicKey& public_key() const { return keys_.pub; }

  void publish(Channel& net);
  AuctioneerResult run(Channel& net);

private:
  struct Hit {
    std::uint64_t session_id;
    BigUint level;
  };

  bool probe(Channel& net, std::uint64_t sid, const BigUint& level, const Allocation& allocation);
  std::optional<std::uint64_t> first_hit(Channel& net, const std::vector<std::uint64_t>& pool,
                                         const BigUint& level, const Allocation& allocation,
                                         std::optional<std::uint64_t> after);
  std::optional<Hit> find_next(Channel& net, const std::vector<std::uint64_t>& pool, const Allocation& allocation,
                               const BigUint& upper, std::optional<std::uint64_t> after);
  wire::Message exchange(Channel& net, std::uint64_t sid, const wire::Message& message);
  void winner_determination(Channel& net);
  void determine_payment(Channel& net, std::size_t winner_rank);
  void flag(std::uint64_t sid, ErrorCode code, Phase phase);

  ProtocolConfig config_;
  std::size_t goods_;
  std::vector<std::uint64_t> session_ids_;
  paillier::KeyPair keys_;
  SignerPublic signer_;
  BigUint domain_max_;
  RandomSource rng_;
  AuctioneerFaultPlan fault_;
  AuctioneerResult result_;
};

}  // namespace pca::protocol
