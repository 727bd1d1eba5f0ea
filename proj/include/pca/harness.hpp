#pragma once

// In-process network, transcript, privacy audit, oracle comparison and fault
// drills for the encrypted auction.

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pca/mechanism.hpp"
#include "pca/protocol.hpp"

namespace pca::harness {

struct TranscriptEntry {
  std::uint64_t seq = 0;
  std::string from;
  std::string to;  // "*" for a broadcast
  wire::MessageType type = wire::MessageType::PublishKeys;
  wire::Bytes payload;
  std::uint64_t timestamp = 0;  // logical clock
};

struct Transcript {
  std::vector<TranscriptEntry> entries;

  std::vector<wire::MessageType> types() const;
  /// One JSON object per line: seq, from, to, type, payload (hex).
  std::string to_jsonl() const;
};

/// CPU time of the calling thread. Phase and handler timings use it so that
/// benchmark figures are not skewed by other load on the machine.
struct CpuClock {
  using duration = std::chrono::nanoseconds;
  using rep = duration::rep;
  using period = duration::period;
  using time_point = std::chrono::time_point<CpuClock>;
  static constexpr bool is_steady = true;
  static time_point now() noexcept;
};

/// Single FIFO queue, one delivery at a time. Reactive actors are attached;
/// the auctioneer drives the run through the Channel interface.
class SimNetwork : public protocol::Channel {
public:
  void attach(protocol::Actor& actor);

  void send(const std::string& from, const std::string& to, const wire::Message& message) override;
  void send_raw(const std::string& from, const std::string& to, wire::Bytes payload) override;
  void broadcast(const std::string& from, const wire::Message& message) override;
  protocol::Envelope await(const std::string& recipient) override;
  void set_phase(protocol::Phase phase) override;

  /// Delivers until the queue is empty; messages for unattached recipients
  /// are an error here.
  void run_until_idle();

  const Transcript& transcript() const { return transcript_; }
  Transcript take_transcript() { return std::move(transcript_); }
  /// CPU time spent inside each actor's handler, per phase.
  const std::map<std::pair<std::string, protocol::Phase>, std::chrono::nanoseconds>& handler_time() const {
    return handler_time_;
  }
  /// CPU time between phase switches; call finish() to close the last one.
  const std::map<protocol::Phase, std::chrono::nanoseconds>& phase_time() const { return phase_time_; }
  void finish();

private:
  void enqueue(const std::string& from, const std::string& to, wire::Bytes payload);
  void deliver(const protocol::Envelope& envelope);

  std::map<std::string, protocol::Actor*> actors_;
  std::deque<protocol::Envelope> queue_;
  Transcript transcript_;
  std::uint64_t clock_ = 0;
  protocol::Phase phase_ = protocol::Phase::Setup;
  std::map<std::pair<std::string, protocol::Phase>, std::chrono::nanoseconds> handler_time_;
  std::map<protocol::Phase, std::chrono::nanoseconds> phase_time_;
  CpuClock::time_point phase_start_ = CpuClock::now();
};

struct PhaseTimes {
  double auctioneer_winner_determination = 0;
  double auctioneer_payment = 0;
  double bidder_winner_determination = 0;  // mean over bidders
  double bidder_payment = 0;
};

struct FaultPlan {
  protocol::AuctioneerFault auctioneer = protocol::AuctioneerFault::None;
  std::size_t auctioneer_target = 0;  // bidder index
  long delta = 1;
  /// Bidder index and its misbehaviour.
  std::optional<std::pair<std::size_t, protocol::BidderFault>> bidder;
};

/// The pseudonymous session IDs run_auction assigns for this seed.
std::vector<std::uint64_t> session_ids_for(std::uint64_t seed, std::size_t bidders);

struct RunResult {
  bool ok = false;
  std::string error;
  /// Outcome in bidder-index terms; payments are what the notices charged.
  AuctionOutcome outcome;
  std::map<std::size_t, bool> verdicts;
  std::vector<std::pair<std::size_t, ErrorCode>> flagged;
  std::vector<std::uint64_t> session_ids;  // by bidder index
  std::map<std::size_t, wire::PaymentNotice> notices;
  Transcript transcript;
  std::vector<BigUint> randomizers;
  std::vector<BigUint> probe_values;
  std::size_t probes = 0;
  PhaseTimes times;
  protocol::SignerPublic signer;
  BigUint norm_domain_max;

  std::optional<std::size_t> index_of(std::uint64_t session_id) const;
};

/// Deterministic in the seed: keys, session IDs and all randomness derive
/// from it. Errors are reported in the result rather than thrown.
RunResult run_auction(const AuctionInstance& instance, const protocol::ProtocolConfig& config, std::uint64_t seed,
                      const FaultPlan& faults = {});

struct Violation {
  std::uint64_t seq = 0;
  int rule = 0;
  std::string bidder;
  std::string detail;
};

struct AuditReport {
  bool pass = true;
  std::map<std::string, bool> bidder_verdicts;
  std::vector<Violation> violations;
  /// Rule 1 is a byte-substring search for canonical encodings: a structural
  /// check, much weaker than semantic security.
  std::string note;

  std::string to_json() const;
};

/// Rules: (1) no loser's norm, bid or bundle encoding appears in any payload
/// unless that value was legitimately made public; (2) losers send only
/// blind-signing challenges, probe responses, declines, and (candidates)
/// candidate reveals, each strictly parseable; (3) only winners and flagged
/// bidders send WinnerReveal, and it parses exactly; (4) candidates never
/// reveal a bundle.
AuditReport audit_transcript(const RunResult& run, const AuctionInstance& instance, unsigned exponent);

/// Lines describing differences; empty when the outcomes agree exactly.
std::vector<std::string> outcome_diff(const AuctionOutcome& oracle, const AuctionOutcome& protocol);

struct Comparison {
  bool equivalent = false;
  std::vector<std::string> diff;
  AuctionOutcome oracle;
  RunResult run;
  AuditReport audit;
};

/// Runs the protocol and the plaintext mechanism with the run's session IDs as
/// tie-break keys. `oracle_mode` overrides the oracle's candidate mode.
Comparison compare_with_oracle(const AuctionInstance& instance, const protocol::ProtocolConfig& config,
                               std::uint64_t seed, std::optional<CandidateMode> oracle_mode = std::nullopt);

enum class FaultKind : std::uint8_t {
  InflatePayment = 0,
  ForgeSignature = 1,
  FakeReveal = 2,
  LeakPlaintext = 3,
  /// The auctioneer swaps in a higher-norm signature with a consistent price.
  SignatureSubstitution = 4,
};

std::string to_string(FaultKind kind);
FaultKind parse_fault_kind(const std::string& text);
std::vector<FaultKind> all_fault_kinds();

struct FaultDrill {
  FaultKind kind = FaultKind::InflatePayment;
  bool applicable = true;
  bool detected = false;
  /// The substitution scenario is accepted by design.
  bool expected_pass_through = false;
  std::string defense;
  std::string detail;
  RunResult run;
};

FaultDrill inject_fault(FaultKind kind, const AuctionInstance& instance, const protocol::ProtocolConfig& config,
                        std::uint64_t seed);

}  // namespace pca::harness
