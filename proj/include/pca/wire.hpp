#pragma once

// Protocol messages and their byte encoding.
//
// Every message is a one-byte type tag followed by its fields in declaration
// order. Integers are written as 'I' <u32 length> <big-endian magnitude>,
// so a value's canonical encoding is a fixed byte pattern that the transcript
// audit can search for. Flags are single bytes, session IDs are 8-byte
// big-endian, lists carry a u32 count.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pca/arith.hpp"
#include "pca/blind_sig.hpp"

namespace pca::wire {

using Bytes = std::vector<std::uint8_t>;

enum class MessageType : std::uint8_t {
  PublishKeys = 1,
  BlindCommit = 2,
  BlindChallenge = 3,
  BlindResponse = 4,
  ProbeGuess = 5,
  EncAlloc = 6,
  ProbeResponse = 7,
  DeclareWinner = 8,
  WinnerReveal = 9,
  CandidateReveal = 10,
  Decline = 11,
  PaymentNotice = 12,
  VerifyVerdict = 13,
};

std::string to_string(MessageType type);

enum class SignPurpose : std::uint8_t { Norm = 0, Bundle = 1 };

enum class Role : std::uint8_t { Winner = 0, Candidate = 1 };

struct PublishKeys {
  BigUint n;
  BigUint g;
  BigUint nr_p;
  BigUint nr_q;
  BigUint nr_g;
  BigUint nr_y;
  bool operator==(const PublishKeys&) const = default;
};

struct BlindCommit {
  SignPurpose purpose = SignPurpose::Norm;
  BigUint r_hat;
  bool operator==(const BlindCommit&) const = default;
};

struct BlindChallenge {
  SignPurpose purpose = SignPurpose::Norm;
  BigUint m_hat;
  bool operator==(const BlindChallenge&) const = default;
};

struct BlindResponse {
  SignPurpose purpose = SignPurpose::Norm;
  BigUint s_hat;
  bool operator==(const BlindResponse&) const = default;
};

/// E(psi*) for one probe.
struct ProbeGuess {
  BigUint ct;
  bool operator==(const ProbeGuess&) const = default;
};

/// E(a_1) .. E(a_m), freshly encrypted for one probe.
struct EncAlloc {
  std::vector<BigUint> cts;
  bool operator==(const EncAlloc&) const = default;
};

/// E(delta' (psi* - psi) + delta sum a_k s_k).
struct ProbeResponse {
  BigUint ct;
  bool operator==(const ProbeResponse&) const = default;
};

struct DeclareWinner {
  std::uint64_t session_id = 0;
  BigUint psi_star;
  Role role = Role::Winner;
  bool operator==(const DeclareWinner&) const = default;
};

struct WinnerReveal {
  BigUint psi;
  BigUint bundle;  // sum s_k 2^k
  nr::Signature sig_psi;
  nr::Signature sig_bundle;
  bool operator==(const WinnerReveal&) const = default;
};

struct CandidateReveal {
  BigUint psi;
  nr::Signature sig_psi;
  bool operator==(const CandidateReveal&) const = default;
};

/// Sent instead of a reveal when the declared psi* is not the bidder's norm.
struct Decline {
  bool operator==(const Decline&) const = default;
};

struct PaymentNotice {
  BigUint price;  // fixed-point raw value
  bool reserve = false;
  std::optional<nr::Signature> sig_psi;  // present iff !reserve
  bool operator==(const PaymentNotice&) const = default;
};

struct VerifyVerdict {
  bool accept = false;
  bool operator==(const VerifyVerdict&) const = default;
};

using Message = std::variant<PublishKeys, BlindCommit, BlindChallenge, BlindResponse, ProbeGuess, EncAlloc,
                             ProbeResponse, DeclareWinner, WinnerReveal, CandidateReveal, Decline,
                             PaymentNotice, VerifyVerdict>;

MessageType type_of(const Message& message);

Bytes encode(const Message& message);

enum class Trailing { Reject, Ignore };

/// Throws Error{DecodeError} on unknown tags, truncation, non-canonical
/// integers, invalid flags, or (with Trailing::Reject) leftover bytes.
Message decode(const Bytes& bytes, Trailing trailing = Trailing::Reject);

/// The 'I' <len> <bytes> pattern a value takes inside any payload.
Bytes canonical_integer(const BigUint& value);

/// Appends canonical_integer(value); used to build deliberately malformed payloads.
void append_integer(Bytes& out, const BigUint& value);

std::string to_hex(const Bytes& bytes);

}  // namespace pca::wire
