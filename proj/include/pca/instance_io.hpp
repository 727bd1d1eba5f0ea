#pragma once

// Instance files: JSON with explicit field names, hand-editable.
//
//   {
//     "goods": 3,
//     "bidders": [ {"bundle": [0, 1], "bid": 10, "valuation": 10}, ... ],
//     "config": {
//       "exponent": 2, "reserve": "0", "candidate_mode": "paper-residual",
//       "guess_strategy": "descending-scan", "key_bits": 512,
//       "nr_p_bits": 512, "nr_q_bits": 160, "norm_domain_max": null, "seed": 1
//     }
//   }
//
// Bids, valuations and the reserve are integers or strings holding an exact
// rational ("7/2", "3.25"). Every config field is optional.

#include <cstdint>
#include <optional>
#include <string>

#include "pca/mechanism.hpp"
#include "pca/protocol.hpp"

namespace pca::io {

struct InstanceConfig {
  unsigned exponent = 2;
  Rational reserve = 0;
  CandidateMode candidate_mode = CandidateMode::PaperResidual;
  protocol::GuessStrategy guess_strategy = protocol::GuessStrategy::DescendingScan;
  unsigned key_bits = 512;
  std::size_t nr_p_bits = 512;
  std::size_t nr_q_bits = 160;
  std::optional<BigUint> norm_domain_max;
  std::uint64_t seed = 1;

  protocol::ProtocolConfig protocol() const;
};

struct InstanceFile {
  AuctionInstance instance;
  InstanceConfig config;
};

/// Throws Error{ParseError}; the message names the line for syntax errors and
/// the field path (e.g. bidders[1].bundle[0]) for content errors.
InstanceFile parse_instance(const std::string& text);
InstanceFile load_instance(const std::string& path);

/// Canonical text: parse_instance(serialize(f)) re-serializes to the same bytes.
std::string serialize(const InstanceFile& file);
void save_instance(const std::string& path, const InstanceFile& file);

struct GenOptions {
  std::size_t bidders = 3;
  std::size_t goods = 3;
  long bid_min = 1;
  long bid_max = 10;
  double density = 0.5;
  std::uint64_t seed = 1;
};

/// Random bundles (each good kept with probability `density`, redrawn if
/// empty) and uniform integer bids; valuations equal bids.
InstanceFile generate(const GenOptions& options);

}  // namespace pca::io
