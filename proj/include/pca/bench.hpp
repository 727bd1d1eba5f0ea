#pragma once

// Scaling sweeps over bidders, goods and the norm domain, timing the
// winner-determination and payment phases of the encrypted protocol.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pca/harness.hpp"

namespace pca::bench {

enum class SweepVariable : std::uint8_t { Bidders = 0, Goods = 1, MaxPsi = 2 };

std::string to_string(SweepVariable v);
SweepVariable parse_sweep_variable(const std::string& text);

enum class Family : std::uint8_t {
  /// Random bundles and integer bids in [1, max_psi] at exponent 0.
  Random = 0,
  /// max_psi bidders all wanting good 0, bidding 0 .. max_psi - 1: every
  /// norm level below the top is occupied, as binary search needs.
  DenseConflict = 1,
  /// Goods dealt round-robin into four blocks; bundles are unions of blocks
  /// and bids are set so every norm is a fixed draw from [1, max_psi]. The
  /// winners, candidates and probe count do not depend on the goods count.
  Blocks = 2,
};

std::string to_string(Family f);
Family parse_family(const std::string& text);

struct SweepSpec {
  SweepVariable variable = SweepVariable::Bidders;
  std::vector<unsigned long> values;
  std::size_t bidders = 20;
  std::size_t goods = 10;
  unsigned long max_psi = 16;
  double density = 0.3;
  unsigned key_bits = 512;
  /// Each repetition runs a fresh instance draw and fresh keys.
  std::size_t reps = 5;
  protocol::GuessStrategy strategy = protocol::GuessStrategy::DescendingScan;
  CandidateMode candidate_mode = CandidateMode::PaperResidual;
  Family family = Family::Random;
  std::uint64_t seed = 1;
  std::optional<nr::GroupParams> nr_group;

  /// Defaults for the swept variable: bidders {5,10,25,50}, goods
  /// {4,8,12,20}, max_psi {8,16,32,64}.
  static SweepSpec defaults(SweepVariable variable);
};

struct PointResult {
  unsigned long x = 0;
  std::size_t bidders = 0;
  std::size_t probes = 0;
  std::size_t winners = 0;
  // medians over repetitions, seconds
  double auctioneer_winner_determination = 0;
  double auctioneer_payment = 0;
  double bidder_winner_determination = 0;
  double bidder_payment = 0;

  double auctioneer_total() const { return auctioneer_winner_determination + auctioneer_payment; }
  double bidder_total() const { return bidder_winner_determination + bidder_payment; }
  double auctioneer_per_bidder() const { return bidders == 0 ? 0 : auctioneer_total() / double(bidders); }
};

struct SweepResult {
  SweepSpec spec;
  std::vector<PointResult> points;
  /// Least-squares slopes of log(time) against log(x).
  double exponent_auctioneer = 0;
  double exponent_auctioneer_per_bidder = 0;
  double exponent_auctioneer_winner_determination = 0;
  double exponent_auctioneer_payment = 0;
  double exponent_bidder = 0;
  double exponent_probes = 0;
  bool all_matched_oracle = true;

  std::string table() const;
  std::string to_json() const;
};

/// `draw` selects an independent instance of the same shape; smaller bidder
/// counts are prefixes of larger ones for the same draw.
AuctionInstance make_instance(const SweepSpec& spec, std::size_t bidders, std::size_t goods, unsigned long max_psi,
                              std::uint64_t draw = 0);

SweepResult run_sweep(const SweepSpec& spec);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> values);

}  // namespace pca::bench
