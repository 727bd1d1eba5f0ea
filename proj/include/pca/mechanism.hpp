#pragma once

// Plaintext auction semantics: greedy winner determination by norm
// b / sqrt(|S|), candidate-based critical payments, an exhaustive optimal
// allocator, and the truthfulness sweep. This is the ground truth the
// encrypted protocol is compared against.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pca/arith.hpp"
#include "pca/fixed_point.hpp"

namespace pca {

/// Length-m bit vector over the goods universe. Used both for bundles S_i
/// and for the allocation vector A.
class GoodSet {
public:
  GoodSet() = default;
  explicit GoodSet(std::size_t goods);
  static GoodSet from_indices(std::size_t goods, const std::vector<std::size_t>& indices);
  /// Bit k of `encoding` is good k (the inverse of to_integer).
  static GoodSet from_integer(std::size_t goods, const BigUint& encoding);

  std::size_t goods() const { return goods_; }
  bool contains(std::size_t k) const;
  void insert(std::size_t k);
  void erase(std::size_t k);
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  bool intersects(const GoodSet& other) const;
  GoodSet& operator|=(const GoodSet& other);
  /// this \ other
  GoodSet minus(const GoodSet& other) const;
  std::vector<std::size_t> indices() const;
  /// Sum of s_k 2^k; canonical and injective.
  BigUint to_integer() const;

  bool operator==(const GoodSet& other) const = default;

private:
  std::size_t goods_ = 0;
  std::vector<std::uint64_t> words_;
};

using Bundle = GoodSet;
using Allocation = GoodSet;

struct BidderInput {
  Bundle bundle;
  Rational bid;
  /// True valuation; only the truthfulness harness reads it.
  std::optional<Rational> valuation;

  Rational value() const { return valuation.value_or(bid); }
};

struct AuctionInstance {
  std::size_t goods = 0;
  std::vector<BidderInput> bidders;

  /// Throws Error{InvalidInstance}.
  void validate() const;
};

enum class CandidateMode : std::uint8_t {
  /// Max-norm bidder j != i whose bundle avoids A* - S_i.
  PaperResidual = 0,
  /// First bidder allocated by a greedy rerun without i that meets S_i.
  LehmannRerun = 1,
};

std::string to_string(CandidateMode mode);
CandidateMode parse_candidate_mode(const std::string& text);

struct MechanismConfig {
  unsigned exponent = kDefaultExponent;
  FixedPoint reserve_price{0, kDefaultExponent};
  CandidateMode candidate_mode = CandidateMode::PaperResidual;
  /// Ascending tie-break keys at equal fixed-point norm (the protocol's
  /// session IDs). Empty means bidder index order.
  std::vector<std::uint64_t> tie_break;

  static MechanismConfig with_exponent(unsigned e, CandidateMode mode = CandidateMode::PaperResidual);
};

/// Candidate of a winner: another bidder's index, or nullopt for the reserve.
using Candidate = std::optional<std::size_t>;

struct AuctionOutcome {
  /// Winners in greedy order.
  std::vector<std::size_t> winners;
  Allocation allocation;
  std::map<std::size_t, FixedPoint> payments;
  std::map<std::size_t, Candidate> candidates;

  bool is_winner(std::size_t bidder) const;
};

/// Canonical fixed-point norm.
FixedPoint norm(const Rational& bid, std::size_t bundle_size, unsigned e);

/// All bidders' norms in index order.
std::vector<FixedPoint> norms(const AuctionInstance& instance, unsigned e);

/// Bidder indices sorted by (norm descending, tie key ascending).
std::vector<std::size_t> greedy_order(const AuctionInstance& instance, const MechanismConfig& config);

/// Winners and allocation only (payments and candidates left empty).
AuctionOutcome greedy_winners(const AuctionInstance& instance, const MechanismConfig& config);

struct OptimalResult {
  Rational welfare;
  std::vector<std::size_t> winners;
};

inline constexpr std::size_t kMaxOptimalBidders = 20;

/// Exhaustive search over conflict-free bidder subsets maximizing the sum of
/// bids. Throws Error{InstanceTooLarge} beyond kMaxOptimalBidders.
OptimalResult optimal_winners(const AuctionInstance& instance);

Rational welfare(const AuctionInstance& instance, const std::vector<std::size_t>& winners);

Candidate candidate_of(const AuctionInstance& instance, const AuctionOutcome& outcome,
                       std::size_t winner, const MechanismConfig& config);

FixedPoint payment(const AuctionInstance& instance, std::size_t winner, const Candidate& candidate,
                   const MechanismConfig& config);

/// Greedy winners, then candidate and payment for every winner.
AuctionOutcome run_mechanism(const AuctionInstance& instance, const MechanismConfig& config);

/// v - decode(p) for a winner, 0 otherwise.
Rational utility(const Rational& valuation, bool won, const FixedPoint& price);

struct DeviationPoint {
  Rational bid;
  bool won = false;
  Rational utility;
};

struct DeviationReport {
  std::size_t bidder = 0;
  Rational valuation;
  Rational honest_utility;
  bool honest_won = false;
  std::vector<DeviationPoint> points;
  /// Points whose utility strictly exceeds the honest utility.
  std::vector<DeviationPoint> profitable;
};

/// Integer bids 0..2v (v rounded up) plus v +- one fixed-point ulp; always
/// contains v itself.
std::vector<Rational> default_bid_grid(const Rational& valuation, unsigned e);

/// Reruns the mechanism with bidder i bidding each grid value (everyone else
/// fixed) and records i's utility against the true valuation.
DeviationReport deviation_sweep(const AuctionInstance& instance, std::size_t bidder,
                                const std::vector<Rational>& grid, const MechanismConfig& config);

}  // namespace pca
