#include "pca/mechanism.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "pca/error.hpp"

namespace pca {

GoodSet::GoodSet(std::size_t goods) : goods_(goods), words_((goods + 63) / 64, 0) {}

GoodSet GoodSet::from_indices(std::size_t goods, const std::vector<std::size_t>& indices) {
  GoodSet out(goods);
  for (std::size_t k : indices) out.insert(k);
  return out;
}

GoodSet GoodSet::from_integer(std::size_t goods, const BigUint& encoding) {
  if (encoding < 0 || bit_length(encoding) > goods) {
    throw Error(ErrorCode::InvalidInstance, "bundle encoding exceeds the goods universe");
  }
  GoodSet out(goods);
  for (std::size_t k = 0; k < goods; ++k) {
    if (mpz_tstbit(encoding.get_mpz_t(), k) != 0) out.insert(k);
  }
  return out;
}

bool GoodSet::contains(std::size_t k) const {
  return k < goods_ && ((words_[k / 64] >> (k % 64)) & 1U) != 0;
}

void GoodSet::insert(std::size_t k) {
  if (k >= goods_) {
    throw Error(ErrorCode::InvalidInstance,
                "good index " + std::to_string(k) + " outside [0, " + std::to_string(goods_) + ")");
  }
  words_[k / 64] |= std::uint64_t{1} << (k % 64);
}

void GoodSet::erase(std::size_t k) {
  if (k < goods_) words_[k / 64] &= ~(std::uint64_t{1} << (k % 64));
}

std::size_t GoodSet::size() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool GoodSet::intersects(const GoodSet& other) const {
  const std::size_t n = std::min(words_.size(), other.words_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if ((words_[i] & other.words_[i]) != 0) return true;
  }
  return false;
}

GoodSet& GoodSet::operator|=(const GoodSet& other) {
  if (other.goods_ != goods_) throw Error(ErrorCode::InvalidInstance, "goods universe mismatch");
  for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

GoodSet GoodSet::minus(const GoodSet& other) const {
  GoodSet out = *this;
  const std::size_t n = std::min(words_.size(), other.words_.size());
  for (std::size_t i = 0; i < n; ++i) out.words_[i] &= ~other.words_[i];
  return out;
}

std::vector<std::size_t> GoodSet::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < goods_; ++k) {
    if (contains(k)) out.push_back(k);
  }
  return out;
}

BigUint GoodSet::to_integer() const {
  BigUint out = 0;
  for (std::size_t k = 0; k < goods_; ++k) {
    if (contains(k)) mpz_setbit(out.get_mpz_t(), k);
  }
  return out;
}

void AuctionInstance::validate() const {
  if (goods < 1) throw Error(ErrorCode::InvalidInstance, "an auction needs at least one good");
  for (std::size_t i = 0; i < bidders.size(); ++i) {
    const auto& b = bidders[i];
    const std::string who = "bidder " + std::to_string(i);
    if (b.bundle.goods() != goods) throw Error(ErrorCode::InvalidInstance, who + ": bundle universe mismatch");
    if (b.bundle.empty()) throw Error(ErrorCode::InvalidInstance, who + ": empty bundle");
    if (b.bid < 0) throw Error(ErrorCode::InvalidInstance, who + ": negative bid");
    if (b.valuation && *b.valuation < 0) throw Error(ErrorCode::InvalidInstance, who + ": negative valuation");
  }
}

std::string to_string(CandidateMode mode) {
  return mode == CandidateMode::PaperResidual ? "paper-residual" : "lehmann-rerun";
}

CandidateMode parse_candidate_mode(const std::string& text) {
  if (text == "paper-residual") return CandidateMode::PaperResidual;
  if (text == "lehmann-rerun") return CandidateMode::LehmannRerun;
  throw Error(ErrorCode::InvalidConfig, "unknown candidate mode '" + text + "'");
}

MechanismConfig MechanismConfig::with_exponent(unsigned e, CandidateMode mode) {
  MechanismConfig config;
  config.exponent = e;
  config.reserve_price = FixedPoint{0, e};
  config.candidate_mode = mode;
  return config;
}

bool AuctionOutcome::is_winner(std::size_t bidder) const {
  return std::find(winners.begin(), winners.end(), bidder) != winners.end();
}

FixedPoint norm(const Rational& bid, std::size_t bundle_size, unsigned e) {
  return norm_of(bid, bundle_size, e);
}

std::vector<FixedPoint> norms(const AuctionInstance& instance, unsigned e) {
  std::vector<FixedPoint> out;
  out.reserve(instance.bidders.size());
  for (const auto& b : instance.bidders) out.push_back(norm(b.bid, b.bundle.size(), e));
  return out;
}

namespace {

std::uint64_t tie_key(const MechanismConfig& config, std::size_t i) {
  return config.tie_break.empty() ? i : config.tie_break[i];
}

std::vector<std::size_t> order_by_norm(const std::vector<FixedPoint>& psi, const MechanismConfig& config) {
  std::vector<std::size_t> order(psi.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (psi[a].raw != psi[b].raw) return psi[a].raw > psi[b].raw;
    return tie_key(config, a) < tie_key(config, b);
  });
  return order;
}

void check_config(const AuctionInstance& instance, const MechanismConfig& config) {
  if (!config.tie_break.empty() && config.tie_break.size() != instance.bidders.size()) {
    throw Error(ErrorCode::InvalidConfig, "tie-break keys must cover every bidder");
  }
  if (config.reserve_price.exponent != config.exponent) {
    throw Error(ErrorCode::ExponentMismatch, "reserve price uses a different exponent");
  }
}

}  // namespace

std::vector<std::size_t> greedy_order(const AuctionInstance& instance, const MechanismConfig& config) {
  check_config(instance, config);
  return order_by_norm(norms(instance, config.exponent), config);
}

AuctionOutcome greedy_winners(const AuctionInstance& instance, const MechanismConfig& config) {
  AuctionOutcome outcome;
  outcome.allocation = Allocation(instance.goods);
  for (std::size_t i : greedy_order(instance, config)) {
    const auto& bundle = instance.bidders[i].bundle;
    if (!outcome.allocation.intersects(bundle)) {
      outcome.allocation |= bundle;
      outcome.winners.push_back(i);
    }
  }
  return outcome;
}

Rational welfare(const AuctionInstance& instance, const std::vector<std::size_t>& winners) {
  Rational total = 0;
  for (std::size_t i : winners) total += instance.bidders[i].bid;
  return total;
}

OptimalResult optimal_winners(const AuctionInstance& instance) {
  const std::size_t n = instance.bidders.size();
  if (n > kMaxOptimalBidders) {
    throw Error(ErrorCode::InstanceTooLarge, std::to_string(n) + " bidders exceed the exhaustive limit of " +
                                                 std::to_string(kMaxOptimalBidders));
  }
  std::vector<std::uint32_t> conflicts(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && instance.bidders[i].bundle.intersects(instance.bidders[j].bundle)) {
        conflicts[i] |= std::uint32_t{1} << j;
      }
    }
  }
  // suffix[i] = sum of bids i..n-1, an upper bound for pruning
  std::vector<Rational> suffix(n + 1, Rational(0));
  for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + instance.bidders[i].bid;

  // The empty set is feasible; only strict improvements replace it.
  OptimalResult best{Rational(0), {}};
  std::vector<std::size_t> chosen;
  Rational current = 0;
  auto search = [&](auto& self, std::size_t i, std::uint32_t blocked) -> void {
    if (current + suffix[i] <= best.welfare) return;
    if (i == n) {
      best.welfare = current;
      best.winners = chosen;
      return;
    }
    if ((blocked >> i & 1U) == 0) {
      chosen.push_back(i);
      current += instance.bidders[i].bid;
      self(self, i + 1, blocked | conflicts[i]);
      current -= instance.bidders[i].bid;
      chosen.pop_back();
    }
    self(self, i + 1, blocked);
  };
  search(search, 0, 0);
  return best;
}

Candidate candidate_of(const AuctionInstance& instance, const AuctionOutcome& outcome, std::size_t winner,
                       const MechanismConfig& config) {
  const auto order = greedy_order(instance, config);
  const Bundle& own = instance.bidders[winner].bundle;
  if (config.candidate_mode == CandidateMode::PaperResidual) {
    const Allocation residual = outcome.allocation.minus(own);
    for (std::size_t j : order) {
      if (j != winner && !instance.bidders[j].bundle.intersects(residual)) return j;
    }
    return std::nullopt;
  }
  Allocation rerun(instance.goods);
  for (std::size_t j : order) {
    if (j == winner) continue;
    const Bundle& bundle = instance.bidders[j].bundle;
    if (rerun.intersects(bundle)) continue;
    rerun |= bundle;
    if (bundle.intersects(own)) return j;
  }
  return std::nullopt;
}

FixedPoint payment(const AuctionInstance& instance, std::size_t winner, const Candidate& candidate,
                   const MechanismConfig& config) {
  if (!candidate) return config.reserve_price;
  const auto& c = instance.bidders[*candidate];
  const FixedPoint psi = norm(c.bid, c.bundle.size(), config.exponent);
  return payment_of(psi, instance.bidders[winner].bundle.size());
}

AuctionOutcome run_mechanism(const AuctionInstance& instance, const MechanismConfig& config) {
  AuctionOutcome outcome = greedy_winners(instance, config);
  for (std::size_t w : outcome.winners) {
    const Candidate c = candidate_of(instance, outcome, w, config);
    outcome.candidates[w] = c;
    outcome.payments[w] = payment(instance, w, c, config);
  }
  return outcome;
}

Rational utility(const Rational& valuation, bool won, const FixedPoint& price) {
  if (!won) return Rational(0);
  return valuation - price.decode();
}

std::vector<Rational> default_bid_grid(const Rational& valuation, unsigned e) {
  std::vector<Rational> grid;
  BigUint upper;
  const Rational twice = valuation * 2;
  mpz_cdiv_q(upper.get_mpz_t(), twice.get_num().get_mpz_t(), twice.get_den().get_mpz_t());
  for (BigUint b = 0; b <= upper; ++b) grid.emplace_back(b);
  Rational ulp(BigUint(1), BigUint(1) << e);
  ulp.canonicalize();
  grid.push_back(valuation);
  grid.push_back(valuation + ulp);
  if (valuation >= ulp) grid.push_back(valuation - ulp);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

DeviationReport deviation_sweep(const AuctionInstance& instance, std::size_t bidder,
                                const std::vector<Rational>& grid, const MechanismConfig& config) {
  DeviationReport report;
  report.bidder = bidder;
  report.valuation = instance.bidders.at(bidder).value();
  {
    AuctionInstance honest = instance;
    honest.bidders[bidder].bid = report.valuation;
    const AuctionOutcome outcome = run_mechanism(honest, config);
    report.honest_won = outcome.is_winner(bidder);
    report.honest_utility = report.honest_won
                                ? utility(report.valuation, true, outcome.payments.at(bidder))
                                : Rational(0);
  }
  AuctionInstance trial = instance;
  for (const Rational& bid : grid) {
    trial.bidders[bidder].bid = bid;
    const AuctionOutcome outcome = run_mechanism(trial, config);
    DeviationPoint point;
    point.bid = bid;
    point.won = outcome.is_winner(bidder);
    point.utility = point.won ? utility(report.valuation, true, outcome.payments.at(bidder)) : Rational(0);
    if (point.utility > report.honest_utility) report.profitable.push_back(point);
    report.points.push_back(std::move(point));
  }
  return report;
}

}  // namespace pca
