#include "pca/protocol.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "pca/error.hpp"

namespace pca::protocol {

std::string to_string(GuessStrategy strategy) {
  return strategy == GuessStrategy::DescendingScan ? "descending-scan" : "binary-search";
}

GuessStrategy parse_guess_strategy(const std::string& text) {
  if (text == "descending-scan" || text == "descending") return GuessStrategy::DescendingScan;
  if (text == "binary-search" || text == "binary") return GuessStrategy::BinarySearchEquality;
  throw Error(ErrorCode::ParseError, "unknown guess strategy '" + text + "'");
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Setup: return "setup";
    case Phase::BlindSigning: return "blind-signing";
    case Phase::WinnerDetermination: return "winner-determination";
    case Phase::PaymentDetermination: return "payment-determination";
  }
  return "unknown";
}

std::string bidder_name(std::uint64_t session_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "bidder-%016llx", static_cast<unsigned long long>(session_id));
  return buf;
}

FixedPoint ProtocolConfig::reserve() const { return encode(reserve_price, exponent); }

BigUint ProtocolConfig::domain_max(const AuctionInstance& instance) const {
  if (norm_domain_max) return *norm_domain_max;
  BigUint best = 0;
  for (const auto& fp : norms(instance, exponent)) best = std::max(best, fp.raw);
  return best;
}

MechanismConfig ProtocolConfig::mechanism(std::vector<std::uint64_t> tie_break) const {
  MechanismConfig m = MechanismConfig::with_exponent(exponent, candidate_mode);
  m.reserve_price = reserve();
  m.tie_break = std::move(tie_break);
  return m;
}

void ProtocolConfig::validate(const AuctionInstance& instance) const {
  instance.validate();
  if (paillier_bits < 16) throw Error(ErrorCode::InvalidConfig, "Paillier modulus needs at least 16 bits");
  if (reserve_price < 0) throw Error(ErrorCode::InvalidConfig, "reserve price must be non-negative");
  if (norm_domain_max) {
    for (std::size_t i = 0; i < instance.bidders.size(); ++i) {
      const auto& b = instance.bidders[i];
      if (norm(b.bid, b.bundle.size(), exponent).raw > *norm_domain_max) {
        throw Error(ErrorCode::InvalidConfig, "bidder " + std::to_string(i) + " has a norm above norm_domain_max " +
                                                  norm_domain_max->get_str());
      }
    }
  }
  if (nr_group) {
    RandomSource rng(0);
    nr_group->validate(rng);
  }
}

// ---- building blocks ------------------------------------------------------

paillier::Ciphertext scalar_product(const paillier::PublicKey& pk, const std::vector<paillier::Ciphertext>& alloc,
                                    const GoodSet& bundle, const BigUint& delta) {
  if (alloc.size() != bundle.goods()) {
    throw Error(ErrorCode::ProtocolViolation, "allocation vector has the wrong length");
  }
  paillier::Ciphertext acc{1};
  for (std::size_t k : bundle.indices()) acc = paillier::add_ct(pk, acc, paillier::mul_plain(pk, alloc[k], delta));
  return acc;
}

paillier::Ciphertext probe_response(const paillier::PublicKey& pk, const paillier::Ciphertext& guess,
                                    const std::vector<paillier::Ciphertext>& alloc, const BigUint& psi,
                                    const GoodSet& bundle, const BigUint& delta, const BigUint& delta_prime) {
  if (psi >= pk.n) throw Error(ErrorCode::PlaintextOutOfRange, "norm does not fit the plaintext space");
  const BigUint minus_psi = (pk.n - psi) % pk.n;
  const paillier::Ciphertext diff = paillier::mul_plain(pk, paillier::add_plain(pk, guess, minus_psi), delta_prime);
  return paillier::add_ct(pk, diff, scalar_product(pk, alloc, bundle, delta));
}

namespace {

bool signature_matches(const SignerPublic& signer, const BigUint& value, const nr::Signature& sig) {
  if (value > nr::max_embeddable(signer.group)) return false;
  return nr::verify(signer.group, signer.y, nr::embed(signer.group, value), sig);
}

}  // namespace

std::optional<ErrorCode> check_winner_reveal(const wire::WinnerReveal& reveal, const BigUint& psi_star,
                                             const Allocation& allocation, const SignerPublic& signer) {
  if (!signature_matches(signer, reveal.psi, reveal.sig_psi)) return ErrorCode::SignatureInvalid;
  if (!signature_matches(signer, reveal.bundle, reveal.sig_bundle)) return ErrorCode::SignatureInvalid;
  if (reveal.psi != psi_star) return ErrorCode::NormMismatch;
  if (reveal.bundle == 0 || reveal.bundle >= (BigUint(1) << allocation.goods())) {
    return ErrorCode::ProtocolViolation;
  }
  if (GoodSet::from_integer(allocation.goods(), reveal.bundle).intersects(allocation)) {
    return ErrorCode::BundleConflict;
  }
  return std::nullopt;
}

std::optional<ErrorCode> check_candidate_reveal(const wire::CandidateReveal& reveal, const BigUint& psi_star,
                                                const SignerPublic& signer) {
  if (!signature_matches(signer, reveal.psi, reveal.sig_psi)) return ErrorCode::SignatureInvalid;
  if (reveal.psi != psi_star) return ErrorCode::NormMismatch;
  return std::nullopt;
}

bool verify_payment(const wire::PaymentNotice& notice, std::size_t bundle_size, const ProtocolConfig& config,
                    const BigUint& norm_domain_max, const SignerPublic& signer) {
  if (notice.reserve) return !notice.sig_psi && notice.price == config.reserve().raw;
  if (!notice.sig_psi) return false;
  const BigUint m = nr::recover(signer.group, signer.y, *notice.sig_psi);
  if (!nr::verify(signer.group, signer.y, m, *notice.sig_psi)) return false;
  const BigUint psi_j = nr::extract(m);
  if (psi_j > norm_domain_max) return false;
  return payment_of(from_raw(psi_j, config.exponent), bundle_size).raw == notice.price;
}

// ---- bidder ---------------------------------------------------------------

BidderActor::BidderActor(std::uint64_t session_id, BidderInput input, std::size_t goods,
                         const ProtocolConfig& config, const BigUint& norm_domain_max, RandomSource rng,
                         BidderFault fault, RandomizerLog* log)
    : session_id_(session_id),
      name_(bidder_name(session_id)),
      input_(std::move(input)),
      goods_(goods),
      config_(config),
      norm_domain_max_(norm_domain_max),
      rng_(std::move(rng)),
      fault_(fault),
      log_(log),
      psi_(norm(input_.bid, input_.bundle.size(), config.exponent)) {}

void BidderActor::on_message(const Envelope& envelope, Outbox& out) {
  const wire::Message message = wire::decode(envelope.payload, wire::Trailing::Ignore);
  std::visit([&](const auto& m) { handle(m, out); }, message);
}

void BidderActor::handle(const wire::PublishKeys& m, Outbox&) {
  paillier::PublicKey pk;
  pk.n = m.n;
  pk.g = m.g;
  pk.n_squared = m.n * m.n;
  pk.g_to_n = mod_pow(m.g, m.n, pk.n_squared);
  pk_ = pk;
  signer_ = SignerPublic{nr::GroupParams{m.nr_p, m.nr_q, m.nr_g}, m.nr_y};
}

void BidderActor::handle(const wire::BlindCommit& m, Outbox& out) {
  if (!signer_) throw Error(ErrorCode::ProtocolViolation, name_ + " has no signer key yet");
  BigUint value = m.purpose == wire::SignPurpose::Norm ? psi_.raw : input_.bundle.to_integer();
  if (m.purpose == wire::SignPurpose::Norm && fault_ == BidderFault::FakeReveal) value += 1;
  const BigUint message = nr::embed(signer_->group, value);
  pending_[m.purpose] = nr::signee_blind(signer_->group, config_.blinding, message, m.r_hat, rng_);
  out.send(name_, kSignerName, wire::BlindChallenge{m.purpose, pending_[m.purpose].m_hat});
}

void BidderActor::handle(const wire::BlindResponse& m, Outbox&) {
  const auto it = pending_.find(m.purpose);
  if (it == pending_.end()) throw Error(ErrorCode::ProtocolViolation, name_ + " got a response with no session");
  const nr::Signature sig = nr::signee_unblind(signer_->group, signer_->y, it->second, m.s_hat);
  (m.purpose == wire::SignPurpose::Norm ? sig_psi_ : sig_bundle_) = sig;
  pending_.erase(it);
}

void BidderActor::handle(const wire::ProbeGuess& m, Outbox&) { guess_ = paillier::Ciphertext{m.ct}; }

void BidderActor::handle(const wire::EncAlloc& m, Outbox& out) {
  if (!guess_ || !pk_) throw Error(ErrorCode::ProtocolViolation, name_ + " got an allocation without a guess");
  std::vector<paillier::Ciphertext> alloc;
  alloc.reserve(m.cts.size());
  for (const auto& c : m.cts) {
    alloc.push_back(paillier::Ciphertext{c});
    paillier::validate(*pk_, alloc.back());
  }
  if (alloc.size() != goods_) throw Error(ErrorCode::ProtocolViolation, name_ + " got a malformed allocation");
  paillier::validate(*pk_, *guess_);
  const BigUint delta = rand_below(pk_->n, rng_);
  const BigUint delta_prime = rand_below(pk_->n, rng_);
  if (log_) {
    log_->values.push_back(delta);
    log_->values.push_back(delta_prime);
  }
  paillier::Ciphertext ct = probe_response(*pk_, *guess_, alloc, psi_.raw, input_.bundle, delta, delta_prime);
  ct = paillier::self_blind(*pk_, ct, rng_);
  guess_.reset();
  if (fault_ == BidderFault::LeakPlaintext) {
    wire::Bytes payload = wire::encode(wire::ProbeResponse{ct.value});
    wire::append_integer(payload, psi_.raw);
    out.send_raw(name_, kAuctioneerName, std::move(payload));
    return;
  }
  out.send(name_, kAuctioneerName, wire::ProbeResponse{ct.value});
}

void BidderActor::handle(const wire::DeclareWinner& m, Outbox& out) {
  if (!sig_psi_ || !sig_bundle_) throw Error(ErrorCode::ProtocolViolation, name_ + " was never signed up");
  BigUint claimed = psi_.raw;
  nr::Signature sig = *sig_psi_;
  if (fault_ == BidderFault::ForgeSignature) {
    claimed = psi_.raw * 2;
    sig = nr::Signature{sig.r * sig.r % signer_->group.p, sig.s * 2 % signer_->group.q};
  } else if (fault_ == BidderFault::FakeReveal) {
    claimed = psi_.raw + 1;
  } else if (m.session_id != session_id_ || m.psi_star != psi_.raw) {
    out.send(name_, kAuctioneerName, wire::Decline{});
    return;
  }
  if (m.role == wire::Role::Winner) {
    out.send(name_, kAuctioneerName, wire::WinnerReveal{claimed, input_.bundle.to_integer(), sig, *sig_bundle_});
  } else {
    out.send(name_, kAuctioneerName, wire::CandidateReveal{claimed, sig});
  }
}

void BidderActor::handle(const wire::PaymentNotice& m, Outbox& out) {
  verdict_ = verify_payment(m, input_.bundle.size(), config_, norm_domain_max_, *signer_);
  out.send(name_, kAuctioneerName, wire::VerifyVerdict{*verdict_});
}

// ---- signer ---------------------------------------------------------------

SignerActor::SignerActor(nr::GroupParams group, nr::KeyPair keys, RandomSource rng)
    : group_(std::move(group)), keys_(std::move(keys)), rng_(std::move(rng)) {}

void SignerActor::open_sessions(Outbox& out, const std::vector<std::string>& bidders) {
  for (const auto& bidder : bidders) {
    for (auto purpose : {wire::SignPurpose::Norm, wire::SignPurpose::Bundle}) {
      const nr::SignerSession session = nr::signer_commit(group_, rng_);
      sessions_[{bidder, purpose}] = session;
      out.send(kSignerName, bidder, wire::BlindCommit{purpose, session.r_hat});
    }
  }
}

void SignerActor::on_message(const Envelope& envelope, Outbox& out) {
  const wire::Message message = wire::decode(envelope.payload, wire::Trailing::Ignore);
  if (std::holds_alternative<wire::PublishKeys>(message)) return;
  const auto* challenge = std::get_if<wire::BlindChallenge>(&message);
  if (!challenge) throw Error(ErrorCode::ProtocolViolation, "signer received an unexpected message");
  const auto it = sessions_.find({envelope.from, challenge->purpose});
  if (it == sessions_.end()) throw Error(ErrorCode::ProtocolViolation, "no open signing session for " + envelope.from);
  const BigUint s_hat = nr::signer_respond(group_, keys_, it->second, challenge->m_hat);
  sessions_.erase(it);
  out.send(kSignerName, envelope.from, wire::BlindResponse{challenge->purpose, s_hat});
}

// ---- auctioneer -----------------------------------------------------------

Auctioneer::Auctioneer(const ProtocolConfig& config, std::size_t goods, std::vector<std::uint64_t> session_ids,
                       paillier::KeyPair keys, SignerPublic signer, const BigUint& norm_domain_max,
                       RandomSource rng, AuctioneerFaultPlan fault)
    : config_(config),
      goods_(goods),
      session_ids_(std::move(session_ids)),
      keys_(std::move(keys)),
      signer_(std::move(signer)),
      domain_max_(norm_domain_max),
      rng_(std::move(rng)),
      fault_(fault) {
  std::sort(session_ids_.begin(), session_ids_.end());
  if (std::adjacent_find(session_ids_.begin(), session_ids_.end()) != session_ids_.end()) {
    throw Error(ErrorCode::InvalidConfig, "session IDs must be distinct");
  }
  if (BigUint(goods_) >= std::min(keys_.priv.p, keys_.priv.q)) {
    throw Error(ErrorCode::InvalidConfig, "goods count must be below both Paillier primes");
  }
  if (domain_max_ >= keys_.pub.n) throw Error(ErrorCode::InvalidConfig, "norm domain exceeds the plaintext space");
  const BigUint cap = nr::max_embeddable(signer_.group);
  if (domain_max_ + 1 > cap || (BigUint(1) << goods_) - 1 > cap) {
    throw Error(ErrorCode::InvalidConfig, "signer group too small to embed norms and bundles");
  }
}

void Auctioneer::publish(Channel& net) {
  net.set_phase(Phase::Setup);
  net.broadcast(kAuctioneerName, wire::PublishKeys{keys_.pub.n, keys_.pub.g, signer_.group.p, signer_.group.q,
                                                   signer_.group.g, signer_.y});
}

AuctioneerResult Auctioneer::run(Channel& net) {
  result_ = AuctioneerResult{};
  result_.allocation = Allocation(goods_);
  net.set_phase(Phase::WinnerDetermination);
  winner_determination(net);
  net.set_phase(Phase::PaymentDetermination);
  for (std::size_t rank = 0; rank < result_.winners.size(); ++rank) determine_payment(net, rank);
  return result_;
}

wire::Message Auctioneer::exchange(Channel& net, std::uint64_t sid, const wire::Message& message) {
  const std::string peer = bidder_name(sid);
  net.send(kAuctioneerName, peer, message);
  const Envelope reply = net.await(kAuctioneerName);
  if (reply.from != peer) throw Error(ErrorCode::ProtocolViolation, "unexpected reply from " + reply.from);
  return wire::decode(reply.payload, wire::Trailing::Ignore);
}

bool Auctioneer::probe(Channel& net, std::uint64_t sid, const BigUint& level, const Allocation& allocation) {
  wire::EncAlloc alloc;
  alloc.cts.reserve(goods_);
  for (std::size_t k = 0; k < goods_; ++k) {
    alloc.cts.push_back(paillier::encrypt(keys_.pub, allocation.contains(k) ? 1 : 0, rng_).value);
  }
  net.send(kAuctioneerName, bidder_name(sid), wire::ProbeGuess{paillier::encrypt(keys_.pub, level, rng_).value});
  const wire::Message reply = exchange(net, sid, alloc);
  const auto* response = std::get_if<wire::ProbeResponse>(&reply);
  if (!response) throw Error(ErrorCode::ProtocolViolation, bidder_name(sid) + " did not answer the probe");
  const BigUint value = paillier::decrypt(keys_.priv, paillier::Ciphertext{response->ct});
  ++result_.probes;
  if (value == 0) return true;
  if (config_.capture_probe_values) result_.nonzero_probe_values.push_back(value);
  return false;
}

std::optional<std::uint64_t> Auctioneer::first_hit(Channel& net, const std::vector<std::uint64_t>& pool,
                                                   const BigUint& level, const Allocation& allocation,
                                                   std::optional<std::uint64_t> after) {
  for (std::uint64_t sid : pool) {
    if (after && sid <= *after) continue;
    if (probe(net, sid, level, allocation)) return sid;
  }
  return std::nullopt;
}

std::optional<Auctioneer::Hit> Auctioneer::find_next(Channel& net, const std::vector<std::uint64_t>& pool,
                                                     const Allocation& allocation, const BigUint& upper,
                                                     std::optional<std::uint64_t> after) {
  if (pool.empty()) return std::nullopt;
  if (auto sid = first_hit(net, pool, upper, allocation, after)) return Hit{*sid, upper};
  if (upper == 0) return std::nullopt;

  if (config_.guess_strategy == GuessStrategy::DescendingScan) {
    for (BigUint level = upper - 1;; --level) {
      if (auto sid = first_hit(net, pool, level, allocation, std::nullopt)) return Hit{*sid, level};
      if (level == 0) return std::nullopt;
    }
  }

  // Largest level in [0, upper) whose probe round hits, treating "hits" as if
  // it held for every level below the answer.
  BigUint lo = 0;
  BigUint hi = upper - 1;
  std::map<BigUint, std::uint64_t> hits;
  while (lo < hi) {
    const BigUint mid = (lo + hi + 1) / 2;
    if (auto sid = first_hit(net, pool, mid, allocation, std::nullopt)) {
      hits[mid] = *sid;
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  if (auto it = hits.find(lo); it != hits.end()) return Hit{it->second, lo};
  if (auto sid = first_hit(net, pool, lo, allocation, std::nullopt)) return Hit{*sid, lo};
  return std::nullopt;
}

void Auctioneer::flag(std::uint64_t sid, ErrorCode code, Phase phase) { result_.flags.push_back({sid, code, phase}); }

void Auctioneer::winner_determination(Channel& net) {
  std::vector<std::uint64_t> pool = session_ids_;
  Allocation& allocation = result_.allocation;
  BigUint upper = domain_max_;
  std::optional<std::uint64_t> after;
  while (auto hit = find_next(net, pool, allocation, upper, after)) {
    upper = hit->level;
    after = hit->session_id;
    const wire::Message reply = exchange(net, hit->session_id, wire::DeclareWinner{hit->session_id, hit->level,
                                                                                    wire::Role::Winner});
    if (std::holds_alternative<wire::Decline>(reply)) continue;
    std::erase(pool, hit->session_id);
    const auto* reveal = std::get_if<wire::WinnerReveal>(&reply);
    if (!reveal) {
      flag(hit->session_id, ErrorCode::ProtocolViolation, Phase::WinnerDetermination);
      continue;
    }
    if (auto err = check_winner_reveal(*reveal, hit->level, allocation, signer_)) {
      flag(hit->session_id, *err, Phase::WinnerDetermination);
      continue;
    }
    const GoodSet bundle = GoodSet::from_integer(goods_, reveal->bundle);
    allocation |= bundle;
    result_.winners.push_back(hit->session_id);
    result_.bundles[hit->session_id] = bundle;
    result_.norms[hit->session_id] = reveal->psi;
    result_.norm_signatures[hit->session_id] = reveal->sig_psi;
  }
}

void Auctioneer::determine_payment(Channel& net, std::size_t winner_rank) {
  const std::uint64_t winner = result_.winners[winner_rank];
  const GoodSet& own = result_.bundles.at(winner);
  const bool rerun = config_.candidate_mode == CandidateMode::LehmannRerun;

  std::set<std::uint64_t> excluded{winner};
  for (const auto& f : result_.flags) excluded.insert(f.session_id);
  Allocation allocation(goods_);
  if (rerun) {
    for (std::size_t r = 0; r < winner_rank; ++r) {
      allocation |= result_.bundles.at(result_.winners[r]);
      excluded.insert(result_.winners[r]);
    }
  } else {
    allocation = result_.allocation.minus(own);
    if (config_.exclude_winners_from_candidates) excluded.insert(result_.winners.begin(), result_.winners.end());
  }
  std::vector<std::uint64_t> pool;
  for (std::uint64_t sid : session_ids_) {
    if (!excluded.count(sid)) pool.push_back(sid);
  }

  std::optional<std::uint64_t> candidate;
  std::optional<wire::CandidateReveal> reveal;
  BigUint upper = result_.norms.at(winner);
  std::optional<std::uint64_t> after;
  while (auto hit = find_next(net, pool, allocation, upper, after)) {
    upper = hit->level;
    after = hit->session_id;
    if (rerun && result_.bundles.count(hit->session_id)) {
      // A winner reappearing in the rerun: its bundle is already public.
      allocation |= result_.bundles.at(hit->session_id);
      std::erase(pool, hit->session_id);
      continue;
    }
    const wire::Message reply = exchange(net, hit->session_id, wire::DeclareWinner{hit->session_id, hit->level,
                                                                                    wire::Role::Candidate});
    if (std::holds_alternative<wire::Decline>(reply)) continue;
    std::erase(pool, hit->session_id);
    const auto* r = std::get_if<wire::CandidateReveal>(&reply);
    if (!r) {
      flag(hit->session_id, ErrorCode::ProtocolViolation, Phase::PaymentDetermination);
      continue;
    }
    if (auto err = check_candidate_reveal(*r, hit->level, signer_)) {
      flag(hit->session_id, *err, Phase::PaymentDetermination);
      continue;
    }
    candidate = hit->session_id;
    reveal = *r;
    break;
  }

  wire::PaymentNotice notice;
  if (reveal) {
    notice.price = payment_of(from_raw(reveal->psi, config_.exponent), own.size()).raw;
    notice.sig_psi = reveal->sig_psi;
  } else {
    notice.price = config_.reserve().raw;
    notice.reserve = true;
  }

  if (fault_.target == winner && fault_.kind == AuctioneerFault::InflatePayment) {
    const BigUint shift = BigUint(static_cast<unsigned long>(fault_.delta < 0 ? -fault_.delta : fault_.delta));
    if (fault_.delta < 0 && notice.price >= shift) {
      notice.price -= shift;
    } else {
      notice.price += shift;
    }
  } else if (fault_.target == winner && fault_.kind == AuctioneerFault::SubstituteSignature) {
    const BigUint honest_norm = reveal ? reveal->psi : BigUint(0);
    std::optional<std::uint64_t> source;
    for (std::uint64_t w : result_.winners) {
      if (result_.norms.at(w) <= honest_norm) continue;
      if (!source || result_.norms.at(w) > result_.norms.at(*source)) source = w;
    }
    if (source) {
      notice.reserve = false;
      notice.sig_psi = result_.norm_signatures.at(*source);
      notice.price = payment_of(from_raw(result_.norms.at(*source), config_.exponent), own.size()).raw;
    }
  }

  result_.candidates[winner] = candidate;
  result_.payments[winner] = from_raw(notice.price, config_.exponent);
  result_.notices[winner] = notice;
  const wire::Message reply = exchange(net, winner, notice);
  const auto* verdict = std::get_if<wire::VerifyVerdict>(&reply);
  result_.verdicts[winner] = verdict && verdict->accept;
}

}  // namespace pca::protocol
