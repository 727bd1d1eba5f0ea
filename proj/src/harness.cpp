#include "pca/harness.hpp"

#include <algorithm>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include <time.h>

#include "pca/error.hpp"

namespace pca::harness {

using protocol::Phase;
using Clock = CpuClock;

CpuClock::time_point CpuClock::now() noexcept {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return time_point(std::chrono::seconds(ts.tv_sec) + std::chrono::nanoseconds(ts.tv_nsec));
}

// ---- transcript -----------------------------------------------------------

std::vector<wire::MessageType> Transcript::types() const {
  std::vector<wire::MessageType> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.type);
  return out;
}

std::string Transcript::to_jsonl() const {
  std::string out;
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["seq"] = e.seq;
    j["from"] = e.from;
    j["to"] = e.to;
    j["type"] = wire::to_string(e.type);
    j["payload"] = wire::to_hex(e.payload);
    out += j.dump();
    out += '\n';
  }
  return out;
}

// ---- network --------------------------------------------------------------

void SimNetwork::attach(protocol::Actor& actor) { actors_[actor.name()] = &actor; }

void SimNetwork::set_phase(Phase phase) {
  const auto now = Clock::now();
  phase_time_[phase_] += now - phase_start_;
  phase_start_ = now;
  phase_ = phase;
}

void SimNetwork::finish() { set_phase(phase_); }

void SimNetwork::enqueue(const std::string& from, const std::string& to, wire::Bytes payload) {
  if (payload.empty()) throw Error(ErrorCode::ProtocolViolation, "empty payload from " + from);
  TranscriptEntry entry;
  entry.seq = ++clock_;
  entry.timestamp = entry.seq;
  entry.from = from;
  entry.to = to;
  entry.type = static_cast<wire::MessageType>(payload[0]);
  entry.payload = payload;
  transcript_.entries.push_back(std::move(entry));
  queue_.push_back(protocol::Envelope{from, to, std::move(payload)});
}

void SimNetwork::send(const std::string& from, const std::string& to, const wire::Message& message) {
  enqueue(from, to, wire::encode(message));
}

void SimNetwork::send_raw(const std::string& from, const std::string& to, wire::Bytes payload) {
  enqueue(from, to, std::move(payload));
}

void SimNetwork::broadcast(const std::string& from, const wire::Message& message) {
  enqueue(from, "*", wire::encode(message));
}

void SimNetwork::deliver(const protocol::Envelope& envelope) {
  auto run = [&](protocol::Actor& actor) {
    const auto start = Clock::now();
    actor.on_message(envelope, *this);
    handler_time_[{actor.name(), phase_}] += Clock::now() - start;
  };
  if (envelope.to == "*") {
    for (auto& [name, actor] : actors_) {
      if (name != envelope.from) run(*actor);
    }
    return;
  }
  const auto it = actors_.find(envelope.to);
  if (it == actors_.end()) throw Error(ErrorCode::ProtocolViolation, "no actor named " + envelope.to);
  run(*it->second);
}

protocol::Envelope SimNetwork::await(const std::string& recipient) {
  while (!queue_.empty()) {
    protocol::Envelope next = std::move(queue_.front());
    queue_.pop_front();
    if (next.to == recipient) return next;
    deliver(next);
  }
  throw Error(ErrorCode::ProtocolViolation, recipient + " is waiting for a reply that never comes");
}

void SimNetwork::run_until_idle() {
  while (!queue_.empty()) {
    protocol::Envelope next = std::move(queue_.front());
    queue_.pop_front();
    deliver(next);
  }
}

// ---- runs -----------------------------------------------------------------

std::vector<std::uint64_t> session_ids_for(std::uint64_t seed, std::size_t bidders) {
  RandomSource rng = RandomSource(seed).fork("session-ids");
  std::vector<std::uint64_t> ids;
  std::set<std::uint64_t> seen;
  while (ids.size() < bidders) {
    const std::uint64_t id = rng.next_u64();
    if (seen.insert(id).second) ids.push_back(id);
  }
  return ids;
}

std::optional<std::size_t> RunResult::index_of(std::uint64_t session_id) const {
  const auto it = std::find(session_ids.begin(), session_ids.end(), session_id);
  if (it == session_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - session_ids.begin());
}

namespace {

double seconds(std::chrono::nanoseconds ns) { return std::chrono::duration<double>(ns).count(); }

void fill_times(RunResult& r, const SimNetwork& net, const std::vector<std::string>& bidder_names) {
  auto handler = [&](const std::string& name, Phase phase) {
    const auto it = net.handler_time().find({name, phase});
    return it == net.handler_time().end() ? std::chrono::nanoseconds{0} : it->second;
  };
  auto phase_wall = [&](Phase phase) {
    const auto it = net.phase_time().find(phase);
    return it == net.phase_time().end() ? std::chrono::nanoseconds{0} : it->second;
  };
  for (Phase phase : {Phase::WinnerDetermination, Phase::PaymentDetermination}) {
    std::chrono::nanoseconds others{0};
    std::chrono::nanoseconds bidders{0};
    for (const auto& name : bidder_names) bidders += handler(name, phase);
    others = bidders + handler(protocol::kSignerName, phase);
    const double auctioneer = seconds(phase_wall(phase) - others);
    const double bidder_mean = bidder_names.empty() ? 0.0 : seconds(bidders) / static_cast<double>(bidder_names.size());
    if (phase == Phase::WinnerDetermination) {
      r.times.auctioneer_winner_determination = auctioneer;
      r.times.bidder_winner_determination = bidder_mean;
    } else {
      r.times.auctioneer_payment = auctioneer;
      r.times.bidder_payment = bidder_mean;
    }
  }
}

}  // namespace

RunResult run_auction(const AuctionInstance& instance, const protocol::ProtocolConfig& config, std::uint64_t seed,
                      const FaultPlan& faults) {
  RunResult r;
  const std::size_t n = instance.bidders.size();
  r.session_ids = session_ids_for(seed, n);
  SimNetwork net;
  try {
    config.validate(instance);
    const RandomSource root(seed);
    RandomSource key_rng = root.fork("paillier");
    paillier::KeyPair keys = paillier::keygen(config.paillier_bits, key_rng);
    RandomSource group_rng = root.fork("signer-group");
    const nr::GroupParams group =
        config.nr_group ? *config.nr_group : nr::GroupParams::generate(config.nr_p_bits, config.nr_q_bits, group_rng);
    RandomSource signer_key_rng = root.fork("signer-key");
    protocol::SignerActor signer(group, nr::KeyPair::generate(group, signer_key_rng), root.fork("signer"));
    r.signer = signer.public_key();
    r.norm_domain_max = config.domain_max(instance);

    protocol::RandomizerLog log;
    std::vector<std::unique_ptr<protocol::BidderActor>> bidders;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
      protocol::BidderFault fault = protocol::BidderFault::None;
      if (faults.bidder && faults.bidder->first == i) fault = faults.bidder->second;
      bidders.push_back(std::make_unique<protocol::BidderActor>(
          r.session_ids[i], instance.bidders[i], instance.goods, config, r.norm_domain_max,
          root.fork("bidder/" + std::to_string(i)), fault, &log));
      names.push_back(bidders.back()->name());
      net.attach(*bidders.back());
    }
    net.attach(signer);

    protocol::AuctioneerFaultPlan plan;
    plan.kind = faults.auctioneer;
    plan.delta = faults.delta;
    if (faults.auctioneer != protocol::AuctioneerFault::None) plan.target = r.session_ids.at(faults.auctioneer_target);
    protocol::Auctioneer auctioneer(config, instance.goods, r.session_ids, std::move(keys), r.signer,
                                    r.norm_domain_max, root.fork("auctioneer"), plan);

    auctioneer.publish(net);
    net.run_until_idle();
    net.set_phase(Phase::BlindSigning);
    signer.open_sessions(net, names);
    net.run_until_idle();
    for (const auto& b : bidders) {
      if (!b->signed_up()) throw Error(ErrorCode::ProtocolViolation, b->name() + " did not finish blind signing");
    }

    const protocol::AuctioneerResult result = auctioneer.run(net);
    net.run_until_idle();
    net.finish();

    auto index = [&](std::uint64_t sid) { return *r.index_of(sid); };
    r.outcome.allocation = result.allocation;
    for (std::uint64_t sid : result.winners) r.outcome.winners.push_back(index(sid));
    for (const auto& [sid, price] : result.payments) r.outcome.payments[index(sid)] = price;
    for (const auto& [sid, candidate] : result.candidates) {
      r.outcome.candidates[index(sid)] = candidate ? Candidate(index(*candidate)) : std::nullopt;
    }
    for (const auto& [sid, verdict] : result.verdicts) r.verdicts[index(sid)] = verdict;
    for (const auto& [sid, notice] : result.notices) r.notices[index(sid)] = notice;
    for (const auto& f : result.flags) r.flagged.emplace_back(index(f.session_id), f.code);
    r.probes = result.probes;
    r.probe_values = result.nonzero_probe_values;
    r.randomizers = std::move(log.values);
    fill_times(r, net, names);
    r.ok = true;
  } catch (const Error& e) {
    r.error = std::string(to_string(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.transcript = net.take_transcript();
  return r;
}

// ---- audit ----------------------------------------------------------------

std::string AuditReport::to_json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass;
  j["note"] = note;
  j["bidders"] = nlohmann::ordered_json::object();
  for (const auto& [name, ok] : bidder_verdicts) j["bidders"][name] = ok ? "pass" : "fail";
  j["violations"] = nlohmann::ordered_json::array();
  for (const auto& v : violations) {
    j["violations"].push_back({{"seq", v.seq}, {"rule", v.rule}, {"bidder", v.bidder}, {"detail", v.detail}});
  }
  return j.dump(2);
}

namespace {

bool contains_bytes(const wire::Bytes& haystack, const wire::Bytes& needle) {
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

std::set<BigUint> public_values(const Transcript& transcript) {
  std::set<BigUint> values;
  for (const auto& e : transcript.entries) {
    try {
      const wire::Message m = wire::decode(e.payload, wire::Trailing::Ignore);
      if (const auto* d = std::get_if<wire::DeclareWinner>(&m)) values.insert(d->psi_star);
      if (const auto* w = std::get_if<wire::WinnerReveal>(&m)) {
        values.insert(w->psi);
        values.insert(w->bundle);
      }
      if (const auto* c = std::get_if<wire::CandidateReveal>(&m)) values.insert(c->psi);
      if (const auto* p = std::get_if<wire::PaymentNotice>(&m)) values.insert(p->price);
    } catch (const Error&) {
      // unparseable payloads reveal nothing legitimately
    }
  }
  return values;
}

enum class Standing { Loser, Candidate, Winner, Flagged };

}  // namespace

AuditReport audit_transcript(const RunResult& run, const AuctionInstance& instance, unsigned exponent) {
  AuditReport report;
  report.note = "structural audit: byte-substring search for canonical encodings; weaker than semantic security";
  const std::size_t n = std::min(instance.bidders.size(), run.session_ids.size());

  std::map<std::string, std::size_t> by_name;
  std::vector<Standing> standing(n, Standing::Loser);
  for (std::size_t i = 0; i < n; ++i) {
    by_name[protocol::bidder_name(run.session_ids[i])] = i;
    report.bidder_verdicts[protocol::bidder_name(run.session_ids[i])] = true;
  }
  for (const auto& [w, c] : run.outcome.candidates) {
    if (c && *c < n) standing[*c] = Standing::Candidate;
  }
  for (const auto& [i, code] : run.flagged) {
    if (i < n) standing[i] = Standing::Flagged;
  }
  for (std::size_t w : run.outcome.winners) {
    if (w < n) standing[w] = Standing::Winner;
  }

  auto violate = [&](std::uint64_t seq, int rule, std::size_t bidder, std::string detail) {
    const std::string name = protocol::bidder_name(run.session_ids[bidder]);
    report.violations.push_back({seq, rule, name, std::move(detail)});
    report.bidder_verdicts[name] = false;
  };

  // Rule 1: loser secrets never appear in any payload.
  const std::set<BigUint> revealed = public_values(run.transcript);
  for (std::size_t i = 0; i < n; ++i) {
    if (standing[i] == Standing::Winner) continue;
    const auto& b = instance.bidders[i];
    const std::vector<std::pair<std::string, BigUint>> secrets = {
        {"norm", norm(b.bid, b.bundle.size(), exponent).raw},
        {"bid", encode(b.bid, exponent).raw},
        {"bundle", b.bundle.to_integer()},
    };
    for (const auto& [label, value] : secrets) {
      if (revealed.count(value)) continue;
      const wire::Bytes needle = wire::canonical_integer(value);
      for (const auto& e : run.transcript.entries) {
        if (contains_bytes(e.payload, needle)) {
          violate(e.seq, 1, i, label + " " + value.get_str() + " appears in " + wire::to_string(e.type) + " from " +
                                   e.from);
        }
      }
    }
  }

  // Rules 2-4: what each bidder may send, and that it parses exactly.
  using T = wire::MessageType;
  const std::set<T> loser_types = {T::BlindChallenge, T::ProbeResponse, T::Decline};
  for (const auto& e : run.transcript.entries) {
    const auto it = by_name.find(e.from);
    if (it == by_name.end()) continue;
    const std::size_t i = it->second;
    const Standing s = standing[i];
    const int rule = s == Standing::Winner ? 3 : (s == Standing::Candidate ? 4 : 2);
    try {
      wire::decode(e.payload, wire::Trailing::Reject);
    } catch (const Error& err) {
      violate(e.seq, rule, i, wire::to_string(e.type) + " payload is not exactly its schema: " + err.what());
      continue;
    }
    bool allowed = loser_types.count(e.type) > 0;
    if (s == Standing::Candidate && e.type == T::CandidateReveal) allowed = true;
    if (s == Standing::Winner && (e.type == T::WinnerReveal || e.type == T::VerifyVerdict)) allowed = true;
    if (s == Standing::Flagged && (e.type == T::WinnerReveal || e.type == T::CandidateReveal)) allowed = true;
    if (!allowed) violate(e.seq, rule, i, wire::to_string(e.type) + " is not permitted for this bidder");
  }

  report.pass = report.violations.empty();
  return report;
}

// ---- oracle comparison ----------------------------------------------------

std::vector<std::string> outcome_diff(const AuctionOutcome& oracle, const AuctionOutcome& protocol) {
  std::vector<std::string> diff;
  auto list = [](const std::vector<std::size_t>& v) {
    std::string s = "[";
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
    return s + "]";
  };
  auto cand = [](const Candidate& c) { return c ? std::to_string(*c) : std::string("reserve"); };
  if (oracle.winners != protocol.winners) {
    diff.push_back("winners: oracle " + list(oracle.winners) + ", protocol " + list(protocol.winners));
  }
  if (!(oracle.allocation == protocol.allocation)) {
    diff.push_back("allocation: oracle " + oracle.allocation.to_integer().get_str() + ", protocol " +
                   protocol.allocation.to_integer().get_str());
  }
  std::set<std::size_t> keys;
  for (const auto& [k, v] : oracle.payments) keys.insert(k);
  for (const auto& [k, v] : protocol.payments) keys.insert(k);
  for (std::size_t k : keys) {
    const auto a = oracle.payments.find(k);
    const auto b = protocol.payments.find(k);
    const std::string sa = a == oracle.payments.end() ? "none" : a->second.raw.get_str();
    const std::string sb = b == protocol.payments.end() ? "none" : b->second.raw.get_str();
    if (sa != sb) diff.push_back("payment of " + std::to_string(k) + ": oracle " + sa + ", protocol " + sb);
    const auto ca = oracle.candidates.find(k);
    const auto cb = protocol.candidates.find(k);
    const std::string ta = ca == oracle.candidates.end() ? "none" : cand(ca->second);
    const std::string tb = cb == protocol.candidates.end() ? "none" : cand(cb->second);
    if (ta != tb) diff.push_back("candidate of " + std::to_string(k) + ": oracle " + ta + ", protocol " + tb);
  }
  return diff;
}

Comparison compare_with_oracle(const AuctionInstance& instance, const protocol::ProtocolConfig& config,
                               std::uint64_t seed, std::optional<CandidateMode> oracle_mode) {
  Comparison c;
  c.run = run_auction(instance, config, seed);
  MechanismConfig mc = config.mechanism(c.run.session_ids);
  if (oracle_mode) mc.candidate_mode = *oracle_mode;
  c.oracle = run_mechanism(instance, mc);
  if (!c.run.ok) {
    c.diff.push_back("protocol run failed: " + c.run.error);
  } else {
    c.diff = outcome_diff(c.oracle, c.run.outcome);
    for (const auto& [w, ok] : c.run.verdicts) {
      if (!ok) c.diff.push_back("winner " + std::to_string(w) + " rejected its payment notice");
    }
    for (const auto& [i, code] : c.run.flagged) {
      c.diff.push_back("bidder " + std::to_string(i) + " flagged: " + std::string(to_string(code)));
    }
  }
  c.audit = audit_transcript(c.run, instance, config.exponent);
  c.equivalent = c.diff.empty();
  return c;
}

// ---- fault drills ---------------------------------------------------------

std::string to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::InflatePayment: return "inflate-payment";
    case FaultKind::ForgeSignature: return "forge-signature";
    case FaultKind::FakeReveal: return "fake-reveal";
    case FaultKind::LeakPlaintext: return "leak-plaintext";
    case FaultKind::SignatureSubstitution: return "signature-substitution";
  }
  return "unknown";
}

FaultKind parse_fault_kind(const std::string& text) {
  for (FaultKind k : all_fault_kinds()) {
    if (to_string(k) == text) return k;
  }
  throw Error(ErrorCode::ParseError, "unknown fault kind '" + text + "'");
}

std::vector<FaultKind> all_fault_kinds() {
  return {FaultKind::InflatePayment, FaultKind::ForgeSignature, FaultKind::FakeReveal, FaultKind::LeakPlaintext,
          FaultKind::SignatureSubstitution};
}

namespace {

bool flagged_with(const RunResult& run, std::size_t bidder, ErrorCode code) {
  return std::any_of(run.flagged.begin(), run.flagged.end(),
                     [&](const auto& f) { return f.first == bidder && f.second == code; });
}

/// Oracle outcome with `removed` taken out, re-indexed to the full instance.
AuctionOutcome oracle_without(const AuctionInstance& instance, const MechanismConfig& config, std::size_t removed) {
  AuctionInstance reduced;
  reduced.goods = instance.goods;
  MechanismConfig mc = config;
  mc.tie_break.clear();
  std::vector<std::size_t> back;
  for (std::size_t i = 0; i < instance.bidders.size(); ++i) {
    if (i == removed) continue;
    reduced.bidders.push_back(instance.bidders[i]);
    if (!config.tie_break.empty()) mc.tie_break.push_back(config.tie_break[i]);
    back.push_back(i);
  }
  const AuctionOutcome inner = run_mechanism(reduced, mc);
  AuctionOutcome out;
  out.allocation = inner.allocation;
  for (std::size_t w : inner.winners) out.winners.push_back(back[w]);
  for (const auto& [w, p] : inner.payments) out.payments[back[w]] = p;
  for (const auto& [w, c] : inner.candidates) out.candidates[back[w]] = c ? Candidate(back[*c]) : std::nullopt;
  return out;
}

}  // namespace

FaultDrill inject_fault(FaultKind kind, const AuctionInstance& instance, const protocol::ProtocolConfig& config,
                        std::uint64_t seed) {
  FaultDrill drill;
  drill.kind = kind;
  const MechanismConfig mc = config.mechanism(session_ids_for(seed, instance.bidders.size()));
  const AuctionOutcome honest = run_mechanism(instance, mc);
  if (honest.winners.empty()) {
    drill.applicable = false;
    drill.detail = "no winners in this instance";
    return drill;
  }
  const std::size_t first_winner = honest.winners.front();
  FaultPlan plan;

  switch (kind) {
    case FaultKind::InflatePayment: {
      plan.auctioneer = protocol::AuctioneerFault::InflatePayment;
      plan.auctioneer_target = first_winner;
      plan.delta = 1;
      drill.run = run_auction(instance, config, seed, plan);
      const auto it = drill.run.verdicts.find(first_winner);
      drill.detected = drill.run.ok && it != drill.run.verdicts.end() && !it->second;
      drill.defense = "verify_payment reject";
      drill.detail = "bidder " + std::to_string(first_winner) + " charged one ulp above the signed payment";
      break;
    }
    case FaultKind::ForgeSignature:
    case FaultKind::FakeReveal: {
      const bool forge = kind == FaultKind::ForgeSignature;
      plan.bidder = {first_winner, forge ? protocol::BidderFault::ForgeSignature : protocol::BidderFault::FakeReveal};
      drill.run = run_auction(instance, config, seed, plan);
      const ErrorCode expected = forge ? ErrorCode::SignatureInvalid : ErrorCode::NormMismatch;
      const auto diff = outcome_diff(oracle_without(instance, mc, first_winner), drill.run.outcome);
      drill.detected = drill.run.ok && flagged_with(drill.run, first_winner, expected);
      drill.defense = std::string(to_string(expected)) + " at confirmation";
      drill.detail = "bidder " + std::to_string(first_winner) + " flagged; remaining auction " +
                     (diff.empty() ? "matches the oracle without it" : "differs: " + diff.front());
      if (!diff.empty()) drill.detected = false;
      break;
    }
    case FaultKind::LeakPlaintext: {
      std::size_t leaker = 0;
      for (std::size_t i = 0; i < instance.bidders.size(); ++i) {
        if (!honest.is_winner(i)) {
          leaker = i;
          break;
        }
      }
      plan.bidder = {leaker, protocol::BidderFault::LeakPlaintext};
      drill.run = run_auction(instance, config, seed, plan);
      const AuditReport audit = audit_transcript(drill.run, instance, config.exponent);
      drill.detected = !audit.pass;
      drill.defense = audit.pass ? "audit violation" : "audit violation at seq " + std::to_string(audit.violations.front().seq);
      drill.detail = audit.pass ? "audit passed"
                                : std::to_string(audit.violations.size()) + " violations, first under rule " +
                                      std::to_string(audit.violations.front().rule);
      break;
    }
    case FaultKind::SignatureSubstitution: {
      // Needs a winner whose honest price is set by a norm below some winner's.
      const auto norms_all = norms(instance, config.exponent);
      BigUint top = 0;
      for (std::size_t w : honest.winners) top = std::max(top, norms_all[w].raw);
      std::optional<std::size_t> target;
      for (std::size_t w : honest.winners) {
        const Candidate c = honest.candidates.at(w);
        const BigUint priced_by = c ? norms_all[*c].raw : BigUint(0);
        if (top > priced_by) {
          target = w;
          break;
        }
      }
      if (!target) {
        drill.applicable = false;
        drill.detail = "no winner is priced below the top winning norm";
        return drill;
      }
      plan.auctioneer = protocol::AuctioneerFault::SubstituteSignature;
      plan.auctioneer_target = *target;
      drill.run = run_auction(instance, config, seed, plan);
      const auto it = drill.run.verdicts.find(*target);
      const bool accepted = drill.run.ok && it != drill.run.verdicts.end() && it->second;
      const bool changed = drill.run.ok && drill.run.outcome.payments.count(*target) &&
                           drill.run.outcome.payments.at(*target).raw != honest.payments.at(*target).raw;
      drill.expected_pass_through = accepted && changed;
      drill.detected = !accepted;
      drill.defense = "none (accepted by design)";
      drill.detail = "bidder " + std::to_string(*target) + " charged " +
                     (changed ? drill.run.outcome.payments.at(*target).to_string() : std::string("?")) +
                     " instead of " + honest.payments.at(*target).to_string();
      break;
    }
  }
  if (!drill.run.ok) drill.detail += "; run error: " + drill.run.error;
  return drill;
}

}  // namespace pca::harness
