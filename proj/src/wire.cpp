#include "pca/wire.hpp"

#include <type_traits>

#include "pca/error.hpp"

namespace pca::wire {

namespace {

constexpr std::uint8_t kIntegerMarker = 'I';
constexpr std::size_t kMaxIntegerBytes = 1 << 16;
constexpr std::size_t kMaxListLength = 1 << 16;

class Writer {
public:
  void byte(std::uint8_t b) { out_.push_back(b); }
  void u32(std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void u64(std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  }
  void flag(bool b) { byte(b ? 1 : 0); }
  void integer(const BigUint& v) { append_integer(out_, v); }
  void signature(const nr::Signature& s) {
    integer(s.r);
    integer(s.s);
  }
  Bytes take() { return std::move(out_); }

private:
  Bytes out_;
};

class Reader {
public:
  explicit Reader(const Bytes& in) : in_(in) {}

  std::uint8_t byte() {
    need(1);
    return in_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | in_[pos_++];
    return v;
  }
  bool flag() {
    const std::uint8_t b = byte();
    if (b > 1) fail("flag byte must be 0 or 1");
    return b == 1;
  }
  BigUint integer() {
    if (byte() != kIntegerMarker) fail("missing integer marker");
    const std::uint32_t len = u32();
    if (len == 0 || len > kMaxIntegerBytes) fail("integer length out of range");
    need(len);
    const Bytes magnitude(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                          in_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
    pos_ += len;
    if (len > 1 && magnitude[0] == 0) fail("integer has a leading zero byte");
    return from_bytes(magnitude);
  }
  nr::Signature signature() {
    nr::Signature s;
    s.r = integer();
    s.s = integer();
    return s;
  }
  template <typename E>
  E enumeration(std::uint8_t max) {
    const std::uint8_t b = byte();
    if (b > max) fail("enumeration value out of range");
    return static_cast<E>(b);
  }
  bool done() const { return pos_ == in_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::DecodeError, what + " at byte " + std::to_string(pos_));
  }

private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) fail("truncated message");
  }
  const Bytes& in_;
  std::size_t pos_ = 0;
};

void write_fields(Writer& w, const PublishKeys& m) {
  for (const BigUint* v : {&m.n, &m.g, &m.nr_p, &m.nr_q, &m.nr_g, &m.nr_y}) w.integer(*v);
}
void write_fields(Writer& w, const BlindCommit& m) {
  w.byte(static_cast<std::uint8_t>(m.purpose));
  w.integer(m.r_hat);
}
void write_fields(Writer& w, const BlindChallenge& m) {
  w.byte(static_cast<std::uint8_t>(m.purpose));
  w.integer(m.m_hat);
}
void write_fields(Writer& w, const BlindResponse& m) {
  w.byte(static_cast<std::uint8_t>(m.purpose));
  w.integer(m.s_hat);
}
void write_fields(Writer& w, const ProbeGuess& m) { w.integer(m.ct); }
void write_fields(Writer& w, const EncAlloc& m) {
  w.u32(static_cast<std::uint32_t>(m.cts.size()));
  for (const auto& c : m.cts) w.integer(c);
}
void write_fields(Writer& w, const ProbeResponse& m) { w.integer(m.ct); }
void write_fields(Writer& w, const DeclareWinner& m) {
  w.u64(m.session_id);
  w.integer(m.psi_star);
  w.byte(static_cast<std::uint8_t>(m.role));
}
void write_fields(Writer& w, const WinnerReveal& m) {
  w.integer(m.psi);
  w.integer(m.bundle);
  w.signature(m.sig_psi);
  w.signature(m.sig_bundle);
}
void write_fields(Writer& w, const CandidateReveal& m) {
  w.integer(m.psi);
  w.signature(m.sig_psi);
}
void write_fields(Writer&, const Decline&) {}
void write_fields(Writer& w, const PaymentNotice& m) {
  if (m.reserve == m.sig_psi.has_value()) {
    throw Error(ErrorCode::ProtocolViolation, "payment notice needs exactly one of reserve flag or signature");
  }
  w.integer(m.price);
  w.flag(m.reserve);
  if (m.sig_psi) w.signature(*m.sig_psi);
}
void write_fields(Writer& w, const VerifyVerdict& m) { w.flag(m.accept); }

Message read_message(Reader& r) {
  const auto type = static_cast<MessageType>(r.byte());
  switch (type) {
    case MessageType::PublishKeys: {
      PublishKeys m;
      for (BigUint* v : {&m.n, &m.g, &m.nr_p, &m.nr_q, &m.nr_g, &m.nr_y}) *v = r.integer();
      return m;
    }
    case MessageType::BlindCommit: {
      BlindCommit m;
      m.purpose = r.enumeration<SignPurpose>(1);
      m.r_hat = r.integer();
      return m;
    }
    case MessageType::BlindChallenge: {
      BlindChallenge m;
      m.purpose = r.enumeration<SignPurpose>(1);
      m.m_hat = r.integer();
      return m;
    }
    case MessageType::BlindResponse: {
      BlindResponse m;
      m.purpose = r.enumeration<SignPurpose>(1);
      m.s_hat = r.integer();
      return m;
    }
    case MessageType::ProbeGuess:
      return ProbeGuess{r.integer()};
    case MessageType::EncAlloc: {
      EncAlloc m;
      const std::uint32_t count = r.u32();
      if (count > kMaxListLength) r.fail("ciphertext list too long");
      for (std::uint32_t i = 0; i < count; ++i) m.cts.push_back(r.integer());
      return m;
    }
    case MessageType::ProbeResponse:
      return ProbeResponse{r.integer()};
    case MessageType::DeclareWinner: {
      DeclareWinner m;
      m.session_id = r.u64();
      m.psi_star = r.integer();
      m.role = r.enumeration<Role>(1);
      return m;
    }
    case MessageType::WinnerReveal: {
      WinnerReveal m;
      m.psi = r.integer();
      m.bundle = r.integer();
      m.sig_psi = r.signature();
      m.sig_bundle = r.signature();
      return m;
    }
    case MessageType::CandidateReveal: {
      CandidateReveal m;
      m.psi = r.integer();
      m.sig_psi = r.signature();
      return m;
    }
    case MessageType::Decline:
      return Decline{};
    case MessageType::PaymentNotice: {
      PaymentNotice m;
      m.price = r.integer();
      m.reserve = r.flag();
      if (!m.reserve) m.sig_psi = r.signature();
      return m;
    }
    case MessageType::VerifyVerdict:
      return VerifyVerdict{r.flag()};
  }
  r.fail("unknown message type");
}

}  // namespace

std::string to_string(MessageType type) {
  switch (type) {
    case MessageType::PublishKeys: return "PublishKeys";
    case MessageType::BlindCommit: return "BlindCommit";
    case MessageType::BlindChallenge: return "BlindChallenge";
    case MessageType::BlindResponse: return "BlindResponse";
    case MessageType::ProbeGuess: return "ProbeGuess";
    case MessageType::EncAlloc: return "EncAlloc";
    case MessageType::ProbeResponse: return "ProbeResponse";
    case MessageType::DeclareWinner: return "DeclareWinner";
    case MessageType::WinnerReveal: return "WinnerReveal";
    case MessageType::CandidateReveal: return "CandidateReveal";
    case MessageType::Decline: return "Decline";
    case MessageType::PaymentNotice: return "PaymentNotice";
    case MessageType::VerifyVerdict: return "VerifyVerdict";
  }
  return "Unknown";
}

MessageType type_of(const Message& message) {
  return static_cast<MessageType>(message.index() + 1);
}

Bytes encode(const Message& message) {
  Writer w;
  w.byte(static_cast<std::uint8_t>(type_of(message)));
  std::visit([&w](const auto& m) { write_fields(w, m); }, message);
  return w.take();
}

Message decode(const Bytes& bytes, Trailing trailing) {
  Reader r(bytes);
  Message m = read_message(r);
  if (trailing == Trailing::Reject && !r.done()) r.fail("trailing bytes after message");
  return m;
}

Bytes canonical_integer(const BigUint& value) {
  Bytes out;
  append_integer(out, value);
  return out;
}

void append_integer(Bytes& out, const BigUint& value) {
  const Bytes magnitude = to_bytes(value);
  out.push_back(kIntegerMarker);
  const auto len = static_cast<std::uint32_t>(magnitude.size());
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(len >> shift));
  out.insert(out.end(), magnitude.begin(), magnitude.end());
}

std::string to_hex(const Bytes& bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

}  // namespace pca::wire
