#include "babel/wire.hpp"

#include <algorithm>
#include <sstream>

namespace babel::wire {

namespace {

enum Ae : std::uint8_t { kAeWildcard = 0, kAeIPv4 = 1, kAeIPv6 = 2, kAeLinkLocal = 3 };

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

std::uint16_t get16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

std::uint8_t address_ae(const Address& a) {
  switch (a.family()) {
    case Family::IPv4: return kAeIPv4;
    case Family::IPv6: return kAeIPv6;
    case Family::IPv6LinkLocal: return kAeLinkLocal;
  }
  return kAeIPv6;
}

std::size_t address_wire_size(std::uint8_t ae) {
  switch (ae) {
    case kAeIPv4: return 4;
    case kAeIPv6: return 16;
    case kAeLinkLocal: return 8;
    default: return 0;
  }
}

void put_address(std::vector<std::uint8_t>& out, const Address& a) {
  const auto& raw = a.raw();
  switch (a.family()) {
    case Family::IPv4: out.insert(out.end(), raw.begin(), raw.begin() + 4); break;
    case Family::IPv6: out.insert(out.end(), raw.begin(), raw.end()); break;
    case Family::IPv6LinkLocal: out.insert(out.end(), raw.begin() + 8, raw.end()); break;
  }
}

std::optional<Address> get_address(std::uint8_t ae, std::span<const std::uint8_t> b) {
  if (b.size() < address_wire_size(ae)) return std::nullopt;
  switch (ae) {
    case kAeIPv4: return Address::v4({b[0], b[1], b[2], b[3]});
    case kAeIPv6: {
      std::array<std::uint8_t, 16> o{};
      std::copy_n(b.begin(), 16, o.begin());
      return Address::v6(o);
    }
    case kAeLinkLocal: {
      std::array<std::uint8_t, 16> o{};
      o[0] = 0xfe;
      o[1] = 0x80;
      std::copy_n(b.begin(), 8, o.begin() + 8);
      return Address::v6(o);
    }
    default: return std::nullopt;
  }
}

std::optional<Prefix> get_prefix(std::uint8_t ae, unsigned plen, std::size_t omitted,
                                 std::span<const std::uint8_t> b) {
  if (ae != kAeIPv4 && ae != kAeIPv6) return std::nullopt;
  const unsigned width = ae == kAeIPv4 ? 32 : 128;
  if (plen > width) return std::nullopt;
  const std::size_t octets = (plen + 7) / 8;
  if (omitted > octets || b.size() < octets - omitted) return std::nullopt;
  std::array<std::uint8_t, 16> o{};
  std::copy_n(b.begin(), octets - omitted, o.begin() + omitted);
  const Address addr = ae == kAeIPv4 ? Address::v4({o[0], o[1], o[2], o[3]}) : Address::v6_global(o);
  return Prefix::make(addr, plen);
}

std::uint8_t prefix_ae(const Prefix& p) { return p.is_v4() ? kAeIPv4 : kAeIPv6; }

void put_prefix(std::vector<std::uint8_t>& out, const Prefix& p, std::size_t omitted) {
  const auto& raw = p.address().raw();
  out.insert(out.end(), raw.begin() + static_cast<std::ptrdiff_t>(omitted),
             raw.begin() + static_cast<std::ptrdiff_t>(p.octet_count()));
}

void check_router_id(const RouterId& id) {
  if (id.is_reserved()) throw EncodeError("reserved router-id " + id.to_string());
}

struct BodyWriter {
  std::vector<std::uint8_t>& out;

  void operator()(const PadI&) const { out.push_back(0); }
  void operator()(const PadN& t) const {
    header(TlvKind::PadN, t.len);
    out.insert(out.end(), t.len, 0);
  }
  void operator()(const AckReq& t) const {
    header(TlvKind::AckReq, 6);
    put16(out, 0);
    put16(out, t.nonce);
    put16(out, t.interval);
  }
  void operator()(const Ack& t) const {
    header(TlvKind::Ack, 2);
    put16(out, t.nonce);
  }
  void operator()(const Hello& t) const {
    header(TlvKind::Hello, 6);
    put16(out, 0);
    put16(out, t.seqno);
    put16(out, t.interval);
  }
  void operator()(const Ihu& t) const {
    const std::uint8_t ae = t.address ? address_ae(*t.address) : std::uint8_t{kAeWildcard};
    header(TlvKind::Ihu, 6 + address_wire_size(ae));
    out.push_back(ae);
    out.push_back(0);
    put16(out, t.rxcost);
    put16(out, t.interval);
    if (t.address) put_address(out, *t.address);
  }
  void operator()(const RouterIdTlv& t) const {
    check_router_id(t.router_id);
    header(TlvKind::RouterId, 10);
    put16(out, 0);
    out.insert(out.end(), t.router_id.octets().begin(), t.router_id.octets().end());
  }
  void operator()(const NextHop& t) const {
    const std::uint8_t ae = address_ae(t.address);
    header(TlvKind::NextHop, 2 + address_wire_size(ae));
    out.push_back(ae);
    out.push_back(0);
    put_address(out, t.address);
  }
  void operator()(const Update& t) const {
    if (t.omitted > t.prefix.octet_count()) throw EncodeError("omitted exceeds prefix length");
    header(TlvKind::Update, 10 + t.prefix.octet_count() - t.omitted);
    out.push_back(prefix_ae(t.prefix));
    out.push_back(t.flags);
    out.push_back(t.prefix.plen());
    out.push_back(t.omitted);
    put16(out, t.interval);
    put16(out, t.seqno);
    put16(out, t.metric);
    put_prefix(out, t.prefix, t.omitted);
  }
  void operator()(const RouteReq& t) const {
    if (!t.prefix) {
      header(TlvKind::RouteReq, 2);
      out.push_back(kAeWildcard);
      out.push_back(0);
      return;
    }
    header(TlvKind::RouteReq, 2 + t.prefix->octet_count());
    out.push_back(prefix_ae(*t.prefix));
    out.push_back(t.prefix->plen());
    put_prefix(out, *t.prefix, 0);
  }
  void operator()(const SeqNoReq& t) const {
    if (t.hop_count == 0) throw EncodeError("SeqNoReq hop count must be at least 1");
    check_router_id(t.router_id);
    header(TlvKind::SeqNoReq, 14 + t.prefix.octet_count());
    out.push_back(prefix_ae(t.prefix));
    out.push_back(t.prefix.plen());
    put16(out, t.seqno);
    out.push_back(t.hop_count);
    out.push_back(0);
    out.insert(out.end(), t.router_id.octets().begin(), t.router_id.octets().end());
    put_prefix(out, t.prefix, 0);
  }

  void header(TlvKind kind, std::size_t len) const {
    out.push_back(static_cast<std::uint8_t>(kind));
    out.push_back(static_cast<std::uint8_t>(len));
  }
};

// Parses one well-framed TLV body. nullopt means the record is dropped.
std::optional<Tlv> parse_body(std::uint8_t type, std::span<const std::uint8_t> b) {
  switch (static_cast<TlvKind>(type)) {
    case TlvKind::PadN:
      return PadN{static_cast<std::uint8_t>(b.size())};
    case TlvKind::AckReq:
      if (b.size() < 6) return std::nullopt;
      return AckReq{get16(b, 2), get16(b, 4)};
    case TlvKind::Ack:
      if (b.size() < 2) return std::nullopt;
      return Ack{get16(b, 0)};
    case TlvKind::Hello:
      if (b.size() < 6) return std::nullopt;
      return Hello{get16(b, 2), get16(b, 4)};
    case TlvKind::Ihu: {
      if (b.size() < 6) return std::nullopt;
      Ihu ihu{std::nullopt, get16(b, 2), get16(b, 4)};
      if (b[0] != kAeWildcard) {
        ihu.address = get_address(b[0], b.subspan(6));
        if (!ihu.address) return std::nullopt;
      }
      return ihu;
    }
    case TlvKind::RouterId: {
      if (b.size() < 10) return std::nullopt;
      std::array<std::uint8_t, 8> id{};
      std::copy_n(b.begin() + 2, 8, id.begin());
      RouterId rid(id);
      if (rid.is_reserved()) return std::nullopt;
      return RouterIdTlv{rid};
    }
    case TlvKind::NextHop: {
      if (b.size() < 2) return std::nullopt;
      auto addr = get_address(b[0], b.subspan(2));
      if (!addr) return std::nullopt;
      return NextHop{*addr};
    }
    case TlvKind::Update: {
      if (b.size() < 10) return std::nullopt;
      auto prefix = get_prefix(b[0], b[2], b[3], b.subspan(10));
      if (!prefix) return std::nullopt;
      return Update{*prefix, b[3], b[1], get16(b, 4), get16(b, 6), get16(b, 8)};
    }
    case TlvKind::RouteReq: {
      if (b.size() < 2) return std::nullopt;
      if (b[0] == kAeWildcard) {
        if (b[1] != 0) return std::nullopt;
        return RouteReq{};
      }
      auto prefix = get_prefix(b[0], b[1], 0, b.subspan(2));
      if (!prefix) return std::nullopt;
      return RouteReq{*prefix};
    }
    case TlvKind::SeqNoReq: {
      if (b.size() < 14) return std::nullopt;
      auto prefix = get_prefix(b[0], b[1], 0, b.subspan(14));
      if (!prefix || b[4] == 0) return std::nullopt;
      std::array<std::uint8_t, 8> id{};
      std::copy_n(b.begin() + 6, 8, id.begin());
      RouterId rid(id);
      if (rid.is_reserved()) return std::nullopt;
      return SeqNoReq{*prefix, get16(b, 2), b[4], rid};
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

const char* kind_name(TlvKind kind) {
  switch (kind) {
    case TlvKind::PadI: return "PadI";
    case TlvKind::PadN: return "PadN";
    case TlvKind::AckReq: return "AckReq";
    case TlvKind::Ack: return "Ack";
    case TlvKind::Hello: return "Hello";
    case TlvKind::Ihu: return "IHU";
    case TlvKind::RouterId: return "RouterId";
    case TlvKind::NextHop: return "NextHop";
    case TlvKind::Update: return "Update";
    case TlvKind::RouteReq: return "RouteReq";
    case TlvKind::SeqNoReq: return "SeqNoReq";
  }
  return "?";
}

TlvKind kind_of(const Tlv& tlv) { return static_cast<TlvKind>(tlv.index()); }

std::string DecodeError::message() const {
  const char* what = "";
  switch (code) {
    case DecodeErrorCode::TruncatedHeader: what = "truncated header"; break;
    case DecodeErrorCode::BadMagic: what = "bad magic"; break;
    case DecodeErrorCode::BadVersion: what = "unsupported version"; break;
    case DecodeErrorCode::LengthMismatch: what = "body length exceeds datagram"; break;
    case DecodeErrorCode::TruncatedTlv: what = "truncated TLV"; break;
  }
  return std::string(what) + " at offset " + std::to_string(offset);
}

std::size_t encoded_size(const Tlv& tlv) {
  std::vector<std::uint8_t> scratch;
  scratch.reserve(32);
  std::visit(BodyWriter{scratch}, tlv);
  return scratch.size();
}

void encode_tlv(const Tlv& tlv, std::vector<std::uint8_t>& out) { std::visit(BodyWriter{out}, tlv); }

std::vector<std::uint8_t> encode_packet(const Packet& packet) {
  std::vector<std::uint8_t> out{kMagic, kVersion, 0, 0};
  for (const auto& tlv : packet.tlvs) encode_tlv(tlv, out);
  const std::size_t body = out.size() - kHeaderSize;
  if (body > kMaxBody) throw EncodeError("packet body of " + std::to_string(body) + " octets");
  out[2] = static_cast<std::uint8_t>(body >> 8);
  out[3] = static_cast<std::uint8_t>(body & 0xff);
  return out;
}

DecodeResult decode_packet(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) return DecodeError{DecodeErrorCode::TruncatedHeader, 0};
  if (bytes[0] != kMagic) return DecodeError{DecodeErrorCode::BadMagic, 0};
  if (bytes[1] != kVersion) return DecodeError{DecodeErrorCode::BadVersion, 1};
  const std::size_t body_len = get16(bytes, 2);
  if (kHeaderSize + body_len > bytes.size()) {
    return DecodeError{DecodeErrorCode::LengthMismatch, 2};
  }
  const auto body = bytes.subspan(kHeaderSize, body_len);
  Packet packet;
  std::size_t at = 0;
  while (at < body.size()) {
    const std::uint8_t type = body[at];
    if (type == static_cast<std::uint8_t>(TlvKind::PadI)) {
      packet.tlvs.emplace_back(PadI{});
      ++at;
      continue;
    }
    if (at + 2 > body.size()) return DecodeError{DecodeErrorCode::TruncatedTlv, kHeaderSize + at};
    const std::size_t len = body[at + 1];
    if (at + 2 + len > body.size()) {
      return DecodeError{DecodeErrorCode::TruncatedTlv, kHeaderSize + at};
    }
    if (auto tlv = parse_body(type, body.subspan(at + 2, len))) packet.tlvs.push_back(std::move(*tlv));
    at += 2 + len;
  }
  return packet;
}

UpdateContext decode_update_context(std::span<const Tlv> tlvs) {
  UpdateContext result;
  std::optional<RouterId> router_id;
  std::optional<Address> next_hop_v4;
  std::optional<Address> next_hop_v6;
  std::optional<Prefix> previous_v4;
  std::optional<Prefix> previous_v6;

  for (std::size_t i = 0; i < tlvs.size(); ++i) {
    const auto& tlv = tlvs[i];
    if (const auto* rid = std::get_if<RouterIdTlv>(&tlv)) {
      router_id = rid->router_id;
      continue;
    }
    if (const auto* nh = std::get_if<NextHop>(&tlv)) {
      (nh->address.is_v4() ? next_hop_v4 : next_hop_v6) = nh->address;
      continue;
    }
    const auto* up = std::get_if<Update>(&tlv);
    if (!up) continue;

    auto& previous = up->prefix.is_v4() ? previous_v4 : previous_v6;
    Prefix prefix = up->prefix;
    if (up->omitted > 0) {
      if (!previous || up->omitted > previous->octet_count()) {
        ++result.rejected;
        continue;
      }
      auto octets = up->prefix.address().raw();
      std::copy_n(previous->address().raw().begin(), up->omitted, octets.begin());
      const Address addr = prefix.is_v4() ? Address::v4({octets[0], octets[1], octets[2], octets[3]})
                                          : Address::v6_global(octets);
      prefix = *Prefix::make(addr, up->prefix.plen());
    }
    previous = prefix;

    if (up->flags & kFlagDefaultRouterId) {
      std::array<std::uint8_t, 8> id{};
      std::copy_n(prefix.address().raw().begin() + 8, 8, id.begin());
      if (prefix.is_v4() || RouterId(id).is_reserved()) {
        ++result.rejected;
        continue;
      }
      router_id = RouterId(id);
    }
    if (!router_id) {
      ++result.rejected;
      continue;
    }
    result.updates.push_back(ResolvedUpdate{i, prefix, *router_id,
                                            prefix.is_v4() ? next_hop_v4 : next_hop_v6,
                                            SeqNo{up->seqno}, up->metric, up->interval});
  }
  return result;
}

std::string describe(const Tlv& tlv) {
  std::ostringstream os;
  os << kind_name(kind_of(tlv));
  std::visit(
      [&os](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, PadN>) {
          os << " len=" << unsigned{t.len};
        } else if constexpr (std::is_same_v<T, AckReq>) {
          os << " nonce=" << t.nonce << " interval=" << t.interval;
        } else if constexpr (std::is_same_v<T, Ack>) {
          os << " nonce=" << t.nonce;
        } else if constexpr (std::is_same_v<T, Hello>) {
          os << " seqno=" << t.seqno << " interval=" << t.interval;
        } else if constexpr (std::is_same_v<T, Ihu>) {
          os << " address=" << (t.address ? t.address->to_string() : std::string("*"))
             << " rxcost=" << t.rxcost << " interval=" << t.interval;
        } else if constexpr (std::is_same_v<T, RouterIdTlv>) {
          os << " " << t.router_id.to_string();
        } else if constexpr (std::is_same_v<T, NextHop>) {
          os << " " << t.address.to_string();
        } else if constexpr (std::is_same_v<T, Update>) {
          os << " " << t.prefix.to_string() << " seqno=" << t.seqno << " metric=" << t.metric
             << " interval=" << t.interval;
          if (t.omitted) os << " omitted=" << unsigned{t.omitted};
          if (t.flags) os << " flags=0x" << std::hex << unsigned{t.flags} << std::dec;
        } else if constexpr (std::is_same_v<T, RouteReq>) {
          os << " " << (t.prefix ? t.prefix->to_string() : std::string("*"));
        } else if constexpr (std::is_same_v<T, SeqNoReq>) {
          os << " " << t.prefix.to_string() << " seqno=" << t.seqno
             << " hops=" << unsigned{t.hop_count} << " router-id=" << t.router_id.to_string();
        }
      },
      tlv);
  return os.str();
}

}  // namespace babel::wire
