#pragma once

// Babel packet and TLV codec (RFC 6126 octet layouts).

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "babel/address.hpp"
#include "babel/metric.hpp"

namespace babel::wire {

inline constexpr std::uint8_t kMagic = 42;
inline constexpr std::uint8_t kVersion = 2;
inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::size_t kMaxBody = 0xFFFF;

inline constexpr std::uint8_t kFlagDefaultPrefix = 0x80;
inline constexpr std::uint8_t kFlagDefaultRouterId = 0x40;

enum class TlvKind : std::uint8_t {
  PadI = 0,
  PadN = 1,
  AckReq = 2,
  Ack = 3,
  Hello = 4,
  Ihu = 5,
  RouterId = 6,
  NextHop = 7,
  Update = 8,
  RouteReq = 9,
  SeqNoReq = 10,
};

const char* kind_name(TlvKind kind);

struct PadI {
  friend bool operator==(const PadI&, const PadI&) = default;
};
struct PadN {
  std::uint8_t len = 0;
  friend bool operator==(const PadN&, const PadN&) = default;
};
struct AckReq {
  std::uint16_t nonce = 0;
  std::uint16_t interval = 0;  // centiseconds
  friend bool operator==(const AckReq&, const AckReq&) = default;
};
struct Ack {
  std::uint16_t nonce = 0;
  friend bool operator==(const Ack&, const Ack&) = default;
};
struct Hello {
  std::uint16_t seqno = 0;
  std::uint16_t interval = 0;
  friend bool operator==(const Hello&, const Hello&) = default;
};
struct Ihu {
  std::optional<Address> address;  // nullopt: wildcard
  Metric rxcost = kInfinity;
  std::uint16_t interval = 0;
  friend bool operator==(const Ihu&, const Ihu&) = default;
};
struct RouterIdTlv {
  RouterId router_id;
  friend bool operator==(const RouterIdTlv&, const RouterIdTlv&) = default;
};
struct NextHop {
  Address address;
  friend bool operator==(const NextHop&, const NextHop&) = default;
};
/// When omitted > 0 the first `omitted` octets of prefix are zero on decode;
/// decode_update_context restores them.
struct Update {
  Prefix prefix;
  std::uint8_t omitted = 0;
  std::uint8_t flags = 0;
  std::uint16_t interval = 0;
  std::uint16_t seqno = 0;
  Metric metric = 0;
  friend bool operator==(const Update&, const Update&) = default;
};
struct RouteReq {
  std::optional<Prefix> prefix;  // nullopt: full-table request
  friend bool operator==(const RouteReq&, const RouteReq&) = default;
};
struct SeqNoReq {
  Prefix prefix;
  std::uint16_t seqno = 0;
  std::uint8_t hop_count = 1;
  RouterId router_id;
  friend bool operator==(const SeqNoReq&, const SeqNoReq&) = default;
};

using Tlv = std::variant<PadI, PadN, AckReq, Ack, Hello, Ihu, RouterIdTlv, NextHop, Update, RouteReq,
                         SeqNoReq>;

TlvKind kind_of(const Tlv& tlv);

struct Packet {
  std::vector<Tlv> tlvs;
  friend bool operator==(const Packet&, const Packet&) = default;
};

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DecodeErrorCode { TruncatedHeader, BadMagic, BadVersion, LengthMismatch, TruncatedTlv };

struct DecodeError {
  DecodeErrorCode code;
  std::size_t offset = 0;
  std::string message() const;
};

using DecodeResult = std::variant<Packet, DecodeError>;

/// Number of octets the TLV occupies on the wire, header included.
std::size_t encoded_size(const Tlv& tlv);

/// Throws EncodeError when the body would exceed 65535 octets or a record
/// violates its invariants.
std::vector<std::uint8_t> encode_packet(const Packet& packet);
void encode_tlv(const Tlv& tlv, std::vector<std::uint8_t>& out);

/// Total over arbitrary input. Framing problems produce a DecodeError;
/// records that are well framed but semantically invalid, unknown types,
/// and padding content are dropped.
DecodeResult decode_packet(std::span<const std::uint8_t> bytes);

struct ResolvedUpdate {
  std::size_t tlv_index = 0;  // position of the Update in the source list
  Prefix prefix;
  RouterId router_id;
  std::optional<Address> next_hop;  // from a NextHop of the same family
  SeqNo seqno;
  Metric metric = kInfinity;
  std::uint16_t interval = 0;
  friend bool operator==(const ResolvedUpdate&, const ResolvedUpdate&) = default;
};

struct UpdateContext {
  std::vector<ResolvedUpdate> updates;
  std::size_t rejected = 0;
};

/// Pairs each Update with the router-id and next hop in effect at its
/// position, and expands omitted prefix octets from the previous Update of
/// the same family. Packet-local.
UpdateContext decode_update_context(std::span<const Tlv> tlvs);

/// One line, e.g. "Update 2001:db8:a::/64 seqno=5 metric=96 interval=1600".
std::string describe(const Tlv& tlv);

}  // namespace babel::wire
