#include <gtest/gtest.h>

#include <random>

#include "babel/wire.hpp"
#include "test_support.hpp"

using namespace babel;
using namespace babel::wire;

namespace {

Packet decoded(const std::vector<std::uint8_t>& bytes) {
  auto r = decode_packet(bytes);
  EXPECT_TRUE(std::holds_alternative<Packet>(r));
  return std::holds_alternative<Packet>(r) ? std::get<Packet>(r) : Packet{};
}

Prefix P(const char* s) { return *Prefix::parse(s); }
Address A(const char* s) { return *Address::parse(s); }
RouterId R(const char* s) { return *RouterId::parse(s); }

}  // namespace

// Hand-assembled frames: magic 42, version 2, 16-bit big-endian body length.
TEST(WireEncode, PadIIsHeaderPlusZeroByte) {
  EXPECT_EQ(encode_packet(Packet{{PadI{}}}), (std::vector<std::uint8_t>{42, 2, 0, 1, 0}));
}

TEST(WireEncode, EmptyPacketHasZeroLength) {
  EXPECT_EQ(encode_packet(Packet{}), (std::vector<std::uint8_t>{42, 2, 0, 0}));
}

TEST(WireEncode, AckCarriesNonceBigEndian) {
  EXPECT_EQ(encode_packet(Packet{{Ack{0x1234}}}), (std::vector<std::uint8_t>{42, 2, 0, 4, 3, 2, 0x12, 0x34}));
}

TEST(WireEncode, HelloLayout) {
  EXPECT_EQ(encode_packet(Packet{{Hello{0x0102, 400}}}),
            (std::vector<std::uint8_t>{42, 2, 0, 8, 4, 6, 0, 0, 0x01, 0x02, 0x01, 0x90}));
}

TEST(WireEncode, UpdateLayoutForIpv6Prefix) {
  const auto bytes = encode_packet(Packet{{Update{P("2001:db8:a::/64"), 0, 0, 1600, 52620, 96}}});
  const std::vector<std::uint8_t> want{42,   2,    0,    20,   8,    18,   2,    0,    64, 0,
                                       0x06, 0x40, 0xcd, 0x8c, 0x00, 0x60, 0x20, 0x01, 0x0d, 0xb8,
                                       0x00, 0x0a, 0x00, 0x00};
  EXPECT_EQ(bytes, want);
}

TEST(WireEncode, LinkLocalUsesCompactEncoding) {
  const auto compact = encode_packet(Packet{{NextHop{A("fe80::1")}}});
  const auto full = encode_packet(Packet{{NextHop{A("fe80:12::1")}}});
  EXPECT_EQ(compact.size(), 4u + 2 + 2 + 8);
  EXPECT_EQ(compact[6], 3);
  EXPECT_EQ(full.size(), 4u + 2 + 2 + 16);
  EXPECT_EQ(full[6], 2);
}

TEST(WireEncode, RejectsReservedRouterIdAndZeroHopCount) {
  std::array<std::uint8_t, 8> zeros{};
  EXPECT_THROW(encode_packet(Packet{{RouterIdTlv{RouterId(zeros)}}}), EncodeError);
  EXPECT_THROW(encode_packet(Packet{{SeqNoReq{P("2001:db8::/32"), 1, 0, R("1:2:3:4")}}}), EncodeError);
}

TEST(WireEncode, OversizeBodyIsAnError) {
  Packet p;
  for (int i = 0; i < 300; ++i) p.tlvs.push_back(PadN{255});
  EXPECT_THROW(encode_packet(p), EncodeError);
}

TEST(WireDecode, UnknownTlvBetweenHellosIsSkipped) {
  auto bytes = encode_packet(Packet{{Hello{1, 400}, Hello{2, 400}}});
  // Splice a type-0xEE record with a 3-octet body after the first Hello.
  const std::vector<std::uint8_t> unknown{0xEE, 3, 9, 9, 9};
  bytes.insert(bytes.begin() + 4 + 8, unknown.begin(), unknown.end());
  const std::size_t body = bytes.size() - 4;
  bytes[2] = static_cast<std::uint8_t>(body >> 8);
  bytes[3] = static_cast<std::uint8_t>(body);
  EXPECT_EQ(decoded(bytes), (Packet{{Hello{1, 400}, Hello{2, 400}}}));
}

TEST(WireDecode, FramingErrors) {
  auto err = [](std::vector<std::uint8_t> b) {
    auto r = decode_packet(b);
    EXPECT_TRUE(std::holds_alternative<DecodeError>(r));
    return std::holds_alternative<DecodeError>(r) ? std::get<DecodeError>(r).code : DecodeErrorCode::BadMagic;
  };
  EXPECT_EQ(err({42}), DecodeErrorCode::TruncatedHeader);
  EXPECT_EQ(err({}), DecodeErrorCode::TruncatedHeader);
  EXPECT_EQ(err({43, 2, 0, 0}), DecodeErrorCode::BadMagic);
  EXPECT_EQ(err({42, 1, 0, 0}), DecodeErrorCode::BadVersion);
  EXPECT_EQ(err({42, 2, 0, 5, 0}), DecodeErrorCode::LengthMismatch);
  EXPECT_EQ(err({42, 2, 0, 3, 4, 6, 0}), DecodeErrorCode::TruncatedTlv);
  EXPECT_EQ(err({42, 2, 0, 1, 4}), DecodeErrorCode::TruncatedTlv);
}

TEST(WireDecode, TrailingBytesBeyondBodyAreIgnored) {
  auto bytes = encode_packet(Packet{{Ack{7}}});
  bytes.push_back(0xAA);
  EXPECT_EQ(decoded(bytes), (Packet{{Ack{7}}}));
}

TEST(WireDecode, PadNContentIsDiscarded) {
  const std::vector<std::uint8_t> bytes{42, 2, 0, 5, 1, 3, 0xde, 0xad, 0xff};
  EXPECT_EQ(decoded(bytes), (Packet{{PadN{3}}}));
}

TEST(WireDecode, SemanticallyInvalidRecordsAreDropped) {
  // SeqNoReq with hop count 0, then a valid Ack.
  auto bytes = encode_packet(Packet{{SeqNoReq{P("10.0.0.0/8"), 1, 1, R("1:2:3:4")}, Ack{1}}});
  bytes[4 + 2 + 4] = 0;
  EXPECT_EQ(decoded(bytes), (Packet{{Ack{1}}}));
}

TEST(UpdateContext, ResolvesRouterIdAndNextHop) {
  const std::vector<Tlv> tlvs{RouterIdTlv{R("2222:2222:2222:2222")}, NextHop{A("fe80:12::2")},
                              Update{P("2001:db8:b::/64"), 0, 0, 1600, 27469, 96}};
  const auto ctx = decode_update_context(tlvs);
  ASSERT_EQ(ctx.updates.size(), 1u);
  EXPECT_EQ(ctx.rejected, 0u);
  const auto& u = ctx.updates[0];
  EXPECT_EQ(u.prefix, P("2001:db8:b::/64"));
  EXPECT_EQ(u.router_id, R("2222:2222:2222:2222"));
  EXPECT_EQ(u.next_hop, A("fe80:12::2"));
  EXPECT_EQ(u.metric, 96);
  EXPECT_EQ(u.tlv_index, 2u);
}

TEST(UpdateContext, MissingRouterIdRejectsRecord) {
  const std::vector<Tlv> tlvs{Update{P("2001:db8:b::/64"), 0, 0, 1600, 1, 96}};
  const auto ctx = decode_update_context(tlvs);
  EXPECT_TRUE(ctx.updates.empty());
  EXPECT_EQ(ctx.rejected, 1u);
}

TEST(UpdateContext, OmittedOctetsComeFromPreviousPrefix) {
  // Compressed form decoded from the wire next to an explicit encoding of both.
  const auto compressed = encode_packet(Packet{{RouterIdTlv{R("1:1:1:1")}, Update{P("2001:db8:a::/64"), 0, 0, 100, 1, 0},
                                                Update{P("::/64"), 8, 0, 100, 1, 0}}});
  const auto explicit_form = encode_packet(Packet{{RouterIdTlv{R("1:1:1:1")}, Update{P("2001:db8:a::/64"), 0, 0, 100, 1, 0},
                                                   Update{P("2001:db8:a::/64"), 0, 0, 100, 1, 0}}});
  EXPECT_LT(compressed.size(), explicit_form.size());
  const auto a = decode_update_context(decoded(compressed).tlvs);
  const auto b = decode_update_context(decoded(explicit_form).tlvs);
  ASSERT_EQ(a.updates.size(), 2u);
  EXPECT_EQ(a.updates, b.updates);
}

TEST(UpdateContext, PartialOmissionKeepsTail) {
  const auto bytes = encode_packet(Packet{{RouterIdTlv{R("1:1:1:1")}, Update{P("2001:db8:a::/64"), 0, 0, 100, 1, 0},
                                           Update{P("0:0:0:b::/64"), 6, 0, 100, 1, 0}}});
  const auto ctx = decode_update_context(decoded(bytes).tlvs);
  ASSERT_EQ(ctx.updates.size(), 2u);
  EXPECT_EQ(ctx.updates[1].prefix, P("2001:db8:a:b::/64"));
}

TEST(UpdateContext, OmissionWithoutPreviousPrefixIsRejected) {
  const std::vector<Tlv> tlvs{RouterIdTlv{R("1:1:1:1")}, Update{P("::/64"), 8, 0, 100, 1, 0},
                              Update{P("2001:db8:c::/64"), 0, 0, 100, 1, 0}};
  const auto ctx = decode_update_context(tlvs);
  EXPECT_EQ(ctx.rejected, 1u);
  ASSERT_EQ(ctx.updates.size(), 1u);
  EXPECT_EQ(ctx.updates[0].prefix, P("2001:db8:c::/64"));
}

TEST(UpdateContext, FamiliesKeepSeparateNextHops) {
  const std::vector<Tlv> tlvs{RouterIdTlv{R("1:1:1:1")}, NextHop{A("10.0.12.1")}, NextHop{A("fe80::1")},
                              Update{P("10.1.0.0/24"), 0, 0, 100, 1, 96}, Update{P("2001:db8:a::/64"), 0, 0, 100, 1, 96}};
  const auto ctx = decode_update_context(tlvs);
  ASSERT_EQ(ctx.updates.size(), 2u);
  EXPECT_EQ(ctx.updates[0].next_hop, A("10.0.12.1"));
  EXPECT_EQ(ctx.updates[1].next_hop, A("fe80::1"));
}

TEST(UpdateContext, DefaultRouterIdFlagDerivesIdFromPrefix) {
  const std::vector<Tlv> tlvs{Update{P("2001:db8:0:1:1111:2222:3333:4444/128"), 0, kFlagDefaultRouterId, 100, 1, 0}};
  const auto ctx = decode_update_context(tlvs);
  ASSERT_EQ(ctx.updates.size(), 1u);
  EXPECT_EQ(ctx.updates[0].router_id, R("1111:2222:3333:4444"));
}

TEST(WireRoundTrip, GeneratedPackets) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const Packet p = testing_support::random_packet(rng);
    EXPECT_EQ(decoded(encode_packet(p)), p) << "iteration " << i;
  }
}

TEST(WireFuzz, MutatedInputsNeverFail) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 20000; ++i) {
    auto bytes = testing_support::mutated_input(rng);
    auto r = decode_packet(bytes);
    if (auto* p = std::get_if<Packet>(&r)) {
      // Whatever decodes must encode again.
      EXPECT_NO_THROW(encode_packet(*p));
    }
  }
}

TEST(WireDescribe, OneLinePerRecord) {
  EXPECT_EQ(describe(Tlv{Ack{0x1234}}), "Ack nonce=4660");
  EXPECT_NE(describe(Tlv{Update{P("2001:db8:a::/64"), 0, 0, 1600, 5, 96}}).find("2001:db8:a::/64"), std::string::npos);
}
