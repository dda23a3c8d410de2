#pragma once

// Generators shared by the unit tests and the acceptance binary.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "babel/sim.hpp"
#include "babel/wire.hpp"

namespace testing_support {

inline std::uint64_t pick(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

inline babel::Address random_address(std::mt19937_64& rng) {
  switch (pick(rng, 3)) {
    case 0: {
      std::array<std::uint8_t, 4> b{};
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
      return babel::Address::v4(b);
    }
    case 1: {
      std::array<std::uint8_t, 16> b{};
      for (auto& x : b) x = static_cast<std::uint8_t>(rng());
      b[0] = 0x20;  // keep clear of fe80::/64
      return babel::Address::v6(b);
    }
    default: {
      std::array<std::uint8_t, 16> b{0xfe, 0x80};
      for (std::size_t i = 8; i < 16; ++i) b[i] = static_cast<std::uint8_t>(rng());
      return babel::Address::v6(b);
    }
  }
}

inline babel::Prefix random_prefix(std::mt19937_64& rng) {
  if (pick(rng, 2) == 0) {
    std::array<std::uint8_t, 4> b{};
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    return *babel::Prefix::make(babel::Address::v4(b), static_cast<unsigned>(pick(rng, 33)));
  }
  std::array<std::uint8_t, 16> b{};
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  b[0] = 0x20;
  return *babel::Prefix::make(babel::Address::v6(b), static_cast<unsigned>(pick(rng, 129)));
}

inline babel::RouterId random_router_id(std::mt19937_64& rng) {
  while (true) {
    std::array<std::uint8_t, 8> b{};
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    babel::RouterId id(b);
    if (!id.is_reserved()) return id;
  }
}

inline babel::wire::Tlv random_tlv(std::mt19937_64& rng) {
  using namespace babel::wire;
  auto u16 = [&] { return static_cast<std::uint16_t>(rng()); };
  switch (pick(rng, 11)) {
    case 0: return PadI{};
    case 1: return PadN{static_cast<std::uint8_t>(pick(rng, 24))};
    case 2: return AckReq{u16(), u16()};
    case 3: return Ack{u16()};
    case 4: return Hello{u16(), u16()};
    case 5: {
      Ihu ihu{std::nullopt, u16(), u16()};
      if (pick(rng, 4) != 0) ihu.address = random_address(rng);
      return ihu;
    }
    case 6: return RouterIdTlv{random_router_id(rng)};
    case 7: return NextHop{random_address(rng)};
    case 8: return Update{random_prefix(rng), 0, static_cast<std::uint8_t>(pick(rng, 2) ? 0 : 0x80), u16(), u16(), u16()};
    case 9: {
      RouteReq r;
      if (pick(rng, 3) != 0) r.prefix = random_prefix(rng);
      return r;
    }
    default:
      return SeqNoReq{random_prefix(rng), u16(), static_cast<std::uint8_t>(1 + pick(rng, 255)), random_router_id(rng)};
  }
}

inline babel::wire::Packet random_packet(std::mt19937_64& rng) {
  babel::wire::Packet p;
  const auto n = pick(rng, 16);
  for (std::uint64_t i = 0; i < n; ++i) p.tlvs.push_back(random_tlv(rng));
  return p;
}

/// Random bytes, or a valid packet with a few bytes flipped, truncated or inserted.
inline std::vector<std::uint8_t> mutated_input(std::mt19937_64& rng) {
  std::vector<std::uint8_t> bytes;
  if (pick(rng, 4) == 0) {
    bytes.resize(pick(rng, pick(rng, 8) == 0 ? 2048 : 64));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    if (bytes.size() >= 2 && pick(rng, 2) == 0) {
      bytes[0] = babel::wire::kMagic;
      bytes[1] = babel::wire::kVersion;
    }
    return bytes;
  }
  bytes = babel::wire::encode_packet(random_packet(rng));
  const auto edits = 1 + pick(rng, 4);
  for (std::uint64_t e = 0; e < edits && !bytes.empty(); ++e) {
    const auto at = pick(rng, bytes.size());
    switch (pick(rng, 4)) {
      case 0: bytes[at] = static_cast<std::uint8_t>(rng()); break;
      case 1: bytes[at] ^= static_cast<std::uint8_t>(1u << pick(rng, 8)); break;
      case 2: bytes.resize(at); break;
      default: bytes.insert(bytes.begin() + static_cast<std::ptrdiff_t>(at), static_cast<std::uint8_t>(rng())); break;
    }
  }
  // Keep the header length honest half of the time so bodies get exercised.
  if (bytes.size() >= 4 && pick(rng, 2) == 0) {
    const auto body = bytes.size() - 4;
    bytes[2] = static_cast<std::uint8_t>(body >> 8);
    bytes[3] = static_cast<std::uint8_t>(body);
  }
  return bytes;
}

struct Topology {
  std::size_t routers = 0;
  std::vector<std::pair<std::size_t, std::size_t>> links;
};

// Random spanning tree plus extra distinct edges; always connected.
inline Topology random_topology(std::mt19937_64& rng, std::size_t max_routers = 8, std::size_t max_links = 16) {
  Topology t;
  t.routers = 2 + pick(rng, max_routers - 1);
  std::set<std::pair<std::size_t, std::size_t>> used;
  for (std::size_t i = 1; i < t.routers; ++i) {
    const std::size_t j = pick(rng, i);
    t.links.emplace_back(j, i);
    used.emplace(j, i);
  }
  const std::size_t possible = t.routers * (t.routers - 1) / 2;
  const std::size_t cap = std::min(max_links, possible);
  const std::size_t target = t.links.size() + pick(rng, cap - t.links.size() + 1);
  while (t.links.size() < target) {
    std::size_t a = pick(rng, t.routers);
    std::size_t b = pick(rng, t.routers);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (!used.emplace(a, b).second) continue;
    t.links.emplace_back(a, b);
  }
  return t;
}

// Router i owns 2001:db8:<i+1>::/64 and 10.<i+1>.0.0/24; link l uses
// fe80::<l+1>:<i+1> and 10.0.<l+1>.<i+1> on each side.
inline std::unique_ptr<babel::sim::Kernel> build_network(const Topology& t, std::uint64_t seed) {
  using babel::Address;
  auto kernel = std::make_unique<babel::sim::Kernel>(seed);
  std::vector<babel::EngineConfig> configs(t.routers);
  std::vector<std::vector<std::size_t>> iface_of_link(t.routers);
  for (std::size_t i = 0; i < t.routers; ++i) {
    const std::string n = std::to_string(i + 1);
    configs[i].name = "R" + n;
    configs[i].router_id = *babel::RouterId::parse(n + ":" + n + ":" + n + ":" + n);
    configs[i].initial_seqno = babel::SeqNo{static_cast<std::uint16_t>(1000 * (i + 1))};
  }
  std::vector<babel::sim::LinkConfig> links;
  for (std::size_t l = 0; l < t.links.size(); ++l) {
    babel::sim::LinkConfig lc;
    for (auto [node, end] : {std::pair{t.links[l].first, &lc.a}, std::pair{t.links[l].second, &lc.b}}) {
      babel::InterfaceConfig ic;
      ic.name = "l" + std::to_string(l + 1);
      ic.link_local = *Address::parse("fe80::" + std::to_string(l + 1) + ":" + std::to_string(node + 1));
      ic.ipv4 = *Address::parse("10.0." + std::to_string(l + 1) + "." + std::to_string(node + 1));
      if (configs[node].interfaces.empty()) {
        ic.prefixes.push_back(*babel::Prefix::parse("2001:db8:" + std::to_string(node + 1) + "::/64"));
        ic.prefixes.push_back(*babel::Prefix::parse("10." + std::to_string(node + 1) + ".0.0/24"));
      }
      *end = babel::sim::Endpoint{node, configs[node].interfaces.size()};
      configs[node].interfaces.push_back(std::move(ic));
    }
    links.push_back(lc);
  }
  for (auto& c : configs) kernel->add_node(std::move(c));
  for (const auto& lc : links) kernel->add_link(lc);
  return kernel;
}

}  // namespace testing_support
