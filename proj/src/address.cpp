#include "babel/address.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace babel {

bool in_link_local_64(const std::array<std::uint8_t, 16>& octets) {
  return octets[0] == 0xfe && octets[1] == 0x80 &&
         std::all_of(octets.begin() + 2, octets.begin() + 8, [](auto b) { return b == 0; });
}

Address Address::v4(const std::array<std::uint8_t, 4>& octets) {
  Address a;
  a.family_ = Family::IPv4;
  std::copy(octets.begin(), octets.end(), a.octets_.begin());
  return a;
}

Address Address::v6(const std::array<std::uint8_t, 16>& octets) {
  Address a = v6_global(octets);
  if (in_link_local_64(octets)) a.family_ = Family::IPv6LinkLocal;
  return a;
}

Address Address::v6_global(const std::array<std::uint8_t, 16>& octets) {
  Address a;
  a.family_ = Family::IPv6;
  a.octets_ = octets;
  return a;
}

std::optional<Address> Address::parse(std::string_view text) {
  std::string s(text);
  if (s.find(':') != std::string::npos) {
    std::array<std::uint8_t, 16> buf{};
    if (inet_pton(AF_INET6, s.c_str(), buf.data()) != 1) return std::nullopt;
    return v6(buf);
  }
  std::array<std::uint8_t, 4> buf{};
  if (inet_pton(AF_INET, s.c_str(), buf.data()) != 1) return std::nullopt;
  return v4(buf);
}

std::string Address::to_string() const {
  char out[INET6_ADDRSTRLEN] = {};
  if (is_v4()) {
    inet_ntop(AF_INET, octets_.data(), out, sizeof out);
  } else {
    inet_ntop(AF_INET6, octets_.data(), out, sizeof out);
  }
  return out;
}

std::optional<Prefix> Prefix::make(const Address& address, unsigned plen) {
  const unsigned width = address.is_v4() ? 32 : 128;
  if (plen > width) return std::nullopt;
  auto octets = address.raw();
  for (unsigned bit = plen; bit < 128; ++bit) {
    octets[bit / 8] &= static_cast<std::uint8_t>(~(0x80u >> (bit % 8)));
  }
  Prefix p;
  if (address.is_v4()) {
    p.address_ = Address::v4({octets[0], octets[1], octets[2], octets[3]});
  } else {
    p.address_ = Address::v6_global(octets);
  }
  p.plen_ = static_cast<std::uint8_t>(plen);
  return p;
}

std::optional<Prefix> Prefix::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto addr = Address::parse(text.substr(0, slash));
  if (!addr) return std::nullopt;
  unsigned plen = 0;
  const auto digits = text.substr(slash + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), plen);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
    return std::nullopt;
  }
  return make(*addr, plen);
}

std::string Prefix::to_string() const {
  return address_.to_string() + "/" + std::to_string(plen_);
}

bool RouterId::is_reserved() const {
  const bool zeros = std::all_of(octets_.begin(), octets_.end(), [](auto b) { return b == 0; });
  const bool ones = std::all_of(octets_.begin(), octets_.end(), [](auto b) { return b == 0xff; });
  return zeros || ones;
}

std::optional<RouterId> RouterId::parse(std::string_view text) {
  std::array<std::uint8_t, 8> octets{};
  for (std::size_t group = 0; group < 4; ++group) {
    const auto colon = text.find(':');
    if ((group < 3) == (colon == std::string_view::npos)) return std::nullopt;
    const auto part = text.substr(0, colon);
    if (part.empty() || part.size() > 4) return std::nullopt;
    unsigned value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value, 16);
    if (ec != std::errc{} || ptr != part.data() + part.size()) return std::nullopt;
    octets[group * 2] = static_cast<std::uint8_t>(value >> 8);
    octets[group * 2 + 1] = static_cast<std::uint8_t>(value & 0xff);
    if (colon != std::string_view::npos) text.remove_prefix(colon + 1);
  }
  return RouterId(octets);
}

std::string RouterId::to_string() const {
  char out[24];
  std::snprintf(out, sizeof out, "%02x%02x:%02x%02x:%02x%02x:%02x%02x", octets_[0], octets_[1],
                octets_[2], octets_[3], octets_[4], octets_[5], octets_[6], octets_[7]);
  return out;
}

}  // namespace babel
