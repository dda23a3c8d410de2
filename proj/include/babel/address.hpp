#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace babel {

enum class Family : std::uint8_t { IPv4, IPv6, IPv6LinkLocal };

/// An IPv4 or IPv6 address. IPv4 occupies the first four octets of the
/// storage; the rest stay zero so defaulted comparison is well defined.
class Address {
 public:
  Address() = default;

  static Address v4(const std::array<std::uint8_t, 4>& octets);
  /// Classifies addresses under fe80::/64 as link-local.
  static Address v6(const std::array<std::uint8_t, 16>& octets);
  /// Never classifies as link-local; used for prefix storage.
  static Address v6_global(const std::array<std::uint8_t, 16>& octets);

  static std::optional<Address> parse(std::string_view text);

  Family family() const { return family_; }
  bool is_v4() const { return family_ == Family::IPv4; }
  bool is_v6() const { return !is_v4(); }

  std::size_t size() const { return is_v4() ? 4 : 16; }
  std::span<const std::uint8_t> bytes() const { return {octets_.data(), size()}; }
  const std::array<std::uint8_t, 16>& raw() const { return octets_; }

  std::string to_string() const;

  auto operator<=>(const Address&) const = default;

 private:
  Family family_ = Family::IPv6;
  std::array<std::uint8_t, 16> octets_{};
};

/// True when the first 64 bits are fe80:0:0:0.
bool in_link_local_64(const std::array<std::uint8_t, 16>& octets);

/// A network prefix in canonical form (host bits zero). The address family
/// is IPv4 or IPv6, never IPv6LinkLocal.
class Prefix {
 public:
  Prefix() = default;

  /// Masks bits beyond plen. Returns nullopt when plen exceeds the family width.
  static std::optional<Prefix> make(const Address& address, unsigned plen);
  static std::optional<Prefix> parse(std::string_view text);

  const Address& address() const { return address_; }
  std::uint8_t plen() const { return plen_; }
  bool is_v4() const { return address_.is_v4(); }
  /// Number of significant octets: ceil(plen / 8).
  std::size_t octet_count() const { return (plen_ + 7u) / 8u; }

  std::string to_string() const;

  auto operator<=>(const Prefix&) const = default;

 private:
  Address address_;
  std::uint8_t plen_ = 0;
};

/// Eight-byte router identifier. All-zero and all-ones are reserved.
class RouterId {
 public:
  RouterId() = default;
  explicit RouterId(const std::array<std::uint8_t, 8>& octets) : octets_(octets) {}

  /// Accepts "1111:1111:1111:1111" (four groups of up to four hex digits).
  static std::optional<RouterId> parse(std::string_view text);

  const std::array<std::uint8_t, 8>& octets() const { return octets_; }
  bool is_reserved() const;
  std::string to_string() const;

  auto operator<=>(const RouterId&) const = default;

 private:
  std::array<std::uint8_t, 8> octets_{};
};

}  // namespace babel
