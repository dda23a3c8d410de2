#pragma once

// Per-router Babel state machine. Transport independent: the caller feeds
// received datagrams, clock ticks and link status changes, and transmits the
// packets every entry point returns.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "babel/address.hpp"
#include "babel/cost.hpp"
#include "babel/metric.hpp"
#include "babel/wire.hpp"

namespace babel {

using Duration = std::chrono::microseconds;
/// Virtual time since the start of the run.
using Time = std::chrono::microseconds;

enum class LinkKind { wired, wireless };

struct InterfaceConfig {
  std::string name;
  LinkKind kind = LinkKind::wired;
  Address link_local;           // source of Babel datagrams, IPv6 next hop
  std::optional<Address> ipv4;  // advertised as NextHop for IPv4 routes
  std::vector<Prefix> prefixes;
  Duration hello_interval = std::chrono::seconds(4);
  std::optional<Duration> update_interval;  // default 4 x hello
  bool split_horizon = true;
  std::shared_ptr<const cost::CostPolicy> cost;  // default 2-out-of-3, nominal 96

  Duration effective_update_interval() const { return update_interval.value_or(hello_interval * 4); }
};

struct TimerSettings {
  double route_expiry_factor = 3.5;   // x advertised update interval
  double route_bef_fraction = 0.875;  // of the expiry period
  double hello_miss_factor = 1.5;     // x neighbor hello interval before a miss
  double ihu_hold_factor = 3.5;       // x IHU interval
  Duration source_gc = std::chrono::minutes(3);
  Duration request_resend = std::chrono::milliseconds(500);
  int request_retries = 3;
  Duration buffer_gc = std::chrono::seconds(10);
  Duration max_flush_delay = std::chrono::milliseconds(200);
  Duration ack_resend = std::chrono::milliseconds(500);
  int ack_retries = 3;
  std::uint8_t request_hop_count = 127;
};

struct EngineConfig {
  std::string name;
  RouterId router_id;
  SeqNo initial_seqno;
  std::vector<InterfaceConfig> interfaces;
  TimerSettings timers;
  bool ack_retractions = false;
  std::size_t max_packet_body = 1400;
};

struct OutgoingPacket {
  std::size_t iface = 0;
  std::optional<Address> destination;  // nullopt: interface multicast
  std::vector<std::uint8_t> bytes;
};

using Effects = std::vector<OutgoingPacket>;

struct NeighborKey {
  std::size_t iface = 0;
  Address address;
  auto operator<=>(const NeighborKey&) const = default;
};

struct NeighborEntry {
  NeighborKey key;
  cost::HelloHistory history;
  Metric rxcost = kInfinity;
  Metric txcost = kInfinity;
  Metric cost = kInfinity;
  Duration hello_interval{};
  Time hello_deadline{};
  std::optional<Time> ihu_deadline;
};

struct RouteEntry {
  std::uint64_t id = 0;  // insertion order
  Prefix prefix;
  std::optional<NeighborKey> neighbor;  // nullopt: connected
  Address next_hop;
  RouterId router_id;
  Metric refmetric = kInfinity;
  Metric metric = kInfinity;
  SeqNo seqno;
  bool selected = false;
  Duration update_interval{};
  std::optional<Time> expiry;
  std::optional<Time> bef_expiry;
  std::optional<Time> remove_at;

  bool local() const { return !neighbor.has_value(); }
};

struct SourceEntry {
  Prefix prefix;
  RouterId router_id;
  FeasibilityDistance fd;
  Time gc_deadline{};
};

using SourceKey = std::pair<Prefix, RouterId>;
using SourceTable = std::map<SourceKey, SourceEntry>;

struct PendingRequest {
  Prefix prefix;
  RouterId router_id;
  SeqNo seqno;
  std::optional<NeighborKey> target;  // nullopt: multicast on all interfaces
  std::uint8_t hop_count = 1;
  int retries_left = 0;
  Time resend_at{};
  std::set<NeighborKey> requesters;
};

/// Update record before router-id/next-hop context is attached.
struct UpdateItem {
  Prefix prefix;
  RouterId router_id;
  SeqNo seqno;
  Metric metric = kInfinity;
  std::uint16_t interval = 0;
};

using BufferItem = std::variant<wire::Tlv, UpdateItem>;

struct InterfaceState {
  InterfaceConfig config;
  bool up = false;
  std::uint16_t hello_seqno = 0;
  Time next_hello{};
  Time next_update{};
  std::vector<BufferItem> multicast;
  std::map<Address, std::vector<BufferItem>> unicast;
  std::map<Address, Time> unicast_last_used;
  std::optional<Time> flush_at;
};

struct ResolvedUpdateIn {
  Prefix prefix;
  RouterId router_id;
  std::optional<Address> next_hop;
  SeqNo seqno;
  Metric metric = kInfinity;
  std::uint16_t interval = 0;
};

/// Feasibility of an advertisement against the source table.
bool is_feasible(const ResolvedUpdateIn& update, const SourceTable& sources);

class Engine {
 public:
  /// `uniform01` supplies buffer jitter in [0, 1).
  Engine(EngineConfig config, std::function<double()> uniform01);

  Effects start(Time now);
  Effects deliver(std::span<const std::uint8_t> bytes, const Address& from, std::size_t iface,
                  bool unicast, Time now);
  Effects tick(Time now);
  Effects link_status(std::size_t iface, bool up, Time now);

  std::optional<Time> next_deadline() const;

  bool started() const { return started_; }
  const EngineConfig& config() const { return config_; }
  const RouterId& router_id() const { return config_.router_id; }
  SeqNo own_seqno() const { return seqno_; }

  const std::vector<RouteEntry>& routes() const { return routes_; }
  const std::map<NeighborKey, NeighborEntry>& neighbors() const { return neighbors_; }
  const SourceTable& sources() const { return sources_; }
  const std::vector<PendingRequest>& pending_requests() const { return pending_; }
  const InterfaceState& interface(std::size_t i) const { return ifaces_.at(i); }
  std::size_t interface_count() const { return ifaces_.size(); }

  const RouteEntry* selected_route(const Prefix& prefix) const;

  /// Route table in the textual shape "[i] = > prefix NH... metric:... orig:...".
  std::string dump_routes() const;
  std::string dump_neighbors() const;
  std::string dump_sources() const;

 private:
  struct Announcement {
    RouterId router_id;
    SeqNo seqno;
    Metric metric = kInfinity;
    std::optional<std::size_t> via_iface;
  };

  struct PendingAck {
    std::uint16_t nonce = 0;
    std::size_t iface = 0;
    std::set<Address> awaiting;
    std::vector<UpdateItem> payload;
    int retries_left = 0;
    Time resend_at{};
  };

  void process_hello(const wire::Hello& hello, const NeighborKey& from, Time now);
  void process_ihu(const wire::Ihu& ihu, NeighborEntry& neighbor, Time now);
  void process_update(const ResolvedUpdateIn& update, NeighborEntry& neighbor, Time now);
  void process_route_req(const wire::RouteReq& req, const NeighborEntry& neighbor, bool unicast, Time now);
  void process_seqno_req(const wire::SeqNoReq& req, const NeighborEntry& neighbor, Time now);
  void process_ack_req(const wire::AckReq& req, const NeighborEntry& neighbor, Time now);
  void process_ack(const wire::Ack& ack, const NeighborEntry& neighbor);

  void select_routes(const Prefix& prefix, Time now);
  void announce(const Prefix& prefix, const std::optional<Announcement>& previous,
                const std::optional<Announcement>& current, Time now);
  void start_request(const Prefix& prefix, const RouterId& router_id, SeqNo seqno,
                     std::optional<NeighborKey> target, Time now);
  void send_request(const PendingRequest& req, Time now);

  void update_costs(NeighborEntry& neighbor, Time now);
  void flush_neighbor(const NeighborKey& key, Time now);
  void poison(RouteEntry& route, Time now);

  void queue_hello(std::size_t iface, Time now);
  void queue_ihu(std::size_t iface, const NeighborEntry& neighbor, Time now);
  void queue_full_dump(std::size_t iface, Time now);
  void queue_prefix_update(std::size_t iface, const std::optional<Address>& dest, const Prefix& prefix,
                           Time now);
  void queue(std::size_t iface, const std::optional<Address>& dest, BufferItem item, Time now,
             std::optional<Duration> max_delay = std::nullopt);
  std::optional<UpdateItem> advertisement_for(std::size_t iface, const Prefix& prefix) const;

  Effects flush_due(Time now);
  void flush_interface(std::size_t iface, Effects& out);
  void build_packets(std::size_t iface, const std::optional<Address>& dest,
                     const std::vector<BufferItem>& items, Effects& out) const;

  RouteEntry* find_route(const Prefix& prefix, const NeighborKey& key);
  std::optional<FeasibilityDistance> fd_for(const Prefix& prefix, const RouterId& id) const;
  bool route_feasible(const RouteEntry& route) const;
  bool is_local_prefix(const Prefix& prefix) const;
  bool owns_address(std::size_t iface, const Address& address) const;
  Duration hold_time(const RouteEntry& route) const;
  std::uint16_t update_interval_cs(std::size_t iface) const;
  Duration jitter(Duration max);

  EngineConfig config_;
  std::function<double()> uniform01_;
  bool started_ = false;
  SeqNo seqno_;
  std::uint64_t next_route_id_ = 0;
  std::uint16_t next_nonce_ = 1;

  std::vector<InterfaceState> ifaces_;
  std::map<NeighborKey, NeighborEntry> neighbors_;
  std::vector<RouteEntry> routes_;
  SourceTable sources_;
  std::vector<PendingRequest> pending_;
  std::vector<PendingAck> pending_acks_;
  std::map<Prefix, Announcement> announced_;
};

/// Centiseconds, saturating at 0xFFFF.
std::uint16_t to_centiseconds(Duration d);
Duration from_centiseconds(std::uint16_t cs);

}  // namespace babel
