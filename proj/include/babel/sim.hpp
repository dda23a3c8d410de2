#pragma once

// Discrete-event network of Babel engines. All randomness (loss and engine
// jitter) comes from one seeded generator, so a run is a pure function of
// its configuration and seed.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "babel/engine.hpp"

namespace babel::sim {

struct Endpoint {
  std::size_t node = 0;
  std::size_t iface = 0;
  auto operator<=>(const Endpoint&) const = default;
};

struct LinkConfig {
  Endpoint a;
  Endpoint b;
  Duration delay = std::chrono::microseconds(100);
  double loss = 0.0;  // per datagram, each direction
  bool up = true;
};

struct TraceRecord {
  Time sent{};
  Time delivered{};
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t link = 0;
  bool unicast = false;
  std::vector<wire::TlvKind> kinds;  // wire order
  std::size_t length = 0;
  std::vector<std::uint8_t> bytes;
};

struct Counters {
  std::uint64_t events = 0;
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t dropped = 0;  // link down, epoch change, or receiver not started
};

class Kernel {
 public:
  using Probe = std::function<void(Kernel&, Time)>;
  using Observer = std::function<void(const Kernel&, Time)>;

  explicit Kernel(std::uint64_t seed);
  Kernel(const Kernel&) = delete;
  Kernel& operator=(const Kernel&) = delete;

  std::size_t add_node(EngineConfig config, std::optional<Time> start_at = Time{});
  /// Throws std::invalid_argument if an endpoint is unknown or already attached.
  std::size_t add_link(const LinkConfig& link);

  void schedule_node_start(Time at, std::size_t node);
  void schedule_link_change(Time at, std::size_t link, bool up);
  void schedule_probe(Time at, Probe probe);
  void set_observer(Observer observer) { observer_ = std::move(observer); }

  /// Processes every event with time <= end.
  void run_until(Time end);

  Time now() const { return now_; }
  double uniform01();

  std::size_t node_count() const { return nodes_.size(); }
  const Engine& node(std::size_t i) const { return *nodes_.at(i).engine; }
  const std::string& node_name(std::size_t i) const { return nodes_.at(i).engine->config().name; }
  std::optional<std::size_t> find_node(const std::string& name) const;

  std::size_t link_count() const { return links_.size(); }
  const LinkConfig& link(std::size_t i) const { return links_.at(i).config; }
  bool link_up(std::size_t i) const { return links_.at(i).up; }
  std::optional<std::size_t> link_of(std::size_t node, std::size_t iface) const;
  /// The endpoint across the link attached to (node, iface).
  std::optional<Endpoint> peer_of(std::size_t node, std::size_t iface) const;

  const std::vector<TraceRecord>& trace() const { return trace_; }
  const Counters& counters() const { return counters_; }

 private:
  struct NodeStart {
    std::size_t node;
  };
  struct Wake {
    std::size_t node;
  };
  struct Delivery {
    std::size_t link;
    std::uint64_t epoch;
    Endpoint from;
    Endpoint to;
    bool unicast;
    Time sent;
    std::vector<std::uint8_t> bytes;
  };
  struct LinkChange {
    std::size_t link;
    bool up;
  };
  struct ProbeEvent {
    std::size_t index;
  };
  using Payload = std::variant<NodeStart, Wake, Delivery, LinkChange, ProbeEvent>;

  struct Event {
    Time at;
    std::uint64_t seq;
    Payload payload;
    bool operator>(const Event& o) const { return at != o.at ? at > o.at : seq > o.seq; }
  };

  struct Node {
    std::unique_ptr<Engine> engine;
    std::optional<Time> pending_wake;
  };

  struct Link {
    LinkConfig config;
    bool up = true;
    std::uint64_t epoch = 0;
  };

  void push(Time at, Payload payload);
  void handle(const NodeStart& e);
  void handle(const Wake& e);
  void handle(Delivery& e);
  void handle(const LinkChange& e);
  void handle(const ProbeEvent& e);
  void transmit(std::size_t node, const Effects& effects);
  void reschedule(std::size_t node);

  std::mt19937_64 rng_;
  Time now_{};
  std::uint64_t next_seq_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::vector<Node> nodes_;
  std::vector<Link> links_;
  std::vector<Probe> probes_;
  Observer observer_;
  std::vector<TraceRecord> trace_;
  Counters counters_;
};

/// Follows selected next hops for `prefix` from `start`; true if a router
/// is visited twice before the walk ends at an originator or a dead end.
bool has_forwarding_loop(const Kernel& kernel, std::size_t start, const Prefix& prefix);

/// Every (node, prefix) pair over all prefixes present anywhere in the network.
bool loop_free(const Kernel& kernel);

}  // namespace babel::sim
