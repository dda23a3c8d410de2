#pragma once

// Line-oriented scenario files: topology, timed events, probes and
// assertions. See scenarios/ for annotated examples.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "babel/engine.hpp"
#include "babel/sim.hpp"

namespace babel::scenario {

/// Source position; ignored by equality so that parse(serialize(s)) == s.
struct Loc {
  int line = 0;
  bool operator==(const Loc&) const { return true; }
};

struct Settings {
  Duration duration = std::chrono::seconds(60);
  Duration hello_interval = std::chrono::seconds(4);
  std::optional<Duration> update_interval;
  bool split_horizon = true;
  std::string cost = "k-of-j";  // or "etx"
  std::size_t k = 2;
  std::size_t j = 3;
  std::optional<Metric> nominal;  // default by interface kind
  Duration delay = std::chrono::microseconds(100);
  double loss = 0.0;
  bool ack_retractions = false;
  std::uint64_t seed = 1;
  bool operator==(const Settings&) const = default;
};

struct NodeDecl {
  std::string name;
  RouterId router_id;
  std::uint16_t seqno = 0;
  Loc loc;
  bool operator==(const NodeDecl&) const = default;
};

struct InterfaceDecl {
  std::string node;
  std::string name;
  Address link_local;
  std::optional<Address> ipv4;
  std::vector<Prefix> prefixes;
  std::optional<LinkKind> kind;
  std::optional<Duration> hello;
  std::optional<Duration> update;
  std::optional<bool> split_horizon;
  std::optional<std::string> cost;
  std::optional<std::size_t> k;
  std::optional<std::size_t> j;
  std::optional<Metric> nominal;
  Loc loc;
  bool operator==(const InterfaceDecl&) const = default;
};

struct IfaceRef {
  std::string node;
  std::string iface;
  bool operator==(const IfaceRef&) const = default;
  std::string to_string() const { return node + "." + iface; }
};

/// Unordered endpoint pair identifying a link.
using LinkKey = std::pair<std::string, std::string>;
inline LinkKey link_key(const IfaceRef& a, const IfaceRef& b) {
  auto x = a.to_string();
  auto y = b.to_string();
  if (y < x) std::swap(x, y);
  return {x, y};
}

struct LinkDecl {
  IfaceRef a;
  IfaceRef b;
  std::optional<Duration> delay;
  std::optional<double> loss;
  bool up = true;
  Loc loc;
  bool operator==(const LinkDecl&) const = default;
};

struct EventDecl {
  enum class Kind { down, up, start };
  Time at{};
  Kind kind = Kind::down;
  IfaceRef a;  // for start: node only
  IfaceRef b;
  Loc loc;
  bool operator==(const EventDecl&) const = default;
};

struct ProbeDecl {
  enum class What { routes, neighbors, sources };
  Time at{};
  std::string node;
  What what = What::routes;
  Loc loc;
  bool operator==(const ProbeDecl&) const = default;
};

/// Regex over the trace text, one "S>R Kind,Kind" line per delivered datagram.
struct TraceAssert {
  std::string pattern;
  std::optional<std::pair<std::string, std::string>> link;  // nodes, either direction
  std::optional<Time> from;
  std::optional<Time> until;
  bool operator==(const TraceAssert&) const = default;
};

struct SelectedAssert {
  Time at{};
  std::string node;
  Prefix prefix;
  std::optional<Metric> metric;
  std::vector<Address> via;  // any of
  std::optional<RouterId> orig;
  std::optional<std::uint16_t> seqno;
  bool operator==(const SelectedAssert&) const = default;
};

struct CountAssert {
  enum class Family { ipv6, ipv4, all };
  Time at{};
  std::string node;
  Family family = Family::all;
  std::size_t count = 0;
  bool operator==(const CountAssert&) const = default;
};

/// Successive distinct metrics of the selected route (65535 when none).
struct TransitionsAssert {
  std::string node;
  Prefix prefix;
  std::vector<Metric> metrics;
  std::optional<Time> from;
  bool operator==(const TransitionsAssert&) const = default;
};

struct LoopFreeAssert {
  Time at{};
  bool operator==(const LoopFreeAssert&) const = default;
};

using AssertionBody = std::variant<TraceAssert, SelectedAssert, CountAssert, TransitionsAssert, LoopFreeAssert>;

struct Assertion {
  AssertionBody body;
  Loc loc;
  bool operator==(const Assertion&) const = default;
};

struct Scenario {
  Settings settings;
  std::vector<NodeDecl> nodes;
  std::vector<InterfaceDecl> interfaces;
  std::vector<LinkDecl> links;
  std::vector<EventDecl> events;
  std::vector<ProbeDecl> probes;
  std::vector<Assertion> assertions;
  bool operator==(const Scenario&) const = default;
};

struct Diagnostic {
  int line = 0;  // 0: whole file
  std::string message;
};

struct ParseResult {
  std::optional<Scenario> scenario;  // set only when diagnostics is empty
  std::vector<Diagnostic> diagnostics;
};

ParseResult parse(std::string_view text);
ParseResult parse_file(const std::string& path);
std::string serialize(const Scenario& scenario);
/// One assertion in file syntax.
std::string describe(const Assertion& assertion);
std::string format_diagnostic(const Diagnostic& d);

/// Durations accept an s/ms/us suffix; a bare number is seconds.
std::optional<Duration> parse_duration(std::string_view text);
std::string format_duration(Duration d);
/// Seconds with millisecond precision, e.g. "20.143".
std::string format_time(Time t);

std::unique_ptr<sim::Kernel> build(const Scenario& scenario, std::uint64_t seed);

struct AssertionResult {
  int line = 0;
  std::string description;
  bool passed = false;
  std::string detail;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::string trace;  // full trace listing
  std::string dumps;  // probe output
  std::vector<AssertionResult> assertions;
  sim::Counters counters;
  std::vector<sim::TraceRecord> records;
  std::vector<std::string> node_names;

  bool passed() const;
};

RunReport run(const Scenario& scenario, std::optional<std::uint64_t> seed = std::nullopt);

/// "R1>R2 Hello,IHU,Update": context and padding TLVs omitted, repeats collapsed.
std::string summarize(const std::vector<std::string>& node_names, const sim::TraceRecord& record);
std::string summarize_kinds(const std::vector<wire::TlvKind>& kinds);

}  // namespace babel::scenario
