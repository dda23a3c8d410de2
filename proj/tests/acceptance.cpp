// Acceptance checks AC1..AC8. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <unistd.h>

#include "babel/cost.hpp"
#include "babel/scenario.hpp"
#include "babel/sim.hpp"
#include "babel/wire.hpp"
#include "test_support.hpp"

using namespace babel;
using namespace std::chrono_literals;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = true;
  std::string detail;

  void fail(const std::string& why) {
    if (passed) detail = why;
    passed = false;
  }
};

scenario::Scenario load(const std::string& name) {
  const auto r = scenario::parse_file(std::string(BABEL_SCENARIO_DIR) + "/" + name);
  if (!r.scenario) {
    std::string msg = name + ":";
    for (const auto& d : r.diagnostics) msg += " " + scenario::format_diagnostic(d);
    throw std::runtime_error(msg);
  }
  return *r.scenario;
}

double seconds(Time t) { return std::chrono::duration<double>(t).count(); }

Prefix P(const char* s) { return *Prefix::parse(s); }
Address A(const char* s) { return *Address::parse(s); }
RouterId R(const char* s) { return *RouterId::parse(s); }

std::optional<wire::Packet> packet_of(const sim::TraceRecord& r) {
  auto d = wire::decode_packet(r.bytes);
  if (auto* p = std::get_if<wire::Packet>(&d)) return *p;
  return std::nullopt;
}

// AC1: bring-up message order on the R1-R2 link after R1 starts.
Outcome ac1() {
  Outcome o;
  const auto s = load("scenarioA_neighborship.scenario");
  const auto t0 = Clock::now();
  const auto report = scenario::run(s);
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();

  std::vector<const sim::TraceRecord*> recs;
  for (const auto& r : report.records) {
    if (r.sent >= 10s) recs.push_back(&r);
  }
  const std::vector<std::vector<std::string>> expected = {
      {"R1>R2 Hello,RouteReq"},
      {"R2>R1 Hello,IHU,Update"},
      {"R1>R2 Hello,IHU"},
      {"R2>R1 Hello,IHU"},
      {"R2>R1 RouteReq"},
      {"R1>R2 Hello,IHU,Update"},
      {"R1>R2 RouteReq"},
      {"R2>R1 Update,IHU", "R2>R1 IHU,Update"},
  };
  if (recs.size() < expected.size() + 1) {
    o.fail("only " + std::to_string(recs.size()) + " datagrams after R1 started");
    return o;
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto got = scenario::summarize(report.node_names, *recs[i]);
    if (std::find(expected[i].begin(), expected[i].end(), got) == expected[i].end()) {
      o.fail("#" + std::to_string(i + 1) + " was '" + got + "', wanted '" + expected[i][0] + "'");
      return o;
    }
  }
  // #9: R2's next periodic Hello. Only R1's own traffic may come first.
  std::size_t i = expected.size();
  while (i < recs.size() && report.node_names[recs[i]->from] == "R1") ++i;
  if (i == recs.size()) {
    o.fail("no periodic Hello from R2");
    return o;
  }
  const auto ninth = scenario::summarize(report.node_names, *recs[i]);
  if (ninth != "R2>R1 Hello,IHU") o.fail("#9 was '" + ninth + "'");
  const double gap = seconds(recs[i]->sent - recs[3]->sent);
  if (gap < 3.0 || gap > 4.5) o.fail("#9 follows #4 by " + std::to_string(gap) + " s, not one hello interval");
  if (wall >= 1.0) o.fail("runtime " + std::to_string(wall) + " s");
  if (o.passed) {
    std::ostringstream d;
    d << "9 messages in the expected order, #9 after " << gap << " s, runtime " << wall << " s";
    o.detail = d.str();
  }
  return o;
}

// AC2: R1's table on the four-router network after 60 s.
Outcome ac2() {
  Outcome o;
  auto s = load("scenarioB_convergence.scenario");
  auto kernel = scenario::build(s, s.settings.seed);
  kernel->run_until(60s);
  const auto& r1 = kernel->node(*kernel->find_node("R1"));

  std::size_t v6 = 0;
  std::map<Prefix, const RouteEntry*> selected;
  for (const auto& r : r1.routes()) {
    if (r.prefix.is_v4()) continue;
    ++v6;
    if (r.selected) selected[r.prefix] = &r;
  }
  if (v6 != 13) o.fail(std::to_string(v6) + " IPv6 entries, wanted 13");

  struct Want {
    Prefix prefix;
    Metric metric;
    std::vector<Address> via;  // empty: local
    std::optional<RouterId> orig;
  };
  const std::vector<Want> want = {
      {P("2001:db8:a::/64"), 0, {}, R("1111:1111:1111:1111")},
      {P("2001:db8:12::/64"), 0, {}, R("1111:1111:1111:1111")},
      {P("2001:db8:13::/64"), 0, {}, R("1111:1111:1111:1111")},
      {P("2001:db8:b::/64"), 96, {A("fe80:12::2")}, R("2222:2222:2222:2222")},
      {P("2001:db8:c::/64"), 96, {A("fe80:13::3")}, R("3333:3333:3333:3333")},
      {P("2001:db8:24::/64"), 96, {A("fe80:12::2")}, R("2222:2222:2222:2222")},
      {P("2001:db8:d::/64"), 192, {A("fe80:12::2")}, R("4444:4444:4444:4444")},
      {P("2001:db8:23::/64"), 96, {A("fe80:12::2"), A("fe80:13::3")}, std::nullopt},
  };
  if (selected.size() != want.size()) {
    o.fail(std::to_string(selected.size()) + " selected IPv6 prefixes, wanted " + std::to_string(want.size()));
  }
  for (const auto& w : want) {
    const auto it = selected.find(w.prefix);
    if (it == selected.end()) {
      o.fail("nothing selected for " + w.prefix.to_string());
      continue;
    }
    const RouteEntry& r = *it->second;
    if (r.metric != w.metric) o.fail(w.prefix.to_string() + " metric " + std::to_string(r.metric));
    if (w.via.empty() != r.local()) o.fail(w.prefix.to_string() + " local/remote mismatch");
    if (!w.via.empty() && std::find(w.via.begin(), w.via.end(), r.next_hop) == w.via.end()) {
      o.fail(w.prefix.to_string() + " via " + r.next_hop.to_string());
    }
    if (w.orig && r.router_id != *w.orig) o.fail(w.prefix.to_string() + " orig " + r.router_id.to_string());
  }
  if (o.passed) {
    o.detail = "13 IPv6 entries, 8 selected prefixes match; 2001:db8:23::/64 via " +
               selected[P("2001:db8:23::/64")]->next_hop.to_string();
  }
  return o;
}

// AC3: R2's view of 2001:db8:a::/64 across the R1-R2 failure at 40 s.
Outcome ac3() {
  Outcome o;
  auto s = load("scenarioC_linkfail.scenario");
  const Time t0 = 40s;
  const Prefix a = P("2001:db8:a::/64");
  const RouterId r1_id = R("1111:1111:1111:1111");
  auto kernel = scenario::build(s, s.settings.seed);
  const std::size_t r1 = *kernel->find_node("R1");
  const std::size_t r2 = *kernel->find_node("R2");
  const std::size_t r3 = *kernel->find_node("R3");
  const SeqNo initial = kernel->node(r1).own_seqno();

  struct State {
    Time at;
    Metric metric;
    Address via;
    RouterId orig;
    SeqNo seqno;
  };
  std::vector<State> states;
  kernel->set_observer([&](const sim::Kernel& k, Time now) {
    if (now < 30s) return;
    const RouteEntry* r = k.node(r2).selected_route(a);
    State st{now, r ? r->metric : kInfinity, r ? r->next_hop : Address{}, r ? r->router_id : RouterId{},
             r ? r->seqno : SeqNo{}};
    if (states.empty() || states.back().metric != st.metric || states.back().via != st.via) states.push_back(st);
  });
  kernel->run_until(70s);

  std::vector<Metric> metrics;
  for (const auto& st : states) metrics.push_back(st.metric);
  if (metrics != std::vector<Metric>{96, kInfinity, 192}) {
    std::string seen;
    for (auto m : metrics) seen += " " + std::to_string(m);
    o.fail("metric sequence" + seen);
    return o;
  }
  const auto& before = states[0];
  const auto& after = states[2];
  if (before.via != A("fe80:12::1")) o.fail("initial next hop " + before.via.to_string());
  if (after.via != A("fe80:23::3")) o.fail("final next hop " + after.via.to_string());
  if (after.orig != r1_id) o.fail("originator changed to " + after.orig.to_string());
  if (after.seqno != initial.next()) {
    o.fail("seqno " + std::to_string(after.seqno.value) + ", wanted " + std::to_string(initial.next().value));
  }
  const double reconvergence = seconds(after.at - t0);
  if (reconvergence >= 10.0) o.fail("reconvergence took " + std::to_string(reconvergence) + " s");

  // The request/update chain, checked on decoded TLVs.
  auto has_request = [&](const wire::Packet& p) {
    for (const auto& tlv : p.tlvs) {
      if (const auto* q = std::get_if<wire::SeqNoReq>(&tlv)) {
        if (q->prefix == a && q->router_id == r1_id && q->seqno == initial.next().value) return true;
      }
    }
    return false;
  };
  auto has_update = [&](const wire::Packet& p) {
    for (const auto& u : wire::decode_update_context(p.tlvs).updates) {
      if (u.prefix == a && u.router_id == r1_id && u.seqno == initial.next() && u.metric != kInfinity) return true;
    }
    return false;
  };
  struct Step {
    std::size_t from, to;
    std::function<bool(const wire::Packet&)> match;
    const char* name;
  };
  const std::vector<Step> chain = {{r2, r3, has_request, "SeqNoReq R2>R3"},
                                   {r3, r1, has_request, "SeqNoReq R3>R1"},
                                   {r1, r3, has_update, "Update R1>R3"},
                                   {r3, r2, has_update, "Update R3>R2"}};
  std::size_t step = 0;
  std::vector<double> when;
  for (const auto& rec : kernel->trace()) {
    if (step == chain.size()) break;
    if (rec.sent < t0) continue;
    if (rec.from != chain[step].from || rec.to != chain[step].to) continue;
    const auto p = packet_of(rec);
    if (p && chain[step].match(*p)) {
      when.push_back(seconds(rec.sent));
      ++step;
    }
  }
  if (step != chain.size()) o.fail(std::string("chain stops before ") + chain[step].name);
  if (o.passed) {
    std::ostringstream d;
    d << "96 -> 65535 -> 192 via fe80:23::3, seqno " << after.seqno.value << ", chain at";
    for (double w : when) d << " " << w;
    d << ", reconverged after " << reconvergence << " s";
    o.detail = d.str();
  }
  return o;
}

// AC4: codec round-trip and fuzzing.
Outcome ac4() {
  Outcome o;
  std::mt19937_64 rng(2024);
  constexpr int kRoundTrips = 10000;
  constexpr int kFuzz = 1000000;
  for (int i = 0; i < kRoundTrips; ++i) {
    const auto p = testing_support::random_packet(rng);
    const auto d = wire::decode_packet(wire::encode_packet(p));
    const auto* back = std::get_if<wire::Packet>(&d);
    if (!back || !(*back == p)) {
      o.fail("round-trip mismatch at packet " + std::to_string(i));
      return o;
    }
  }
  std::size_t decoded = 0;
  for (int i = 0; i < kFuzz; ++i) {
    const auto bytes = testing_support::mutated_input(rng);
    const auto d = wire::decode_packet(bytes);
    if (const auto* p = std::get_if<wire::Packet>(&d)) {
      ++decoded;
      wire::decode_update_context(p->tlvs);
    }
  }
  o.detail = std::to_string(kRoundTrips) + " round-trips, " + std::to_string(kFuzz) + " fuzz inputs (" +
             std::to_string(decoded) + " decoded), no crash";
  return o;
}

// AC5: is_feasible against a direct reading of the inequality.
Outcome ac5() {
  Outcome o;
  std::vector<long> seqnos;
  for (long base : {0L, 32768L}) {
    for (long d = -3; d <= 3; ++d) seqnos.push_back(((base + d) % 65536 + 65536) % 65536);
  }
  const std::vector<Metric> metrics = {0, 1, 95, 96, 120, 65534, 65535};
  auto greater = [](long b, long a) {
    // b is ahead of a when it lies 1..32767 steps forward of a.
    const long forward = ((b - a) % 65536 + 65536) % 65536;
    return forward >= 1 && forward <= 32767;
  };
  const Prefix p = P("2001:db8:a::/64");
  const RouterId id = R("1111:1111:1111:1111");
  std::size_t cases = 0;
  for (long sa : seqnos) {
    for (Metric ma : metrics) {
      SourceTable st;
      st[{p, id}] = SourceEntry{p, id, FeasibilityDistance{SeqNo{static_cast<std::uint16_t>(sa)}, ma}, {}};
      for (long sb : seqnos) {
        for (Metric mb : metrics) {
          const bool oracle = mb == 65535 || (sb == sa && mb < ma) || greater(sb, sa);
          const ResolvedUpdateIn u{p, id, std::nullopt, SeqNo{static_cast<std::uint16_t>(sb)}, mb, 0};
          ++cases;
          if (is_feasible(u, st) != oracle) {
            o.fail("FD=(" + std::to_string(sa) + "," + std::to_string(ma) + ") update=(" + std::to_string(sb) +
                   "," + std::to_string(mb) + ")");
          }
          if (!is_feasible(u, SourceTable{})) o.fail("update without a source entry rejected");
        }
      }
    }
  }
  if (o.passed) o.detail = std::to_string(cases) + " grid cases agree";
  return o;
}

// AC6: k-out-of-j against a counting oracle.
Outcome ac6() {
  Outcome o;
  std::size_t cases = 0;
  for (std::size_t j = 1; j <= 8; ++j) {
    for (unsigned bits = 0; bits < (1u << j); ++bits) {
      cost::HelloHistory h(j);
      std::size_t received = 0;
      std::uint16_t seq = 500;
      for (std::size_t i = 0; i < j; ++i) {
        if ((bits >> i) & 1u) {
          h.record_received(seq);
          ++received;
        } else {
          h.record_missed();
        }
        ++seq;
      }
      for (std::size_t k = 1; k <= j; ++k) {
        ++cases;
        const Metric want = received >= k ? Metric{96} : kInfinity;
        if (cost::rxcost_k_out_of_j(h, k, j, 96) != want) {
          o.fail("j=" + std::to_string(j) + " k=" + std::to_string(k) + " window=" + std::to_string(bits));
        }
      }
    }
  }
  if (o.passed) o.detail = std::to_string(cases) + " (window, k) cases agree";
  return o;
}

// AC7: loop freedom on random topologies, before and after a link failure.
Outcome ac7() {
  Outcome o;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(7);
  std::size_t max_routers = 0;
  std::size_t max_links = 0;
  for (int run = 0; run < 100; ++run) {
    const auto topo = testing_support::random_topology(rng, 8, 16);
    max_routers = std::max(max_routers, topo.routers);
    max_links = std::max(max_links, topo.links.size());
    auto kernel = testing_support::build_network(topo, 1000 + run);
    const std::size_t failed = testing_support::pick(rng, topo.links.size());
    bool before = true;
    kernel->schedule_probe(60s, [&before](sim::Kernel& k, Time) { before = sim::loop_free(k); });
    kernel->schedule_link_change(60s, failed, false);
    kernel->run_until(120s);
    if (!before) o.fail("loop before failure in topology " + std::to_string(run));
    if (!sim::loop_free(*kernel)) o.fail("loop after failing link " + std::to_string(failed) + " in topology " +
                                         std::to_string(run));
  }
  const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
  if (wall >= 60.0) o.fail("runtime " + std::to_string(wall) + " s");
  if (o.passed) {
    std::ostringstream d;
    d << "100 topologies (up to " << max_routers << " routers, " << max_links << " links) loop-free, runtime "
      << wall << " s";
    o.detail = d.str();
  }
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// AC8: two runs of scenario C write byte-identical files.
Outcome ac8() {
  Outcome o;
  const auto s = load("scenarioC_linkfail.scenario");
  const auto dir = std::filesystem::temp_directory_path() / ("babel_ac8_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  for (int i = 0; i < 2; ++i) {
    const auto report = scenario::run(s);
    std::ofstream(dir / ("trace" + std::to_string(i)), std::ios::binary) << report.trace;
    std::ofstream(dir / ("dumps" + std::to_string(i)), std::ios::binary) << report.dumps;
  }
  const auto t0 = slurp(dir / "trace0");
  const auto d0 = slurp(dir / "dumps0");
  if (t0.empty() || d0.empty()) o.fail("empty output");
  if (t0 != slurp(dir / "trace1")) o.fail("trace files differ");
  if (d0 != slurp(dir / "dumps1")) o.fail("dump files differ");
  std::filesystem::remove_all(dir);
  if (o.passed) o.detail = "trace " + std::to_string(t0.size()) + " bytes, dumps " + std::to_string(d0.size()) + " bytes, identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria = {
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4},
      {"AC5", ac5}, {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::cout << (o.passed ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    if (!o.passed) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
