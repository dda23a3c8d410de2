#include <cstdio>
#include <map>
#include <regex>
#include <sstream>

#include "babel/scenario.hpp"

namespace babel::scenario {

namespace {

std::shared_ptr<const cost::CostPolicy> make_policy(const Settings& st, const InterfaceDecl& d) {
  const auto name = d.cost.value_or(st.cost);
  const auto j = d.j.value_or(st.j);
  if (name == "etx") return std::make_shared<cost::Etx>(j);
  const auto kind = d.kind.value_or(LinkKind::wired);
  const Metric fallback = kind == LinkKind::wireless ? cost::kNominalWireless : cost::kNominalWired;
  const Metric nominal = d.nominal.value_or(st.nominal.value_or(fallback));
  return std::make_shared<cost::KOutOfJ>(d.k.value_or(st.k), j, nominal);
}

Metric selected_metric(const sim::Kernel& k, std::size_t node, const Prefix& p) {
  const RouteEntry* r = k.node(node).selected_route(p);
  return r ? r->metric : kInfinity;
}

}  // namespace

bool RunReport::passed() const {
  for (const auto& a : assertions) {
    if (!a.passed) return false;
  }
  return true;
}

std::string summarize_kinds(const std::vector<wire::TlvKind>& kinds) {
  std::string out;
  std::optional<wire::TlvKind> last;
  for (auto k : kinds) {
    using wire::TlvKind;
    if (k == TlvKind::PadI || k == TlvKind::PadN || k == TlvKind::RouterId || k == TlvKind::NextHop) continue;
    if (last == k) continue;
    if (!out.empty()) out += ",";
    out += wire::kind_name(k);
    last = k;
  }
  return out;
}

std::string summarize(const std::vector<std::string>& names, const sim::TraceRecord& r) {
  return names.at(r.from) + ">" + names.at(r.to) + " " + summarize_kinds(r.kinds);
}

std::unique_ptr<sim::Kernel> build(const Scenario& s, std::uint64_t seed) {
  auto kernel = std::make_unique<sim::Kernel>(seed);
  const auto& st = s.settings;

  std::map<std::string, std::size_t> node_index;
  std::map<std::pair<std::string, std::string>, sim::Endpoint> endpoints;
  std::map<std::string, std::vector<Time>> starts;
  for (const auto& e : s.events) {
    if (e.kind == EventDecl::Kind::start) starts[e.a.node].push_back(e.at);
  }

  for (const auto& n : s.nodes) {
    EngineConfig cfg;
    cfg.name = n.name;
    cfg.router_id = n.router_id;
    cfg.initial_seqno = SeqNo{n.seqno};
    cfg.ack_retractions = st.ack_retractions;
    std::size_t iface = 0;
    const std::size_t id = kernel->node_count();
    for (const auto& d : s.interfaces) {
      if (d.node != n.name) continue;
      InterfaceConfig ic;
      ic.name = d.name;
      ic.kind = d.kind.value_or(LinkKind::wired);
      ic.link_local = d.link_local;
      ic.ipv4 = d.ipv4;
      ic.prefixes = d.prefixes;
      ic.hello_interval = d.hello.value_or(st.hello_interval);
      ic.update_interval = d.update ? d.update : st.update_interval;
      ic.split_horizon = d.split_horizon.value_or(st.split_horizon);
      ic.cost = make_policy(st, d);
      cfg.interfaces.push_back(std::move(ic));
      endpoints[{d.node, d.name}] = sim::Endpoint{id, iface++};
    }
    auto sit = starts.find(n.name);
    node_index[n.name] = kernel->add_node(std::move(cfg), sit == starts.end() ? std::optional<Time>(Time{}) : std::nullopt);
    if (sit != starts.end()) {
      for (auto t : sit->second) kernel->schedule_node_start(t, id);
    }
  }

  std::map<LinkKey, std::size_t> link_index;
  for (const auto& l : s.links) {
    sim::LinkConfig lc;
    lc.a = endpoints.at({l.a.node, l.a.iface});
    lc.b = endpoints.at({l.b.node, l.b.iface});
    lc.delay = l.delay.value_or(st.delay);
    lc.loss = l.loss.value_or(st.loss);
    lc.up = l.up;
    link_index[link_key(l.a, l.b)] = kernel->add_link(lc);
  }
  for (const auto& e : s.events) {
    if (e.kind == EventDecl::Kind::start) continue;
    const auto idx = link_index.at(link_key(e.a, e.b));
    kernel->schedule_link_change(e.at, idx, e.kind == EventDecl::Kind::up);
  }
  return kernel;
}

RunReport run(const Scenario& s, std::optional<std::uint64_t> seed) {
  RunReport report;
  report.seed = seed.value_or(s.settings.seed);
  auto kernel = build(s, report.seed);
  for (std::size_t i = 0; i < kernel->node_count(); ++i) report.node_names.push_back(kernel->node_name(i));
  auto index_of = [&](const std::string& name) { return *kernel->find_node(name); };

  std::ostringstream dumps;
  for (const auto& p : s.probes) {
    const auto node = index_of(p.node);
    const auto what = p.what;
    kernel->schedule_probe(p.at, [&dumps, node, what](sim::Kernel& k, Time now) {
      const auto& e = k.node(node);
      static constexpr const char* kNames[] = {"routes", "neighbors", "sources"};
      dumps << "== " << format_time(now) << " " << e.config().name << " " << kNames[static_cast<int>(what)] << "\n";
      switch (what) {
        case ProbeDecl::What::routes:
          dumps << e.dump_routes();
          break;
        case ProbeDecl::What::neighbors:
          dumps << e.dump_neighbors();
          break;
        case ProbeDecl::What::sources:
          dumps << e.dump_sources();
          break;
      }
    });
  }

  report.assertions.resize(s.assertions.size());
  struct TransitionState {
    std::size_t assertion;
    std::size_t node;
    Prefix prefix;
    std::optional<Time> from;
    std::vector<Metric> seen;
  };
  std::vector<TransitionState> transitions;

  for (std::size_t i = 0; i < s.assertions.size(); ++i) {
    auto& result = report.assertions[i];
    result.line = s.assertions[i].loc.line;
    result.description = describe(s.assertions[i]);
    const auto& body = s.assertions[i].body;
    if (const auto* a = std::get_if<SelectedAssert>(&body)) {
      const auto node = index_of(a->node);
      kernel->schedule_probe(a->at, [&result, a, node](sim::Kernel& k, Time) {
        const RouteEntry* r = k.node(node).selected_route(a->prefix);
        if (!r) {
          result.detail = "no selected route";
          return;
        }
        std::ostringstream got;
        got << "metric=" << r->metric << " via=" << r->next_hop.to_string() << " orig=" << r->router_id.to_string()
            << " seqno=" << r->seqno.value;
        result.detail = got.str();
        bool ok = true;
        if (a->metric && r->metric != *a->metric) ok = false;
        if (!a->via.empty() && std::find(a->via.begin(), a->via.end(), r->next_hop) == a->via.end()) ok = false;
        if (a->orig && r->router_id != *a->orig) ok = false;
        if (a->seqno && r->seqno.value != *a->seqno) ok = false;
        result.passed = ok;
      });
    } else if (const auto* c = std::get_if<CountAssert>(&body)) {
      const auto node = index_of(c->node);
      kernel->schedule_probe(c->at, [&result, c, node](sim::Kernel& k, Time) {
        std::size_t n = 0;
        for (const auto& r : k.node(node).routes()) {
          if (c->family == CountAssert::Family::all || (c->family == CountAssert::Family::ipv4) == r.prefix.is_v4()) {
            ++n;
          }
        }
        result.detail = "count=" + std::to_string(n);
        result.passed = n == c->count;
      });
    } else if (const auto* l = std::get_if<LoopFreeAssert>(&body)) {
      kernel->schedule_probe(l->at, [&result](sim::Kernel& k, Time) {
        result.passed = sim::loop_free(k);
        result.detail = result.passed ? "no forwarding loop" : "forwarding loop present";
      });
    } else if (const auto* t = std::get_if<TransitionsAssert>(&body)) {
      transitions.push_back(TransitionState{i, index_of(t->node), t->prefix, t->from, {}});
    }
  }

  if (!transitions.empty()) {
    kernel->set_observer([&transitions](const sim::Kernel& k, Time now) {
      for (auto& ts : transitions) {
        if (ts.from && now < *ts.from) continue;
        const Metric m = selected_metric(k, ts.node, ts.prefix);
        if (ts.seen.empty() || ts.seen.back() != m) ts.seen.push_back(m);
      }
    });
  }

  kernel->run_until(s.settings.duration);

  for (auto& ts : transitions) {
    const auto& want = std::get<TransitionsAssert>(s.assertions[ts.assertion].body).metrics;
    auto& result = report.assertions[ts.assertion];
    std::ostringstream got;
    for (std::size_t i = 0; i < ts.seen.size(); ++i) got << (i ? " " : "") << ts.seen[i];
    result.detail = "observed " + got.str();
    result.passed = ts.seen == want;
  }

  for (std::size_t i = 0; i < s.assertions.size(); ++i) {
    const auto* t = std::get_if<TraceAssert>(&s.assertions[i].body);
    if (!t) continue;
    std::string text;
    std::size_t lines = 0;
    for (const auto& r : kernel->trace()) {
      if (t->from && r.delivered < *t->from) continue;
      if (t->until && r.delivered > *t->until) continue;
      if (t->link) {
        const auto& a = report.node_names[r.from];
        const auto& b = report.node_names[r.to];
        if (!((a == t->link->first && b == t->link->second) || (a == t->link->second && b == t->link->first))) {
          continue;
        }
      }
      text += summarize(report.node_names, r) + "\n";
      ++lines;
    }
    std::regex re(t->pattern, std::regex::ECMAScript | std::regex::multiline);
    auto& result = report.assertions[i];
    result.passed = std::regex_search(text, re);
    result.detail = "matched against " + std::to_string(lines) + " trace lines";
  }

  std::ostringstream trace;
  trace << "Ord.  Time      S>R TLVs\n";
  std::size_t ord = 0;
  for (const auto& r : kernel->trace()) {
    char head[32];
    std::snprintf(head, sizeof head, "%-5zu %-9s ", ++ord, format_time(r.sent).c_str());
    trace << head << summarize(report.node_names, r) << " (" << (r.unicast ? "unicast" : "multicast") << ", "
          << r.length << " bytes)\n";
    auto decoded = wire::decode_packet(r.bytes);
    if (const auto* p = std::get_if<wire::Packet>(&decoded)) {
      for (const auto& tlv : p->tlvs) trace << "    " << wire::describe(tlv) << "\n";
    }
  }
  report.trace = trace.str();
  report.dumps = dumps.str();
  report.counters = kernel->counters();
  report.records = kernel->trace();
  return report;
}

}  // namespace babel::scenario
