#include "babel/sim.hpp"

#include <set>
#include <stdexcept>

namespace babel::sim {

Kernel::Kernel(std::uint64_t seed) : rng_(seed) {}

double Kernel::uniform01() {
  // 53 random bits; independent of the standard library's distributions.
  return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

std::size_t Kernel::add_node(EngineConfig config, std::optional<Time> start_at) {
  Node n;
  n.engine = std::make_unique<Engine>(std::move(config), [this] { return uniform01(); });
  nodes_.push_back(std::move(n));
  const std::size_t id = nodes_.size() - 1;
  if (start_at) schedule_node_start(*start_at, id);
  return id;
}

std::size_t Kernel::add_link(const LinkConfig& link) {
  for (const auto& ep : {link.a, link.b}) {
    if (ep.node >= nodes_.size() || ep.iface >= nodes_[ep.node].engine->interface_count()) {
      throw std::invalid_argument("link endpoint does not exist");
    }
    if (link_of(ep.node, ep.iface)) throw std::invalid_argument("interface already has a link");
  }
  if (link.a == link.b) throw std::invalid_argument("link endpoints must differ");
  links_.push_back(Link{link, link.up, 0});
  return links_.size() - 1;
}

void Kernel::schedule_node_start(Time at, std::size_t node) { push(at, NodeStart{node}); }

void Kernel::schedule_link_change(Time at, std::size_t link, bool up) { push(at, LinkChange{link, up}); }

void Kernel::schedule_probe(Time at, Probe probe) {
  probes_.push_back(std::move(probe));
  push(at, ProbeEvent{probes_.size() - 1});
}

std::optional<std::size_t> Kernel::find_node(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (node_name(i) == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Kernel::link_of(std::size_t node, std::size_t iface) const {
  const Endpoint ep{node, iface};
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (links_[i].config.a == ep || links_[i].config.b == ep) return i;
  }
  return std::nullopt;
}

std::optional<Endpoint> Kernel::peer_of(std::size_t node, std::size_t iface) const {
  const auto l = link_of(node, iface);
  if (!l) return std::nullopt;
  const auto& cfg = links_[*l].config;
  return cfg.a == Endpoint{node, iface} ? cfg.b : cfg.a;
}

void Kernel::push(Time at, Payload payload) { queue_.push(Event{at, next_seq_++, std::move(payload)}); }

void Kernel::run_until(Time end) {
  while (!queue_.empty() && queue_.top().at <= end) {
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.at;
    ++counters_.events;
    std::visit([this](auto& e) { handle(e); }, ev.payload);
    if (observer_) observer_(*this, now_);
  }
  if (now_ < end) now_ = end;
}

void Kernel::handle(const NodeStart& e) {
  auto& engine = *nodes_[e.node].engine;
  if (engine.started()) return;
  transmit(e.node, engine.start(now_));
  for (std::size_t i = 0; i < engine.interface_count(); ++i) {
    const auto l = link_of(e.node, i);
    if (!l || !links_[*l].up) transmit(e.node, engine.link_status(i, false, now_));
  }
  reschedule(e.node);
}

void Kernel::handle(const Wake& e) {
  auto& node = nodes_[e.node];
  if (node.pending_wake != now_) return;  // superseded
  node.pending_wake.reset();
  transmit(e.node, node.engine->tick(now_));
  reschedule(e.node);
}

void Kernel::handle(Delivery& e) {
  const auto& link = links_[e.link];
  auto& receiver = *nodes_[e.to.node].engine;
  if (!link.up || link.epoch != e.epoch || !receiver.started()) {
    ++counters_.dropped;
    return;
  }
  const auto& sender_if = nodes_[e.from.node].engine->interface(e.from.iface).config;
  ++counters_.delivered;

  TraceRecord rec;
  rec.sent = e.sent;
  rec.delivered = now_;
  rec.from = e.from.node;
  rec.to = e.to.node;
  rec.link = e.link;
  rec.unicast = e.unicast;
  rec.length = e.bytes.size();
  if (auto decoded = wire::decode_packet(e.bytes); auto* p = std::get_if<wire::Packet>(&decoded)) {
    for (const auto& t : p->tlvs) rec.kinds.push_back(wire::kind_of(t));
  }
  rec.bytes = e.bytes;
  trace_.push_back(std::move(rec));

  transmit(e.to.node, receiver.deliver(e.bytes, sender_if.link_local, e.to.iface, e.unicast, now_));
  reschedule(e.to.node);
}

void Kernel::handle(const LinkChange& e) {
  auto& link = links_[e.link];
  if (link.up == e.up) return;
  link.up = e.up;
  ++link.epoch;
  for (const auto& ep : {link.config.a, link.config.b}) {
    auto& engine = *nodes_[ep.node].engine;
    if (!engine.started()) continue;
    transmit(ep.node, engine.link_status(ep.iface, e.up, now_));
    reschedule(ep.node);
  }
}

void Kernel::handle(const ProbeEvent& e) { probes_[e.index](*this, now_); }

void Kernel::transmit(std::size_t node, const Effects& effects) {
  for (const auto& pkt : effects) {
    ++counters_.sent;
    const auto l = link_of(node, pkt.iface);
    if (!l || !links_[*l].up) {
      ++counters_.dropped;
      continue;
    }
    const auto& link = links_[*l];
    const Endpoint from{node, pkt.iface};
    const Endpoint to = link.config.a == from ? link.config.b : link.config.a;
    if (pkt.destination) {
      const auto& cfg = nodes_[to.node].engine->interface(to.iface).config;
      if (*pkt.destination != cfg.link_local && (!cfg.ipv4 || *pkt.destination != *cfg.ipv4)) {
        ++counters_.dropped;
        continue;
      }
    }
    if (link.config.loss > 0.0 && uniform01() < link.config.loss) {
      ++counters_.lost;
      continue;
    }
    push(now_ + link.config.delay,
         Delivery{*l, link.epoch, from, to, pkt.destination.has_value(), now_, pkt.bytes});
  }
}

void Kernel::reschedule(std::size_t node) {
  auto& n = nodes_[node];
  auto deadline = n.engine->next_deadline();
  if (!deadline) return;
  // A deadline the engine could not clear at this instant is retried a tick later.
  if (*deadline <= now_) deadline = now_ + Duration(1);
  if (n.pending_wake && *n.pending_wake <= *deadline && *n.pending_wake > now_) return;
  n.pending_wake = deadline;
  push(*deadline, Wake{node});
}

bool has_forwarding_loop(const Kernel& kernel, std::size_t start, const Prefix& prefix) {
  std::set<std::size_t> visited;
  std::size_t current = start;
  while (true) {
    if (!visited.insert(current).second) return true;
    const RouteEntry* r = kernel.node(current).selected_route(prefix);
    if (!r || r->local()) return false;
    const auto peer = kernel.peer_of(current, r->neighbor->iface);
    if (!peer) return false;
    current = peer->node;
  }
}

bool loop_free(const Kernel& kernel) {
  std::set<Prefix> prefixes;
  for (std::size_t i = 0; i < kernel.node_count(); ++i) {
    for (const auto& r : kernel.node(i).routes()) prefixes.insert(r.prefix);
  }
  for (const auto& p : prefixes) {
    for (std::size_t i = 0; i < kernel.node_count(); ++i) {
      if (has_forwarding_loop(kernel, i, p)) return false;
    }
  }
  return true;
}

}  // namespace babel::sim
