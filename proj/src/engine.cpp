#include "babel/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace babel {

using namespace std::chrono_literals;

std::uint16_t to_centiseconds(Duration d) {
  const auto cs = d.count() / 10000;
  if (cs <= 0) return 0;
  return cs >= 0xFFFF ? 0xFFFF : static_cast<std::uint16_t>(cs);
}

Duration from_centiseconds(std::uint16_t cs) { return Duration(std::int64_t{cs} * 10000); }

namespace {

Duration scale(Duration d, double factor) {
  return Duration(static_cast<std::int64_t>(std::llround(static_cast<double>(d.count()) * factor)));
}

void min_into(std::optional<Time>& acc, std::optional<Time> t) {
  if (t && (!acc || *t < *acc)) acc = t;
}

bool same_tlv_slot(const wire::Tlv& a, const wire::Tlv& b) {
  if (a.index() != b.index()) return false;
  if (std::holds_alternative<wire::Hello>(a)) return true;
  if (const auto* ia = std::get_if<wire::Ihu>(&a)) return ia->address == std::get<wire::Ihu>(b).address;
  if (const auto* ra = std::get_if<wire::RouteReq>(&a)) return ra->prefix == std::get<wire::RouteReq>(b).prefix;
  if (const auto* sa = std::get_if<wire::SeqNoReq>(&a)) {
    const auto& sb = std::get<wire::SeqNoReq>(b);
    return sa->prefix == sb.prefix && sa->router_id == sb.router_id;
  }
  if (const auto* aa = std::get_if<wire::Ack>(&a)) return aa->nonce == std::get<wire::Ack>(b).nonce;
  return false;
}

// Coalesces an item into a pending list. Hellos are never duplicated;
// IHUs, Updates and requests for the same subject replace the older copy in place.
void merge_item(std::vector<BufferItem>& list, BufferItem item) {
  for (auto& existing : list) {
    if (existing.index() != item.index()) continue;
    if (const auto* u = std::get_if<UpdateItem>(&item)) {
      if (std::get<UpdateItem>(existing).prefix == u->prefix) {
        existing = std::move(item);
        return;
      }
      continue;
    }
    const auto& t = std::get<wire::Tlv>(item);
    const auto& e = std::get<wire::Tlv>(existing);
    if (same_tlv_slot(e, t)) {
      if (!std::holds_alternative<wire::Hello>(t)) existing = std::move(item);
      return;
    }
  }
  list.push_back(std::move(item));
}

bool route_better(const RouteEntry& a, const RouteEntry& b) {
  if (a.metric != b.metric) return a.metric < b.metric;
  if (a.router_id != b.router_id) return a.router_id > b.router_id;
  return a.next_hop > b.next_hop;
}

}  // namespace

bool is_feasible(const ResolvedUpdateIn& update, const SourceTable& sources) {
  const auto it = sources.find({update.prefix, update.router_id});
  std::optional<FeasibilityDistance> fd;
  if (it != sources.end()) fd = it->second.fd;
  return satisfies_fc(update.seqno, update.metric, fd);
}

Engine::Engine(EngineConfig config, std::function<double()> uniform01)
    : config_(std::move(config)), uniform01_(std::move(uniform01)), seqno_(config_.initial_seqno) {
  for (auto& ic : config_.interfaces) {
    if (!ic.cost) ic.cost = cost::default_wired_policy();
    if (ic.hello_interval < 10ms) ic.hello_interval = 10ms;
    InterfaceState st;
    st.config = ic;
    ifaces_.push_back(std::move(st));
  }
}

// ---------------------------------------------------------------------------
// Entry points

Effects Engine::start(Time now) {
  if (started_) return {};
  started_ = true;
  for (std::size_t i = 0; i < ifaces_.size(); ++i) {
    auto& st = ifaces_[i];
    st.up = true;
    st.hello_seqno = static_cast<std::uint16_t>(uniform01_() * 65536.0);
    st.next_update = now + st.config.effective_update_interval();
    for (const auto& p : st.config.prefixes) {
      if (is_local_prefix(p)) continue;
      RouteEntry r;
      r.id = next_route_id_++;
      r.prefix = p;
      r.next_hop = p.is_v4() && st.config.ipv4 ? *st.config.ipv4 : st.config.link_local;
      r.router_id = config_.router_id;
      r.refmetric = 0;
      r.metric = 0;
      r.seqno = seqno_;
      r.selected = true;
      routes_.push_back(r);
      // Connected prefixes are advertised by dumps, not by a triggered update.
      announced_[p] = Announcement{config_.router_id, seqno_, 0, std::nullopt};
    }
  }
  for (std::size_t i = 0; i < ifaces_.size(); ++i) {
    queue_hello(i, now);
    queue(i, std::nullopt, wire::Tlv{wire::RouteReq{}}, now);
  }
  return flush_due(now);
}

Effects Engine::deliver(std::span<const std::uint8_t> bytes, const Address& from, std::size_t iface,
                        bool unicast, Time now) {
  if (!started_ || iface >= ifaces_.size() || !ifaces_[iface].up) return {};
  auto decoded = wire::decode_packet(bytes);
  const auto* packet = std::get_if<wire::Packet>(&decoded);
  if (!packet) return flush_due(now);

  const auto context = wire::decode_update_context(packet->tlvs);
  auto resolved = context.updates.begin();
  const NeighborKey key{iface, from};

  for (std::size_t i = 0; i < packet->tlvs.size(); ++i) {
    const auto& tlv = packet->tlvs[i];
    const auto nit = neighbors_.find(key);
    NeighborEntry* neighbor = nit == neighbors_.end() ? nullptr : &nit->second;
    switch (wire::kind_of(tlv)) {
      case wire::TlvKind::Hello:
        process_hello(std::get<wire::Hello>(tlv), key, now);
        break;
      case wire::TlvKind::Ihu:
        if (neighbor) process_ihu(std::get<wire::Ihu>(tlv), *neighbor, now);
        break;
      case wire::TlvKind::Update:
        while (resolved != context.updates.end() && resolved->tlv_index < i) ++resolved;
        if (resolved != context.updates.end() && resolved->tlv_index == i && neighbor) {
          process_update(ResolvedUpdateIn{resolved->prefix, resolved->router_id, resolved->next_hop,
                                          resolved->seqno, resolved->metric, resolved->interval},
                         *neighbor, now);
        }
        break;
      case wire::TlvKind::RouteReq:
        if (neighbor) process_route_req(std::get<wire::RouteReq>(tlv), *neighbor, unicast, now);
        break;
      case wire::TlvKind::SeqNoReq:
        if (neighbor) process_seqno_req(std::get<wire::SeqNoReq>(tlv), *neighbor, now);
        break;
      case wire::TlvKind::AckReq: {
        const auto& req = std::get<wire::AckReq>(tlv);
        queue(iface, from, wire::Tlv{wire::Ack{req.nonce}}, now, from_centiseconds(req.interval));
        break;
      }
      case wire::TlvKind::Ack:
        if (neighbor) process_ack(std::get<wire::Ack>(tlv), *neighbor);
        break;
      default:
        break;
    }
  }
  return flush_due(now);
}

Effects Engine::link_status(std::size_t iface, bool up, Time now) {
  if (iface >= ifaces_.size()) return {};
  auto& st = ifaces_[iface];
  if (!started_ || st.up == up) return flush_due(now);
  if (!up) {
    st.up = false;
    st.multicast.clear();
    st.unicast.clear();
    st.unicast_last_used.clear();
    st.flush_at.reset();
    std::vector<NeighborKey> gone;
    for (const auto& [key, n] : neighbors_) {
      if (key.iface == iface) gone.push_back(key);
    }
    for (const auto& key : gone) flush_neighbor(key, now);
  } else {
    st.up = true;
    st.next_update = now + st.config.effective_update_interval();
    queue_hello(iface, now);
    queue(iface, std::nullopt, wire::Tlv{wire::RouteReq{}}, now);
  }
  return flush_due(now);
}

Effects Engine::tick(Time now) {
  if (!started_) return {};

  for (std::size_t i = 0; i < ifaces_.size(); ++i) {
    auto& st = ifaces_[i];
    if (!st.up) continue;
    if (now >= st.next_hello) queue_hello(i, now);
    if (now >= st.next_update) {
      queue_full_dump(i, now);
      st.next_update = now + st.config.effective_update_interval();
    }
  }

  std::vector<NeighborKey> keys;
  for (const auto& [key, n] : neighbors_) keys.push_back(key);
  for (const auto& key : keys) {
    auto it = neighbors_.find(key);
    if (it == neighbors_.end()) continue;
    auto& n = it->second;
    bool dead = false;
    bool changed = false;
    while (now >= n.hello_deadline) {
      n.history.record_missed();
      n.hello_deadline += n.hello_interval;
      changed = true;
      if (n.history.received() == 0) {
        dead = true;
        break;
      }
    }
    if (dead) {
      flush_neighbor(key, now);
      continue;
    }
    if (n.ihu_deadline && now >= *n.ihu_deadline) {
      n.txcost = kInfinity;
      n.ihu_deadline.reset();
      changed = true;
    }
    if (changed) update_costs(n, now);
  }

  std::set<Prefix> touched;
  for (auto& r : routes_) {
    if (r.local()) continue;
    if (r.expiry && now >= *r.expiry) {
      poison(r, now);
      touched.insert(r.prefix);
    }
    if (r.bef_expiry && now >= *r.bef_expiry) {
      r.bef_expiry.reset();
      if (r.selected && neighbors_.count(*r.neighbor)) {
        queue(r.neighbor->iface, r.neighbor->address, wire::Tlv{wire::RouteReq{r.prefix}}, now);
      }
    }
  }
  std::erase_if(routes_, [&](const RouteEntry& r) {
    if (r.remove_at && now >= *r.remove_at && !r.selected) {
      touched.insert(r.prefix);
      return true;
    }
    return false;
  });
  for (const auto& p : touched) select_routes(p, now);

  std::erase_if(sources_, [&](const auto& kv) { return now >= kv.second.gc_deadline; });

  std::vector<PendingRequest> resend;
  std::erase_if(pending_, [&](PendingRequest& pr) {
    if (now < pr.resend_at) return false;
    if (pr.retries_left <= 0) return true;
    --pr.retries_left;
    pr.resend_at = now + config_.timers.request_resend;
    resend.push_back(pr);
    return false;
  });
  for (const auto& pr : resend) send_request(pr, now);

  std::vector<PendingAck> ack_resend;
  std::erase_if(pending_acks_, [&](PendingAck& pa) {
    if (pa.awaiting.empty()) return true;
    if (now < pa.resend_at) return false;
    if (pa.retries_left <= 0) return true;
    --pa.retries_left;
    pa.resend_at = now + config_.timers.ack_resend;
    ack_resend.push_back(pa);
    return false;
  });
  for (const auto& pa : ack_resend) {
    for (const auto& item : pa.payload) queue(pa.iface, std::nullopt, item, now);
    queue(pa.iface, std::nullopt,
          wire::Tlv{wire::AckReq{pa.nonce, to_centiseconds(config_.timers.ack_resend)}}, now);
  }

  for (auto& st : ifaces_) {
    std::erase_if(st.unicast_last_used, [&](const auto& kv) {
      auto u = st.unicast.find(kv.first);
      const bool idle = u == st.unicast.end() || u->second.empty();
      if (idle && now >= kv.second + config_.timers.buffer_gc) {
        if (u != st.unicast.end()) st.unicast.erase(u);
        return true;
      }
      return false;
    });
  }

  return flush_due(now);
}

std::optional<Time> Engine::next_deadline() const {
  if (!started_) return std::nullopt;
  std::optional<Time> t;
  for (const auto& st : ifaces_) {
    if (!st.up) continue;
    min_into(t, st.next_hello);
    min_into(t, st.next_update);
    min_into(t, st.flush_at);
    for (const auto& [addr, used] : st.unicast_last_used) min_into(t, used + config_.timers.buffer_gc);
  }
  for (const auto& [key, n] : neighbors_) {
    min_into(t, n.hello_deadline);
    min_into(t, n.ihu_deadline);
  }
  for (const auto& r : routes_) {
    if (r.metric != kInfinity) min_into(t, r.expiry);
    min_into(t, r.bef_expiry);
    if (!r.selected) min_into(t, r.remove_at);
  }
  for (const auto& [key, s] : sources_) min_into(t, s.gc_deadline);
  for (const auto& pr : pending_) min_into(t, pr.resend_at);
  for (const auto& pa : pending_acks_) min_into(t, pa.resend_at);
  return t;
}

// ---------------------------------------------------------------------------
// TLV processing

void Engine::process_hello(const wire::Hello& hello, const NeighborKey& from, Time now) {
  auto& st = ifaces_[from.iface];
  auto it = neighbors_.find(from);
  const bool is_new = it == neighbors_.end();
  if (is_new) {
    NeighborEntry n;
    n.key = from;
    n.history = cost::HelloHistory(st.config.cost->window());
    it = neighbors_.emplace(from, std::move(n)).first;
  }
  auto& n = it->second;
  const Metric old_rxcost = n.rxcost;
  n.history.record_received(hello.seqno);
  n.hello_interval = hello.interval ? from_centiseconds(hello.interval) : st.config.hello_interval;
  if (n.hello_interval < 10ms) n.hello_interval = 10ms;
  n.hello_deadline = now + scale(n.hello_interval, config_.timers.hello_miss_factor);
  update_costs(n, now);

  if (is_new || n.rxcost != old_rxcost) queue_hello(from.iface, now);
  if (old_rxcost == kInfinity && n.rxcost != kInfinity) {
    queue(from.iface, from.address, wire::Tlv{wire::RouteReq{}}, now);
  }
}

void Engine::process_ihu(const wire::Ihu& ihu, NeighborEntry& n, Time now) {
  if (ihu.address && !owns_address(n.key.iface, *ihu.address)) return;
  const Metric old = n.txcost;
  n.txcost = ihu.rxcost;
  const Duration interval =
      ihu.interval ? from_centiseconds(ihu.interval) : ifaces_[n.key.iface].config.hello_interval;
  n.ihu_deadline = now + scale(interval, config_.timers.ihu_hold_factor);
  if (old != n.txcost) queue_ihu(n.key.iface, n, now);
  update_costs(n, now);
}

void Engine::process_update(const ResolvedUpdateIn& u, NeighborEntry& n, Time now) {
  if (u.router_id == config_.router_id) return;
  // Routes are only learned over links that are usable in both directions.
  if (n.cost == kInfinity) return;

  Address next_hop;
  if (u.next_hop) {
    next_hop = *u.next_hop;
  } else if (!u.prefix.is_v4() || u.metric == kInfinity) {
    next_hop = n.key.address;
  } else {
    return;
  }

  const bool feasible = is_feasible(u, sources_);
  RouteEntry* route = find_route(u.prefix, n.key);
  if (!route) {
    if (u.metric == kInfinity) return;
    if (!feasible) {
      if (!selected_route(u.prefix)) {
        if (auto fd = fd_for(u.prefix, u.router_id)) {
          start_request(u.prefix, u.router_id, fd->seqno.next(), n.key, now);
        }
      }
      return;
    }
    RouteEntry r;
    r.id = next_route_id_++;
    r.prefix = u.prefix;
    r.neighbor = n.key;
    routes_.push_back(r);
    route = &routes_.back();
  }

  route->router_id = u.router_id;
  route->seqno = u.seqno;
  route->next_hop = next_hop;
  route->refmetric = u.metric;
  route->metric = compute_metric(u.metric, n.cost);
  if (u.metric == kInfinity) {
    route->expiry.reset();
    route->bef_expiry.reset();
    if (!route->remove_at) route->remove_at = now + hold_time(*route);
  } else {
    const Duration interval = u.interval ? from_centiseconds(u.interval)
                                         : ifaces_[n.key.iface].config.effective_update_interval();
    route->update_interval = interval;
    const Duration expiry = scale(interval, config_.timers.route_expiry_factor);
    route->expiry = now + expiry;
    route->bef_expiry = now + scale(expiry, config_.timers.route_bef_fraction);
    route->remove_at.reset();
  }

  if (u.metric != kInfinity) {
    std::set<NeighborKey> requesters;
    std::erase_if(pending_, [&](const PendingRequest& pr) {
      if (pr.prefix == u.prefix && pr.router_id == u.router_id && !seqno_less(u.seqno, pr.seqno)) {
        requesters.insert(pr.requesters.begin(), pr.requesters.end());
        return true;
      }
      return false;
    });
    for (const auto& req : requesters) queue_prefix_update(req.iface, std::nullopt, u.prefix, now);
  }

  select_routes(u.prefix, now);

  if (!feasible && u.metric != kInfinity && !selected_route(u.prefix)) {
    if (auto fd = fd_for(u.prefix, u.router_id)) {
      start_request(u.prefix, u.router_id, fd->seqno.next(), n.key, now);
    }
  }
}

void Engine::process_route_req(const wire::RouteReq& req, const NeighborEntry& n, bool unicast, Time now) {
  if (!req.prefix) {
    queue_full_dump(n.key.iface, now);
    return;
  }
  queue_prefix_update(n.key.iface, unicast ? std::optional<Address>(n.key.address) : std::nullopt,
                      *req.prefix, now);
}

void Engine::process_seqno_req(const wire::SeqNoReq& req, const NeighborEntry& n, Time now) {
  const SeqNo requested{req.seqno};
  if (req.router_id == config_.router_id && is_local_prefix(req.prefix)) {
    if (seqno_less(seqno_, requested)) {
      seqno_ = seqno_.next();
      std::set<Prefix> locals;
      for (auto& r : routes_) {
        if (r.local()) {
          r.seqno = seqno_;
          locals.insert(r.prefix);
        }
      }
      for (const auto& p : locals) select_routes(p, now);
    } else {
      queue_prefix_update(n.key.iface, std::nullopt, req.prefix, now);
    }
    return;
  }

  const RouteEntry* sel = selected_route(req.prefix);
  if (sel && (sel->router_id != req.router_id || !seqno_less(sel->seqno, requested))) {
    queue_prefix_update(n.key.iface, std::nullopt, req.prefix, now);
    return;
  }
  if (req.hop_count <= 1 || !sel || sel->local() || *sel->neighbor == n.key) return;

  for (auto& pr : pending_) {
    if (pr.prefix == req.prefix && pr.router_id == req.router_id && !seqno_less(pr.seqno, requested)) {
      pr.requesters.insert(n.key);
      return;
    }
  }
  std::erase_if(pending_, [&](const PendingRequest& pr) {
    return pr.prefix == req.prefix && pr.router_id == req.router_id;
  });
  PendingRequest pr;
  pr.prefix = req.prefix;
  pr.router_id = req.router_id;
  pr.seqno = requested;
  pr.target = *sel->neighbor;
  pr.hop_count = static_cast<std::uint8_t>(req.hop_count - 1);
  pr.retries_left = config_.timers.request_retries;
  pr.resend_at = now + config_.timers.request_resend;
  pr.requesters.insert(n.key);
  send_request(pr, now);
  pending_.push_back(std::move(pr));
}

void Engine::process_ack_req(const wire::AckReq& req, const NeighborEntry& n, Time now) {
  queue(n.key.iface, n.key.address, wire::Tlv{wire::Ack{req.nonce}}, now, from_centiseconds(req.interval));
}

void Engine::process_ack(const wire::Ack& ack, const NeighborEntry& n) {
  for (auto& pa : pending_acks_) {
    if (pa.nonce == ack.nonce && pa.iface == n.key.iface) pa.awaiting.erase(n.key.address);
  }
  std::erase_if(pending_acks_, [](const PendingAck& pa) { return pa.awaiting.empty(); });
}

// ---------------------------------------------------------------------------
// Route selection and announcements

void Engine::select_routes(const Prefix& prefix, Time now) {
  RouteEntry* old = nullptr;
  RouteEntry* best = nullptr;
  for (auto& r : routes_) {
    if (r.prefix != prefix) continue;
    if (r.selected) old = &r;
    if (r.metric == kInfinity) continue;
    if (!r.local() && !route_feasible(r)) continue;
    if (!best || route_better(r, *best)) best = &r;
  }
  if (old != best) {
    if (old) old->selected = false;
    if (best) best->selected = true;
  }

  if (best && !best->local()) {
    const SourceKey key{prefix, best->router_id};
    const FeasibilityDistance candidate{best->seqno, best->metric};
    auto it = sources_.find(key);
    if (it == sources_.end()) {
      sources_.emplace(key, SourceEntry{prefix, best->router_id, candidate, now + config_.timers.source_gc});
    } else {
      if (fd_better(candidate, it->second.fd)) it->second.fd = candidate;
      it->second.gc_deadline = now + config_.timers.source_gc;
    }
  }

  std::optional<Announcement> current;
  if (best) {
    current = Announcement{best->router_id, best->seqno, best->metric,
                           best->neighbor ? std::optional<std::size_t>(best->neighbor->iface) : std::nullopt};
  }
  std::optional<Announcement> previous;
  if (auto it = announced_.find(prefix); it != announced_.end()) previous = it->second;

  const bool had = previous && previous->metric != kInfinity;
  const bool changed =
      had != current.has_value() ||
      (current && (previous->router_id != current->router_id || previous->seqno != current->seqno ||
                   previous->metric != current->metric || previous->via_iface != current->via_iface));
  if (changed) {
    announce(prefix, previous, current, now);
    if (current) {
      announced_[prefix] = *current;
    } else if (previous) {
      announced_[prefix].metric = kInfinity;
    }
  }

  if (!best && old) {
    const auto fd = fd_for(prefix, old->router_id);
    const SeqNo wanted = fd ? fd->seqno.next() : old->seqno.next();
    std::optional<NeighborKey> target;
    if (old->neighbor) {
      auto nit = neighbors_.find(*old->neighbor);
      if (nit != neighbors_.end() && nit->second.cost != kInfinity) target = *old->neighbor;
    }
    start_request(prefix, old->router_id, wanted, target, now);
  }
}

void Engine::announce(const Prefix& prefix, const std::optional<Announcement>& previous,
                      const std::optional<Announcement>& current, Time now) {
  for (std::size_t i = 0; i < ifaces_.size(); ++i) {
    auto& st = ifaces_[i];
    if (!st.up) continue;
    const std::uint16_t interval = update_interval_cs(i);
    if (current) {
      if (current->via_iface == i && st.config.split_horizon) {
        // The neighbors behind this interface may still hold our earlier route.
        if (previous && previous->metric != kInfinity && previous->via_iface != i) {
          queue(i, std::nullopt, UpdateItem{prefix, previous->router_id, previous->seqno, kInfinity, interval},
                now);
        }
        continue;
      }
      queue(i, std::nullopt, UpdateItem{prefix, current->router_id, current->seqno, current->metric, interval},
            now);
      continue;
    }
    if (!previous) continue;
    UpdateItem retraction{prefix, previous->router_id, previous->seqno, kInfinity, interval};
    queue(i, std::nullopt, retraction, now);
    if (config_.ack_retractions) {
      PendingAck pa;
      pa.nonce = next_nonce_++;
      pa.iface = i;
      for (const auto& [key, n] : neighbors_) {
        if (key.iface == i) pa.awaiting.insert(key.address);
      }
      if (pa.awaiting.empty()) continue;
      pa.payload.push_back(retraction);
      pa.retries_left = config_.timers.ack_retries;
      pa.resend_at = now + config_.timers.ack_resend;
      queue(i, std::nullopt, wire::Tlv{wire::AckReq{pa.nonce, to_centiseconds(config_.timers.ack_resend)}}, now);
      pending_acks_.push_back(std::move(pa));
    }
  }
}

void Engine::start_request(const Prefix& prefix, const RouterId& router_id, SeqNo seqno,
                           std::optional<NeighborKey> target, Time now) {
  for (const auto& pr : pending_) {
    if (pr.prefix == prefix && pr.router_id == router_id && !seqno_less(pr.seqno, seqno)) return;
  }
  std::erase_if(pending_, [&](const PendingRequest& pr) {
    return pr.prefix == prefix && pr.router_id == router_id;
  });
  PendingRequest pr;
  pr.prefix = prefix;
  pr.router_id = router_id;
  pr.seqno = seqno;
  pr.target = std::move(target);
  pr.hop_count = config_.timers.request_hop_count;
  pr.retries_left = config_.timers.request_retries;
  pr.resend_at = now + config_.timers.request_resend;
  send_request(pr, now);
  pending_.push_back(std::move(pr));
}

void Engine::send_request(const PendingRequest& pr, Time now) {
  const wire::Tlv tlv{wire::SeqNoReq{pr.prefix, pr.seqno.value, pr.hop_count, pr.router_id}};
  if (pr.target && neighbors_.count(*pr.target)) {
    queue(pr.target->iface, pr.target->address, tlv, now);
    return;
  }
  for (std::size_t i = 0; i < ifaces_.size(); ++i) {
    if (ifaces_[i].up) queue(i, std::nullopt, tlv, now);
  }
}

// ---------------------------------------------------------------------------
// Neighbor and route maintenance

void Engine::update_costs(NeighborEntry& n, Time now) {
  const auto& policy = *ifaces_[n.key.iface].config.cost;
  n.rxcost = policy.rxcost(n.history);
  const Metric cost = policy.link_cost(n.rxcost, n.txcost);
  if (cost == n.cost) return;
  n.cost = cost;
  std::set<Prefix> touched;
  for (auto& r : routes_) {
    if (r.neighbor != n.key) continue;
    r.metric = compute_metric(r.refmetric, cost);
    touched.insert(r.prefix);
  }
  for (const auto& p : touched) select_routes(p, now);
}

void Engine::flush_neighbor(const NeighborKey& key, Time now) {
  std::set<Prefix> touched;
  for (auto& r : routes_) {
    if (r.neighbor == key) {
      poison(r, now);
      touched.insert(r.prefix);
    }
  }
  neighbors_.erase(key);
  for (auto& pr : pending_) {
    if (pr.target == key) pr.target.reset();
    pr.requesters.erase(key);
  }
  for (auto& pa : pending_acks_) {
    if (pa.iface == key.iface) pa.awaiting.erase(key.address);
  }
  auto& st = ifaces_[key.iface];
  st.unicast.erase(key.address);
  st.unicast_last_used.erase(key.address);
  for (const auto& p : touched) select_routes(p, now);
}

void Engine::poison(RouteEntry& route, Time now) {
  route.refmetric = kInfinity;
  route.metric = kInfinity;
  route.expiry.reset();
  route.bef_expiry.reset();
  if (!route.remove_at) route.remove_at = now + hold_time(route);
}

// ---------------------------------------------------------------------------
// Buffering

Duration Engine::jitter(Duration max) {
  const double u = uniform01_ ? uniform01_() : 0.0;
  return scale(max, 0.75 + 0.25 * u);
}

void Engine::queue(std::size_t iface, const std::optional<Address>& dest, BufferItem item, Time now,
                   std::optional<Duration> max_delay) {
  auto& st = ifaces_[iface];
  if (!st.up) return;
  if (dest) {
    merge_item(st.unicast[*dest], std::move(item));
    st.unicast_last_used[*dest] = now;
  } else {
    merge_item(st.multicast, std::move(item));
  }
  Duration delay = jitter(std::min<Duration>(st.config.hello_interval / 2, config_.timers.max_flush_delay));
  if (max_delay) delay = std::min(delay, *max_delay);
  const Time at = now + delay;
  if (!st.flush_at || at < *st.flush_at) st.flush_at = at;
}

void Engine::queue_hello(std::size_t iface, Time now) {
  auto& st = ifaces_[iface];
  if (!st.up) return;
  const bool pending = std::any_of(st.multicast.begin(), st.multicast.end(), [](const BufferItem& item) {
    const auto* tlv = std::get_if<wire::Tlv>(&item);
    return tlv && std::holds_alternative<wire::Hello>(*tlv);
  });
  if (!pending) {
    queue(iface, std::nullopt,
          wire::Tlv{wire::Hello{st.hello_seqno++, to_centiseconds(st.config.hello_interval)}}, now);
  }
  for (const auto& [key, n] : neighbors_) {
    if (key.iface == iface) queue_ihu(iface, n, now);
  }
  st.next_hello = now + st.config.hello_interval;
}

void Engine::queue_ihu(std::size_t iface, const NeighborEntry& n, Time now) {
  queue(iface, std::nullopt,
        wire::Tlv{wire::Ihu{n.key.address, n.rxcost, to_centiseconds(ifaces_[iface].config.hello_interval)}},
        now);
}

std::optional<UpdateItem> Engine::advertisement_for(std::size_t iface, const Prefix& prefix) const {
  const auto& st = ifaces_[iface];
  const std::uint16_t interval = update_interval_cs(iface);
  if (const RouteEntry* sel = selected_route(prefix)) {
    if (!sel->local() && st.config.split_horizon && sel->neighbor->iface == iface) return std::nullopt;
    return UpdateItem{prefix, sel->router_id, sel->seqno, sel->metric, interval};
  }
  auto it = announced_.find(prefix);
  if (it == announced_.end()) return std::nullopt;
  return UpdateItem{prefix, it->second.router_id, it->second.seqno, kInfinity, interval};
}

void Engine::queue_full_dump(std::size_t iface, Time now) {
  std::set<Prefix> seen;
  for (const auto& r : routes_) {
    if (!seen.insert(r.prefix).second) continue;
    if (auto item = advertisement_for(iface, r.prefix)) queue(iface, std::nullopt, *item, now);
  }
}

void Engine::queue_prefix_update(std::size_t iface, const std::optional<Address>& dest, const Prefix& prefix,
                                 Time now) {
  if (auto item = advertisement_for(iface, prefix)) {
    queue(iface, dest, *item, now);
    return;
  }
  const RouteEntry* sel = selected_route(prefix);
  queue(iface, dest,
        UpdateItem{prefix, sel ? sel->router_id : config_.router_id, sel ? sel->seqno : seqno_, kInfinity,
                   update_interval_cs(iface)},
        now);
}

Effects Engine::flush_due(Time now) {
  Effects out;
  for (std::size_t i = 0; i < ifaces_.size(); ++i) {
    auto& st = ifaces_[i];
    if (st.flush_at && now >= *st.flush_at) flush_interface(i, out);
  }
  return out;
}

void Engine::flush_interface(std::size_t iface, Effects& out) {
  auto& st = ifaces_[iface];
  st.flush_at.reset();
  if (!st.up) return;
  if (!st.multicast.empty()) build_packets(iface, std::nullopt, st.multicast, out);
  st.multicast.clear();
  for (auto& [addr, items] : st.unicast) {
    if (!items.empty()) build_packets(iface, addr, items, out);
    items.clear();
  }
}

void Engine::build_packets(std::size_t iface, const std::optional<Address>& dest,
                           const std::vector<BufferItem>& items, Effects& out) const {
  const auto& ipv4 = ifaces_[iface].config.ipv4;
  std::vector<wire::Tlv> current;
  std::size_t size = 0;
  std::optional<RouterId> ctx_router_id;
  bool ctx_next_hop = false;

  auto finish = [&] {
    if (current.empty()) return;
    out.push_back(OutgoingPacket{iface, dest, wire::encode_packet(wire::Packet{std::move(current)})});
    current.clear();
    size = 0;
    ctx_router_id.reset();
    ctx_next_hop = false;
  };
  auto make_group = [&](const BufferItem& item) {
    std::vector<wire::Tlv> group;
    if (const auto* tlv = std::get_if<wire::Tlv>(&item)) {
      group.push_back(*tlv);
      return group;
    }
    const auto& u = std::get<UpdateItem>(item);
    if (u.prefix.is_v4() && !ipv4 && u.metric != kInfinity) return group;
    if (u.prefix.is_v4() && ipv4 && !ctx_next_hop) group.push_back(wire::NextHop{*ipv4});
    if (ctx_router_id != u.router_id) group.push_back(wire::RouterIdTlv{u.router_id});
    group.push_back(wire::Update{u.prefix, 0, 0, u.interval, u.seqno.value, u.metric});
    return group;
  };

  for (const auto& item : items) {
    auto group = make_group(item);
    if (group.empty()) continue;
    std::size_t group_size = 0;
    for (const auto& t : group) group_size += wire::encoded_size(t);
    if (size + group_size > config_.max_packet_body && !current.empty()) {
      finish();
      group = make_group(item);
      group_size = 0;
      for (const auto& t : group) group_size += wire::encoded_size(t);
    }
    for (auto& t : group) {
      if (const auto* rid = std::get_if<wire::RouterIdTlv>(&t)) ctx_router_id = rid->router_id;
      if (std::holds_alternative<wire::NextHop>(t)) ctx_next_hop = true;
      current.push_back(std::move(t));
    }
    size += group_size;
  }
  finish();
}

// ---------------------------------------------------------------------------
// Lookups and dumps

RouteEntry* Engine::find_route(const Prefix& prefix, const NeighborKey& key) {
  for (auto& r : routes_) {
    if (r.prefix == prefix && r.neighbor == key) return &r;
  }
  return nullptr;
}

const RouteEntry* Engine::selected_route(const Prefix& prefix) const {
  for (const auto& r : routes_) {
    if (r.prefix == prefix && r.selected) return &r;
  }
  return nullptr;
}

std::optional<FeasibilityDistance> Engine::fd_for(const Prefix& prefix, const RouterId& id) const {
  auto it = sources_.find({prefix, id});
  if (it == sources_.end()) return std::nullopt;
  return it->second.fd;
}

bool Engine::route_feasible(const RouteEntry& route) const {
  return satisfies_fc(route.seqno, route.refmetric, fd_for(route.prefix, route.router_id));
}

bool Engine::is_local_prefix(const Prefix& prefix) const {
  return std::any_of(routes_.begin(), routes_.end(),
                     [&](const RouteEntry& r) { return r.local() && r.prefix == prefix; });
}

bool Engine::owns_address(std::size_t iface, const Address& address) const {
  const auto& cfg = ifaces_[iface].config;
  return address == cfg.link_local || (cfg.ipv4 && address == *cfg.ipv4);
}

Duration Engine::hold_time(const RouteEntry& route) const {
  if (route.neighbor) return ifaces_[route.neighbor->iface].config.effective_update_interval();
  return ifaces_.empty() ? Duration(std::chrono::seconds(16)) : ifaces_[0].config.effective_update_interval();
}

std::uint16_t Engine::update_interval_cs(std::size_t iface) const {
  return to_centiseconds(ifaces_[iface].config.effective_update_interval());
}

std::string Engine::dump_routes() const {
  std::ostringstream os;
  std::size_t i = 0;
  for (const auto& r : routes_) {
    os << "[" << i++ << "] = " << (r.selected ? "> " : "") << r.prefix.to_string();
    if (r.local()) {
      os << " local metric:" << r.metric << " orig:" << r.router_id.to_string() << "\n";
      continue;
    }
    os << " NH" << r.next_hop.to_string() << " metric:" << r.metric << " orig:" << r.router_id.to_string()
       << " from:" << r.neighbor->address.to_string() << " RD:(" << r.seqno.value << ", " << r.refmetric << ")";
    if (r.selected) os << ", in RT";
    os << "\n";
  }
  return os.str();
}

std::string Engine::dump_neighbors() const {
  std::ostringstream os;
  for (const auto& [key, n] : neighbors_) {
    os << n.key.address.to_string() << " on " << ifaces_[key.iface].config.name << " rxcost:" << n.rxcost
       << " txcost:" << n.txcost << " cost:" << n.cost << " history:";
    for (bool b : n.history.window()) os << (b ? '1' : '0');
    os << "\n";
  }
  return os.str();
}

std::string Engine::dump_sources() const {
  std::ostringstream os;
  for (const auto& [key, s] : sources_) {
    os << s.prefix.to_string() << " orig:" << s.router_id.to_string() << " FD:(" << s.fd.seqno.value << ", "
       << s.fd.metric << ")\n";
  }
  return os.str();
}

}  // namespace babel
