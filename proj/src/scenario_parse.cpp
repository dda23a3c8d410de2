#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "babel/scenario.hpp"

namespace babel::scenario {

namespace {

using namespace std::chrono_literals;

enum class Section { none, settings, nodes, interfaces, links, events, probes, assertions };

const std::map<std::string, Section, std::less<>> kSections = {
    {"settings", Section::settings}, {"nodes", Section::nodes},   {"interfaces", Section::interfaces},
    {"links", Section::links},       {"events", Section::events}, {"probes", Section::probes},
    {"assertions", Section::assertions},
};

struct Token {
  std::string text;
  bool quoted = false;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Whitespace separated; "..." groups, with \" and \\ as the only escapes.
// Returns false on an unterminated quote.
bool tokenize(std::string_view line, std::vector<Token>& out) {
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
      ++i;
      continue;
    }
    if (line[i] == '#') break;
    Token tok;
    if (line[i] == '"') {
      tok.quoted = true;
      ++i;
      bool closed = false;
      while (i < line.size()) {
        const char c = line[i];
        if (c == '\\' && i + 1 < line.size() && (line[i + 1] == '"' || line[i + 1] == '\\')) {
          tok.text.push_back(line[i + 1]);
          i += 2;
          continue;
        }
        ++i;
        if (c == '"') {
          closed = true;
          break;
        }
        tok.text.push_back(c);
      }
      if (!closed) return false;
    } else {
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') tok.text.push_back(line[i++]);
    }
    out.push_back(std::move(tok));
  }
  return true;
}

template <typename T>
std::optional<T> parse_uint(std::string_view s, T max) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v > max) return std::nullopt;
  return static_cast<T>(v);
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<bool> parse_bool(std::string_view s) {
  if (s == "on" || s == "true" || s == "yes") return true;
  if (s == "off" || s == "false" || s == "no") return false;
  return std::nullopt;
}

std::optional<IfaceRef> parse_iface_ref(std::string_view s) {
  const auto dot = s.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == s.size()) return std::nullopt;
  return IfaceRef{std::string(s.substr(0, dot)), std::string(s.substr(dot + 1))};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct KeyValue {
  std::string key;
  std::string value;
};

std::optional<KeyValue> split_kv(const Token& t) {
  if (t.quoted) return std::nullopt;
  const auto eq = t.text.find('=');
  if (eq == std::string::npos || eq == 0) return std::nullopt;
  return KeyValue{t.text.substr(0, eq), t.text.substr(eq + 1)};
}

class Parser {
 public:
  ParseResult run(std::string_view text) {
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      ++line_no;
      handle_line(line_no, line);
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
    validate();
    ParseResult r;
    r.diagnostics = std::move(diags_);
    if (r.diagnostics.empty()) r.scenario = std::move(s_);
    return r;
  }

 private:
  void error(int line, std::string msg) { diags_.push_back({line, std::move(msg)}); }

  void handle_line(int line, std::string_view raw) {
    const auto t = trim(raw);
    if (t.empty() || t[0] == '#') return;
    if (t.front() == '[') {
      if (t.back() != ']') {
        error(line, "malformed section header");
        return;
      }
      const auto name = t.substr(1, t.size() - 2);
      auto it = kSections.find(name);
      if (it == kSections.end()) {
        error(line, "unknown section [" + name + "]");
        section_ = Section::none;
        skip_section_ = true;
        return;
      }
      section_ = it->second;
      skip_section_ = false;
      return;
    }
    if (skip_section_) return;
    std::vector<Token> toks;
    if (!tokenize(t, toks)) {
      error(line, "unterminated quote");
      return;
    }
    if (toks.empty()) return;
    switch (section_) {
      case Section::none:
        error(line, "content outside of a section");
        break;
      case Section::settings:
        settings_line(line, toks);
        break;
      case Section::nodes:
        node_line(line, toks);
        break;
      case Section::interfaces:
        interface_line(line, toks);
        break;
      case Section::links:
        link_line(line, toks);
        break;
      case Section::events:
        event_line(line, toks);
        break;
      case Section::probes:
        probe_line(line, toks);
        break;
      case Section::assertions:
        assertion_line(line, toks);
        break;
    }
  }

  std::optional<Duration> duration(int line, const std::string& key, const std::string& v, bool allow_zero) {
    auto d = parse_duration(v);
    if (!d || d->count() < 0 || (!allow_zero && d->count() == 0)) {
      error(line, "invalid " + key + " '" + v + "'");
      return std::nullopt;
    }
    return d;
  }

  std::optional<Metric> metric(int line, const std::string& key, const std::string& v) {
    auto m = parse_uint<Metric>(v, 0xFFFF);
    if (!m) error(line, "invalid " + key + " '" + v + "'");
    return m;
  }

  void settings_line(int line, const std::vector<Token>& toks) {
    auto& st = s_.settings;
    for (const auto& t : toks) {
      auto kv = split_kv(t);
      if (!kv) {
        error(line, "expected key=value, got '" + t.text + "'");
        continue;
      }
      const auto& [k, v] = *kv;
      if (k == "duration") {
        if (auto d = duration(line, k, v, false)) st.duration = *d;
      } else if (k == "hello") {
        if (auto d = duration(line, k, v, false)) st.hello_interval = *d;
      } else if (k == "update") {
        if (auto d = duration(line, k, v, false)) st.update_interval = *d;
      } else if (k == "split-horizon") {
        if (auto b = parse_bool(v)) st.split_horizon = *b;
        else error(line, "invalid split-horizon '" + v + "'");
      } else if (k == "cost") {
        if (v == "k-of-j" || v == "etx") st.cost = v;
        else error(line, "unknown cost policy '" + v + "'");
      } else if (k == "k") {
        if (auto n = parse_uint<std::size_t>(v, 64)) st.k = *n;
        else error(line, "invalid k '" + v + "'");
      } else if (k == "j") {
        if (auto n = parse_uint<std::size_t>(v, 64)) st.j = *n;
        else error(line, "invalid j '" + v + "'");
      } else if (k == "nominal") {
        if (auto m = metric(line, k, v)) st.nominal = *m;
      } else if (k == "delay") {
        if (auto d = duration(line, k, v, true)) st.delay = *d;
      } else if (k == "loss") {
        auto l = parse_double(v);
        if (l && *l >= 0.0 && *l <= 1.0) st.loss = *l;
        else error(line, "loss must be within [0, 1]");
      } else if (k == "ack-retractions") {
        if (auto b = parse_bool(v)) st.ack_retractions = *b;
        else error(line, "invalid ack-retractions '" + v + "'");
      } else if (k == "seed") {
        if (auto n = parse_uint<std::uint64_t>(v, UINT64_MAX)) st.seed = *n;
        else error(line, "invalid seed '" + v + "'");
      } else {
        error(line, "unknown setting '" + k + "'");
      }
    }
  }

  void node_line(int line, const std::vector<Token>& toks) {
    NodeDecl n;
    n.loc.line = line;
    n.name = toks[0].text;
    if (n.name.find('.') != std::string::npos || n.name.find('=') != std::string::npos) {
      error(line, "invalid node name '" + n.name + "'");
      return;
    }
    bool have_id = false;
    for (std::size_t i = 1; i < toks.size(); ++i) {
      auto kv = split_kv(toks[i]);
      if (!kv) {
        error(line, "expected key=value, got '" + toks[i].text + "'");
        continue;
      }
      if (kv->key == "router-id") {
        auto id = RouterId::parse(kv->value);
        if (!id || id->is_reserved()) {
          error(line, "invalid router-id '" + kv->value + "'");
        } else {
          n.router_id = *id;
          have_id = true;
        }
      } else if (kv->key == "seqno") {
        if (auto s = parse_uint<std::uint16_t>(kv->value, 0xFFFF)) n.seqno = *s;
        else error(line, "invalid seqno '" + kv->value + "'");
      } else {
        error(line, "unknown node option '" + kv->key + "'");
      }
    }
    if (!have_id) error(line, "node " + n.name + " needs router-id=");
    s_.nodes.push_back(std::move(n));
  }

  void interface_line(int line, const std::vector<Token>& toks) {
    auto ref = parse_iface_ref(toks[0].text);
    if (!ref) {
      error(line, "expected NODE.IFACE, got '" + toks[0].text + "'");
      return;
    }
    InterfaceDecl d;
    d.loc.line = line;
    d.node = ref->node;
    d.name = ref->iface;
    bool have_ll_token = false;
    for (std::size_t i = 1; i < toks.size(); ++i) {
      auto kv = split_kv(toks[i]);
      if (!kv) {
        error(line, "expected key=value, got '" + toks[i].text + "'");
        continue;
      }
      const auto& [k, v] = *kv;
      if (k == "ll") {
        have_ll_token = true;
        auto a = Address::parse(v);
        // fe80::/10; only fe80::/64 addresses get the compact encoding on the wire.
        const bool link_local = a && !a->is_v4() && a->raw()[0] == 0xfe && (a->raw()[1] & 0xc0) == 0x80;
        if (!link_local) {
          error(line, "ll must be a link-local IPv6 address");
        } else {
          d.link_local = *a;
        }
      } else if (k == "ipv4") {
        auto a = Address::parse(v);
        if (!a || !a->is_v4()) error(line, "invalid ipv4 '" + v + "'");
        else d.ipv4 = *a;
      } else if (k == "prefix") {
        auto p = Prefix::parse(v);
        if (!p) error(line, "invalid prefix '" + v + "'");
        else d.prefixes.push_back(*p);
      } else if (k == "kind") {
        if (v == "wired") d.kind = LinkKind::wired;
        else if (v == "wireless") d.kind = LinkKind::wireless;
        else error(line, "unknown kind '" + v + "'");
      } else if (k == "hello") {
        if (auto x = duration(line, k, v, false)) d.hello = *x;
      } else if (k == "update") {
        if (auto x = duration(line, k, v, false)) d.update = *x;
      } else if (k == "split-horizon") {
        if (auto b = parse_bool(v)) d.split_horizon = *b;
        else error(line, "invalid split-horizon '" + v + "'");
      } else if (k == "cost") {
        if (v == "k-of-j" || v == "etx") d.cost = v;
        else error(line, "unknown cost policy '" + v + "'");
      } else if (k == "k") {
        if (auto n = parse_uint<std::size_t>(v, 64)) d.k = *n;
        else error(line, "invalid k '" + v + "'");
      } else if (k == "j") {
        if (auto n = parse_uint<std::size_t>(v, 64)) d.j = *n;
        else error(line, "invalid j '" + v + "'");
      } else if (k == "nominal") {
        if (auto m = metric(line, k, v)) d.nominal = *m;
      } else {
        error(line, "unknown interface option '" + k + "'");
      }
    }
    if (!have_ll_token) error(line, "interface " + ref->to_string() + " needs ll=");
    s_.interfaces.push_back(std::move(d));
  }

  void link_line(int line, const std::vector<Token>& toks) {
    if (toks.size() < 2) {
      error(line, "a link needs two interfaces");
      return;
    }
    auto a = parse_iface_ref(toks[0].text);
    auto b = parse_iface_ref(toks[1].text);
    if (!a || !b) {
      error(line, "expected NODE.IFACE NODE.IFACE");
      return;
    }
    LinkDecl l;
    l.loc.line = line;
    l.a = *a;
    l.b = *b;
    for (std::size_t i = 2; i < toks.size(); ++i) {
      auto kv = split_kv(toks[i]);
      if (!kv) {
        error(line, "expected key=value, got '" + toks[i].text + "'");
        continue;
      }
      if (kv->key == "delay") {
        if (auto d = duration(line, kv->key, kv->value, true)) l.delay = *d;
      } else if (kv->key == "loss") {
        auto x = parse_double(kv->value);
        if (x && *x >= 0.0 && *x <= 1.0) l.loss = *x;
        else error(line, "loss must be within [0, 1]");
      } else if (kv->key == "state") {
        if (kv->value == "up") l.up = true;
        else if (kv->value == "down") l.up = false;
        else error(line, "state must be up or down");
      } else {
        error(line, "unknown link option '" + kv->key + "'");
      }
    }
    s_.links.push_back(std::move(l));
  }

  std::optional<Time> time_at(int line, const Token& t) {
    auto d = parse_duration(t.text);
    if (!d || d->count() < 0) {
      error(line, "invalid time '" + t.text + "'");
      return std::nullopt;
    }
    return *d;
  }

  void event_line(int line, const std::vector<Token>& toks) {
    if (toks.size() < 3) {
      error(line, "expected TIME down|up A.IF B.IF or TIME start NODE");
      return;
    }
    auto at = time_at(line, toks[0]);
    EventDecl e;
    e.loc.line = line;
    const auto& verb = toks[1].text;
    if (verb == "start") {
      e.kind = EventDecl::Kind::start;
      e.a.node = toks[2].text;
      if (toks.size() != 3) error(line, "start takes one node");
    } else if (verb == "down" || verb == "up") {
      e.kind = verb == "down" ? EventDecl::Kind::down : EventDecl::Kind::up;
      auto a = toks.size() == 4 ? parse_iface_ref(toks[2].text) : std::nullopt;
      auto b = toks.size() == 4 ? parse_iface_ref(toks[3].text) : std::nullopt;
      if (!a || !b) {
        error(line, verb + " takes two interfaces NODE.IFACE");
        return;
      }
      e.a = *a;
      e.b = *b;
    } else {
      error(line, "unknown event '" + verb + "'");
      return;
    }
    if (!at) return;
    e.at = *at;
    s_.events.push_back(std::move(e));
  }

  void probe_line(int line, const std::vector<Token>& toks) {
    if (toks.size() != 3) {
      error(line, "expected TIME NODE routes|neighbors|sources");
      return;
    }
    auto at = time_at(line, toks[0]);
    ProbeDecl p;
    p.loc.line = line;
    p.node = toks[1].text;
    if (toks[2].text == "routes") p.what = ProbeDecl::What::routes;
    else if (toks[2].text == "neighbors") p.what = ProbeDecl::What::neighbors;
    else if (toks[2].text == "sources") p.what = ProbeDecl::What::sources;
    else {
      error(line, "unknown probe '" + toks[2].text + "'");
      return;
    }
    if (!at) return;
    p.at = *at;
    s_.probes.push_back(std::move(p));
  }

  void assertion_line(int line, const std::vector<Token>& toks) {
    const auto& verb = toks[0].text;
    Assertion a;
    a.loc.line = line;
    if (verb == "trace") {
      if (toks.size() < 2 || !toks[1].quoted) {
        error(line, "trace needs a quoted pattern");
        return;
      }
      TraceAssert t;
      t.pattern = toks[1].text;
      try {
        std::regex re(t.pattern, std::regex::ECMAScript | std::regex::multiline);
      } catch (const std::regex_error& e) {
        error(line, std::string("invalid pattern: ") + e.what());
      }
      for (std::size_t i = 2; i < toks.size(); ++i) {
        auto kv = split_kv(toks[i]);
        if (!kv) {
          error(line, "expected key=value, got '" + toks[i].text + "'");
          continue;
        }
        if (kv->key == "link") {
          const auto dash = kv->value.find('-');
          if (dash == std::string::npos || dash == 0 || dash + 1 == kv->value.size()) {
            error(line, "link filter must be A-B");
          } else {
            t.link = std::pair{kv->value.substr(0, dash), kv->value.substr(dash + 1)};
          }
        } else if (kv->key == "from") {
          if (auto x = time_at(line, Token{kv->value})) t.from = *x;
        } else if (kv->key == "until") {
          if (auto x = time_at(line, Token{kv->value})) t.until = *x;
        } else {
          error(line, "unknown trace option '" + kv->key + "'");
        }
      }
      a.body = std::move(t);
    } else if (verb == "selected") {
      if (toks.size() < 4) {
        error(line, "expected selected TIME NODE PREFIX [metric= via= orig= seqno=]");
        return;
      }
      SelectedAssert s;
      if (auto at = time_at(line, toks[1])) s.at = *at;
      s.node = toks[2].text;
      if (auto p = Prefix::parse(toks[3].text)) s.prefix = *p;
      else error(line, "invalid prefix '" + toks[3].text + "'");
      for (std::size_t i = 4; i < toks.size(); ++i) {
        auto kv = split_kv(toks[i]);
        if (!kv) {
          error(line, "expected key=value, got '" + toks[i].text + "'");
          continue;
        }
        if (kv->key == "metric") {
          if (auto m = metric(line, kv->key, kv->value)) s.metric = *m;
        } else if (kv->key == "via") {
          std::string_view rest = kv->value;
          while (true) {
            const auto bar = rest.find('|');
            const auto part = rest.substr(0, bar);
            if (auto addr = Address::parse(part)) s.via.push_back(*addr);
            else error(line, "invalid via address '" + std::string(part) + "'");
            if (bar == std::string_view::npos) break;
            rest.remove_prefix(bar + 1);
          }
        } else if (kv->key == "orig") {
          if (auto id = RouterId::parse(kv->value)) s.orig = *id;
          else error(line, "invalid orig '" + kv->value + "'");
        } else if (kv->key == "seqno") {
          if (auto n = parse_uint<std::uint16_t>(kv->value, 0xFFFF)) s.seqno = *n;
          else error(line, "invalid seqno '" + kv->value + "'");
        } else {
          error(line, "unknown selected option '" + kv->key + "'");
        }
      }
      a.body = std::move(s);
    } else if (verb == "count") {
      if (toks.size() != 5) {
        error(line, "expected count TIME NODE ipv6|ipv4|all N");
        return;
      }
      CountAssert c;
      if (auto at = time_at(line, toks[1])) c.at = *at;
      c.node = toks[2].text;
      if (toks[3].text == "ipv6") c.family = CountAssert::Family::ipv6;
      else if (toks[3].text == "ipv4") c.family = CountAssert::Family::ipv4;
      else if (toks[3].text == "all") c.family = CountAssert::Family::all;
      else error(line, "unknown family '" + toks[3].text + "'");
      if (auto n = parse_uint<std::size_t>(toks[4].text, 1u << 20)) c.count = *n;
      else error(line, "invalid count '" + toks[4].text + "'");
      a.body = std::move(c);
    } else if (verb == "transitions") {
      if (toks.size() < 4) {
        error(line, "expected transitions NODE PREFIX METRIC... [from=TIME]");
        return;
      }
      TransitionsAssert t;
      t.node = toks[1].text;
      if (auto p = Prefix::parse(toks[2].text)) t.prefix = *p;
      else error(line, "invalid prefix '" + toks[2].text + "'");
      for (std::size_t i = 3; i < toks.size(); ++i) {
        if (auto kv = split_kv(toks[i])) {
          if (kv->key == "from") {
            if (auto x = time_at(line, Token{kv->value})) t.from = *x;
          } else {
            error(line, "unknown transitions option '" + kv->key + "'");
          }
        } else if (auto m = metric(line, "metric", toks[i].text)) {
          t.metrics.push_back(*m);
        }
      }
      if (t.metrics.empty()) error(line, "transitions needs at least one metric");
      a.body = std::move(t);
    } else if (verb == "loop-free") {
      if (toks.size() != 2) {
        error(line, "expected loop-free TIME");
        return;
      }
      LoopFreeAssert l;
      if (auto at = time_at(line, toks[1])) l.at = *at;
      a.body = l;
    } else {
      error(line, "unknown assertion '" + verb + "'");
      return;
    }
    s_.assertions.push_back(std::move(a));
  }

  void validate() {
    if (s_.nodes.empty()) error(0, "scenario declares no nodes");
    const auto& st = s_.settings;
    if (st.k == 0 || st.k > st.j) error(0, "settings need 0 < k <= j");

    std::map<std::string, int> node_lines;
    std::set<RouterId> ids;
    for (const auto& n : s_.nodes) {
      if (!node_lines.emplace(n.name, n.loc.line).second) error(n.loc.line, "duplicate node " + n.name);
      if (!ids.insert(n.router_id).second && !n.router_id.is_reserved()) {
        error(n.loc.line, "duplicate router-id " + n.router_id.to_string());
      }
    }
    auto known_node = [&](const std::string& name, int line) {
      if (node_lines.count(name)) return true;
      error(line, "unknown node " + name);
      return false;
    };

    std::set<std::pair<std::string, std::string>> ifaces;
    std::set<Address> addresses;
    for (const auto& d : s_.interfaces) {
      known_node(d.node, d.loc.line);
      if (!ifaces.insert({d.node, d.name}).second) error(d.loc.line, "duplicate interface " + d.node + "." + d.name);
      if (!addresses.insert(d.link_local).second && d.link_local != Address{}) {
        error(d.loc.line, "link-local address " + d.link_local.to_string() + " already in use");
      }
      if (d.ipv4 && !addresses.insert(*d.ipv4).second) {
        error(d.loc.line, "ipv4 address " + d.ipv4->to_string() + " already in use");
      }
      const auto k = d.k.value_or(st.k);
      const auto j = d.j.value_or(st.j);
      if (k == 0 || k > j) error(d.loc.line, "interface needs 0 < k <= j");
    }

    std::map<std::pair<std::string, std::string>, int> attached;
    auto check_ref = [&](const IfaceRef& r, int line) {
      if (!known_node(r.node, line)) return false;
      if (!ifaces.count({r.node, r.iface})) {
        error(line, "unknown interface " + r.to_string());
        return false;
      }
      return true;
    };
    std::set<LinkKey> link_pairs;
    for (const auto& l : s_.links) {
      const bool ok = check_ref(l.a, l.loc.line) & check_ref(l.b, l.loc.line);
      if (!ok) continue;
      if (l.a == l.b) {
        error(l.loc.line, "link endpoints must differ");
        continue;
      }
      for (const auto& r : {l.a, l.b}) {
        auto [it, fresh] = attached.emplace(std::pair{r.node, r.iface}, l.loc.line);
        if (!fresh) {
          error(l.loc.line, "interface " + r.to_string() + " already linked on line " + std::to_string(it->second));
        }
      }
      link_pairs.insert(link_key(l.a, l.b));
    }

    for (const auto& e : s_.events) {
      if (e.at > st.duration) error(e.loc.line, "event after the end of the run");
      if (e.kind == EventDecl::Kind::start) {
        known_node(e.a.node, e.loc.line);
        continue;
      }
      const bool ok = check_ref(e.a, e.loc.line) & check_ref(e.b, e.loc.line);
      if (ok && !link_pairs.count(link_key(e.a, e.b))) {
        error(e.loc.line, "no link between " + e.a.to_string() + " and " + e.b.to_string());
      }
    }
    for (const auto& p : s_.probes) {
      known_node(p.node, p.loc.line);
      if (p.at > st.duration) error(p.loc.line, "probe after the end of the run");
    }
    for (const auto& a : s_.assertions) {
      const int line = a.loc.line;
      std::visit(
          [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, TraceAssert>) {
              if (body.link) {
                known_node(body.link->first, line);
                known_node(body.link->second, line);
              }
            } else if constexpr (std::is_same_v<T, LoopFreeAssert>) {
              if (body.at > st.duration) error(line, "assertion after the end of the run");
            } else if constexpr (std::is_same_v<T, TransitionsAssert>) {
              known_node(body.node, line);
            } else {
              known_node(body.node, line);
              if (body.at > st.duration) error(line, "assertion after the end of the run");
            }
          },
          a.body);
    }
  }

  Scenario s_;
  std::vector<Diagnostic> diags_;
  Section section_ = Section::none;
  bool skip_section_ = false;
};

const char* family_name(CountAssert::Family f) {
  switch (f) {
    case CountAssert::Family::ipv6:
      return "ipv6";
    case CountAssert::Family::ipv4:
      return "ipv4";
    case CountAssert::Family::all:
      break;
  }
  return "all";
}

const char* probe_name(ProbeDecl::What w) {
  switch (w) {
    case ProbeDecl::What::routes:
      return "routes";
    case ProbeDecl::What::neighbors:
      return "neighbors";
    case ProbeDecl::What::sources:
      break;
  }
  return "sources";
}

}  // namespace

std::optional<Duration> parse_duration(std::string_view text) {
  double scale = 1e6;
  if (text.ends_with("us")) {
    scale = 1.0;
    text.remove_suffix(2);
  } else if (text.ends_with("ms")) {
    scale = 1e3;
    text.remove_suffix(2);
  } else if (text.ends_with("s")) {
    text.remove_suffix(1);
  }
  if (text.empty()) return std::nullopt;
  auto v = parse_double(text);
  if (!v) return std::nullopt;
  const double us = *v * scale;
  if (std::fabs(us) > 9e15) return std::nullopt;
  return Duration(static_cast<std::int64_t>(std::llround(us)));
}

std::string format_duration(Duration d) {
  const auto us = d.count();
  if (us % 1000000 == 0) return std::to_string(us / 1000000) + "s";
  if (us % 1000 == 0) return std::to_string(us / 1000) + "ms";
  return std::to_string(us) + "us";
}

std::string format_time(Time t) {
  const auto ms = t.count() / 1000;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(ms / 1000), static_cast<long long>(ms % 1000));
  return buf;
}

std::string format_diagnostic(const Diagnostic& d) {
  if (d.line == 0) return "error: " + d.message;
  return "line " + std::to_string(d.line) + ": " + d.message;
}

ParseResult parse(std::string_view text) { return Parser{}.run(text); }

ParseResult parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return ParseResult{std::nullopt, {{0, "cannot open " + path}}};
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string describe(const Assertion& a) {
  std::ostringstream os;
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, TraceAssert>) {
          os << "trace \"" << escape(b.pattern) << "\"";
          if (b.link) os << " link=" << b.link->first << "-" << b.link->second;
          if (b.from) os << " from=" << format_duration(*b.from);
          if (b.until) os << " until=" << format_duration(*b.until);
        } else if constexpr (std::is_same_v<T, SelectedAssert>) {
          os << "selected " << format_duration(b.at) << " " << b.node << " " << b.prefix.to_string();
          if (b.metric) os << " metric=" << *b.metric;
          if (!b.via.empty()) {
            os << " via=";
            for (std::size_t i = 0; i < b.via.size(); ++i) os << (i ? "|" : "") << b.via[i].to_string();
          }
          if (b.orig) os << " orig=" << b.orig->to_string();
          if (b.seqno) os << " seqno=" << *b.seqno;
        } else if constexpr (std::is_same_v<T, CountAssert>) {
          os << "count " << format_duration(b.at) << " " << b.node << " " << family_name(b.family) << " " << b.count;
        } else if constexpr (std::is_same_v<T, TransitionsAssert>) {
          os << "transitions " << b.node << " " << b.prefix.to_string();
          for (auto m : b.metrics) os << " " << m;
          if (b.from) os << " from=" << format_duration(*b.from);
        } else {
          os << "loop-free " << format_duration(b.at);
        }
      },
      a.body);
  return os.str();
}

std::string serialize(const Scenario& s) {
  std::ostringstream os;
  const auto& st = s.settings;
  os << "[settings]\n";
  os << "duration=" << format_duration(st.duration) << " hello=" << format_duration(st.hello_interval);
  if (st.update_interval) os << " update=" << format_duration(*st.update_interval);
  os << "\nsplit-horizon=" << (st.split_horizon ? "on" : "off") << " cost=" << st.cost << " k=" << st.k
     << " j=" << st.j;
  if (st.nominal) os << " nominal=" << *st.nominal;
  os << "\ndelay=" << format_duration(st.delay) << " loss=" << format_double(st.loss)
     << " ack-retractions=" << (st.ack_retractions ? "on" : "off") << " seed=" << st.seed << "\n";

  os << "\n[nodes]\n";
  for (const auto& n : s.nodes) {
    os << n.name << " router-id=" << n.router_id.to_string() << " seqno=" << n.seqno << "\n";
  }

  os << "\n[interfaces]\n";
  for (const auto& d : s.interfaces) {
    os << d.node << "." << d.name << " ll=" << d.link_local.to_string();
    if (d.ipv4) os << " ipv4=" << d.ipv4->to_string();
    for (const auto& p : d.prefixes) os << " prefix=" << p.to_string();
    if (d.kind) os << " kind=" << (*d.kind == LinkKind::wired ? "wired" : "wireless");
    if (d.hello) os << " hello=" << format_duration(*d.hello);
    if (d.update) os << " update=" << format_duration(*d.update);
    if (d.split_horizon) os << " split-horizon=" << (*d.split_horizon ? "on" : "off");
    if (d.cost) os << " cost=" << *d.cost;
    if (d.k) os << " k=" << *d.k;
    if (d.j) os << " j=" << *d.j;
    if (d.nominal) os << " nominal=" << *d.nominal;
    os << "\n";
  }

  os << "\n[links]\n";
  for (const auto& l : s.links) {
    os << l.a.to_string() << " " << l.b.to_string();
    if (l.delay) os << " delay=" << format_duration(*l.delay);
    if (l.loss) os << " loss=" << format_double(*l.loss);
    if (!l.up) os << " state=down";
    os << "\n";
  }

  os << "\n[events]\n";
  for (const auto& e : s.events) {
    os << format_duration(e.at) << " ";
    switch (e.kind) {
      case EventDecl::Kind::start:
        os << "start " << e.a.node;
        break;
      case EventDecl::Kind::down:
        os << "down " << e.a.to_string() << " " << e.b.to_string();
        break;
      case EventDecl::Kind::up:
        os << "up " << e.a.to_string() << " " << e.b.to_string();
        break;
    }
    os << "\n";
  }

  os << "\n[probes]\n";
  for (const auto& p : s.probes) os << format_duration(p.at) << " " << p.node << " " << probe_name(p.what) << "\n";

  os << "\n[assertions]\n";
  for (const auto& a : s.assertions) os << describe(a) << "\n";
  return os.str();
}

}  // namespace babel::scenario
