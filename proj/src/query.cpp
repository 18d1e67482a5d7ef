#include "tinprov/query.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace tinprov {

using nlohmann::json;

namespace {

// (time, vertex) keys keep merged answers time-ordered
using Key = std::pair<double, VertexId>;

std::vector<AnswerEntry> to_entries(const std::map<Key, double>& acc,
                                    double tol) {
  std::vector<AnswerEntry> out;
  for (const auto& [k, q] : acc)
    if (q > tol) out.push_back({k.second, k.first, q});
  return out;
}

// Generic (any policy, any depth) backward expansion of one contribution.
struct BackwardWalk {
  const TemporalProvenanceIndex& idx;
  AttributionKind policy;
  double tol;
  std::uint32_t depth;
  std::map<Key, double> acc;
  std::set<Key> stack;
  std::uint32_t max_level = 1;
  bool truncated = false;

  void expand(const VertexId& sender, double te, double qe,
              std::uint32_t level) {
    max_level = std::max(max_level, level);
    Key k{te, sender};
    auto c = idx.content_at(sender, te, Flank::Pre);
    if (!c || c->prov.empty()) {  // minted at sender
      acc[k] += qe;
      return;
    }
    if (level >= depth) {
      acc[k] += qe;
      truncated = true;
      return;
    }
    if (stack.count(k)) {  // revisited (vertex, state): terminate branch
      acc[k] += qe;
      return;
    }
    stack.insert(k);
    auto att = attribute_outflow(c->prov, c->buffer, qe, policy, tol);
    if (att.minted > tol) acc[k] += att.minted;
    for (const auto& ce : att.consumed)
      expand(ce.origin, ce.birth_t, ce.q, level + 1);
    stack.erase(k);
  }
};

// Memoized unlimited-depth decomposition, proportional policy only: a
// proportional outflow carries the same mint distribution as the whole
// pre-buffer, so the per-unit distribution is a function of (vertex, time).
struct ProportionalDist {
  const TemporalProvenanceIndex& idx;
  double tol;
  std::map<Key, std::map<Key, double>> memo;  // unit distribution per key
  std::set<Key> stack;
  std::uint32_t max_level = 1;

  void share(const VertexId& sender, double te, double qe, std::uint32_t level,
             std::map<Key, double>& out) {
    max_level = std::max(max_level, level);
    Key k{te, sender};
    auto c = idx.content_at(sender, te, Flank::Pre);
    if (!c || c->prov.empty() || stack.count(k)) {
      out[k] += qe;
      return;
    }
    double total = prov_sum(c->prov);
    double covered = std::min(qe, total);
    double minted = qe - covered;
    if (minted > tol) out[k] += minted;
    const auto& u = unit(k, *c, level);
    for (const auto& [mk, f] : u) out[mk] += covered * f;
  }

  const std::map<Key, double>& unit(const Key& k, const VertexContent& c,
                                    std::uint32_t level) {
    auto it = memo.find(k);
    if (it != memo.end()) return it->second;
    stack.insert(k);
    std::map<Key, double> u;
    double total = prov_sum(c.prov);
    for (const auto& e : c.prov) {
      std::map<Key, double> sub;
      share(e.origin, e.birth_t, e.q, level + 1, sub);
      for (const auto& [mk, q] : sub) u[mk] += q / total;
    }
    stack.erase(k);
    return memo.emplace(k, std::move(u)).first->second;
  }
};

// Fraction of (vertex, time) pre-buffer that departed source s at time >= t0.
// Proportional, unlimited depth, memoized.
struct SourceFraction {
  const TemporalProvenanceIndex& idx;
  VertexId s;
  double t0;
  double tol;
  std::map<Key, std::pair<double, double>> memo;  // key -> (fraction, total)
  std::set<Key> stack;

  double share(const VertexId& sender, double te, double qe) {
    if (sender == s) return te >= t0 ? qe : 0.0;
    Key k{te, sender};
    // a minted deficit (qe beyond the pre-buffer total) never passed through s
    auto it = memo.find(k);
    if (it != memo.end())
      return std::min(qe, it->second.second) * it->second.first;
    if (stack.count(k)) return 0.0;
    auto c = idx.content_at(sender, te, Flank::Pre);
    if (!c || c->prov.empty()) return 0.0;
    stack.insert(k);
    double total = prov_sum(c->prov);
    double mass = 0.0;
    for (const auto& e : c->prov) mass += share(e.origin, e.birth_t, e.q);
    stack.erase(k);
    double f = mass / total;
    memo[k] = {f, total};
    return std::min(qe, total) * f;
  }
};

// Generic depth-limited source share (any policy).
struct SourceShareWalk {
  const TemporalProvenanceIndex& idx;
  VertexId s;
  double t0;
  AttributionKind policy;
  double tol;
  std::uint32_t depth;
  std::set<Key> stack;

  double share(const VertexId& sender, double te, double qe,
               std::uint32_t level) {
    if (sender == s) return te >= t0 ? qe : 0.0;
    if (level >= depth) return 0.0;
    Key k{te, sender};
    if (stack.count(k)) return 0.0;
    auto c = idx.content_at(sender, te, Flank::Pre);
    if (!c || c->prov.empty()) return 0.0;
    stack.insert(k);
    auto att = attribute_outflow(c->prov, c->buffer, qe, policy, tol);
    double mass = 0.0;
    for (const auto& ce : att.consumed)
      mass += share(ce.origin, ce.birth_t, ce.q, level + 1);
    stack.erase(k);
    return mass;
  }
};

// Quantity minted at s that passed through `via`, memoized per
// (vertex, time, via-already-seen). Proportional, unlimited depth.
struct ViaFlow {
  const TemporalProvenanceIndex& idx;
  VertexId s;
  VertexId via;
  double tol;
  std::map<std::pair<Key, bool>, double> memo;
  std::set<std::pair<Key, bool>> stack;

  double flow(const VertexId& sender, double te, double qe, bool seen) {
    bool seen2 = seen || sender == via;
    Key k{te, sender};
    auto c = idx.content_at(sender, te, Flank::Pre);
    if (!c || c->prov.empty())
      return (sender == s && seen2) ? qe : 0.0;
    std::pair<Key, bool> mk{k, seen2};
    double total = prov_sum(c->prov);
    double covered = std::min(qe, total);
    double minted = qe - covered;
    double res = (minted > tol && sender == s && seen2) ? minted : 0.0;
    auto it = memo.find(mk);
    if (it != memo.end()) return res + covered * it->second;
    if (stack.count(mk)) return res;
    stack.insert(mk);
    double mass = 0.0;
    for (const auto& e : c->prov) mass += flow(e.origin, e.birth_t, e.q, seen2);
    stack.erase(mk);
    double f = mass / total;
    memo[mk] = f;
    return res + covered * f;
  }
};

}  // namespace

const QueryEngine::EntityPaths& QueryEngine::entity_paths() const {
  if (!entity_paths_built_) {
    for (const auto& v : idx_.vertices()) {
      const auto* sm = idx_.states_of(v);
      if (!sm) continue;
      for (const auto& [ts, state] : *sm) {
        for (const auto& ev : state.events) {
          if (ev.kind != EventKind::Arrival) continue;
          for (const auto& e : ev.entities)
            entity_paths_[e].push_back({ev.t, ev.counterpart, v});
        }
      }
    }
    for (auto& [e, hops] : entity_paths_)
      std::stable_sort(hops.begin(), hops.end(),
                       [](const EntityHop& a, const EntityHop& b) {
                         return a.t < b.t;
                       });
    entity_paths_built_ = true;
  }
  return entity_paths_;
}

ProvenanceAnswer QueryEngine::q1_backward(const VertexId& v, double t,
                                          std::uint32_t depth,
                                          Flank flank) const {
  if (depth == 0) depth = 1;
  if (idx_.config().data_class == DataClass::Discrete)
    return q1_discrete(v, t, depth, flank);
  return q1_liquid(v, t, depth, flank);
}

ProvenanceAnswer QueryEngine::q1_liquid(const VertexId& v, double t,
                                        std::uint32_t depth,
                                        Flank flank) const {
  ProvenanceAnswer a;
  auto c = idx_.content_at(v, t, flank);
  if (!c) return a;
  const double tol = idx_.config().float_tolerance;
  if (depth == kUnlimitedDepth &&
      idx_.config().attribution == AttributionKind::Proportional) {
    ProportionalDist pd{idx_, tol, {}, {}, 1};
    std::map<Key, double> acc;
    for (const auto& e : c->prov) pd.share(e.origin, e.birth_t, e.q, 1, acc);
    a.entries = to_entries(acc, tol);
    a.depth_reached = pd.max_level;
    return a;
  }
  BackwardWalk walk{idx_, idx_.config().attribution, tol, depth, {}, {}, 1,
                    false};
  for (const auto& e : c->prov) walk.expand(e.origin, e.birth_t, e.q, 1);
  a.entries = to_entries(walk.acc, tol);
  a.depth_reached = walk.max_level;
  a.truncated = walk.truncated;
  return a;
}

ProvenanceAnswer QueryEngine::q1_discrete(const VertexId& v, double t,
                                          std::uint32_t depth,
                                          Flank flank) const {
  ProvenanceAnswer a;
  auto c = idx_.content_at(v, t, flank);
  if (!c) return a;
  const auto& paths = entity_paths();
  std::map<Key, double> acc;
  std::uint32_t max_level = 1;
  bool truncated = false;
  for (const auto& e : c->entity_set) {
    auto pit = paths.find(e);
    if (pit == paths.end()) continue;
    const auto& hops = pit->second;
    // latest hop into v visible at (t, flank)
    int i = -1;
    for (int j = static_cast<int>(hops.size()) - 1; j >= 0; --j) {
      bool visible = flank == Flank::Post ? hops[j].t <= t : hops[j].t < t;
      if (visible && hops[j].dst == v) {
        i = j;
        break;
      }
    }
    if (i < 0) continue;
    std::uint32_t level = 1;
    int cur = i;
    while (level < depth) {
      int pred = -1;
      for (int j = cur - 1; j >= 0; --j) {
        if (hops[j].dst == hops[cur].src && hops[j].t <= hops[cur].t) {
          pred = j;
          break;
        }
      }
      if (pred < 0) break;
      cur = pred;
      ++level;
    }
    if (level == depth && depth != kUnlimitedDepth) {
      // could there be an earlier hop still?
      for (int j = cur - 1; j >= 0; --j)
        if (hops[j].dst == hops[cur].src && hops[j].t <= hops[cur].t) {
          truncated = true;
          break;
        }
    }
    max_level = std::max(max_level, level);
    acc[{hops[cur].t, hops[cur].src}] += 1.0;
  }
  a.entries = to_entries(acc, idx_.config().float_tolerance);
  a.depth_reached = max_level;
  a.truncated = truncated;
  return a;
}

ForwardAnswer QueryEngine::q2_forward(const VertexId& s, double t,
                                      std::uint32_t depth) const {
  if (depth == 0) depth = 1;
  if (idx_.config().data_class == DataClass::Discrete)
    return q2_discrete(s, t, depth);
  return q2_liquid(s, t, depth);
}

ForwardAnswer QueryEngine::q2_liquid(const VertexId& s, double t,
                                     std::uint32_t depth) const {
  ForwardAnswer a;
  const double tol = idx_.config().float_tolerance;
  bool fast = depth == kUnlimitedDepth &&
              idx_.config().attribution == AttributionKind::Proportional;
  SourceFraction sf{idx_, s, t, tol, {}, {}};
  SourceShareWalk sw{idx_, s, t, idx_.config().attribution, tol, depth, {}};
  std::map<Key, double> deliveries;  // (t, dest) -> share
  std::map<std::pair<VertexId, VertexId>, double> first_hop_t;
  for (const auto& v : idx_.vertices()) {
    if (v == s) continue;
    const auto* sm = idx_.states_of(v);
    if (!sm) continue;
    for (const auto& [ts, state] : *sm) {
      for (const auto& ev : state.events) {
        if (ev.kind != EventKind::Arrival || ev.t < t) continue;
        double share = fast ? sf.share(ev.counterpart, ev.t, ev.q)
                            : sw.share(ev.counterpart, ev.t, ev.q, 1);
        if (share > tol) {
          deliveries[{ev.t, v}] += share;
          auto key = std::make_pair(ev.counterpart, v);
          auto it = first_hop_t.find(key);
          if (it == first_hop_t.end() || ev.t < it->second)
            first_hop_t[key] = ev.t;
        }
      }
    }
  }
  for (const auto& [k, q] : deliveries)
    a.deliveries.push_back({k.second, k.first, q});
  for (const auto& [k, ht] : first_hop_t) a.hops.push_back({k.first, k.second, ht});
  std::sort(a.hops.begin(), a.hops.end(), [](const Hop& x, const Hop& y) {
    if (x.t != y.t) return x.t < y.t;
    if (x.from != y.from) return x.from < y.from;
    return x.to < y.to;
  });
  return a;
}

ForwardAnswer QueryEngine::q2_discrete(const VertexId& s, double t,
                                       std::uint32_t depth) const {
  ForwardAnswer a;
  std::map<Key, double> deliveries;
  std::map<std::pair<VertexId, VertexId>, double> first_hop_t;
  for (const auto& [e, hops] : entity_paths()) {
    // first departure from s at or after t
    int dep = -1;
    for (int j = 0; j < static_cast<int>(hops.size()); ++j) {
      if (hops[j].src == s && hops[j].t >= t) {
        dep = j;
        break;
      }
    }
    if (dep < 0) continue;
    for (int j = dep; j < static_cast<int>(hops.size()); ++j) {
      std::uint32_t dist = static_cast<std::uint32_t>(j - dep) + 1;
      if (depth != kUnlimitedDepth && dist > depth) break;
      deliveries[{hops[j].t, hops[j].dst}] += 1.0;
      auto key = std::make_pair(hops[j].src, hops[j].dst);
      auto it = first_hop_t.find(key);
      if (it == first_hop_t.end() || hops[j].t < it->second)
        first_hop_t[key] = hops[j].t;
    }
  }
  for (const auto& [k, q] : deliveries)
    a.deliveries.push_back({k.second, k.first, q});
  for (const auto& [k, ht] : first_hop_t) a.hops.push_back({k.first, k.second, ht});
  std::sort(a.hops.begin(), a.hops.end(), [](const Hop& x, const Hop& y) {
    if (x.t != y.t) return x.t < y.t;
    if (x.from != y.from) return x.from < y.from;
    return x.to < y.to;
  });
  return a;
}

ProvenanceAnswer QueryEngine::q3_temporal_lineage(const VertexId& v, double t1,
                                                  double t2) const {
  if (t1 > t2) throw std::invalid_argument("q3: t1 > t2");
  ProvenanceAnswer a;
  a.depth_reached = 1;
  std::map<Key, double> acc;
  for (const VertexState* s : idx_.states_in(v, t1, t2)) {
    for (const auto& ev : s->events) {
      if (ev.kind != EventKind::Arrival) continue;
      if (ev.t < t1 || ev.t > t2) continue;
      acc[{ev.t, ev.counterpart}] += ev.q;
    }
  }
  a.entries = to_entries(acc, idx_.config().float_tolerance);
  return a;
}

double QueryEngine::q4_flow_lineage(const VertexId& s, const VertexId& d,
                                    const VertexId& via, double h1,
                                    double h2) const {
  if (s == d || s == via || d == via)
    throw std::invalid_argument("q4: s, d, via must be distinct");
  if (h1 > h2) return 0.0;
  if (idx_.config().data_class == DataClass::Discrete)
    return q4_discrete(s, d, via, h1, h2);
  return q4_liquid(s, d, via, h1, h2);
}

double QueryEngine::q4_liquid(const VertexId& s, const VertexId& d,
                              const VertexId& via, double h1, double h2) const {
  const double tol = idx_.config().float_tolerance;
  const auto* sm = idx_.states_of(d);
  if (!sm) return 0.0;
  ViaFlow vf{idx_, s, via, tol, {}, {}};
  double total = 0.0;
  for (const auto& [ts, state] : *sm) {
    for (const auto& ev : state.events) {
      if (ev.kind != EventKind::Arrival || ev.t < h1 || ev.t > h2) continue;
      total += vf.flow(ev.counterpart, ev.t, ev.q, false);
    }
  }
  return total <= tol ? 0.0 : total;
}

double QueryEngine::q4_discrete(const VertexId& s, const VertexId& d,
                                const VertexId& via, double h1,
                                double h2) const {
  double count = 0.0;
  for (const auto& [e, hops] : entity_paths()) {
    if (hops.empty() || hops[0].src != s) continue;  // must be minted at s
    for (int i = 0; i < static_cast<int>(hops.size()); ++i) {
      if (hops[i].dst != d || hops[i].t < h1 || hops[i].t > h2) continue;
      bool passed_via = false;
      for (int j = 0; j < i; ++j)
        if (hops[j].dst == via) passed_via = true;
      if (passed_via) count += 1.0;
    }
  }
  return count;
}

ProvenanceDelta QueryEngine::q5_versioning(const VertexId& v, double t1,
                                           double t2) const {
  if (t1 >= t2) throw std::invalid_argument("q5: t1 must be < t2");
  ProvenanceDelta d;
  VertexContent c1, c2;
  if (auto c = idx_.content_at(v, t1)) c1 = *c;
  if (auto c = idx_.content_at(v, t2)) c2 = *c;
  d.buffer_before = c1.buffer;
  d.buffer_after = c2.buffer;
  std::map<Key, const ProvenanceEntry*> before, after;
  for (const auto& e : c1.prov) before[{e.birth_t, e.origin}] = &e;
  for (const auto& e : c2.prov) after[{e.birth_t, e.origin}] = &e;
  for (const auto& [k, e] : after) {
    auto it = before.find(k);
    if (it == before.end())
      d.added.push_back(*e);
    else if (it->second->q != e->q)
      d.changed.push_back({k.second, k.first, it->second->q, e->q});
  }
  for (const auto& [k, e] : before)
    if (!after.count(k)) d.removed.push_back(*e);
  return d;
}

namespace {

json entries_json(const std::vector<AnswerEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries)
    arr.push_back({{"origin", e.origin}, {"t", e.t}, {"q", dec_string(e.q)}});
  return arr;
}

json prov_entries_json(const ProvList& prov) {
  json arr = json::array();
  for (const auto& e : prov)
    arr.push_back(
        {{"origin", e.origin}, {"t", e.birth_t}, {"q", dec_string(e.q)}});
  return arr;
}

}  // namespace

std::string QueryEngine::to_json(const ProvenanceAnswer& a) const {
  json j;
  j["entries"] = entries_json(a.entries);
  j["depth_reached"] = a.depth_reached;
  j["truncated"] = a.truncated;
  return j.dump();
}

std::string QueryEngine::to_json(const ForwardAnswer& a) const {
  json j;
  json dv = json::array();
  for (const auto& d : a.deliveries)
    dv.push_back({{"dest", d.destination},
                  {"t", d.t},
                  {"q", dec_string(d.q_from_source)}});
  j["deliveries"] = dv;
  json hv = json::array();
  for (const auto& h : a.hops)
    hv.push_back({{"from", h.from}, {"to", h.to}, {"t", h.t}});
  j["hops"] = hv;
  return j.dump();
}

std::string QueryEngine::to_json(const ProvenanceDelta& a) const {
  json j;
  j["buffer_before"] = dec_string(a.buffer_before);
  j["buffer_after"] = dec_string(a.buffer_after);
  j["added"] = prov_entries_json(a.added);
  j["removed"] = prov_entries_json(a.removed);
  json ch = json::array();
  for (const auto& c : a.changed)
    ch.push_back({{"origin", c.origin},
                  {"t", c.t},
                  {"q_before", dec_string(c.q_before)},
                  {"q_after", dec_string(c.q_after)}});
  j["changed"] = ch;
  return j.dump();
}

std::string QueryEngine::q4_json(double quantity) const {
  json j;
  j["quantity"] = dec_string(quantity);
  return j.dump();
}

}  // namespace tinprov
