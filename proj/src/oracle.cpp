#include "tinprov/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace tinprov {

namespace {

using Key = std::pair<double, VertexId>;

std::vector<AnswerEntry> collect(const std::map<Key, double>& acc, double tol) {
  std::vector<AnswerEntry> out;
  for (const auto& [k, q] : acc)
    if (q > tol) out.push_back({k.second, k.first, q});
  return out;
}

}  // namespace

ReplayOracle::ReplayOracle(std::vector<Interaction> log, TinConfig config)
    : log_(std::move(log)), cfg_(std::move(config)) {
  replay();
}

void ReplayOracle::replay() {
  const double tol = cfg_.float_tolerance;
  std::unordered_map<VertexId, VertexContent> cur;
  std::unordered_map<EntityId, std::set<VertexId>> holders;
  std::unordered_map<VertexId,
                     std::unordered_map<EntityId, std::pair<VertexId, double>>>
      arrival;

  for (const auto& r : log_) {
    if (!any_) {
      t0_ = r.t;
      any_ = true;
    }
    VertexContent& sc = cur[r.src];
    VertexContent& dc = cur[r.dst];

    AttributionResult att;
    if (cfg_.data_class == DataClass::Discrete) {
      auto& src_arr = arrival[r.src];
      std::map<Key, double> groups;  // (birth_t, origin) -> count
      for (const auto& e : r.entities) {
        auto hit = holders.find(e);
        if (hit == holders.end()) {
          att.minted += 1.0;
          holders[e] = {r.src};
        } else {
          auto ait = src_arr.find(e);
          if (ait == src_arr.end())
            att.minted += 1.0;  // replicated copy kept at its birth vertex
          else
            groups[{ait->second.second, ait->second.first}] += 1.0;
        }
      }
      att.remaining = sc.prov;
      for (const auto& [k, n] : groups) {
        att.consumed.push_back({k.second, k.first, n, false});
        for (auto it = att.remaining.begin(); it != att.remaining.end(); ++it) {
          if (it->birth_t == k.first && it->origin == k.second) {
            it->q -= n;
            if (it->q <= tol) att.remaining.erase(it);
            break;
          }
        }
      }
    } else {
      att = attribute_outflow(sc.prov, sc.buffer, r.q, cfg_.attribution, tol);
    }

    minted_ += att.minted;
    if (r.replicate) replicated_ += r.q - att.minted;

    if (!r.replicate) {
      sc.prov = att.remaining;
      sc.buffer = std::max(0.0, sc.buffer - (r.q - att.minted));
      for (const auto& e : r.entities) {
        sc.entity_set.erase(e);
        arrival[r.src].erase(e);
        holders[e] = {r.dst};
      }
    } else {
      for (const auto& e : r.entities) holders[e].insert(r.dst);
    }
    history_[r.src].push_back({r.t, sc});

    dc.buffer += r.q;
    merge_prov_entry(dc.prov, {r.src, r.t, r.q, r.replicate}, tol);
    for (const auto& e : r.entities) {
      dc.entity_set.insert(e);
      arrival[r.dst][e] = {r.src, r.t};
    }
    history_[r.dst].push_back({r.t, dc});
  }
}

std::vector<VertexId> ReplayOracle::vertices() const {
  std::vector<VertexId> out;
  for (const auto& [v, h] : history_) out.push_back(v);
  return out;
}

std::optional<VertexContent> ReplayOracle::content_at(const VertexId& v,
                                                      double t,
                                                      Flank flank) const {
  auto it = history_.find(v);
  if (it == history_.end() || !any_ || t < t0_) return std::nullopt;
  const auto& recs = it->second;
  // records are time-ordered: binary-search for the last visible one
  auto ub = flank == Flank::Post
                ? std::upper_bound(recs.begin(), recs.end(), t,
                                   [](double x, const Record& r) {
                                     return x < r.t;
                                   })
                : std::lower_bound(recs.begin(), recs.end(), t,
                                   [](const Record& r, double x) {
                                     return r.t < x;
                                   });
  if (ub == recs.begin()) return VertexContent{};  // idle before first event
  return std::prev(ub)->after;
}

const std::map<EntityId, std::vector<ReplayOracle::EntityTrace>>&
ReplayOracle::entity_traces() const {
  if (!traces_built_) {
    for (const auto& r : log_)
      for (const auto& e : r.entities)
        traces_[e].push_back({r.t, r.src, r.dst});
    traces_built_ = true;
  }
  return traces_;
}

namespace {

// Memoized full decomposition of a pre-flank buffer into minted births,
// proportional policy. Keyed by (time, vertex).
struct OracleDist {
  const ReplayOracle& orc;
  double tol;
  std::map<Key, std::map<Key, double>> memo;
  std::set<Key> stack;
  std::uint32_t max_level = 1;

  void share(const VertexId& sender, double te, double qe, std::uint32_t level,
             std::map<Key, double>& out) {
    max_level = std::max(max_level, level);
    Key k{te, sender};
    auto c = orc.content_at(sender, te, Flank::Pre);
    if (!c || c->prov.empty() || stack.count(k)) {
      out[k] += qe;
      return;
    }
    double total = prov_sum(c->prov);
    double covered = std::min(qe, total);
    if (qe - covered > tol) out[k] += qe - covered;
    const auto& d = dist(k, *c, level);
    for (const auto& [mk, q] : d) out[mk] += (covered / total) * q;
  }

  const std::map<Key, double>& dist(const Key& k, const VertexContent& c,
                                    std::uint32_t level) {
    auto it = memo.find(k);
    if (it != memo.end()) return it->second;
    stack.insert(k);
    std::map<Key, double> d;
    for (const auto& e : c.prov) share(e.origin, e.birth_t, e.q, level + 1, d);
    stack.erase(k);
    return memo.emplace(k, std::move(d)).first->second;
  }
};

struct OracleWalk {
  const ReplayOracle& orc;
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
    auto c = orc.content_at(sender, te, Flank::Pre);
    if (!c || c->prov.empty()) {
      acc[k] += qe;
      return;
    }
    if (level >= depth) {
      acc[k] += qe;
      truncated = true;
      return;
    }
    if (stack.count(k)) {
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

struct OracleSourceShare {
  const ReplayOracle& orc;
  VertexId s;
  double t0;
  AttributionKind policy;
  double tol;
  std::uint32_t depth;
  bool fast;  // proportional + unlimited: memoize per-key fraction
  std::map<Key, std::pair<double, double>> memo;  // key -> (fraction, total)
  std::set<Key> stack;

  double share(const VertexId& sender, double te, double qe,
               std::uint32_t level) {
    if (sender == s) return te >= t0 ? qe : 0.0;
    if (!fast && level >= depth) return 0.0;
    Key k{te, sender};
    if (fast) {
      // a minted deficit beyond the pre-buffer total never passed through s
      auto it = memo.find(k);
      if (it != memo.end())
        return std::min(qe, it->second.second) * it->second.first;
    }
    if (stack.count(k)) return 0.0;
    auto c = orc.content_at(sender, te, Flank::Pre);
    if (!c || c->prov.empty()) return 0.0;
    stack.insert(k);
    double mass = 0.0;
    if (fast) {
      for (const auto& e : c->prov)
        mass += share(e.origin, e.birth_t, e.q, level + 1);
      double total = prov_sum(c->prov);
      double f = mass / total;
      memo[k] = {f, total};
      stack.erase(k);
      return std::min(qe, total) * f;
    }
    auto att = attribute_outflow(c->prov, c->buffer, qe, policy, tol);
    for (const auto& ce : att.consumed)
      mass += share(ce.origin, ce.birth_t, ce.q, level + 1);
    stack.erase(k);
    return mass;
  }
};

struct OracleViaFlow {
  const ReplayOracle& orc;
  VertexId s;
  VertexId via;
  double tol;
  std::map<std::pair<Key, bool>, double> memo;
  std::set<std::pair<Key, bool>> stack;

  double flow(const VertexId& sender, double te, double qe, bool seen) {
    bool seen2 = seen || sender == via;
    Key k{te, sender};
    auto c = orc.content_at(sender, te, Flank::Pre);
    if (!c || c->prov.empty()) return (sender == s && seen2) ? qe : 0.0;
    double total = prov_sum(c->prov);
    double covered = std::min(qe, total);
    double minted = qe - covered;
    double res = (minted > tol && sender == s && seen2) ? minted : 0.0;
    std::pair<Key, bool> mk{k, seen2};
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

ProvenanceAnswer ReplayOracle::q1_backward(const VertexId& v, double t,
                                           std::uint32_t depth,
                                           Flank flank) const {
  if (depth == 0) depth = 1;
  if (cfg_.data_class == DataClass::Discrete)
    return q1_discrete(v, t, depth, flank);
  return q1_liquid(v, t, depth, flank);
}

ProvenanceAnswer ReplayOracle::q1_liquid(const VertexId& v, double t,
                                         std::uint32_t depth,
                                         Flank flank) const {
  ProvenanceAnswer a;
  auto c = content_at(v, t, flank);
  if (!c) return a;
  const double tol = cfg_.float_tolerance;
  if (depth == kUnlimitedDepth &&
      cfg_.attribution == AttributionKind::Proportional) {
    OracleDist od{*this, tol, {}, {}, 1};
    std::map<Key, double> acc;
    for (const auto& e : c->prov) od.share(e.origin, e.birth_t, e.q, 1, acc);
    a.entries = collect(acc, tol);
    a.depth_reached = od.max_level;
    return a;
  }
  OracleWalk walk{*this, cfg_.attribution, tol, depth, {}, {}, 1, false};
  for (const auto& e : c->prov) walk.expand(e.origin, e.birth_t, e.q, 1);
  a.entries = collect(walk.acc, tol);
  a.depth_reached = walk.max_level;
  a.truncated = walk.truncated;
  return a;
}

ProvenanceAnswer ReplayOracle::q1_discrete(const VertexId& v, double t,
                                           std::uint32_t depth,
                                           Flank flank) const {
  ProvenanceAnswer a;
  auto c = content_at(v, t, flank);
  if (!c) return a;
  const auto& traces = entity_traces();
  std::map<Key, double> acc;
  std::uint32_t max_level = 1;
  bool truncated = false;
  for (const auto& e : c->entity_set) {
    auto pit = traces.find(e);
    if (pit == traces.end()) continue;
    const auto& hops = pit->second;
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
      for (int j = cur - 1; j >= 0; --j)
        if (hops[j].dst == hops[cur].src && hops[j].t <= hops[cur].t) {
          truncated = true;
          break;
        }
    }
    max_level = std::max(max_level, level);
    acc[{hops[cur].t, hops[cur].src}] += 1.0;
  }
  a.entries = collect(acc, cfg_.float_tolerance);
  a.depth_reached = max_level;
  a.truncated = truncated;
  return a;
}

ForwardAnswer ReplayOracle::q2_forward(const VertexId& s, double t,
                                       std::uint32_t depth) const {
  if (depth == 0) depth = 1;
  if (cfg_.data_class == DataClass::Discrete) return q2_discrete(s, t, depth);
  return q2_liquid(s, t, depth);
}

ForwardAnswer ReplayOracle::q2_liquid(const VertexId& s, double t,
                                      std::uint32_t depth) const {
  ForwardAnswer a;
  const double tol = cfg_.float_tolerance;
  bool fast = depth == kUnlimitedDepth &&
              cfg_.attribution == AttributionKind::Proportional;
  OracleSourceShare ss{*this, s, t, cfg_.attribution, tol, depth, fast, {}, {}};
  std::map<Key, double> deliveries;
  std::map<std::pair<VertexId, VertexId>, double> first_hop_t;
  for (const auto& r : log_) {
    if (r.t < t || r.dst == s) continue;
    double share = ss.share(r.src, r.t, r.q, 1);
    if (share > tol) {
      deliveries[{r.t, r.dst}] += share;
      auto key = std::make_pair(r.src, r.dst);
      auto it = first_hop_t.find(key);
      if (it == first_hop_t.end() || r.t < it->second) first_hop_t[key] = r.t;
    }
  }
  for (const auto& [k, q] : deliveries)
    a.deliveries.push_back({k.second, k.first, q});
  for (const auto& [k, ht] : first_hop_t)
    a.hops.push_back({k.first, k.second, ht});
  std::sort(a.hops.begin(), a.hops.end(), [](const Hop& x, const Hop& y) {
    if (x.t != y.t) return x.t < y.t;
    if (x.from != y.from) return x.from < y.from;
    return x.to < y.to;
  });
  return a;
}

ForwardAnswer ReplayOracle::q2_discrete(const VertexId& s, double t,
                                        std::uint32_t depth) const {
  ForwardAnswer a;
  std::map<Key, double> deliveries;
  std::map<std::pair<VertexId, VertexId>, double> first_hop_t;
  for (const auto& [e, hops] : entity_traces()) {
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
  for (const auto& [k, ht] : first_hop_t)
    a.hops.push_back({k.first, k.second, ht});
  std::sort(a.hops.begin(), a.hops.end(), [](const Hop& x, const Hop& y) {
    if (x.t != y.t) return x.t < y.t;
    if (x.from != y.from) return x.from < y.from;
    return x.to < y.to;
  });
  return a;
}

ProvenanceAnswer ReplayOracle::q3_temporal_lineage(const VertexId& v, double t1,
                                                   double t2) const {
  if (t1 > t2) throw std::invalid_argument("q3: t1 > t2");
  ProvenanceAnswer a;
  a.depth_reached = 1;
  std::map<Key, double> acc;
  for (const auto& r : log_)
    if (r.dst == v && r.t >= t1 && r.t <= t2) acc[{r.t, r.src}] += r.q;
  a.entries = collect(acc, cfg_.float_tolerance);
  return a;
}

double ReplayOracle::q4_flow_lineage(const VertexId& s, const VertexId& d,
                                     const VertexId& via, double h1,
                                     double h2) const {
  if (s == d || s == via || d == via)
    throw std::invalid_argument("q4: s, d, via must be distinct");
  if (h1 > h2) return 0.0;
  if (cfg_.data_class == DataClass::Discrete)
    return q4_discrete(s, d, via, h1, h2);
  return q4_liquid(s, d, via, h1, h2);
}

double ReplayOracle::q4_liquid(const VertexId& s, const VertexId& d,
                               const VertexId& via, double h1,
                               double h2) const {
  const double tol = cfg_.float_tolerance;
  OracleViaFlow vf{*this, s, via, tol, {}, {}};
  double total = 0.0;
  for (const auto& r : log_) {
    if (r.dst != d || r.t < h1 || r.t > h2) continue;
    total += vf.flow(r.src, r.t, r.q, false);
  }
  return total <= tol ? 0.0 : total;
}

double ReplayOracle::q4_discrete(const VertexId& s, const VertexId& d,
                                 const VertexId& via, double h1,
                                 double h2) const {
  double count = 0.0;
  for (const auto& [e, hops] : entity_traces()) {
    if (hops.empty() || hops[0].src != s) continue;
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

ProvenanceDelta ReplayOracle::q5_versioning(const VertexId& v, double t1,
                                            double t2) const {
  if (t1 >= t2) throw std::invalid_argument("q5: t1 must be < t2");
  ProvenanceDelta d;
  VertexContent c1, c2;
  if (auto c = content_at(v, t1)) c1 = *c;
  if (auto c = content_at(v, t2)) c2 = *c;
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

ReplayOracle::Conservation ReplayOracle::conservation() const {
  Conservation c;
  for (const auto& [v, recs] : history_)
    if (!recs.empty()) c.buffer_sum += recs.back().after.buffer;
  c.minted = minted_;
  c.replicated = replicated_;
  double expected = c.minted + c.replicated;
  double scale = std::max(1.0, expected);
  c.ok = std::abs(c.buffer_sum - expected) <= 1e-6 * scale;
  return c;
}

}  // namespace tinprov
