#include "tinprov/state_engine.hpp"

#include <algorithm>
#include <cmath>

#include "tinprov/prov_index.hpp"

namespace tinprov {

namespace {

bool prov_key_less(const ProvenanceEntry& a, const ProvenanceEntry& b) {
  if (a.birth_t != b.birth_t) return a.birth_t < b.birth_t;
  return a.origin < b.origin;
}

}  // namespace

double prov_sum(const ProvList& prov) {
  double s = 0.0;
  for (const auto& e : prov) s += e.q;
  return s;
}

void merge_prov_entry(ProvList& prov, const ProvenanceEntry& e,
                      double float_tolerance) {
  if (e.q <= float_tolerance) return;
  auto it = std::lower_bound(prov.begin(), prov.end(), e, prov_key_less);
  if (it != prov.end() && it->birth_t == e.birth_t && it->origin == e.origin) {
    it->q += e.q;
    it->via_replication = it->via_replication || e.via_replication;
  } else {
    prov.insert(it, e);
  }
}

ProvenanceEntry mint_birth(const VertexId& v, double t, double deficit) {
  return ProvenanceEntry{v, t, deficit, false};
}

AttributionResult attribute_outflow(const ProvList& prov, double buffer,
                                    double out_q, AttributionKind policy,
                                    double float_tolerance) {
  if (out_q <= 0.0 || buffer < 0.0)
    throw EngineError("attribute_outflow: non-positive outflow or negative buffer");
  AttributionResult res;
  double total = prov_sum(prov);
  if (out_q >= total - float_tolerance) {
    res.consumed = prov;
    res.minted = out_q - total;
    if (res.minted < float_tolerance) res.minted = 0.0;
    return res;
  }
  switch (policy) {
    case AttributionKind::Proportional: {
      double frac = out_q / total;
      double acc = 0.0;
      for (std::size_t i = 0; i < prov.size(); ++i) {
        const auto& e = prov[i];
        double c = (i + 1 == prov.size()) ? out_q - acc : e.q * frac;
        acc += c;
        if (c > float_tolerance)
          res.consumed.push_back({e.origin, e.birth_t, c, e.via_replication});
        double rem = e.q - c;
        if (rem > float_tolerance)
          res.remaining.push_back({e.origin, e.birth_t, rem, e.via_replication});
      }
      break;
    }
    case AttributionKind::FIFO:
    case AttributionKind::LIFO: {
      // prov is kept sorted ascending by (birth_t, origin)
      double left = out_q;
      std::vector<ProvenanceEntry> ordered = prov;
      if (policy == AttributionKind::LIFO)
        std::reverse(ordered.begin(), ordered.end());
      for (const auto& e : ordered) {
        if (left > float_tolerance) {
          double c = std::min(left, e.q);
          left -= c;
          res.consumed.push_back({e.origin, e.birth_t, c, e.via_replication});
          double rem = e.q - c;
          if (rem > float_tolerance)
            res.remaining.push_back({e.origin, e.birth_t, rem, e.via_replication});
        } else {
          res.remaining.push_back(e);
        }
      }
      if (policy == AttributionKind::LIFO)
        std::reverse(res.consumed.begin(), res.consumed.end()),
            std::reverse(res.remaining.begin(), res.remaining.end());
      break;
    }
  }
  return res;
}

double compression_ratio(std::uint64_t raw_count, std::uint64_t state_count) {
  if (state_count == 0) throw EngineError("compression_ratio: zero states");
  return static_cast<double>(raw_count) / static_cast<double>(state_count);
}

StateEngine::StateEngine(TemporalProvenanceIndex& index) : index_(index) {}

StateEngine::VertexRuntime& StateEngine::touch(const VertexId& v, double t) {
  if (!index_.has_vertex(v)) index_.ensure_vertex(v, t0_, t);
  return runtime_[v];
}

void StateEngine::force_boundary(const VertexId& v, double t,
                                 std::vector<StateTransition>& out) {
  VertexState& open = index_.open_state(v);
  if (open.t_start >= t) return;  // zero-length states are never created
  VertexState next;
  next.vertex = v;
  next.t_start = t;
  next.buffer = open.buffer;
  next.prov = open.prov;
  next.entity_set = open.entity_set;
  index_.close_and_append(v, std::move(next));
  out.push_back({v, t});
}

void StateEngine::maybe_boundary(const VertexId& v, double t, bool is_departure,
                                 bool origin_change,
                                 std::vector<StateTransition>& out) {
  const BoundaryPolicy& bp = index_.config().boundary;
  if (bp.kind == BoundaryKind::PerInteraction) {
    force_boundary(v, t, out);
    return;
  }
  if (bp.kind == BoundaryKind::TimeBucket && bp.delta > 0.0) {
    double start = index_.open_state(v).t_start;
    double m = (std::floor(start / bp.delta) + 1.0) * bp.delta;
    for (; m <= t; m += bp.delta) force_boundary(v, m, out);
  }
  const Phase& ph = runtime_[v].phase;
  bool flip = is_departure ? (ph.kind != PhaseKind::Depleting)
                           : (ph.kind != PhaseKind::Accumulating);
  if (flip || origin_change) force_boundary(v, t, out);
}

std::vector<StateTransition> StateEngine::apply_interaction(const Interaction& r) {
  if (started_ && r.t < last_t_)
    throw EngineError("time regression at seq " + std::to_string(r.seq));
  if (!started_) {
    t0_ = r.t;
    started_ = true;
  }
  last_t_ = r.t;

  const TinConfig& cfg = index_.config();
  const double tol = cfg.float_tolerance;
  std::vector<StateTransition> out;

  VertexRuntime& src_rt = touch(r.src, r.t);
  touch(r.dst, r.t);
  index_.note_interaction();
  index_.note_touch(r.src);
  index_.note_touch(r.dst);

  VertexState& src_pre = index_.open_state(r.src);
  AttributionResult att;
  if (cfg.data_class == DataClass::Discrete) {
    if (r.entities.empty())
      throw EngineError("discrete-mode interaction without entities");
    // group moved entities by their arrival entry at src; unseen ids are births
    std::map<std::pair<double, VertexId>, std::pair<double, bool>> groups;
    for (const auto& e : r.entities) {
      auto hit = entity_holders_.find(e);
      if (hit == entity_holders_.end()) {
        att.minted += 1.0;
        entity_birth_[e] = {r.src, r.t};
        entity_holders_[e] = {r.src};
      } else if (!hit->second.count(r.src)) {
        throw EngineError("entity " + e + " not present at " + r.src);
      } else {
        auto ait = src_rt.entity_arrival.find(e);
        if (ait == src_rt.entity_arrival.end()) {
          // replicated copy retained at its birth vertex: no buffer mass here
          att.minted += 1.0;
        } else {
          groups[{ait->second.second, ait->second.first}].first += 1.0;
        }
      }
    }
    for (const auto& [key, g] : groups)
      att.consumed.push_back({key.second, key.first, g.first, g.second});
    att.remaining = src_pre.prov;
    for (const auto& c : att.consumed) {
      auto it = std::lower_bound(att.remaining.begin(), att.remaining.end(), c,
                                 prov_key_less);
      if (it != att.remaining.end() && it->birth_t == c.birth_t &&
          it->origin == c.origin) {
        it->q -= c.q;
        if (it->q <= tol) att.remaining.erase(it);
      }
    }
  } else {
    att = attribute_outflow(src_pre.prov, src_pre.buffer, r.q, cfg.attribution,
                            tol);
  }

  if (att.minted > 0.0) index_.note_minted(att.minted);
  if (r.replicate) index_.note_replicated(r.q - att.minted);

  bool origin_depleted = false;
  if (!r.replicate && att.remaining.size() != src_pre.prov.size()) {
    // consumption only ever removes entries, so a size match means no origin
    // can have vanished
    std::set<VertexId> before, after;
    for (const auto& e : src_pre.prov) before.insert(e.origin);
    for (const auto& e : att.remaining) after.insert(e.origin);
    for (const auto& o : before)
      if (!after.count(o)) origin_depleted = true;
  }

  maybe_boundary(r.src, r.t, /*is_departure=*/true, origin_depleted, out);
  {
    VertexState& so = index_.open_state(r.src);
    StateEvent ev;
    ev.kind = EventKind::Departure;
    ev.counterpart = r.dst;
    ev.t = r.t;
    ev.q = r.q;
    ev.replicate = r.replicate;
    ev.entities = r.entities;
    if (!r.replicate) {
      // liquid replay can re-run attribution deterministically; the discrete
      // split depends on entity arrival records, so it must be stored
      if (cfg.data_class == DataClass::Discrete) ev.consumed = att.consumed;
      so.prov = att.remaining;
      so.buffer = std::max(0.0, so.buffer - (r.q - att.minted));
      if (cfg.data_class == DataClass::Discrete) {
        for (const auto& e : r.entities) {
          so.entity_set.erase(e);
          src_rt.entity_arrival.erase(e);
          entity_holders_[e] = {r.dst};
        }
      }
    } else if (cfg.data_class == DataClass::Discrete) {
      for (const auto& e : r.entities) entity_holders_[e].insert(r.dst);
    }
    if (cfg.record_events) so.events.push_back(std::move(ev));
    Phase& ph = runtime_[r.src].phase;
    ph.kind = PhaseKind::Depleting;
    if (!r.replicate) {
      ph.origin_set.clear();
      for (const auto& e : so.prov) ph.origin_set.insert(e.origin);
    }
  }

  {
    VertexRuntime& dst_rt = runtime_[r.dst];
    bool new_origin = !dst_rt.phase.origin_set.count(r.src);
    maybe_boundary(r.dst, r.t, /*is_departure=*/false, new_origin, out);
    VertexState& dso = index_.open_state(r.dst);
    dso.buffer += r.q;
    merge_prov_entry(dso.prov, {r.src, r.t, r.q, r.replicate}, tol);
    if (cfg.data_class == DataClass::Discrete) {
      for (const auto& e : r.entities) {
        dso.entity_set.insert(e);
        dst_rt.entity_arrival[e] = {r.src, r.t};
      }
    }
    StateEvent ev;
    ev.kind = EventKind::Arrival;
    ev.counterpart = r.src;
    ev.t = r.t;
    ev.q = r.q;
    ev.replicate = r.replicate;
    ev.entities = r.entities;
    if (cfg.record_events) dso.events.push_back(std::move(ev));
    dst_rt.phase.kind = PhaseKind::Accumulating;
    dst_rt.phase.origin_set.insert(r.src);
  }
  return out;
}

std::vector<StateTransition> StateEngine::mark_epoch(const VertexId& v, double t,
                                                     const std::string& label) {
  if (started_ && t < last_t_) throw EngineError("epoch time regression");
  if (!started_) {
    t0_ = t;
    started_ = true;
  }
  last_t_ = t;
  touch(v, t);
  std::vector<StateTransition> out;
  const BoundaryPolicy& bp = index_.config().boundary;
  if (bp.kind == BoundaryKind::TimeBucket && bp.delta > 0.0) {
    double start = index_.open_state(v).t_start;
    double m = (std::floor(start / bp.delta) + 1.0) * bp.delta;
    for (; m <= t; m += bp.delta) force_boundary(v, m, out);
  }
  force_boundary(v, t, out);
  if (index_.config().record_events) {
    StateEvent ev;
    ev.kind = EventKind::Epoch;
    ev.counterpart = label;
    ev.t = t;
    index_.open_state(v).events.push_back(std::move(ev));
  }
  return out;
}

}  // namespace tinprov
