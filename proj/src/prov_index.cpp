#include "tinprov/prov_index.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace tinprov {

using nlohmann::json;

const VertexState* TemporalProvenanceIndex::state_at(const VertexId& v, double t,
                                                     Flank flank) const {
  auto smi = states_.find(v);
  if (smi == states_.end()) return nullptr;
  const StateMap& sm = smi->second;
  if (flank == Flank::Pre) {
    auto eq = sm.find(t);
    if (eq != sm.end()) {
      if (eq == sm.begin()) return nullptr;
      return &std::prev(eq)->second;
    }
  }
  auto it = sm.upper_bound(t);
  if (it == sm.begin()) return nullptr;
  --it;
  return &it->second;
}

std::vector<const VertexState*> TemporalProvenanceIndex::states_in(
    const VertexId& v, double t1, double t2) const {
  if (t1 > t2) throw std::invalid_argument("states_in: t1 > t2");
  std::vector<const VertexState*> out;
  auto smi = states_.find(v);
  if (smi == states_.end()) return out;
  const StateMap& sm = smi->second;
  auto it = sm.upper_bound(t1);
  if (it != sm.begin()) --it;
  for (; it != sm.end() && it->second.t_start <= t2; ++it) {
    const VertexState& s = it->second;
    // half-open state [a,b) intersects closed [t1,t2] iff a <= t2 and b > t1
    if (s.t_end && *s.t_end <= t1) continue;
    out.push_back(&s);
  }
  return out;
}

std::optional<VertexContent> TemporalProvenanceIndex::content_at(
    const VertexId& v, double t, Flank flank) const {
  const VertexState* s = state_at(v, t, flank);
  if (!s) return std::nullopt;
  const double tol = config_.float_tolerance;
  auto smi = states_.find(v);
  auto it = smi->second.find(s->t_start);
  VertexContent c;
  if (it != smi->second.begin()) {
    const VertexState& prev = std::prev(it)->second;
    c.buffer = prev.buffer;
    c.prov = prev.prov;
    c.entity_set = prev.entity_set;
  }
  if (s->events.empty() ||
      (flank == Flank::Post ? t >= s->events.back().t : t > s->events.back().t)) {
    c.buffer = s->buffer;
    c.prov = s->prov;
    c.entity_set = s->entity_set;
    return c;
  }
  for (const StateEvent& ev : s->events) {
    bool include = flank == Flank::Post ? ev.t <= t : ev.t < t;
    if (!include) break;
    switch (ev.kind) {
      case EventKind::Arrival:
        c.buffer += ev.q;
        merge_prov_entry(c.prov, {ev.counterpart, ev.t, ev.q, ev.replicate}, tol);
        for (const auto& e : ev.entities) c.entity_set.insert(e);
        break;
      case EventKind::Departure:
        if (!ev.replicate) {
          if (config_.data_class == DataClass::Liquid) {
            // re-runs the exact attribution the engine performed
            auto att = attribute_outflow(c.prov, c.buffer, ev.q,
                                         config_.attribution, tol);
            c.prov = att.remaining;
            c.buffer = std::max(0.0, c.buffer - (ev.q - att.minted));
          } else {
            double removed = 0.0;
            for (const auto& con : ev.consumed) {
              removed += con.q;
              for (auto pit = c.prov.begin(); pit != c.prov.end(); ++pit) {
                if (pit->birth_t == con.birth_t && pit->origin == con.origin) {
                  pit->q -= con.q;
                  if (pit->q <= tol) c.prov.erase(pit);
                  break;
                }
              }
            }
            c.buffer = std::max(0.0, c.buffer - removed);
            for (const auto& e : ev.entities) c.entity_set.erase(e);
          }
        }
        break;
      case EventKind::Epoch:
        break;
    }
  }
  return c;
}

std::vector<VertexId> TemporalProvenanceIndex::vertices() const {
  std::vector<VertexId> out;
  out.reserve(states_.size());
  for (const auto& [v, _] : states_) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

const TemporalProvenanceIndex::StateMap* TemporalProvenanceIndex::states_of(
    const VertexId& v) const {
  auto it = states_.find(v);
  return it == states_.end() ? nullptr : &it->second;
}

void TemporalProvenanceIndex::ensure_vertex(const VertexId& v, double t0,
                                            double /*touch_t*/) {
  if (states_.count(v)) return;
  VertexState s;
  s.vertex = v;
  s.t_start = t0;
  states_[v].emplace(t0, std::move(s));
}

VertexState& TemporalProvenanceIndex::open_state(const VertexId& v) {
  auto it = states_.find(v);
  if (it == states_.end() || it->second.empty())
    throw EngineError("open_state: unknown vertex " + v);
  return it->second.rbegin()->second;
}

void TemporalProvenanceIndex::close_and_append(const VertexId& v, VertexState s) {
  auto it = states_.find(v);
  if (it == states_.end() || it->second.empty()) {
    if (s.t_end) throw EngineError("close_and_append: first state must be OPEN");
    s.vertex = v;
    double t = s.t_start;
    states_[v].emplace(t, std::move(s));
    return;
  }
  VertexState& open = it->second.rbegin()->second;
  if (open.t_end) throw EngineError("close_and_append: last state already closed");
  if (s.t_start <= open.t_start)
    throw EngineError("close_and_append: non-monotone insertion at " + v);
  open.t_end = s.t_start;
  s.vertex = v;
  double t = s.t_start;
  it->second.emplace(t, std::move(s));
}

std::uint64_t TemporalProvenanceIndex::total_state_count() const {
  std::uint64_t n = 0;
  for (const auto& [_, sm] : states_) n += sm.size();
  return n;
}

std::optional<double> TemporalProvenanceIndex::first_time() const {
  std::optional<double> t;
  for (const auto& [_, sm] : states_)
    if (!sm.empty() && (!t || sm.begin()->first < *t)) t = sm.begin()->first;
  return t;
}

std::optional<double> TemporalProvenanceIndex::last_time() const {
  std::optional<double> t;
  for (const auto& [_, sm] : states_) {
    for (const auto& [ts, s] : sm) {
      if (!t || ts > *t) t = ts;  // boundaries happen at event times
      for (const auto& ev : s.events)
        if (ev.t > *t) t = ev.t;
    }
  }
  return t;
}

namespace {

json prov_to_json(const ProvList& prov) {
  json arr = json::array();
  for (const auto& e : prov)
    arr.push_back({e.origin, e.birth_t, dec_string(e.q), e.via_replication});
  return arr;
}

ProvList prov_from_json(const json& arr) {
  ProvList prov;
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 4)
      throw SnapshotError("bad provenance entry");
    prov.push_back({e[0].get<std::string>(), e[1].get<double>(),
                    parse_dec(e[2].get<std::string>()), e[3].get<bool>()});
  }
  return prov;
}

json config_to_json(const TinConfig& c) {
  json j;
  j["data_class"] = to_string(c.data_class);
  j["attribution"] = to_string(c.attribution);
  j["boundary"] = {{"kind", to_string(c.boundary.kind)},
                   {"delta", c.boundary.delta}};
  j["float_tolerance"] = c.float_tolerance;
  j["record_events"] = c.record_events;
  return j;
}

TinConfig config_from_json(const json& j) {
  TinConfig c;
  auto dc = data_class_from_string(j.at("data_class").get<std::string>());
  auto at = attribution_from_string(j.at("attribution").get<std::string>());
  auto bk = boundary_from_string(j.at("boundary").at("kind").get<std::string>());
  if (!dc || !at || !bk) throw SnapshotError("bad config in snapshot header");
  c.data_class = *dc;
  c.attribution = *at;
  c.boundary.kind = *bk;
  c.boundary.delta = j.at("boundary").at("delta").get<double>();
  c.float_tolerance = j.at("float_tolerance").get<double>();
  if (j.contains("record_events"))
    c.record_events = j.at("record_events").get<bool>();
  return c;
}

const char* event_kind_tag(EventKind k) {
  switch (k) {
    case EventKind::Arrival: return "a";
    case EventKind::Departure: return "d";
    case EventKind::Epoch: return "e";
  }
  return "?";
}

}  // namespace

void TemporalProvenanceIndex::snapshot(std::ostream& out) const {
  json header;
  header["tinprov_snapshot"] = 1;
  header["config"] = config_to_json(config_);
  json touches = json::object();
  for (const auto& v : vertices()) {
    auto it = touches_.find(v);
    if (it != touches_.end()) touches[v] = it->second;
  }
  header["counters"] = {{"raw", raw_count_},
                        {"minted", dec_string(minted_total_)},
                        {"replicated", dec_string(replicated_total_)},
                        {"touches", touches}};
  out << header.dump() << "\n";
  for (const auto& v : vertices()) {
    for (const auto& [ts, s] : states_.at(v)) {
      json j;
      j["v"] = v;
      j["t0"] = s.t_start;
      if (s.t_end)
        j["t1"] = *s.t_end;
      else
        j["t1"] = nullptr;
      j["b"] = dec_string(s.buffer);
      j["prov"] = prov_to_json(s.prov);
      if (!s.entity_set.empty())
        j["entities"] = std::vector<EntityId>(s.entity_set.begin(),
                                              s.entity_set.end());
      if (!s.events.empty()) {
        json evs = json::array();
        for (const auto& ev : s.events) {
          json je = {event_kind_tag(ev.kind), ev.counterpart, ev.t,
                     dec_string(ev.q), ev.replicate};
          je.push_back(ev.entities);
          je.push_back(prov_to_json(ev.consumed));
          evs.push_back(std::move(je));
        }
        j["ev"] = std::move(evs);
      }
      out << j.dump() << "\n";
    }
  }
}

TemporalProvenanceIndex TemporalProvenanceIndex::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SnapshotError("empty snapshot");
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() ||
      !header.contains("tinprov_snapshot"))
    throw SnapshotError("missing snapshot header");
  if (header["tinprov_snapshot"].get<int>() != 1)
    throw SnapshotError("unsupported snapshot version");
  TemporalProvenanceIndex idx(config_from_json(header.at("config")));
  if (header.contains("counters")) {
    const json& c = header["counters"];
    idx.raw_count_ = c.at("raw").get<std::uint64_t>();
    idx.minted_total_ = parse_dec(c.at("minted").get<std::string>());
    idx.replicated_total_ = parse_dec(c.at("replicated").get<std::string>());
    for (const auto& [v, n] : c.at("touches").items())
      idx.touches_[v] = n.get<std::uint64_t>();
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw SnapshotError("corrupt snapshot at line " + std::to_string(lineno));
    try {
      VertexState s;
      s.vertex = j.at("v").get<std::string>();
      s.t_start = j.at("t0").get<double>();
      if (!j.at("t1").is_null()) s.t_end = j.at("t1").get<double>();
      s.buffer = parse_dec(j.at("b").get<std::string>());
      s.prov = prov_from_json(j.at("prov"));
      if (j.contains("entities"))
        for (const auto& e : j["entities"])
          s.entity_set.insert(e.get<std::string>());
      if (j.contains("ev")) {
        for (const auto& je : j["ev"]) {
          if (!je.is_array() || je.size() != 7)
            throw SnapshotError("bad event record");
          StateEvent ev;
          std::string k = je[0].get<std::string>();
          ev.kind = k == "a"   ? EventKind::Arrival
                    : k == "d" ? EventKind::Departure
                               : EventKind::Epoch;
          ev.counterpart = je[1].get<std::string>();
          ev.t = je[2].get<double>();
          ev.q = parse_dec(je[3].get<std::string>());
          ev.replicate = je[4].get<bool>();
          for (const auto& e : je[5]) ev.entities.push_back(e.get<std::string>());
          ev.consumed = prov_from_json(je[6]);
          s.events.push_back(std::move(ev));
        }
      }
      auto& sm = idx.states_[s.vertex];
      if (!sm.empty()) {
        VertexState& last = sm.rbegin()->second;
        if (last.t_end != std::optional<double>(s.t_start) ||
            s.t_start <= last.t_start)
          throw SnapshotError("states out of order for " + s.vertex);
      }
      double ts = s.t_start;
      sm.emplace(ts, std::move(s));
    } catch (const json::exception&) {
      throw SnapshotError("corrupt snapshot at line " + std::to_string(lineno));
    }
  }
  for (const auto& [v, sm] : idx.states_) {
    if (sm.empty() || sm.rbegin()->second.t_end)
      throw SnapshotError("truncated snapshot: no OPEN state for " + v);
  }
  return idx;
}

TemporalProvenanceIndex build_index(const std::vector<Interaction>& log,
                                    const TinConfig& config) {
  TemporalProvenanceIndex idx(config);
  StateEngine engine(idx);
  for (const auto& r : log) engine.apply_interaction(r);
  return idx;
}

}  // namespace tinprov
