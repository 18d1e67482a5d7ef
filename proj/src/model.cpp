#include "tinprov/model.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace tinprov {

using nlohmann::json;

std::string dec_string(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_dec(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("q", "bad decimal value: " + s);
  }
  return v;
}

namespace {

void check_common(const Interaction& r, DataClass data_class) {
  if (r.src.empty()) throw ParseError("src", "src must be non-empty");
  if (r.dst.empty()) throw ParseError("dst", "dst must be non-empty");
  if (r.src == r.dst) throw ParseError("dst", "src=dst reflexive edge rejected");
  if (!(r.q > 0.0)) throw ParseError("q", "quantity must be > 0");
  if (r.t < 0.0 || !std::isfinite(r.t)) throw ParseError("t", "timestamp must be a non-negative number");
  if (!std::isfinite(r.q)) throw ParseError("q", "quantity must be finite");
  if (data_class == DataClass::Discrete) {
    if (r.entities.empty())
      throw ParseError("entities", "entities required in discrete mode");
    if (r.q != std::floor(r.q) ||
        r.entities.size() != static_cast<std::size_t>(r.q))
      throw ParseError("entities", "entities length must equal integral q");
    for (const auto& e : r.entities)
      if (e.empty()) throw ParseError("entities", "empty entity id");
  }
}

}  // namespace

Interaction parse_interaction(const std::string& line, LogFormat format,
                              DataClass data_class) {
  Interaction r;
  if (format == LogFormat::Jsonl) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw ParseError("record", "malformed JSON record");
    auto need = [&](const char* k) -> const json& {
      auto it = j.find(k);
      if (it == j.end()) throw ParseError(k, std::string("missing field ") + k);
      return *it;
    };
    const json& src = need("src");
    const json& dst = need("dst");
    const json& t = need("t");
    const json& q = need("q");
    if (!src.is_string()) throw ParseError("src", "src must be a string");
    if (!dst.is_string()) throw ParseError("dst", "dst must be a string");
    if (!t.is_number()) throw ParseError("t", "t must be a number");
    if (!q.is_number()) throw ParseError("q", "q must be a number");
    r.src = src.get<std::string>();
    r.dst = dst.get<std::string>();
    r.t = t.get<double>();
    r.q = q.get<double>();
    if (auto it = j.find("entities"); it != j.end() && !it->is_null()) {
      if (!it->is_array()) throw ParseError("entities", "entities must be an array");
      for (const auto& e : *it) {
        if (!e.is_string()) throw ParseError("entities", "entity ids must be strings");
        r.entities.push_back(e.get<std::string>());
      }
    }
    if (auto it = j.find("replicate"); it != j.end() && !it->is_null()) {
      if (!it->is_boolean()) throw ParseError("replicate", "replicate must be a boolean");
      r.replicate = it->get<bool>();
    }
  } else {
    // CSV: src,dst,t,q (liquid mode only)
    if (data_class == DataClass::Discrete)
      throw ParseError("record", "CSV format is liquid-mode only");
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) fields.push_back(item);
    if (fields.size() != 4)
      throw ParseError("record", "CSV record must have 4 fields src,dst,t,q");
    r.src = fields[0];
    r.dst = fields[1];
    try {
      r.t = parse_dec(fields[2]);
    } catch (const ParseError&) {
      throw ParseError("t", "bad timestamp: " + fields[2]);
    }
    r.q = parse_dec(fields[3]);
  }
  check_common(r, data_class);
  return r;
}

std::string serialize_interaction(const Interaction& r, LogFormat format) {
  if (format == LogFormat::Csv) {
    return r.src + "," + r.dst + "," + dec_string(r.t) + "," + dec_string(r.q);
  }
  json j;
  j["src"] = r.src;
  j["dst"] = r.dst;
  j["t"] = r.t;
  j["q"] = r.q;
  if (!r.entities.empty()) j["entities"] = r.entities;
  if (r.replicate) j["replicate"] = true;
  return j.dump();
}

ValidationReport validate_log(const std::vector<Interaction>& log,
                              const TinConfig& config) {
  ValidationReport rep;
  double last_t = -1.0;
  // entity -> current location; empty string = entity has been seen but the
  // location is shared (replicated copies)
  std::unordered_map<EntityId, VertexId> location;
  std::unordered_set<EntityId> replicated;
  std::unordered_map<EntityId, VertexId> birth_vertex;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const Interaction& r = log[i];
    if (r.t < last_t) {
      rep.violations.push_back({i, "out-of-order timestamp " + dec_string(r.t) +
                                       " after " + dec_string(last_t)});
    }
    last_t = std::max(last_t, r.t);
    if (config.data_class != DataClass::Discrete) continue;
    for (const auto& e : r.entities) {
      auto it = location.find(e);
      if (it == location.end()) {
        // birth at src
        birth_vertex[e] = r.src;
        location[e] = r.replicate ? r.src : r.dst;
        if (r.replicate) replicated.insert(e);
      } else if (replicated.count(e)) {
        // copies exist; occupancy no longer single-vertex, skip the check
        if (r.replicate) continue;
        location[e] = r.dst;
      } else if (it->second != r.src) {
        if (birth_vertex[e] != r.src && location[e] != r.src) {
          rep.violations.push_back(
              {i, "entity " + e + " sent from " + r.src + " but located at " +
                      it->second +
                      (birth_vertex.count(e) && birth_vertex[e] != r.src
                           ? " (duplicate EntityId birth)"
                           : "")});
        }
      } else {
        if (r.replicate) {
          replicated.insert(e);
        } else {
          it->second = r.dst;
        }
      }
    }
  }
  return rep;
}

const char* to_string(DataClass c) {
  return c == DataClass::Discrete ? "discrete" : "liquid";
}
const char* to_string(AttributionKind k) {
  switch (k) {
    case AttributionKind::Proportional: return "proportional";
    case AttributionKind::FIFO: return "fifo";
    case AttributionKind::LIFO: return "lifo";
  }
  return "?";
}
const char* to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::PhaseChange: return "phase_change";
    case BoundaryKind::PerInteraction: return "per_interaction";
    case BoundaryKind::TimeBucket: return "time_bucket";
  }
  return "?";
}

std::optional<DataClass> data_class_from_string(const std::string& s) {
  if (s == "discrete") return DataClass::Discrete;
  if (s == "liquid") return DataClass::Liquid;
  return std::nullopt;
}
std::optional<AttributionKind> attribution_from_string(const std::string& s) {
  if (s == "proportional") return AttributionKind::Proportional;
  if (s == "fifo") return AttributionKind::FIFO;
  if (s == "lifo") return AttributionKind::LIFO;
  return std::nullopt;
}
std::optional<BoundaryKind> boundary_from_string(const std::string& s) {
  if (s == "phase_change") return BoundaryKind::PhaseChange;
  if (s == "per_interaction") return BoundaryKind::PerInteraction;
  if (s == "time_bucket") return BoundaryKind::TimeBucket;
  return std::nullopt;
}

}  // namespace tinprov
