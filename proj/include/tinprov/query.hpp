#pragma once
// The five temporal provenance query types over a TemporalProvenanceIndex.

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tinprov/prov_index.hpp"

namespace tinprov {

inline constexpr std::uint32_t kUnlimitedDepth =
    std::numeric_limits<std::uint32_t>::max();

struct AnswerEntry {
  VertexId origin;
  double t = 0.0;
  double q = 0.0;

  bool operator==(const AnswerEntry& o) const {
    return origin == o.origin && t == o.t && q == o.q;
  }
};

struct ProvenanceAnswer {
  std::vector<AnswerEntry> entries;  // merged by (origin, time), time-ordered
  std::uint32_t depth_reached = 0;
  bool truncated = false;

  double total() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.q;
    return s;
  }
};

struct Delivery {
  VertexId destination;
  double t = 0.0;
  double q_from_source = 0.0;
};

struct Hop {
  VertexId from;
  VertexId to;
  double t = 0.0;  // first delivery time on this edge
};

struct ForwardAnswer {
  std::vector<Delivery> deliveries;
  std::vector<Hop> hops;
};

struct DeltaChange {
  VertexId origin;
  double t = 0.0;
  double q_before = 0.0;
  double q_after = 0.0;
};

struct ProvenanceDelta {
  ProvList added;
  ProvList removed;
  std::vector<DeltaChange> changed;
  double buffer_before = 0.0;
  double buffer_after = 0.0;

  bool empty() const {
    return added.empty() && removed.empty() && changed.empty() &&
           buffer_before == buffer_after;
  }
};

class QueryEngine {
 public:
  explicit QueryEngine(const TemporalProvenanceIndex& idx) : idx_(idx) {}

  ProvenanceAnswer q1_backward(const VertexId& v, double t,
                               std::uint32_t depth = kUnlimitedDepth,
                               Flank flank = Flank::Post) const;

  ForwardAnswer q2_forward(const VertexId& s, double t,
                           std::uint32_t depth = kUnlimitedDepth) const;

  ProvenanceAnswer q3_temporal_lineage(const VertexId& v, double t1,
                                       double t2) const;

  double q4_flow_lineage(const VertexId& s, const VertexId& d,
                         const VertexId& via, double h1, double h2) const;

  ProvenanceDelta q5_versioning(const VertexId& v, double t1, double t2) const;

  std::string to_json(const ProvenanceAnswer& a) const;
  std::string to_json(const ForwardAnswer& a) const;
  std::string to_json(const ProvenanceDelta& a) const;
  std::string q4_json(double quantity) const;

 private:
  struct EntityHop {
    double t;
    VertexId src;
    VertexId dst;
  };
  using EntityPaths = std::map<EntityId, std::vector<EntityHop>>;

  const EntityPaths& entity_paths() const;

  ProvenanceAnswer q1_liquid(const VertexId& v, double t, std::uint32_t depth,
                             Flank flank) const;
  ProvenanceAnswer q1_discrete(const VertexId& v, double t, std::uint32_t depth,
                               Flank flank) const;
  ForwardAnswer q2_liquid(const VertexId& s, double t,
                          std::uint32_t depth) const;
  ForwardAnswer q2_discrete(const VertexId& s, double t,
                            std::uint32_t depth) const;
  double q4_liquid(const VertexId& s, const VertexId& d, const VertexId& via,
                   double h1, double h2) const;
  double q4_discrete(const VertexId& s, const VertexId& d, const VertexId& via,
                     double h1, double h2) const;

  const TemporalProvenanceIndex& idx_;
  mutable EntityPaths entity_paths_;
  mutable bool entity_paths_built_ = false;
};

}  // namespace tinprov
