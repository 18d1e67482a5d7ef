#pragma once
// Brute-force reference: replays the raw log into a full per-vertex timeline
// (one record per event, no compression) and answers the same queries by
// direct recursion over that timeline. Used to cross-check the index.

#include <map>
#include <optional>
#include <vector>

#include "tinprov/query.hpp"

namespace tinprov {

class ReplayOracle {
 public:
  ReplayOracle(std::vector<Interaction> log, TinConfig config);

  const TinConfig& config() const { return cfg_; }
  const std::vector<Interaction>& log() const { return log_; }
  std::vector<VertexId> vertices() const;

  // Instantaneous content from the uncompressed timeline; nullopt before the
  // global first event or for unknown vertices.
  std::optional<VertexContent> content_at(const VertexId& v, double t,
                                          Flank flank = Flank::Post) const;

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

  struct Conservation {
    double buffer_sum = 0.0;
    double minted = 0.0;
    double replicated = 0.0;
    bool ok = false;
  };
  Conservation conservation() const;

  double minted_total() const { return minted_; }
  double replicated_total() const { return replicated_; }

 private:
  struct Record {
    double t;
    VertexContent after;
  };

  struct EntityTrace {
    double t;
    VertexId src;
    VertexId dst;
  };

  void replay();
  const std::map<EntityId, std::vector<EntityTrace>>& entity_traces() const;

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

  std::vector<Interaction> log_;
  TinConfig cfg_;
  std::map<VertexId, std::vector<Record>> history_;
  mutable std::map<EntityId, std::vector<EntityTrace>> traces_;
  mutable bool traces_built_ = false;
  double minted_ = 0.0;
  double replicated_ = 0.0;
  double t0_ = 0.0;
  bool any_ = false;
};

}  // namespace tinprov
