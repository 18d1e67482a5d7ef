#pragma once
// Per-vertex buffer/provenance evolution, state boundaries, outflow attribution.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "tinprov/model.hpp"

namespace tinprov {

// Attributes part of a buffer to the vertex that contributed it. For stored
// states `origin` is the last-hop sender; minted entries produced during
// attribution carry the minting vertex itself.
struct ProvenanceEntry {
  VertexId origin;
  double birth_t = 0.0;
  double q = 0.0;
  bool via_replication = false;

  bool operator==(const ProvenanceEntry& o) const {
    return origin == o.origin && birth_t == o.birth_t && q == o.q &&
           via_replication == o.via_replication;
  }
};

// Sorted by (birth_t, origin) so FIFO/LIFO scans are a linear pass.
using ProvList = std::vector<ProvenanceEntry>;

enum class EventKind { Arrival, Departure, Epoch };

// One log event applied while a state was open. counterpart is the other
// endpoint (sender for arrivals, receiver for departures, label for epochs).
// For non-replicated departures, `consumed` records the prov entries the
// outflow removed (minted deficit excluded), so content can be replayed at
// any time inside the interval.
struct StateEvent {
  EventKind kind = EventKind::Arrival;
  std::string counterpart;
  double t = 0.0;
  double q = 0.0;
  bool replicate = false;
  std::vector<EntityId> entities;
  ProvList consumed;
};

enum class PhaseKind { Idle, Accumulating, Depleting };

struct Phase {
  PhaseKind kind = PhaseKind::Idle;
  std::set<VertexId> origin_set;  // senders currently present in prov
};

constexpr double kOpenEnd = -1.0;

struct VertexState {
  VertexId vertex;
  double t_start = 0.0;
  std::optional<double> t_end;  // nullopt = OPEN
  double buffer = 0.0;          // content at end of interval
  ProvList prov;                // content at end of interval
  std::set<EntityId> entity_set;
  std::vector<StateEvent> events;  // chronological, within [t_start, t_end)
};

// Instantaneous vertex content, reconstructed at an arbitrary time.
struct VertexContent {
  double buffer = 0.0;
  ProvList prov;
  std::set<EntityId> entity_set;
};

struct AttributionResult {
  ProvList consumed;   // what the outflow carries (minted deficit included)
  ProvList remaining;  // what stays behind
  double minted = 0.0; // deficit covered by mint_birth at the sender
};

// Splits an outflow of out_q against prov (summing to buffer). Consumed mass
// equals min(out_q, buffer); any deficit beyond the buffer is reported in
// `minted` for the caller to mint at the sender.
AttributionResult attribute_outflow(const ProvList& prov, double buffer,
                                    double out_q, AttributionKind policy,
                                    double float_tolerance);

// (origin=v, birth_t=t, q=deficit); callers skip deficit == 0.
ProvenanceEntry mint_birth(const VertexId& v, double t, double deficit);

// Merge an entry into a prov list keyed by (origin, birth_t); drops dust.
void merge_prov_entry(ProvList& prov, const ProvenanceEntry& e,
                      double float_tolerance);

double prov_sum(const ProvList& prov);

double compression_ratio(std::uint64_t raw_count, std::uint64_t state_count);

class EngineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemporalProvenanceIndex;

struct StateTransition {
  VertexId vertex;
  double t = 0.0;  // boundary time
};

// Streams validated, time-ordered interactions into an index. Single writer.
class StateEngine {
 public:
  explicit StateEngine(TemporalProvenanceIndex& index);

  std::vector<StateTransition> apply_interaction(const Interaction& r);
  std::vector<StateTransition> mark_epoch(const VertexId& v, double t,
                                          const std::string& label);

  double last_time() const { return last_t_; }

 private:
  struct VertexRuntime {
    Phase phase;
    std::unordered_map<EntityId, std::pair<VertexId, double>> entity_arrival;
  };

  VertexRuntime& touch(const VertexId& v, double t);
  // Closes/opens states as the boundary policy demands before an event at t.
  void maybe_boundary(const VertexId& v, double t, bool is_departure,
                      bool origin_change, std::vector<StateTransition>& out);
  void force_boundary(const VertexId& v, double t,
                      std::vector<StateTransition>& out);

  TemporalProvenanceIndex& index_;
  std::unordered_map<VertexId, VertexRuntime> runtime_;
  std::unordered_map<EntityId, std::set<VertexId>> entity_holders_;
  std::unordered_map<EntityId, std::pair<VertexId, double>> entity_birth_;
  double last_t_ = -1.0;
  double t0_ = 0.0;
  bool started_ = false;
};

}  // namespace tinprov
