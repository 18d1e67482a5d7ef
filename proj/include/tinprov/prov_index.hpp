#pragma once
// Per-vertex chronologically ordered state sequences behind an ordered-map
// lookup keyed by t_start, with JSON-lines snapshot persistence.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tinprov/model.hpp"
#include "tinprov/state_engine.hpp"

namespace tinprov {

enum class Flank { Post, Pre };

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemporalProvenanceIndex {
 public:
  using StateMap = std::map<double, VertexState>;

  explicit TemporalProvenanceIndex(TinConfig config) : config_(config) {}

  const TinConfig& config() const { return config_; }
  // Runtime override (e.g. CLI tolerance env var) after a snapshot load.
  void set_float_tolerance(double tol) { config_.float_tolerance = tol; }

  // post flank: the state with t_start <= t < t_end; pre flank: the state
  // just before a boundary at exactly t. nullptr if t precedes the vertex's
  // first state or the vertex is unknown.
  const VertexState* state_at(const VertexId& v, double t,
                              Flank flank = Flank::Post) const;

  // States whose interval intersects the closed range [t1, t2], in order.
  std::vector<const VertexState*> states_in(const VertexId& v, double t1,
                                            double t2) const;

  // Instantaneous content at t: post includes events at exactly t, pre
  // excludes them. nullopt when state_at would be NONE.
  std::optional<VertexContent> content_at(const VertexId& v, double t,
                                          Flank flank = Flank::Post) const;

  bool has_vertex(const VertexId& v) const { return states_.count(v) > 0; }
  std::vector<VertexId> vertices() const;
  const StateMap* states_of(const VertexId& v) const;

  // --- engine-facing write surface (single writer) ---

  // Creates the vertex's first state if absent. The initial idle state is
  // backdated to the global first event time t0.
  void ensure_vertex(const VertexId& v, double t0, double touch_t);
  VertexState& open_state(const VertexId& v);
  // Closes the current OPEN state at s.t_start and appends s OPEN.
  void close_and_append(const VertexId& v, VertexState s);

  void note_interaction() { ++raw_count_; }
  void note_touch(const VertexId& v) { ++touches_[v]; }
  void note_minted(double q) { minted_total_ += q; }
  void note_replicated(double q) { replicated_total_ += q; }

  std::uint64_t raw_count() const { return raw_count_; }
  std::uint64_t touches(const VertexId& v) const {
    auto it = touches_.find(v);
    return it == touches_.end() ? 0 : it->second;
  }
  std::uint64_t state_count(const VertexId& v) const {
    auto it = states_.find(v);
    return it == states_.end() ? 0 : it->second.size();
  }
  std::uint64_t total_state_count() const;
  double minted_total() const { return minted_total_; }
  double replicated_total() const { return replicated_total_; }

  // Earliest/latest event times covered by any state.
  std::optional<double> first_time() const;
  std::optional<double> last_time() const;

  void snapshot(std::ostream& out) const;
  static TemporalProvenanceIndex load(std::istream& in);

 private:
  TinConfig config_;
  std::unordered_map<VertexId, StateMap> states_;
  std::unordered_map<VertexId, std::uint64_t> touches_;
  std::uint64_t raw_count_ = 0;
  double minted_total_ = 0.0;
  double replicated_total_ = 0.0;
};

// Convenience: validate nothing, just stream a time-ordered log through a
// fresh engine into a new index.
TemporalProvenanceIndex build_index(const std::vector<Interaction>& log,
                                    const TinConfig& config);

}  // namespace tinprov
