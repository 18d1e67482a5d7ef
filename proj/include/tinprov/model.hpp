#pragma once
// Core TIN data model: interactions, data classes, policies, log validation.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tinprov {

using VertexId = std::string;
using EntityId = std::string;

enum class DataClass { Discrete, Liquid };

enum class AttributionKind { Proportional, FIFO, LIFO };

enum class BoundaryKind { PhaseChange, PerInteraction, TimeBucket };

struct BoundaryPolicy {
  BoundaryKind kind = BoundaryKind::PhaseChange;
  double delta = 0.0;  // TimeBucket only, > 0

  static BoundaryPolicy phase_change() { return {BoundaryKind::PhaseChange, 0.0}; }
  static BoundaryPolicy per_interaction() { return {BoundaryKind::PerInteraction, 0.0}; }
  static BoundaryPolicy time_bucket(double d) { return {BoundaryKind::TimeBucket, d}; }
};

struct TinConfig {
  DataClass data_class = DataClass::Liquid;
  AttributionKind attribution = AttributionKind::Proportional;
  BoundaryPolicy boundary = BoundaryPolicy::phase_change();
  double float_tolerance = 1e-9;
  // Per-state event bookkeeping enables exact point-in-time content inside a
  // state interval. Disable for pure compression-statistics runs on very
  // large logs; point lookups then resolve to the state's end-of-interval
  // aggregate.
  bool record_events = true;
};

// One time-stamped quantity transfer. seq is the log position, assigned at
// ingestion; equal timestamps apply in seq order.
struct Interaction {
  VertexId src;
  VertexId dst;
  double t = 0.0;
  double q = 0.0;
  std::vector<EntityId> entities;  // discrete mode only
  bool replicate = false;
  std::uint64_t seq = 0;

  bool operator==(const Interaction& o) const {
    return src == o.src && dst == o.dst && t == o.t && q == o.q &&
           entities == o.entities && replicate == o.replicate;
  }
};

enum class LogFormat { Jsonl, Csv };

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string field, const std::string& message)
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Parses one record. seq is left unassigned (0); the caller assigns ingest
// order. Throws ParseError naming the offending field.
Interaction parse_interaction(const std::string& line, LogFormat format,
                              DataClass data_class = DataClass::Liquid);

std::string serialize_interaction(const Interaction& r, LogFormat format);

struct Violation {
  std::size_t index = 0;  // position in the log
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate_log(const std::vector<Interaction>& log,
                              const TinConfig& config);

const char* to_string(DataClass c);
const char* to_string(AttributionKind k);
const char* to_string(BoundaryKind k);
std::optional<DataClass> data_class_from_string(const std::string& s);
std::optional<AttributionKind> attribution_from_string(const std::string& s);
std::optional<BoundaryKind> boundary_from_string(const std::string& s);

// Shortest decimal form that parses back to the identical double.
std::string dec_string(double v);
double parse_dec(const std::string& s);

}  // namespace tinprov
