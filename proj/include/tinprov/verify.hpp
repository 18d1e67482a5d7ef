#pragma once
// Randomized dual-route equivalence battery: every query is answered both by
// the compressed index and by the brute-force replay oracle, and the two
// answers must agree within a comparison tolerance.

#include <cstdint>
#include <string>
#include <vector>

#include "tinprov/model.hpp"

namespace tinprov {

struct VerifyOptions {
  int num_logs = 20;
  int queries_per_log = 50;
  std::uint64_t seed = 1;
  double tolerance = 1e-6;       // comparison tolerance, relative to magnitude
  bool snapshot_roundtrip = false;  // also re-ask every query on a reloaded
                                    // snapshot and require identical answers
};

struct Mismatch {
  std::string workload;
  std::string query;
  std::string detail;
};

struct VerifyReport {
  std::uint64_t logs = 0;
  std::uint64_t queries = 0;
  std::vector<Mismatch> mismatches;
  bool ok() const { return mismatches.empty(); }
};

// Battery over one concrete log: structural cross-checks plus
// opt.queries_per_log random queries compared between index and oracle.
VerifyReport verify_log(const std::string& tag,
                        const std::vector<Interaction>& log,
                        const TinConfig& config, const VerifyOptions& opt);

// Battery over opt.num_logs generated workloads cycling data classes,
// attribution policies and boundary policies.
VerifyReport run_verification(const VerifyOptions& opt);

}  // namespace tinprov
