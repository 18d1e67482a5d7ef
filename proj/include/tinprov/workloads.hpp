#pragma once
// Deterministic log generators used by tests, the verification battery and
// the CLI `generate` subcommand.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tinprov/model.hpp"

namespace tinprov {

struct Workload {
  std::string name;
  TinConfig config;
  std::vector<Interaction> log;
};

// Supply chain, aggregate flows: three producers feed two tiers of
// middlemen, everything converges on one warehouse, which ships downstream.
Workload fig1_aggregate();

// Same network, but the warehouse's inbound flow arrives as 2000 unit
// transfers in one batch: high raw count, few phase-change states.
Workload fig1_expanded();

// Discrete passengers: three boarding batches A->B, each forwarded in full
// B->C half a tick later.
Workload metro_discrete();

// Strips entity lists and switches to liquid mode, keeping quantities.
Workload liquefy(const Workload& w, const std::string& name);

// `windows` accumulate/deplete cycles at a hub; each window carries
// `per_window` interactions in four equal-time batch ticks, so phase-change
// compression yields ~2 states per window.
Workload windowed(int windows, int per_window);

// Same records as windowed(), streamed to `sink` without materializing the
// log; used for the largest compression-scaling runs.
void windowed_stream(int windows, int per_window,
                     const std::function<void(const Interaction&)>& sink);

// Strictly alternating single arrival / single departure at distinct times:
// the phase-change worst case, one state per interaction.
Workload adversarial(int n);

// Random transfer log over `vertices` accounts at strictly increasing
// times. Deterministic for a given seed across platforms (integer LCG only).
Workload financial_random(int vertices, int interactions, std::uint64_t seed,
                          double amount_min = 1.0, double amount_max = 100.0);

// Convenience: assigns seq = position for a hand-built log.
void assign_seq(std::vector<Interaction>& log);

}  // namespace tinprov
