#include "tinprov/workloads.hpp"

#include <cmath>

namespace tinprov {

namespace {

Interaction mk(VertexId src, VertexId dst, double t, double q) {
  Interaction r;
  r.src = std::move(src);
  r.dst = std::move(dst);
  r.t = t;
  r.q = q;
  return r;
}

// Minimal multiplicative congruential generator (Lehmer, Park-Miller
// constants on 64-bit state) so generated logs are byte-identical across
// standard libraries.
struct Lcg {
  std::uint64_t state;
  explicit Lcg(std::uint64_t seed) : state(seed * 2862933555777941757ULL + 1) {}
  std::uint64_t next() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return state >> 17;
  }
  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return next() % n; }
};

}  // namespace

void assign_seq(std::vector<Interaction>& log) {
  for (std::size_t i = 0; i < log.size(); ++i) log[i].seq = i;
}

Workload fig1_aggregate() {
  Workload w;
  w.name = "fig1_aggregate";
  w.log = {
      mk("K1", "S1", 1, 1500), mk("K2", "S2", 1, 1200), mk("K3", "S2", 1, 1300),
      mk("S1", "M1", 2, 900),  mk("S2", "M2", 2, 600),  mk("S2", "M3", 2, 775),
      mk("M1", "W1", 3, 450),  mk("M2", "W1", 3, 775),  mk("M3", "W1", 3, 775),
      mk("W1", "Sink", 4, 2000),
  };
  assign_seq(w.log);
  return w;
}

Workload fig1_expanded() {
  Workload w;
  w.name = "fig1_expanded";
  w.log = {
      mk("K1", "S1", 1, 1500), mk("K2", "S2", 1, 1200), mk("K3", "S2", 1, 1300),
      mk("S1", "M1", 2, 900),  mk("S2", "M2", 2, 600),  mk("S2", "M3", 2, 775),
  };
  for (int i = 0; i < 450; ++i) w.log.push_back(mk("M1", "W1", 3, 1));
  for (int i = 0; i < 775; ++i) w.log.push_back(mk("M2", "W1", 3, 1));
  for (int i = 0; i < 775; ++i) w.log.push_back(mk("M3", "W1", 3, 1));
  w.log.push_back(mk("W1", "Sink", 4, 2000));
  assign_seq(w.log);
  return w;
}

Workload metro_discrete() {
  Workload w;
  w.name = "metro_discrete";
  w.config.data_class = DataClass::Discrete;
  const int batch[3] = {150, 180, 120};
  for (int b = 0; b < 3; ++b) {
    double t = 8.0 + b;
    Interaction on = mk("A", "B", t, batch[b]);
    for (int i = 0; i < batch[b]; ++i)
      on.entities.push_back("p" + std::to_string(8 + b) + "_" +
                            std::to_string(i));
    Interaction off = mk("B", "C", t + 0.5, batch[b]);
    off.entities = on.entities;
    // boardings and forwards interleave in time order: 8, 8.5, 9, ...
    w.log.push_back(std::move(on));
    w.log.push_back(std::move(off));
  }
  assign_seq(w.log);
  return w;
}

Workload liquefy(const Workload& src, const std::string& name) {
  Workload w;
  w.name = name;
  w.config = src.config;
  w.config.data_class = DataClass::Liquid;
  w.log = src.log;
  for (auto& r : w.log) r.entities.clear();
  assign_seq(w.log);
  return w;
}

void windowed_stream(int windows, int per_window,
                     const std::function<void(const Interaction&)>& sink) {
  int tick = per_window / 4;
  std::uint64_t seq = 0;
  Interaction r;
  for (int k = 0; k < windows; ++k) {
    double base = 100.0 * k;
    for (int i = 0; i < tick * 2; ++i) {
      r = mk("F", "Hub", base + (i < tick ? 0.0 : 1.0), 10);
      r.seq = seq++;
      sink(r);
    }
    for (int i = 0; i < tick * 2; ++i) {
      r = mk("Hub", "D", base + (i < tick ? 2.0 : 3.0), 8);
      r.seq = seq++;
      sink(r);
    }
  }
}

Workload windowed(int windows, int per_window) {
  Workload w;
  w.name = "windowed";
  windowed_stream(windows, per_window,
                  [&](const Interaction& r) { w.log.push_back(r); });
  return w;
}

Workload adversarial(int n) {
  Workload w;
  w.name = "adversarial";
  for (int i = 0; i < n; ++i) {
    if (i % 2 == 0)
      w.log.push_back(mk("X", "Hub", i, 5));
    else
      w.log.push_back(mk("Hub", "Y", i, 4));
  }
  assign_seq(w.log);
  return w;
}

Workload financial_random(int vertices, int interactions, std::uint64_t seed,
                          double amount_min, double amount_max) {
  Workload w;
  w.name = "financial_random";
  Lcg rng(seed);
  std::uint64_t lo = static_cast<std::uint64_t>(std::llround(amount_min * 100));
  std::uint64_t hi = static_cast<std::uint64_t>(std::llround(amount_max * 100));
  if (hi < lo) hi = lo;
  for (int i = 0; i < interactions; ++i) {
    std::uint64_t a = rng.below(vertices);
    std::uint64_t b = rng.below(vertices - 1);
    if (b >= a) ++b;
    // whole cents within [amount_min, amount_max]
    double q = static_cast<double>(rng.below(hi - lo + 1) + lo) / 100.0;
    w.log.push_back(mk("A" + std::to_string(a), "A" + std::to_string(b),
                       static_cast<double>(i), q));
  }
  assign_seq(w.log);
  return w;
}

}  // namespace tinprov
