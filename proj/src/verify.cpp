#include "tinprov/verify.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "tinprov/oracle.hpp"
#include "tinprov/prov_index.hpp"
#include "tinprov/query.hpp"
#include "tinprov/workloads.hpp"

namespace tinprov {

namespace {

struct Lcg {
  std::uint64_t state;
  explicit Lcg(std::uint64_t seed) : state(seed * 2862933555777941757ULL + 1) {}
  std::uint64_t next() {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return state >> 17;
  }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  double frac() { return static_cast<double>(next() % 1000003) / 1000003.0; }
};

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

using EntryMap = std::map<std::pair<std::string, double>, double>;

EntryMap entry_map(const std::vector<AnswerEntry>& es) {
  EntryMap m;
  for (const auto& e : es) m[{e.origin, e.t}] += e.q;
  return m;
}

EntryMap entry_map(const ProvList& es) {
  EntryMap m;
  for (const auto& e : es) m[{e.origin, e.birth_t}] += e.q;
  return m;
}

std::string diff_maps(const EntryMap& a, const EntryMap& b, double tol) {
  EntryMap keys = a;
  keys.insert(b.begin(), b.end());
  for (const auto& [k, unused] : keys) {
    (void)unused;
    auto ia = a.find(k);
    auto ib = b.find(k);
    double qa = ia == a.end() ? 0.0 : ia->second;
    double qb = ib == b.end() ? 0.0 : ib->second;
    if (!close(qa, qb, tol))
      return "entry (" + k.first + ", " + dec_string(k.second) +
             "): index=" + dec_string(qa) + " oracle=" + dec_string(qb);
  }
  return {};
}

std::string diff_answers(const ProvenanceAnswer& a, const ProvenanceAnswer& b,
                         double tol) {
  return diff_maps(entry_map(a.entries), entry_map(b.entries), tol);
}

std::string diff_forward(const ForwardAnswer& a, const ForwardAnswer& b,
                         double tol) {
  EntryMap da, db;
  for (const auto& d : a.deliveries) da[{d.destination, d.t}] += d.q_from_source;
  for (const auto& d : b.deliveries) db[{d.destination, d.t}] += d.q_from_source;
  std::string diff = diff_maps(da, db, tol);
  if (!diff.empty()) return "delivery " + diff;
  std::map<std::pair<std::string, std::string>, double> ha, hb;
  for (const auto& h : a.hops) ha[{h.from, h.to}] = h.t;
  for (const auto& h : b.hops) hb[{h.from, h.to}] = h.t;
  if (ha != hb) return "hop sets differ";
  return {};
}

std::string diff_delta(const ProvenanceDelta& a, const ProvenanceDelta& b,
                       double tol) {
  if (!close(a.buffer_before, b.buffer_before, tol))
    return "buffer_before: index=" + dec_string(a.buffer_before) +
           " oracle=" + dec_string(b.buffer_before);
  if (!close(a.buffer_after, b.buffer_after, tol))
    return "buffer_after: index=" + dec_string(a.buffer_after) +
           " oracle=" + dec_string(b.buffer_after);
  std::string d = diff_maps(entry_map(a.added), entry_map(b.added), tol);
  if (!d.empty()) return "added " + d;
  d = diff_maps(entry_map(a.removed), entry_map(b.removed), tol);
  if (!d.empty()) return "removed " + d;
  EntryMap ca, cb;
  for (const auto& c : a.changed) ca[{c.origin, c.t}] = c.q_after - c.q_before;
  for (const auto& c : b.changed) cb[{c.origin, c.t}] = c.q_after - c.q_before;
  d = diff_maps(ca, cb, tol);
  if (!d.empty()) return "changed " + d;
  return {};
}

Workload pick_workload(int i, Lcg& rng) {
  Workload w;
  switch (i % 8) {
    case 0: w = fig1_aggregate(); break;
    case 1: w = fig1_expanded(); break;
    case 2: w = metro_discrete(); break;
    case 3: w = liquefy(metro_discrete(), "metro_liquid"); break;
    case 4: w = windowed(3 + i % 5, 40 + 8 * (i % 6)); break;
    case 5: w = adversarial(60 + i % 90); break;
    default: {
      std::uint64_t seed = rng.next();
      w = financial_random(5 + i % 7, 100 + static_cast<int>(rng.below(150)),
                           seed);
      w.name += "_s" + std::to_string(seed);
      break;
    }
  }
  if (w.config.data_class == DataClass::Liquid) {
    switch (i % 3) {
      case 0: w.config.attribution = AttributionKind::Proportional; break;
      case 1: w.config.attribution = AttributionKind::FIFO; break;
      case 2: w.config.attribution = AttributionKind::LIFO; break;
    }
  }
  switch ((i / 3) % 3) {
    case 0: w.config.boundary = BoundaryPolicy::phase_change(); break;
    case 1: w.config.boundary = BoundaryPolicy::per_interaction(); break;
    case 2: w.config.boundary = BoundaryPolicy::time_bucket(2.5); break;
  }
  return w;
}

}  // namespace

VerifyReport verify_log(const std::string& tag,
                        const std::vector<Interaction>& log,
                        const TinConfig& config, const VerifyOptions& opt) {
  VerifyReport rep;
  rep.logs = 1;
  if (log.empty()) return rep;

  Lcg rng(opt.seed);
  const double tol = opt.tolerance;
  TemporalProvenanceIndex idx = build_index(log, config);
  ReplayOracle orc(log, config);
  QueryEngine qe(idx);

  // structural cross-checks before the query battery
  auto cons = orc.conservation();
  if (!cons.ok)
    rep.mismatches.push_back(
        {tag, "conservation",
         "oracle buffers=" + dec_string(cons.buffer_sum) +
             " minted+replicated=" + dec_string(cons.minted + cons.replicated)});
  if (!close(idx.minted_total(), orc.minted_total(), tol))
    rep.mismatches.push_back(
        {tag, "minted_total",
         "index=" + dec_string(idx.minted_total()) +
             " oracle=" + dec_string(orc.minted_total())});
  double idx_buffers = 0.0;
  for (const auto& v : idx.vertices()) {
    const auto* sm = idx.states_of(v);
    if (sm && !sm->empty()) idx_buffers += sm->rbegin()->second.buffer;
  }
  if (!close(idx_buffers, cons.buffer_sum, tol))
    rep.mismatches.push_back({tag, "final_buffers",
                              "index=" + dec_string(idx_buffers) +
                                  " oracle=" + dec_string(cons.buffer_sum)});

  std::optional<TemporalProvenanceIndex> loaded;
  std::optional<QueryEngine> qe2;
  if (opt.snapshot_roundtrip) {
    std::stringstream ss;
    idx.snapshot(ss);
    loaded.emplace(TemporalProvenanceIndex::load(ss));
    qe2.emplace(*loaded);
  }

  std::vector<VertexId> verts = orc.vertices();
  double tmin = log.front().t;
  double tmax = log.back().t;
  bool proportional = config.attribution == AttributionKind::Proportional ||
                      config.data_class == DataClass::Discrete;

  auto rand_vertex = [&] { return verts[rng.below(verts.size())]; };
  auto rand_time = [&] {
    if (rng.below(2) == 0)  // exact event time: exercises boundary flanks
      return log[rng.below(log.size())].t;
    return tmin - 1.0 + rng.frac() * (tmax - tmin + 3.0);
  };
  auto rand_depth = [&]() -> std::uint32_t {
    if (proportional) {
      switch (rng.below(4)) {
        case 0: return 1;
        case 1: return 2;
        default: return kUnlimitedDepth;
      }
    }
    // plain recursion on both routes: keep finite to bound the path count
    switch (rng.below(4)) {
      case 0: return 1;
      case 1: return 2;
      case 2: return 3;
      default: return 6;
    }
  };

  for (int qi = 0; qi < opt.queries_per_log; ++qi) {
    ++rep.queries;
    int kind = static_cast<int>(rng.below(5));
    std::string label;
    std::string diff;
    std::string json_a, json_b;
    try {
      switch (kind) {
        case 0: {
          VertexId v = rand_vertex();
          double t = rand_time();
          std::uint32_t depth = rand_depth();
          Flank fl = rng.below(2) == 0 ? Flank::Post : Flank::Pre;
          label = "q1 v=" + v + " t=" + dec_string(t) +
                  " depth=" + std::to_string(depth) +
                  (fl == Flank::Post ? " post" : " pre");
          auto a = qe.q1_backward(v, t, depth, fl);
          auto b = orc.q1_backward(v, t, depth, fl);
          diff = diff_answers(a, b, tol);
          if (qe2) {
            json_a = qe.to_json(a);
            json_b = qe2->to_json(qe2->q1_backward(v, t, depth, fl));
          }
          break;
        }
        case 1: {
          VertexId s = rand_vertex();
          double t = rand_time();
          std::uint32_t depth = rand_depth();
          label = "q2 s=" + s + " t=" + dec_string(t) +
                  " depth=" + std::to_string(depth);
          auto a = qe.q2_forward(s, t, depth);
          auto b = orc.q2_forward(s, t, depth);
          diff = diff_forward(a, b, tol);
          if (qe2) {
            json_a = qe.to_json(a);
            json_b = qe2->to_json(qe2->q2_forward(s, t, depth));
          }
          break;
        }
        case 2: {
          VertexId v = rand_vertex();
          double t1 = rand_time(), t2 = rand_time();
          if (t2 < t1) std::swap(t1, t2);
          label = "q3 v=" + v + " [" + dec_string(t1) + ", " + dec_string(t2) +
                  "]";
          auto a = qe.q3_temporal_lineage(v, t1, t2);
          auto b = orc.q3_temporal_lineage(v, t1, t2);
          diff = diff_answers(a, b, tol);
          if (qe2) {
            json_a = qe.to_json(a);
            json_b = qe2->to_json(qe2->q3_temporal_lineage(v, t1, t2));
          }
          break;
        }
        case 3: {
          if (verts.size() < 3) break;
          std::uint64_t i1 = rng.below(verts.size());
          std::uint64_t i2 =
              (i1 + 1 + rng.below(verts.size() - 1)) % verts.size();
          std::uint64_t i3 = 0;
          while (i3 == i1 || i3 == i2) ++i3;
          double h1 = rand_time(), h2 = rand_time();
          if (h2 < h1) std::swap(h1, h2);
          label = "q4 s=" + verts[i1] + " d=" + verts[i2] + " via=" + verts[i3];
          double a =
              qe.q4_flow_lineage(verts[i1], verts[i2], verts[i3], h1, h2);
          double b =
              orc.q4_flow_lineage(verts[i1], verts[i2], verts[i3], h1, h2);
          if (!close(a, b, tol))
            diff = "index=" + dec_string(a) + " oracle=" + dec_string(b);
          if (qe2) {
            json_a = qe.q4_json(a);
            json_b = qe2->q4_json(
                qe2->q4_flow_lineage(verts[i1], verts[i2], verts[i3], h1, h2));
          }
          break;
        }
        case 4: {
          VertexId v = rand_vertex();
          double t1 = rand_time(), t2 = rand_time();
          if (t2 < t1) std::swap(t1, t2);
          if (t1 == t2) t2 += 1.0;
          label = "q5 v=" + v + " [" + dec_string(t1) + ", " + dec_string(t2) +
                  "]";
          auto a = qe.q5_versioning(v, t1, t2);
          auto b = orc.q5_versioning(v, t1, t2);
          diff = diff_delta(a, b, tol);
          if (qe2) {
            json_a = qe.to_json(a);
            json_b = qe2->to_json(qe2->q5_versioning(v, t1, t2));
          }
          break;
        }
      }
    } catch (const std::exception& e) {
      rep.mismatches.push_back({tag, label, std::string("threw: ") + e.what()});
      continue;
    }
    if (!diff.empty()) rep.mismatches.push_back({tag, label, diff});
    if (qe2 && json_a != json_b)
      rep.mismatches.push_back({tag, label,
                                "snapshot roundtrip answer differs: " + json_a +
                                    " vs " + json_b});
  }
  return rep;
}

VerifyReport run_verification(const VerifyOptions& opt) {
  VerifyReport rep;
  Lcg rng(opt.seed);
  for (int li = 0; li < opt.num_logs; ++li) {
    Workload w = pick_workload(li, rng);
    VerifyOptions per = opt;
    per.seed = rng.next();
    VerifyReport sub = verify_log(w.name + "#" + std::to_string(li), w.log,
                                  w.config, per);
    rep.logs += sub.logs;
    rep.queries += sub.queries;
    rep.mismatches.insert(rep.mismatches.end(), sub.mismatches.begin(),
                          sub.mismatches.end());
  }
  return rep;
}

}  // namespace tinprov
