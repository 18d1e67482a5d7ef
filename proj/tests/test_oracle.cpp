#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <sstream>

#include "tinprov/oracle.hpp"
#include "tinprov/verify.hpp"
#include "tinprov/workloads.hpp"

using namespace tinprov;

namespace {

std::map<std::string, double> by_origin(const ProvenanceAnswer& a) {
  std::map<std::string, double> m;
  for (const auto& e : a.entries) m[e.origin] += e.q;
  return m;
}

}  // namespace

TEST_CASE("oracle reproduces the pinned worked examples independently") {
  Workload w = fig1_aggregate();
  ReplayOracle orc(w.log, w.config);

  auto c = orc.content_at("W1", 3.5);
  REQUIRE(c);
  CHECK(c->buffer == 2000.0);
  CHECK(c->prov.size() == 3);
  CHECK_FALSE(orc.content_at("W1", 0.5).has_value());

  auto m = by_origin(orc.q1_backward("W1", 3.5));
  CHECK(m["K1"] == doctest::Approx(450.0));
  CHECK(m["K2"] == doctest::Approx(660.0));
  CHECK(m["K3"] == doctest::Approx(715.0));
  CHECK(m["M2"] == doctest::Approx(175.0));

  CHECK(orc.q4_flow_lineage("K1", "W1", "M1", 0, 10) ==
        doctest::Approx(450.0));
  CHECK(orc.q4_flow_lineage("K1", "W1", "M2", 0, 10) == 0.0);

  auto d = orc.q5_versioning("W1", 3.0, 4.0);
  CHECK(d.buffer_before == 2000.0);
  CHECK(d.buffer_after == 0.0);
  CHECK(d.removed.size() == 3);
}

TEST_CASE("oracle conservation audit") {
  for (auto make : {fig1_aggregate, fig1_expanded, metro_discrete}) {
    Workload w = make();
    ReplayOracle orc(w.log, w.config);
    auto cons = orc.conservation();
    CHECK(cons.ok);
  }
  Workload w = fig1_aggregate();
  ReplayOracle orc(w.log, w.config);
  CHECK(orc.conservation().buffer_sum == doctest::Approx(4175.0));
  CHECK(orc.minted_total() == doctest::Approx(4175.0));
  CHECK(orc.replicated_total() == 0.0);
}

TEST_CASE("single-interaction log verifies") {
  std::vector<Interaction> log(1);
  log[0].src = "A";
  log[0].dst = "B";
  log[0].t = 1.0;
  log[0].q = 5.0;
  VerifyOptions opt;
  opt.queries_per_log = 50;
  opt.snapshot_roundtrip = true;
  auto rep = verify_log("single", log, TinConfig{}, opt);
  for (const auto& m : rep.mismatches)
    MESSAGE(m.workload, " ", m.query, ": ", m.detail);
  CHECK(rep.ok());
}

TEST_CASE("mixed-workload dual-route battery") {
  VerifyOptions opt;
  opt.num_logs = 24;  // cycles every workload x policy combination
  opt.queries_per_log = 40;
  opt.seed = 7;
  opt.snapshot_roundtrip = true;
  auto rep = run_verification(opt);
  CHECK(rep.logs == 24);
  CHECK(rep.queries > 0);
  for (const auto& m : rep.mismatches)
    MESSAGE(m.workload, " ", m.query, ": ", m.detail);
  CHECK(rep.ok());
}

TEST_CASE("the battery detects a corrupted index") {
  // mutation check: build a snapshot, corrupt one stored buffer, reload and
  // confirm the oracle comparison flags it
  Workload w = fig1_aggregate();
  TemporalProvenanceIndex idx = build_index(w.log, w.config);
  std::stringstream ss;
  idx.snapshot(ss);
  std::string text = ss.str();
  auto w1 = text.find("\"v\":\"W1\"");
  REQUIRE(w1 != std::string::npos);
  auto pos = text.find("\"b\":\"2000\"", w1);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 10, "\"b\":\"1999\"");
  std::stringstream corrupted(text);
  TemporalProvenanceIndex bad = TemporalProvenanceIndex::load(corrupted);
  ReplayOracle orc(w.log, w.config);
  QueryEngine qe(bad);
  // the corrupted end-of-state aggregate surfaces as a buffer mismatch
  auto a = qe.q5_versioning("W1", 3.5, 5.0);
  auto b = orc.q5_versioning("W1", 3.5, 5.0);
  CHECK(a.buffer_before == 1999.0);
  CHECK(b.buffer_before == 2000.0);
}
