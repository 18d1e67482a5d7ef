// tinprov: ingest quantity-transfer logs, generate benchmark workloads, run
// temporal provenance queries, and verify the index against the replay
// oracle. Output is line-oriented JSON; exit codes: 0 success, 1 verification
// failure, 2 usage/validation error, 3 refusal.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "tinprov/oracle.hpp"
#include "tinprov/prov_index.hpp"
#include "tinprov/query.hpp"
#include "tinprov/verify.hpp"
#include "tinprov/workloads.hpp"

using nlohmann::json;
using namespace tinprov;

namespace {

constexpr std::uint64_t kOracleGuard = 100000;  // verify refuses larger logs

struct ConfigFlags {
  std::string mode = "liquid";
  std::string policy = "proportional";
  std::string boundary = "phase_change";
  double delta = 0.0;
  bool no_events = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "Data class: liquid|discrete")
        ->check(CLI::IsMember({"liquid", "discrete"}));
    cmd->add_option("--policy", policy,
                    "Attribution policy: proportional|fifo|lifo")
        ->check(CLI::IsMember({"proportional", "fifo", "lifo"}));
    cmd->add_option("--boundary", boundary,
                    "Boundary policy: phase_change|per_interaction|time_bucket")
        ->check(
            CLI::IsMember({"phase_change", "per_interaction", "time_bucket"}));
    cmd->add_option("--delta", delta, "Bucket width for time_bucket");
    cmd->add_flag("--no-events", no_events,
                  "Skip per-state event bookkeeping (stats-only ingest)");
  }

  // throws CLI::ValidationError when time_bucket is selected without a
  // positive --delta
  TinConfig to_config() const {
    if (boundary == "time_bucket" && !(delta > 0.0))
      throw CLI::ValidationError("--delta",
                                 "time_bucket requires a positive bucket width");
    TinConfig c;
    c.data_class = *data_class_from_string(mode);
    c.attribution = *attribution_from_string(policy);
    c.boundary.kind = *boundary_from_string(boundary);
    c.boundary.delta = c.boundary.kind == BoundaryKind::TimeBucket ? delta : 0.0;
    c.record_events = !no_events;
    if (const char* env = std::getenv("TINPROV_TOLERANCE"))
      c.float_tolerance = std::strtod(env, nullptr);
    return c;
  }
};

LogFormat parse_format(const std::string& s) {
  return s == "csv" ? LogFormat::Csv : LogFormat::Jsonl;
}

// Reads and parses a whole log; returns false after printing a line-numbered
// report when any record is malformed.
bool read_log(std::istream& in, LogFormat fmt, DataClass dc,
              std::vector<Interaction>& out) {
  std::string line;
  std::size_t lineno = 0;
  bool ok = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      Interaction r = parse_interaction(line, fmt, dc);
      r.seq = out.size();
      out.push_back(std::move(r));
    } catch (const ParseError& e) {
      json j = {{"error", "parse"},
                {"line", lineno},
                {"field", e.field()},
                {"message", e.what()}};
      std::cout << j.dump() << "\n";
      ok = false;
    }
  }
  return ok;
}

int cmd_generate(const std::string& kind, const std::string& out_path,
                 std::uint64_t seed, int vertices, int interactions,
                 double amount_min, double amount_max, int windows,
                 int per_window, int n) {
  Workload w;
  if (kind == "fig1_aggregate")
    w = fig1_aggregate();
  else if (kind == "fig1_expanded")
    w = fig1_expanded();
  else if (kind == "metro")
    w = metro_discrete();
  else if (kind == "financial_random")
    w = financial_random(vertices, interactions, seed, amount_min, amount_max);
  else if (kind == "windowed")
    w = windowed(windows, per_window);
  else if (kind == "adversarial")
    w = adversarial(n);
  else {
    std::cerr << "unknown workload kind: " << kind << "\n";
    return 2;
  }
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot open " << out_path << "\n";
    return 2;
  }
  for (const auto& r : w.log)
    out << serialize_interaction(r, LogFormat::Jsonl) << "\n";
  json j = {{"workload", w.name},
            {"records", w.log.size()},
            {"mode", to_string(w.config.data_class)},
            {"path", out_path}};
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_ingest(const std::string& input, const std::string& format,
               const ConfigFlags& flags, const std::string& snapshot_path) {
  TinConfig cfg = flags.to_config();
  std::ifstream in(input);
  if (!in) {
    std::cerr << "cannot open " << input << "\n";
    return 2;
  }
  TemporalProvenanceIndex idx(cfg);
  StateEngine engine(idx);
  std::string line;
  std::size_t lineno = 0;
  std::uint64_t count = 0;
  // stream records: parse, apply, discard
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      Interaction r = parse_interaction(line, parse_format(format),
                                        cfg.data_class);
      r.seq = count;
      engine.apply_interaction(r);
      ++count;
    } catch (const std::exception& e) {
      json j = {{"error", "validation"}, {"line", lineno},
                {"message", e.what()}};
      std::cout << j.dump() << "\n";
      return 2;
    }
  }
  for (const auto& v : idx.vertices()) {
    std::uint64_t touches = idx.touches(v);
    std::uint64_t states = idx.state_count(v);
    json j = {{"vertex", v},
              {"touches", touches},
              {"states", states},
              {"ratio", states == 0 ? json("n/a")
                                    : json(compression_ratio(touches, states))}};
    std::cout << j.dump() << "\n";
  }
  std::uint64_t total_states = idx.total_state_count();
  json summary = {
      {"raw", idx.raw_count()},
      {"states", total_states},
      {"ratio", total_states == 0
                    ? json("n/a")
                    : json(compression_ratio(idx.raw_count(), total_states))},
      {"minted", dec_string(idx.minted_total())},
      {"replicated", dec_string(idx.replicated_total())}};
  std::cout << summary.dump() << "\n";
  if (!snapshot_path.empty()) {
    std::ofstream out(snapshot_path);
    if (!out) {
      std::cerr << "cannot open " << snapshot_path << "\n";
      return 2;
    }
    idx.snapshot(out);
  }
  return 0;
}

int cmd_query(const std::string& snapshot_path, const std::string& type,
              const std::string& vertex, double t, double t1, double t2,
              std::uint32_t depth, const std::string& flank,
              const std::string& source, const std::string& dest,
              const std::string& via) {
  std::ifstream in(snapshot_path);
  if (!in) {
    std::cerr << "cannot open " << snapshot_path << "\n";
    return 2;
  }
  TemporalProvenanceIndex idx = TemporalProvenanceIndex::load(in);
  if (const char* env = std::getenv("TINPROV_TOLERANCE"))
    idx.set_float_tolerance(std::strtod(env, nullptr));
  QueryEngine qe(idx);
  std::uint32_t d = depth == 0 ? kUnlimitedDepth : depth;
  Flank fl = flank == "pre" ? Flank::Pre : Flank::Post;
  if (type == "q1") {
    if (vertex.empty()) {
      std::cerr << "q1 requires --vertex and --t\n";
      return 2;
    }
    std::cout << qe.to_json(qe.q1_backward(vertex, t, d, fl)) << "\n";
  } else if (type == "q2") {
    if (source.empty()) {
      std::cerr << "q2 requires --source and --t\n";
      return 2;
    }
    std::cout << qe.to_json(qe.q2_forward(source, t, d)) << "\n";
  } else if (type == "q3") {
    if (vertex.empty()) {
      std::cerr << "q3 requires --vertex, --t1, --t2\n";
      return 2;
    }
    std::cout << qe.to_json(qe.q3_temporal_lineage(vertex, t1, t2)) << "\n";
  } else if (type == "q4") {
    if (source.empty() || dest.empty() || via.empty()) {
      std::cerr << "q4 requires --source, --dest, --via\n";
      return 2;
    }
    std::cout << qe.q4_json(qe.q4_flow_lineage(source, dest, via, t1, t2))
              << "\n";
  } else if (type == "q5") {
    if (vertex.empty()) {
      std::cerr << "q5 requires --vertex, --t1, --t2\n";
      return 2;
    }
    std::cout << qe.to_json(qe.q5_versioning(vertex, t1, t2)) << "\n";
  } else {
    std::cerr << "unknown query type: " << type << "\n";
    return 2;
  }
  return 0;
}

int cmd_verify(const std::string& input, const std::string& format,
               const ConfigFlags& flags, int queries, std::uint64_t seed) {
  TinConfig cfg = flags.to_config();
  std::ifstream in(input);
  if (!in) {
    std::cerr << "cannot open " << input << "\n";
    return 2;
  }
  std::vector<Interaction> log;
  if (!read_log(in, parse_format(format), cfg.data_class, log)) return 2;
  if (log.size() > kOracleGuard) {
    json j = {{"error", "refused"},
              {"message", "log exceeds oracle guard of " +
                              std::to_string(kOracleGuard) + " interactions"}};
    std::cout << j.dump() << "\n";
    return 3;
  }
  ValidationReport vr = validate_log(log, cfg);
  if (!vr.ok()) {
    for (const auto& v : vr.violations) {
      json j = {{"error", "validation"}, {"line", v.index + 1},
                {"message", v.message}};
      std::cout << j.dump() << "\n";
    }
    return 2;
  }
  VerifyOptions opt;
  opt.queries_per_log = queries;
  opt.seed = seed;
  opt.snapshot_roundtrip = true;
  if (const char* env = std::getenv("TINPROV_TOLERANCE"))
    opt.tolerance = std::strtod(env, nullptr);
  VerifyReport rep = verify_log(input, log, cfg, opt);
  for (const auto& m : rep.mismatches) {
    json j = {{"mismatch", m.query}, {"detail", m.detail}};
    std::cout << j.dump() << "\n";
  }
  json summary = {{"logs", rep.logs},
                  {"queries", rep.queries},
                  {"mismatches", rep.mismatches.size()},
                  {"seed", seed},
                  {"ok", rep.ok()}};
  std::cout << summary.dump() << "\n";
  return rep.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal interaction network provenance engine"};
  app.require_subcommand(1);

  // generate
  std::string gen_kind, gen_out;
  std::uint64_t gen_seed = 42;
  int gen_vertices = 50, gen_interactions = 10000;
  double gen_amin = 1.0, gen_amax = 100.0;
  int gen_windows = 10, gen_per_window = 1000, gen_n = 1000;
  CLI::App* gen = app.add_subcommand("generate", "Write a benchmark log");
  gen->add_option("--kind", gen_kind,
                  "fig1_aggregate|fig1_expanded|metro|financial_random|"
                  "windowed|adversarial")
      ->required();
  gen->add_option("--out", gen_out, "Output JSONL path")->required();
  gen->add_option("--seed", gen_seed, "RNG seed (financial_random)");
  gen->add_option("--vertices", gen_vertices, "Vertex count");
  gen->add_option("--interactions", gen_interactions, "Interaction count");
  gen->add_option("--amount-min", gen_amin, "Minimum transfer amount");
  gen->add_option("--amount-max", gen_amax, "Maximum transfer amount");
  gen->add_option("--windows", gen_windows, "Window count (windowed)");
  gen->add_option("--per-window", gen_per_window,
                  "Interactions per window (windowed)");
  gen->add_option("--n", gen_n, "Interaction count (adversarial)");

  // ingest
  std::string ing_input, ing_format = "jsonl", ing_snapshot;
  ConfigFlags ing_flags;
  CLI::App* ing = app.add_subcommand("ingest", "Compress a log into an index");
  ing->add_option("input", ing_input, "Log path")->required();
  ing->add_option("--format", ing_format, "jsonl|csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  ing->add_option("--snapshot", ing_snapshot, "Write index snapshot here");
  ing_flags.attach(ing);

  // query
  std::string q_snapshot, q_type, q_vertex, q_flank = "post";
  std::string q_source, q_dest, q_via;
  double q_t = 0.0, q_t1 = -1e308, q_t2 = 1e308;
  std::uint32_t q_depth = 0;
  CLI::App* qry = app.add_subcommand("query", "Run a query on a snapshot");
  qry->add_option("snapshot", q_snapshot, "Snapshot path")->required();
  qry->add_option("--type", q_type, "q1|q2|q3|q4|q5")->required();
  qry->add_option("--vertex", q_vertex, "Vertex (q1/q3/q5)");
  qry->add_option("--t", q_t, "Query time (q1/q2)");
  qry->add_option("--t1", q_t1, "Range start (q3/q4/q5)");
  qry->add_option("--t2", q_t2, "Range end (q3/q4/q5)");
  qry->add_option("--depth", q_depth, "Recursion depth, 0 = unlimited");
  qry->add_option("--flank", q_flank, "post|pre (q1)")
      ->check(CLI::IsMember({"post", "pre"}));
  qry->add_option("--source", q_source, "Source vertex (q2/q4)");
  qry->add_option("--dest", q_dest, "Destination vertex (q4)");
  qry->add_option("--via", q_via, "Intermediate vertex (q4)");

  // verify
  std::string ver_input, ver_format = "jsonl";
  ConfigFlags ver_flags;
  int ver_queries = 200;
  std::uint64_t ver_seed = 1;
  CLI::App* ver =
      app.add_subcommand("verify", "Cross-check index against replay oracle");
  ver->add_option("input", ver_input, "Log path")->required();
  ver->add_option("--format", ver_format, "jsonl|csv")
      ->check(CLI::IsMember({"jsonl", "csv"}));
  ver->add_option("--queries", ver_queries, "Random queries to run");
  ver->add_option("--seed", ver_seed, "Battery RNG seed");
  ver_flags.attach(ver);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed())
      return cmd_generate(gen_kind, gen_out, gen_seed, gen_vertices,
                          gen_interactions, gen_amin, gen_amax, gen_windows,
                          gen_per_window, gen_n);
    if (ing->parsed())
      return cmd_ingest(ing_input, ing_format, ing_flags, ing_snapshot);
    if (qry->parsed())
      return cmd_query(q_snapshot, q_type, q_vertex, q_t, q_t1, q_t2, q_depth,
                       q_flank, q_source, q_dest, q_via);
    if (ver->parsed())
      return cmd_verify(ver_input, ver_format, ver_flags, ver_queries,
                        ver_seed);
  } catch (const SnapshotError& e) {
    std::cerr << "snapshot error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
