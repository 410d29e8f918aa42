#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "reap/simulation.hpp"

using namespace reap;

namespace {

RunConfig small_config(double p) {
  RunConfig c;
  c.geometry.num_sets = 2;
  c.geometry.ways = 2;
  c.device.p_override = p;
  return c;
}

// Set 0 holds blocks 0, 2, 4; set 1 holds block 1.
constexpr const char* kSixLines =
    "R 0x000 ones=100\n"  // miss, fill A
    "R 0x080 ones=50\n"   // miss, A takes a concealed read, fill B
    "R 0x000\n"           // hit A after 1 concealed read; B concealed
    "W 0x100 ones=10\n"   // miss, evicts clean B, fills dirty C
    "R 0x040 ones=20\n"   // other set
    "R 0x100\n";          // hit C; A concealed. Drain then checks C again.

double exact(std::uint64_t trials, std::uint64_t k) { return oracle::to_double(oracle::exact_tail(trials, 1, 1000, k)); }

}  // namespace

TEST(Config, DefaultsEchoInDocumentedOrder) {
  const auto kv = to_kv(RunConfig{});
  ASSERT_EQ(kv.size(), 27u);
  EXPECT_EQ(kv.front(), (std::pair<std::string, std::string>{"config_version", "1"}));
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"rng", "mt19937_64"}));
  const std::map<std::string, std::string> m(kv.begin(), kv.end());
  EXPECT_EQ(m.at("geometry.num_sets"), "1024");
  EXPECT_EQ(m.at("geometry.ways"), "8");
  EXPECT_EQ(m.at("geometry.block_bits"), "512");
  EXPECT_EQ(m.at("device.p_override"), "1e-08");
  EXPECT_EQ(m.at("area.decoder_area_fraction"), "0.001");
  EXPECT_EQ(m.at("trace.default_ones"), "fixed:128");
  EXPECT_EQ(m.at("scheme.name"), "conventional");
}

TEST(Config, TextRoundTrip) {
  RunConfig a;
  apply_override(a, "geometry.ways=4");
  apply_override(a, "device.p_override = 3.3e-7");
  apply_override(a, "energy.e_ecc_decode_pj=0.1");
  apply_override(a, "trace.default_ones=from-seed");
  apply_override(a, "seed=18446744073709551615");
  RunConfig b;
  load_config_text(b, to_config_text(a));
  EXPECT_EQ(to_kv(a), to_kv(b));
  EXPECT_EQ(b.device.p_override, 3.3e-7);
  EXPECT_EQ(b.energy.e_ecc_decode_pj, 0.1);
}

TEST(Config, JsonReportIsAConfig) {
  RunConfig a = small_config(1e-3);
  apply_override(a, "scheme.name=reap");
  apply_override(a, "device.p_override=none");
  apply_override(a, "device.delta=42.5");
  const auto text = to_json_text(report_header(a, "ledger"));
  RunConfig b;
  load_config_text(b, text);
  EXPECT_EQ(to_kv(a), to_kv(b));
  EXPECT_FALSE(b.device.p_override);
}

TEST(Config, ErrorsNameTheLineAndKey) {
  RunConfig c;
  try {
    load_config_text(c, "# comment\n\ngeometry.ways = 4\ngeometry.wayz = 4\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("geometry.wayz"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config_text(c, "seed = -1"), ConfigError);
  EXPECT_THROW(load_config_text(c, "device.delta = fast"), ConfigError);
  EXPECT_THROW(load_config_text(c, "scheme.drain_dirty_at_end = yes"), ConfigError);
  EXPECT_THROW(load_config_text(c, "scheme.name = magic"), ConfigError);
  EXPECT_THROW(load_config_text(c, "rng = pcg32"), ConfigError);
  EXPECT_THROW(load_config_text(c, "config_version = 2"), ConfigError);
  EXPECT_THROW(load_config_text(c, "just words"), ConfigError);
  EXPECT_THROW(load_config_text(c, "{\"config\": {\"seed\": 5}}"), ConfigError);
  EXPECT_THROW(load_config_text(c, "{ broken"), ConfigError);
  EXPECT_THROW(load_config_file(c, "/nonexistent/cfg"), ConfigError);
}

TEST(Config, ValidationRejectsBadValues) {
  auto bad = [](const char* kv) {
    RunConfig c;
    apply_override(c, kv);
    return c;
  };
  EXPECT_THROW(bad("geometry.ways=0").validate(), ConfigError);
  EXPECT_THROW(bad("geometry.num_sets=1000").validate(), ConfigError);
  EXPECT_THROW(bad("device.p_override=2").validate(), ConfigError);
  EXPECT_THROW(bad("energy.e_line_read_pj=-1").validate(), ConfigError);
  EXPECT_THROW(bad("area.decoder_area_fraction=1").validate(), ConfigError);
  EXPECT_THROW(bad("report.mean_ones=600").validate(), ConfigError);
  EXPECT_THROW(bad("sim.access_period_ns=0").validate(), ConfigError);
  EXPECT_NO_THROW(RunConfig{}.validate());
}

TEST(Simulate, SixLineTraceMatchesHandLedger) {
  const auto cfg = small_config(1e-3);
  std::istringstream in(kSixLines);
  const Scheme both[] = {Scheme::ConventionalParallel, Scheme::ReapParallel};
  const auto r = run_trace(cfg, in, both);
  EXPECT_EQ(r.accesses, 6u);
  EXPECT_EQ(r.sim_time_ns, 6.0);

  const auto& conv = r.get(Scheme::ConventionalParallel);
  // A checked after one concealed read (two reads in all), C checked on its
  // hit and once more by the drain.
  const double want_conv = exact(200, 2) + 2 * exact(10, 2);
  EXPECT_NEAR(conv.ledger.expected_failures, want_conv, 1e-12 * want_conv);
  EXPECT_EQ(conv.ledger.checked_reads, 3u);
  EXPECT_EQ(conv.ledger.concealed_increments, 3u);
  EXPECT_EQ(conv.ledger.check_histogram, (std::map<std::uint64_t, std::uint64_t>{{0, 2}, {1, 1}}));
  EXPECT_EQ(conv.counters.read_accesses, 5u);
  EXPECT_EQ(conv.counters.write_accesses, 1u);
  EXPECT_EQ(conv.counters.read_hits, 2u);
  EXPECT_EQ(conv.counters.line_reads, 5u);
  EXPECT_EQ(conv.counters.decodes, 3u);
  EXPECT_EQ(conv.counters.evictions, 1u);
  EXPECT_EQ(conv.counters.writebacks, 0u);
  EXPECT_EQ(conv.counters.drain_checks, 1u);

  const auto& rp = r.get(Scheme::ReapParallel);
  const double want_reap = 3 * exact(100, 2) + exact(50, 2) + 2 * exact(10, 2);
  EXPECT_NEAR(rp.ledger.expected_failures, want_reap, 1e-12 * want_reap);
  EXPECT_EQ(rp.ledger.checked_reads, 6u);
  EXPECT_EQ(rp.ledger.concealed_increments, 0u);
  EXPECT_EQ(rp.counters.decodes, 6u);
}

TEST(Simulate, OutputsAreDeterministicAndComplete) {
  auto cfg = small_config(1e-3);
  auto run = [&] {
    std::istringstream in(kSixLines);
    return simulate_outputs(cfg, run_trace(cfg, in));
  };
  const auto a = run();
  const auto b = run();
  EXPECT_EQ(a, b);
  std::vector<std::string> names;
  for (const auto& [name, text] : a) names.push_back(name);
  EXPECT_EQ(names, (std::vector<std::string>{"ledger.json", "histogram.json", "histogram.csv", "energy.json",
                                             "mttf.json"}));
  const auto ledger = nlohmann::json::parse(a[0].second);
  EXPECT_EQ(ledger["schema_version"], 1);
  EXPECT_EQ(ledger["generator"], kArtifactVersion);
  EXPECT_EQ(ledger["config"]["geometry.num_sets"], "2");
  EXPECT_EQ(ledger["ledger"]["checked_reads"], 3);
  EXPECT_EQ(a[2].second.substr(0, a[2].second.find('\r')), "concealed_reads,count,normalized_frequency,failure_contribution");
}

TEST(Simulate, RerunFromEmbeddedConfigReproducesReports) {
  auto cfg = small_config(2e-4);
  apply_override(cfg, "trace.default_ones=from-seed");
  apply_override(cfg, "seed=77");
  SyntheticSpec s;
  s.num_events = 3000;
  s.address_space = 64;
  s.ones_model = parse_ones_model("uniform");
  std::string trace;
  for (const auto& ev : generate_synthetic(s, cfg.geometry)) {
    AccessEvent bare = ev;
    if (ev.address % 3 == 0) bare.ones.reset();  // some events fall back to the default model
    trace += format_trace_line(bare) + "\n";
  }
  std::istringstream in1(trace);
  const auto first = simulate_outputs(cfg, run_trace(cfg, in1));

  RunConfig again;
  load_config_text(again, first[0].second);
  std::istringstream in2(trace);
  EXPECT_EQ(simulate_outputs(again, run_trace(again, in2)), first);
}

TEST(Simulate, TraceErrorsKeepLineNumbers) {
  std::istringstream in("R 0\nR 1\nR zz\n");
  try {
    run_trace(small_config(1e-3), in);
    FAIL();
  } catch (const TraceError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Simulate, EmptyTraceStillReports) {
  std::istringstream in("# nothing\n");
  const auto r = run_trace(small_config(1e-3), in);
  EXPECT_EQ(r.accesses, 0u);
  EXPECT_EQ(r.sim_time_ns, 1.0);
  const auto files = simulate_outputs(small_config(1e-3), r);
  EXPECT_NE(files[4].second.find("\"inf\""), std::string::npos);
}

TEST(Compare, FortyNineConcealedReadsGiveTheClosedFormRatio) {
  RunConfig cfg;
  cfg.geometry.num_sets = 1;
  cfg.geometry.ways = 2;
  cfg.device.p_override = 1e-8;
  // B holds no ones, so its own checks cost nothing and A's check is the
  // only term in either ledger.
  std::string trace = "R 0x0 ones=100\nR 0x40 ones=0\n";  // A: 1 concealed read
  for (int i = 0; i < 48; ++i) trace += "R 0x40\n";       // A: 49
  trace += "R 0x0\n";                                     // A checked after 49 concealed reads
  std::istringstream in(trace);
  const Scheme both[] = {Scheme::ConventionalParallel, Scheme::ReapParallel};
  const auto r = run_trace(cfg, in, both);
  const auto c = compare_schemes(cfg, r);
  const auto& base = r.get(Scheme::ConventionalParallel).ledger;
  const auto& rp = r.get(Scheme::ReapParallel).ledger;
  EXPECT_EQ(base.check_histogram.at(49), 1u);
  EXPECT_EQ(base.expected_failures, accumulated_error_probability(1e-8, 100, 50, 1));
  EXPECT_EQ(rp.check_histogram.at(0), 50u + 49u);
  const double ratio = accumulated_error_probability(1e-8, 100, 50, 1) / reap_error_probability(1e-8, 100, 50, 1);
  EXPECT_NEAR(ratio, 50.4933000243161, 1e-9);
  EXPECT_NEAR(c.normalized_mttf / ratio, 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(c.normalized_mttf, base.expected_failures / rp.expected_failures);
}

TEST(Compare, ColdMissesIntoEmptySetsAreNeutral) {
  RunConfig cfg;
  cfg.geometry.num_sets = 256;
  cfg.geometry.ways = 1;
  std::string trace;
  for (int i = 0; i < 200; ++i) trace += format_trace_line({AccessKind::Read, std::uint64_t(i) * 64, {}, {}}) + "\n";
  std::istringstream in(trace);
  const Scheme both[] = {Scheme::ConventionalParallel, Scheme::ReapParallel};
  const auto r = run_trace(cfg, in, both);
  const auto c = compare_schemes(cfg, r);
  EXPECT_EQ(r.get(Scheme::ConventionalParallel).ledger.concealed_increments, 0u);
  EXPECT_EQ(c.normalized_mttf, 1.0);
  EXPECT_EQ(c.energy.overhead_ratio, 1.0);
}

TEST(Compare, ConflictMissesWithOneWayStillCostReapChecks) {
  // Each miss reads the single resident line before replacing it. The
  // baseline's concealed read dies with the clean victim; REAP checks it.
  RunConfig cfg;
  cfg.geometry.num_sets = 4;
  cfg.geometry.ways = 1;
  std::string trace;
  for (int i = 0; i < 200; ++i) trace += format_trace_line({AccessKind::Read, std::uint64_t(i) * 64, {}, {}}) + "\n";
  std::istringstream in(trace);
  const Scheme both[] = {Scheme::ConventionalParallel, Scheme::ReapParallel};
  const auto r = run_trace(cfg, in, both);
  const auto& base = r.get(Scheme::ConventionalParallel).ledger;
  const auto& rp = r.get(Scheme::ReapParallel).ledger;
  EXPECT_EQ(base.concealed_increments, 196u);
  EXPECT_EQ(base.checked_reads, 0u);
  EXPECT_EQ(rp.checked_reads, 196u);
  EXPECT_EQ(compare_schemes(cfg, r).normalized_mttf, 0.0);
}

TEST(Compare, HeavyTailTraceFavoursReap) {
  RunConfig cfg;
  SyntheticSpec s;
  s.num_events = 50000;
  std::string trace;
  for (const auto& ev : generate_synthetic(s, cfg.geometry)) trace += format_trace_line(ev) + "\n";
  std::istringstream in(trace);
  const Scheme both[] = {Scheme::ConventionalParallel, Scheme::ReapParallel};
  const auto r = run_trace(cfg, in, both);
  const auto c = compare_schemes(cfg, r);
  EXPECT_GT(c.normalized_mttf, 1.0);
  const auto j = compare_json(cfg, r);
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"schema_version", "generator", "report", "config", "accesses",
                                            "normalized_mttf", "energy_overhead_ratio", "area_overhead_fraction",
                                            "baseline", "reap", "energy", "area"}));
}
