#pragma once

// End-to-end runs: one trace pass feeding one cache per scheme, followed by
// drain and report assembly. Used by the `simulate` and `compare` commands.

#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reap/cache_engine.hpp"
#include "reap/reporting.hpp"
#include "reap/run_config.hpp"
#include "reap/trace_io.hpp"

namespace reap {

struct SchemeResult {
  ReliabilityLedger ledger;
  AccessCounters counters;
};

struct SimulationResult {
  std::vector<SchemeResult> schemes;  // in the order requested
  std::uint64_t accesses = 0;
  double sim_time_ns = 0.0;

  const SchemeResult& get(Scheme s) const {
    for (const auto& r : schemes)
      if (r.counters.scheme == s) return r;
    throw std::out_of_range("simulation: scheme '" + to_string(s) + "' was not run");
  }
};

/// Replays `trace` once through one cache per scheme. Throws TraceError with
/// the offending line number on malformed input.
inline SimulationResult run_trace(const RunConfig& config, std::istream& trace, std::span<const Scheme> schemes) {
  config.validate();
  const double p = read_disturbance_probability(config.device);
  std::vector<Cache> caches;
  caches.reserve(schemes.size());
  for (auto s : schemes) {
    SchemeConfig sc = config.scheme;
    sc.scheme = s;
    caches.emplace_back(config.geometry, sc, p);
  }

  SimulationResult result;
  TraceReader reader(trace, config.geometry, config.default_ones, config.seed);
  while (auto ev = reader.next()) {
    for (auto& c : caches) c.access(*ev);
    ++result.accesses;
  }
  for (auto& c : caches) {
    c.drain();
    result.schemes.push_back({c.ledger(), c.counters()});
  }
  // A trace with no accesses still spans one access period so MTTF stays defined.
  result.sim_time_ns = static_cast<double>(std::max<std::uint64_t>(result.accesses, 1)) * config.access_period_ns;
  return result;
}

inline SimulationResult run_trace(const RunConfig& config, std::istream& trace) {
  const Scheme one[] = {config.scheme.scheme};
  return run_trace(config, trace, one);
}

inline Json report_header(const RunConfig& config, const std::string& kind) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["generator"] = kArtifactVersion;
  j["report"] = kind;
  j["config"] = config_json(config);
  return j;
}

/// Reports written by `simulate`, as (file name, contents) pairs.
inline std::vector<std::pair<std::string, std::string>> simulate_outputs(const RunConfig& config,
                                                                         const SimulationResult& r) {
  const auto& s = r.schemes.at(0);
  std::vector<std::pair<std::string, std::string>> files;

  Json ledger = report_header(config, "ledger");
  ledger["accesses"] = r.accesses;
  ledger["ledger"] = ledger_json(s.ledger);
  ledger["counters"] = counters_json(s.counters);
  files.emplace_back("ledger.json", to_json_text(ledger));

  const auto hist = build_histogram(s.ledger, config.device, config.mean_ones, config.geometry.ecc_t);
  Json hj = report_header(config, "histogram");
  hj["histogram"] = hist.to_json();
  files.emplace_back("histogram.json", to_json_text(hj));
  std::ostringstream csv;
  write_csv(csv, hist.table());
  files.emplace_back("histogram.csv", csv.str());

  Json ej = report_header(config, "energy");
  ej["energy"] = scheme_energy(s.counters, config.energy).to_json();
  ej["area"] = area_report(config.geometry, config.area).to_json();
  files.emplace_back("energy.json", to_json_text(ej));

  Json mj = report_header(config, "mttf");
  mj["mttf"] = mttf_report(s.ledger, r.sim_time_ns).to_json();
  files.emplace_back("mttf.json", to_json_text(mj));
  return files;
}

struct Comparison {
  double normalized_mttf = 1.0;  // MTTF(reap) / MTTF(conventional)
  MttfReport baseline;
  MttfReport reap;
  EnergyReport energy;
  AreaReport area;
};

inline Comparison compare_schemes(const RunConfig& config, const SimulationResult& r) {
  const auto& base = r.get(Scheme::ConventionalParallel);
  const auto& rp = r.get(Scheme::ReapParallel);
  Comparison c;
  c.normalized_mttf = normalized_mttf(base.ledger.expected_failures, rp.ledger.expected_failures);
  c.baseline = mttf_report(base.ledger, r.sim_time_ns);
  c.reap = mttf_report(rp.ledger, r.sim_time_ns);
  c.energy = energy_report(base.counters, rp.counters, config.energy, config.geometry);
  c.area = area_report(config.geometry, config.area);
  return c;
}

inline Json compare_json(const RunConfig& config, const SimulationResult& r) {
  const auto c = compare_schemes(config, r);
  Json j = report_header(config, "compare");
  j["accesses"] = r.accesses;
  j["normalized_mttf"] = c.normalized_mttf;
  j["energy_overhead_ratio"] = c.energy.overhead_ratio;
  j["area_overhead_fraction"] = c.area.overhead_fraction;
  j["baseline"] = {{"ledger", ledger_json(r.get(Scheme::ConventionalParallel).ledger)},
                   {"mttf", c.baseline.to_json()}};
  j["reap"] = {{"ledger", ledger_json(r.get(Scheme::ReapParallel).ledger)}, {"mttf", c.reap.to_json()}};
  j["energy"] = c.energy.to_json();
  j["area"] = c.area.to_json();
  return j;
}

}  // namespace reap
