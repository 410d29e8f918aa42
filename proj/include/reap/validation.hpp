#pragma once

// Analytical-vs-Monte-Carlo comparison grid behind `mc-validate`.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "reap/disturbance_model.hpp"
#include "reap/fault_injection.hpp"
#include "reap/reporting.hpp"

namespace reap {

struct ValidationGrid {
  std::vector<double> p_values{1e-2, 1e-3};
  std::vector<std::uint32_t> n_values{16, 100};
  std::vector<std::uint64_t> read_values{1, 10, 50};
  std::vector<McProtocol> protocols{McProtocol::Conventional, McProtocol::Reap};
  std::uint32_t ecc_t = 1;
  std::uint64_t trials = 1000000;
  std::uint64_t seed = 20190325;
  Depletion depletion = Depletion::Rebinomial;
  unsigned workers = 0;
  double z_limit = 3.0;
};

struct ValidationRow {
  double p = 0.0;
  std::uint32_t n = 0;
  std::uint64_t reads = 0;
  McProtocol protocol = McProtocol::Conventional;
  double analytical = 0.0;
  McStats stats;
  double null_stderr = 0.0;  // sqrt(a (1 - a) / trials) at the analytical rate
  double z = 0.0;

  bool passes(double limit) const { return std::abs(z) <= limit; }
};

inline double analytical_rate(McProtocol protocol, double p, std::uint32_t n, std::uint64_t reads,
                              std::uint32_t ecc_t) {
  return protocol == McProtocol::Conventional ? accumulated_error_probability(p, n, reads, ecc_t)
                                              : reap_error_probability(p, n, reads, ecc_t);
}

/// z-score of an empirical rate against the analytical one, scaled by the
/// binomial standard error under the analytical rate. That scale stays
/// nonzero when the empirical rate lands on exactly 0 or 1.
inline double z_score(double empirical, double analytical, std::uint64_t trials) {
  const double se = std::sqrt(analytical * (1.0 - analytical) / static_cast<double>(trials));
  const double diff = empirical - analytical;
  if (diff == 0.0) return 0.0;
  if (se == 0.0) return diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  return diff / se;
}

inline ValidationRow validate_cell(const ValidationGrid& g, double p, std::uint32_t n, std::uint64_t reads,
                                   McProtocol protocol, std::uint64_t cell_index) {
  McScenario s;
  s.p = p;
  s.n_ones = n;
  s.reads_between_checks = reads;
  s.ecc_t = g.ecc_t;
  s.trials = g.trials;
  s.seed = derive_seed(g.seed, cell_index);
  s.depletion = g.depletion;
  s.protocol = protocol;
  s.workers = g.workers;

  ValidationRow row;
  row.p = p;
  row.n = n;
  row.reads = reads;
  row.protocol = protocol;
  row.analytical = analytical_rate(protocol, p, n, reads, g.ecc_t);
  row.stats = run_trials(s);
  row.null_stderr = std::sqrt(row.analytical * (1.0 - row.analytical) / static_cast<double>(g.trials));
  row.z = z_score(row.stats.uncorrectable_rate, row.analytical, g.trials);
  return row;
}

inline std::vector<ValidationRow> run_validation(const ValidationGrid& g) {
  std::vector<ValidationRow> rows;
  std::uint64_t cell = 0;
  for (double p : g.p_values)
    for (auto n : g.n_values)
      for (auto reads : g.read_values)
        for (auto protocol : g.protocols) rows.push_back(validate_cell(g, p, n, reads, protocol, cell++));
  return rows;
}

inline CsvTable validation_table(const std::vector<ValidationRow>& rows) {
  CsvTable t{{"p", "n", "reads", "protocol", "analytical", "empirical", "stderr", "null_stderr", "z", "failures",
              "trials"},
             {}};
  for (const auto& r : rows)
    t.rows.push_back({csv_real(r.p), std::to_string(r.n), std::to_string(r.reads), to_string(r.protocol),
                      csv_real(r.analytical), csv_real(r.stats.uncorrectable_rate), csv_real(r.stats.stderr_rate),
                      csv_real(r.null_stderr), csv_real(r.z), std::to_string(r.stats.failures),
                      std::to_string(r.stats.trials)});
  return t;
}

inline Json validation_json(const ValidationGrid& g, const std::vector<ValidationRow>& rows) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["generator"] = kArtifactVersion;
  j["report"] = "mc-validate";
  j["rng"] = std::string(kRngName);
  j["seed"] = g.seed;
  j["trials"] = g.trials;
  j["ecc_t"] = g.ecc_t;
  j["depletion"] = to_string(g.depletion);
  j["z_limit"] = g.z_limit;
  Json rs = Json::array();
  bool all = true;
  for (const auto& r : rows) {
    Json o;
    o["p"] = r.p;
    o["n"] = r.n;
    o["reads"] = r.reads;
    o["protocol"] = to_string(r.protocol);
    o["analytical"] = r.analytical;
    o["empirical"] = r.stats.uncorrectable_rate;
    o["stderr"] = r.stats.stderr_rate;
    o["null_stderr"] = r.null_stderr;
    o["z"] = r.z;
    o["failures"] = r.stats.failures;
    o["pass"] = r.passes(g.z_limit);
    all = all && r.passes(g.z_limit);
    rs.push_back(std::move(o));
  }
  j["rows"] = std::move(rs);
  j["all_pass"] = all;
  return j;
}

}  // namespace reap
