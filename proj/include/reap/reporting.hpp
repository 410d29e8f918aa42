#pragma once

// Report types and their JSON / CSV emission.
//
// JSON output is built as nlohmann::ordered_json (insertion order is the
// documented key order) and serialized by write_json() below, which prints
// every floating-point value in %.11e form: 12 significant digits, stable
// across runs and wide enough to keep 1e-13-scale probabilities apart.
// Non-finite values are written as the strings "inf" / "-inf" / "nan".

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reap/cache_engine.hpp"
#include "reap/disturbance_model.hpp"

namespace reap {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kArtifactVersion = "reap-sim 1.0.0";

enum class ReportFormat { Json, Csv };

inline std::string format_real(double v) {
  if (std::isnan(v)) return "\"nan\"";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.11e", v);
  return buf;
}

namespace detail {

inline void write_indent(std::ostream& os, int depth) {
  for (int i = 0; i < depth; ++i) os << "  ";
}

inline void write_json(std::ostream& os, const Json& j, int depth) {
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        write_indent(os, depth + 1);
        os << Json(it.key()).dump() << ": ";
        write_json(os, it.value(), depth + 1);
        os << (i + 1 < j.size() ? ",\n" : "\n");
      }
      write_indent(os, depth);
      os << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        write_indent(os, depth + 1);
        write_json(os, j[i], depth + 1);
        os << (i + 1 < j.size() ? ",\n" : "\n");
      }
      write_indent(os, depth);
      os << ']';
      return;
    }
    case Json::value_t::number_float:
      os << format_real(j.get<double>());
      return;
    default:
      os << j.dump();
      return;
  }
}

}  // namespace detail

inline void write_json(std::ostream& os, const Json& j) {
  detail::write_json(os, j, 0);
  os << '\n';
}

inline std::string to_json_text(const Json& j) {
  std::ostringstream os;
  write_json(os, j);
  return os.str();
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

/// CSV numbers use the JSON real format without the string quoting for
/// non-finite values.
inline std::string csv_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_real(v);
}

inline void write_csv(std::ostream& os, const CsvTable& t) {
  auto row = [&os](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_field(r[i]);
    os << "\r\n";
  };
  row(t.header);
  for (const auto& r : t.rows) row(r);
}

// ---------------------------------------------------------------------------
// Concealed-read histogram

struct HistogramRow {
  std::uint64_t concealed_reads = 0;
  std::uint64_t count = 0;
  double normalized_frequency = 0.0;
  double failure_contribution = 0.0;
};

struct HistogramReport {
  std::string label;
  double flip_probability = 0.0;
  std::uint32_t mean_ones = 0;
  std::uint32_t ecc_t = 1;
  std::vector<HistogramRow> rows;

  Json to_json() const {
    Json j;
    j["label"] = label;
    j["flip_probability"] = flip_probability;
    j["mean_ones"] = mean_ones;
    j["ecc_t"] = ecc_t;
    Json rs = Json::array();
    for (const auto& r : rows) {
      Json o;
      o["concealed_reads"] = r.concealed_reads;
      o["count"] = r.count;
      o["normalized_frequency"] = r.normalized_frequency;
      o["failure_contribution"] = r.failure_contribution;
      rs.push_back(std::move(o));
    }
    j["rows"] = std::move(rs);
    return j;
  }

  CsvTable table() const {
    CsvTable t{{"concealed_reads", "count", "normalized_frequency", "failure_contribution"}, {}};
    for (const auto& r : rows)
      t.rows.push_back({std::to_string(r.concealed_reads), std::to_string(r.count),
                        csv_real(r.normalized_frequency), csv_real(r.failure_contribution)});
    return t;
  }
};

/// Frequency of each concealed-read count seen at check time, scaled so the
/// zero-concealed bin reads 100 (or the lowest populated bin, when no check
/// saw zero concealed reads), with each bin's share of the expected failures
/// evaluated at `mean_ones` ones per line.
inline HistogramReport build_histogram(const ReliabilityLedger& ledger, const DeviceParams& device,
                                       std::uint32_t mean_ones, std::uint32_t ecc_t = 1) {
  HistogramReport h;
  h.label = ledger.label;
  h.flip_probability = read_disturbance_probability(device);
  h.mean_ones = mean_ones;
  h.ecc_t = ecc_t;
  if (ledger.check_histogram.empty()) return h;
  const double reference = static_cast<double>(ledger.check_histogram.begin()->second);
  for (const auto& [n, count] : ledger.check_histogram) {
    if (count == 0) continue;
    const double c = static_cast<double>(count);
    h.rows.push_back({n, count, c * 100.0 / reference,
                      c * accumulated_error_probability(h.flip_probability, mean_ones, n + 1, ecc_t)});
  }
  return h;
}

// ---------------------------------------------------------------------------
// Energy

struct EnergyParams {
  double e_line_read_pj = 10.0;
  double e_line_write_pj = 20.0;
  double e_tag_access_pj = 2.0;
  double e_ecc_decode_pj = 0.33;

  void validate() const {
    if (!(e_line_read_pj >= 0 && e_line_write_pj >= 0 && e_tag_access_pj >= 0 && e_ecc_decode_pj >= 0))
      throw std::invalid_argument("energy: all parameters must be >= 0");
  }
};

struct SchemeEnergy {
  std::string label;
  std::uint64_t read_accesses = 0;
  std::uint64_t write_accesses = 0;
  std::uint64_t line_reads = 0;
  std::uint64_t decodes = 0;
  double read_energy_pj = 0.0;
  double write_energy_pj = 0.0;
  double decode_energy_pj = 0.0;
  double total_pj = 0.0;

  Json to_json() const {
    Json j;
    j["label"] = label;
    j["read_accesses"] = read_accesses;
    j["write_accesses"] = write_accesses;
    j["line_reads"] = line_reads;
    j["decodes"] = decodes;
    j["read_energy_pj"] = read_energy_pj;
    j["write_energy_pj"] = write_energy_pj;
    j["decode_energy_pj"] = decode_energy_pj;
    j["total_pj"] = total_pj;
    return j;
  }
};

/// Dynamic energy of one run:
///   reads * (mean valid lines read * e_line_read + e_tag)
///   + writes * (e_line_write + e_tag) + decodes * e_ecc_decode,
/// with reads * mean valid lines taken as the engine's exact line-read count.
inline SchemeEnergy scheme_energy(const AccessCounters& c, const EnergyParams& e) {
  e.validate();
  SchemeEnergy s;
  s.label = to_string(c.scheme);
  s.read_accesses = c.read_accesses;
  s.write_accesses = c.write_accesses;
  s.line_reads = c.line_reads;
  s.decodes = c.decodes;
  s.read_energy_pj = static_cast<double>(c.line_reads) * e.e_line_read_pj +
                     static_cast<double>(c.read_accesses) * e.e_tag_access_pj;
  s.write_energy_pj = static_cast<double>(c.write_accesses) * (e.e_line_write_pj + e.e_tag_access_pj);
  s.decode_energy_pj = static_cast<double>(c.decodes) * e.e_ecc_decode_pj;
  s.total_pj = s.read_energy_pj + s.write_energy_pj + s.decode_energy_pj;
  return s;
}

struct EnergyReport {
  SchemeEnergy baseline;
  SchemeEnergy reap;
  double delta_pj = 0.0;
  double overhead_ratio = 1.0;  // reap / baseline

  Json to_json() const {
    Json j;
    j["baseline"] = baseline.to_json();
    j["reap"] = reap.to_json();
    j["delta_pj"] = delta_pj;
    j["overhead_ratio"] = overhead_ratio;
    return j;
  }

  CsvTable table() const {
    CsvTable t{{"scheme", "read_accesses", "write_accesses", "line_reads", "decodes", "read_energy_pj",
                "write_energy_pj", "decode_energy_pj", "total_pj"},
               {}};
    for (const auto* s : {&baseline, &reap})
      t.rows.push_back({s->label, std::to_string(s->read_accesses), std::to_string(s->write_accesses),
                        std::to_string(s->line_reads), std::to_string(s->decodes), csv_real(s->read_energy_pj),
                        csv_real(s->write_energy_pj), csv_real(s->decode_energy_pj), csv_real(s->total_pj)});
    return t;
  }
};

inline EnergyReport energy_report(const AccessCounters& baseline, const AccessCounters& reap_counters,
                                  const EnergyParams& params, const CacheGeometry& geometry) {
  if (baseline.scheme != Scheme::ConventionalParallel)
    throw std::invalid_argument("energy: baseline counters come from the '" + to_string(baseline.scheme) +
                                "' scheme, expected 'conventional'");
  if (reap_counters.scheme != Scheme::ReapParallel)
    throw std::invalid_argument("energy: reap counters come from the '" + to_string(reap_counters.scheme) +
                                "' scheme, expected 'reap'");
  for (const auto* c : {&baseline, &reap_counters})
    if (c->line_reads > c->accesses() * geometry.ways)
      throw std::invalid_argument("energy: line reads exceed ways per access for this geometry");
  EnergyReport r;
  r.baseline = scheme_energy(baseline, params);
  r.reap = scheme_energy(reap_counters, params);
  r.delta_pj = r.reap.total_pj - r.baseline.total_pj;
  r.overhead_ratio = r.baseline.total_pj > 0.0 ? r.reap.total_pj / r.baseline.total_pj : 1.0;
  return r;
}

// ---------------------------------------------------------------------------
// Area

struct AreaParams {
  double decoder_area_fraction = 0.001;  // one ECC decoder / total cache area

  void validate() const {
    if (!(decoder_area_fraction >= 0.0 && decoder_area_fraction < 1.0))
      throw std::invalid_argument("area: decoder_area_fraction must lie in [0, 1)");
  }
};

struct AreaReport {
  std::uint32_t ways = 0;
  double decoder_area_fraction = 0.0;
  std::uint32_t extra_decoders = 0;
  double overhead_fraction = 0.0;

  Json to_json() const {
    Json j;
    j["ways"] = ways;
    j["decoder_area_fraction"] = decoder_area_fraction;
    j["extra_decoders"] = extra_decoders;
    j["overhead_fraction"] = overhead_fraction;
    return j;
  }

  CsvTable table() const {
    return {{"ways", "decoder_area_fraction", "extra_decoders", "overhead_fraction"},
            {{std::to_string(ways), csv_real(decoder_area_fraction), std::to_string(extra_decoders),
              csv_real(overhead_fraction)}}};
  }
};

/// One decoder per way instead of one per cache.
inline AreaReport area_report(const CacheGeometry& geometry, const AreaParams& params) {
  params.validate();
  AreaReport r;
  r.ways = geometry.ways;
  r.decoder_area_fraction = params.decoder_area_fraction;
  r.extra_decoders = geometry.ways - 1;
  r.overhead_fraction = static_cast<double>(r.extra_decoders) * params.decoder_area_fraction;
  return r;
}

// ---------------------------------------------------------------------------
// Ledger and MTTF

inline Json ledger_json(const ReliabilityLedger& l) {
  Json j;
  j["label"] = l.label;
  j["expected_failures"] = l.expected_failures;
  j["checked_reads"] = l.checked_reads;
  j["concealed_increments"] = l.concealed_increments;
  Json h = Json::array();
  for (const auto& [n, c] : l.check_histogram) h.push_back(Json::array({n, c}));
  j["check_histogram"] = std::move(h);
  return j;
}

inline Json counters_json(const AccessCounters& c) {
  Json j;
  j["scheme"] = to_string(c.scheme);
  j["read_accesses"] = c.read_accesses;
  j["write_accesses"] = c.write_accesses;
  j["read_hits"] = c.read_hits;
  j["write_hits"] = c.write_hits;
  j["line_reads"] = c.line_reads;
  j["decodes"] = c.decodes;
  j["evictions"] = c.evictions;
  j["writebacks"] = c.writebacks;
  j["drain_checks"] = c.drain_checks;
  return j;
}

struct MttfReport {
  std::string label;
  double sim_time_ns = 0.0;
  double expected_failures = 0.0;
  double mttf_ns = 0.0;

  Json to_json() const {
    Json j;
    j["label"] = label;
    j["sim_time_ns"] = sim_time_ns;
    j["expected_failures"] = expected_failures;
    j["mttf_ns"] = mttf_ns;
    return j;
  }

  CsvTable table() const {
    return {{"label", "sim_time_ns", "expected_failures", "mttf_ns"},
            {{label, csv_real(sim_time_ns), csv_real(expected_failures), csv_real(mttf_ns)}}};
  }
};

inline MttfReport mttf_report(const ReliabilityLedger& l, double sim_time_ns) {
  return {l.label, sim_time_ns, l.expected_failures, mttf_from_ledger(l.expected_failures, sim_time_ns)};
}

/// Writes any report with to_json() / table() members.
template <typename Report>
void emit(const Report& report, ReportFormat format, std::ostream& sink) {
  if (format == ReportFormat::Json) {
    write_json(sink, report.to_json());
  } else {
    write_csv(sink, report.table());
  }
  sink.flush();
  if (!sink) throw std::runtime_error("report: write failed");
}

}  // namespace reap
