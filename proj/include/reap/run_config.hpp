#pragma once

// Run configuration and its key/value file format.
//
//   # comment
//   geometry.ways = 8
//   device.p_override = 1e-8
//
// One `key = value` per line; blank lines and '#' lines are ignored; unknown
// keys are errors. Values are resolved in this order, later winning:
// built-in defaults, the config file, then command-line overrides.
//
// A JSON report can also serve as the config file: its "config" object holds
// the same keys, so any report can be rerun from itself.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reap/cache_engine.hpp"
#include "reap/disturbance_model.hpp"
#include "reap/reporting.hpp"
#include "reap/rng.hpp"
#include "reap/trace_io.hpp"

namespace reap {

inline constexpr int kConfigVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  CacheGeometry geometry;
  DeviceParams device;
  SchemeConfig scheme;
  EnergyParams energy;
  AreaParams area;
  OnesModel default_ones = OnesModel::defaults_for(512);
  std::uint32_t mean_ones = 128;  // ones per line assumed by histogram contributions
  double access_period_ns = 1.0;  // simulated time per access, for MTTF
  std::uint64_t seed = 42;

  void validate() const {
    try {
      geometry.validate();
      device.validate();
      energy.validate();
      area.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (mean_ones > geometry.block_bits) throw ConfigError("report.mean_ones exceeds geometry.block_bits");
    if (default_ones.kind == OnesModel::Kind::Fixed && default_ones.fixed > geometry.block_bits)
      throw ConfigError("trace.default_ones fixed count exceeds geometry.block_bits");
    if (!(access_period_ns > 0.0)) throw ConfigError("sim.access_period_ns must be > 0");
  }
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, 10);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw ConfigError(key + ": '" + v + "' is not a non-negative integer");
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + v + "' is not a number");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(key + ": '" + v + "' is not true/false");
}

// Shortest text that parses back to the same double, so a config echoed into
// a report reproduces the run exactly.
inline std::string real_text(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

struct ConfigKey {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

// Key table in documented order; to_kv() and reports follow it.
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"config_version", [](const RunConfig&) { return std::to_string(kConfigVersion); },
       [](RunConfig&, const std::string& v) {
         if (v != std::to_string(kConfigVersion)) throw ConfigError("config_version: unsupported version " + v);
       }},
      {"rng", [](const RunConfig&) { return std::string(kRngName); },
       [](RunConfig&, const std::string& v) {
         if (v != kRngName) throw ConfigError("rng: only " + std::string(kRngName) + " is supported");
       }},
      {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
       [](RunConfig& c, const std::string& v) { c.seed = parse_integer<std::uint64_t>("seed", v); }},
      {"geometry.num_sets", [](const RunConfig& c) { return std::to_string(c.geometry.num_sets); },
       [](RunConfig& c, const std::string& v) {
         c.geometry.num_sets = parse_integer<std::uint64_t>("geometry.num_sets", v);
       }},
      {"geometry.ways", [](const RunConfig& c) { return std::to_string(c.geometry.ways); },
       [](RunConfig& c, const std::string& v) { c.geometry.ways = parse_integer<std::uint32_t>("geometry.ways", v); }},
      {"geometry.block_bits", [](const RunConfig& c) { return std::to_string(c.geometry.block_bits); },
       [](RunConfig& c, const std::string& v) {
         c.geometry.block_bits = parse_integer<std::uint32_t>("geometry.block_bits", v);
       }},
      {"geometry.ecc_t", [](const RunConfig& c) { return std::to_string(c.geometry.ecc_t); },
       [](RunConfig& c, const std::string& v) { c.geometry.ecc_t = parse_integer<std::uint32_t>("geometry.ecc_t", v); }},
      {"device.p_override",
       [](const RunConfig& c) { return c.device.p_override ? real_text(*c.device.p_override) : std::string("none"); },
       [](RunConfig& c, const std::string& v) {
         if (v == "none") {
           c.device.p_override.reset();
         } else {
           c.device.p_override = parse_real("device.p_override", v);
         }
       }},
      {"device.tau_ns", [](const RunConfig& c) { return real_text(c.device.tau_ns); },
       [](RunConfig& c, const std::string& v) { c.device.tau_ns = parse_real("device.tau_ns", v); }},
      {"device.delta", [](const RunConfig& c) { return real_text(c.device.delta); },
       [](RunConfig& c, const std::string& v) { c.device.delta = parse_real("device.delta", v); }},
      {"device.i_read_ua", [](const RunConfig& c) { return real_text(c.device.i_read_ua); },
       [](RunConfig& c, const std::string& v) { c.device.i_read_ua = parse_real("device.i_read_ua", v); }},
      {"device.i_c0_ua", [](const RunConfig& c) { return real_text(c.device.i_c0_ua); },
       [](RunConfig& c, const std::string& v) { c.device.i_c0_ua = parse_real("device.i_c0_ua", v); }},
      {"device.t_read_ns", [](const RunConfig& c) { return real_text(c.device.t_read_ns); },
       [](RunConfig& c, const std::string& v) { c.device.t_read_ns = parse_real("device.t_read_ns", v); }},
      {"device.sign_convention", [](const RunConfig& c) { return to_string(c.device.sign_convention); },
       [](RunConfig& c, const std::string& v) {
         try {
           c.device.sign_convention = parse_sign_convention(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(std::string("device.sign_convention: ") + e.what());
         }
       }},
      {"scheme.name", [](const RunConfig& c) { return to_string(c.scheme.scheme); },
       [](RunConfig& c, const std::string& v) {
         try {
           c.scheme.scheme = parse_scheme(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(std::string("scheme.name: ") + e.what());
         }
       }},
      {"scheme.writes_cause_concealed_reads",
       [](const RunConfig& c) { return bool_text(c.scheme.writes_cause_concealed_reads); },
       [](RunConfig& c, const std::string& v) {
         c.scheme.writes_cause_concealed_reads = parse_bool("scheme.writes_cause_concealed_reads", v);
       }},
      {"scheme.account_dirty_writeback", [](const RunConfig& c) { return bool_text(c.scheme.account_dirty_writeback); },
       [](RunConfig& c, const std::string& v) {
         c.scheme.account_dirty_writeback = parse_bool("scheme.account_dirty_writeback", v);
       }},
      {"scheme.drain_dirty_at_end", [](const RunConfig& c) { return bool_text(c.scheme.drain_dirty_at_end); },
       [](RunConfig& c, const std::string& v) {
         c.scheme.drain_dirty_at_end = parse_bool("scheme.drain_dirty_at_end", v);
       }},
      {"scheme.replacement", [](const RunConfig&) { return std::string("lru"); },
       [](RunConfig&, const std::string& v) {
         if (v != "lru") throw ConfigError("scheme.replacement: only lru is supported");
       }},
      {"energy.e_line_read_pj", [](const RunConfig& c) { return real_text(c.energy.e_line_read_pj); },
       [](RunConfig& c, const std::string& v) { c.energy.e_line_read_pj = parse_real("energy.e_line_read_pj", v); }},
      {"energy.e_line_write_pj", [](const RunConfig& c) { return real_text(c.energy.e_line_write_pj); },
       [](RunConfig& c, const std::string& v) { c.energy.e_line_write_pj = parse_real("energy.e_line_write_pj", v); }},
      {"energy.e_tag_access_pj", [](const RunConfig& c) { return real_text(c.energy.e_tag_access_pj); },
       [](RunConfig& c, const std::string& v) { c.energy.e_tag_access_pj = parse_real("energy.e_tag_access_pj", v); }},
      {"energy.e_ecc_decode_pj", [](const RunConfig& c) { return real_text(c.energy.e_ecc_decode_pj); },
       [](RunConfig& c, const std::string& v) { c.energy.e_ecc_decode_pj = parse_real("energy.e_ecc_decode_pj", v); }},
      {"area.decoder_area_fraction", [](const RunConfig& c) { return real_text(c.area.decoder_area_fraction); },
       [](RunConfig& c, const std::string& v) {
         c.area.decoder_area_fraction = parse_real("area.decoder_area_fraction", v);
       }},
      {"trace.default_ones", [](const RunConfig& c) { return to_string(c.default_ones); },
       [](RunConfig& c, const std::string& v) {
         try {
           c.default_ones = parse_ones_model(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(std::string("trace.default_ones: ") + e.what());
         }
       }},
      {"report.mean_ones", [](const RunConfig& c) { return std::to_string(c.mean_ones); },
       [](RunConfig& c, const std::string& v) { c.mean_ones = parse_integer<std::uint32_t>("report.mean_ones", v); }},
      {"sim.access_period_ns", [](const RunConfig& c) { return real_text(c.access_period_ns); },
       [](RunConfig& c, const std::string& v) { c.access_period_ns = parse_real("sim.access_period_ns", v); }},
  };
  return keys;
}

}  // namespace detail

inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  for (const auto& k : detail::config_keys()) {
    if (k.name == key) {
      k.set(c, detail::trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

/// Applies a `key=value` override.
inline void apply_override(RunConfig& c, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set_config_value(c, detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

inline std::vector<std::pair<std::string, std::string>> to_kv(const RunConfig& c) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : detail::config_keys()) out.emplace_back(k.name, k.get(c));
  return out;
}

inline std::string to_config_text(const RunConfig& c) {
  std::string s;
  for (const auto& [k, v] : to_kv(c)) s += k + " = " + v + "\n";
  return s;
}

inline Json config_json(const RunConfig& c) {
  Json j = Json::object();
  for (const auto& [k, v] : to_kv(c)) j[k] = v;
  return j;
}

/// Reads key/value text (or a JSON report's "config" object) into `c`.
inline void load_config_text(RunConfig& c, const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object()) throw ConfigError("config: JSON has no \"config\" object");
    for (const auto& [k, v] : j["config"].items()) {
      if (!v.is_string()) throw ConfigError("config: value of '" + k + "' is not a string");
      set_config_value(c, k, v.get<std::string>());
    }
    return;
  }
  std::istringstream in(text);
  std::string line;
  std::uint64_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      apply_override(c, t);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
    }
  }
}

inline void load_config_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  load_config_text(c, ss.str());
}

}  // namespace reap
