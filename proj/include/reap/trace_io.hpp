#pragma once

// Line-oriented access traces and the synthetic workload generator.
//
// Grammar, one access per line:
//
//   R|W <hex-address> [ones=<decimal>] [payload=<hex-bytes>]
//
// The address may carry a 0x prefix. Blank lines and lines whose first
// non-blank character is '#' are skipped. Unknown keys are rejected.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "reap/access_event.hpp"
#include "reap/cache_engine.hpp"
#include "reap/rng.hpp"

namespace reap {

class TraceError : public std::runtime_error {
 public:
  TraceError(std::uint64_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::uint64_t line() const { return line_; }

 private:
  std::uint64_t line_;
};

namespace detail {

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

inline std::vector<std::string_view> split_fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

inline std::uint64_t parse_hex_address(std::string_view s) {
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  if (s.empty()) throw TraceError(0, "empty address");
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (ec == std::errc::result_out_of_range) throw TraceError(0, "address does not fit in 64 bits");
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw TraceError(0, "address '" + std::string(s) + "' is not hexadecimal");
  return v;
}

inline std::vector<std::uint8_t> parse_hex_bytes(std::string_view s) {
  if (s.size() >= 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) s.remove_prefix(2);
  if (s.empty() || s.size() % 2 != 0) throw TraceError(0, "payload must be an even number of hex digits");
  std::vector<std::uint8_t> bytes(s.size() / 2);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const int hi = hex_digit(s[2 * i]);
    const int lo = hex_digit(s[2 * i + 1]);
    if (hi < 0 || lo < 0) throw TraceError(0, "payload is not hexadecimal");
    bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return bytes;
}

}  // namespace detail

/// Parses one trace line. Returns nullopt for blank and comment lines; throws
/// TraceError (with line 0) on malformed input.
inline std::optional<AccessEvent> parse_trace_line(std::string_view line, std::uint32_t block_bits = 512) {
  const auto fields = detail::split_fields(line);
  if (fields.empty() || fields[0][0] == '#') return std::nullopt;

  AccessEvent ev;
  if (fields[0] == "R") {
    ev.kind = AccessKind::Read;
  } else if (fields[0] == "W") {
    ev.kind = AccessKind::Write;
  } else {
    throw TraceError(0, "unknown op '" + std::string(fields[0]) + "'");
  }
  if (fields.size() < 2) throw TraceError(0, "missing address");
  ev.address = detail::parse_hex_address(fields[1]);

  for (std::size_t i = 2; i < fields.size(); ++i) {
    const auto f = fields[i];
    const auto eq = f.find('=');
    if (eq == std::string_view::npos) throw TraceError(0, "expected key=value, got '" + std::string(f) + "'");
    const auto key = f.substr(0, eq);
    const auto value = f.substr(eq + 1);
    if (key == "ones") {
      if (ev.ones) throw TraceError(0, "duplicate ones");
      std::uint32_t v = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v, 10);
      if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty())
        throw TraceError(0, "ones '" + std::string(value) + "' is not a decimal count");
      ev.ones = v;
    } else if (key == "payload") {
      if (ev.payload) throw TraceError(0, "duplicate payload");
      ev.payload = detail::parse_hex_bytes(value);
    } else {
      throw TraceError(0, "unknown key '" + std::string(key) + "'");
    }
  }

  if (ev.ones && ev.payload) throw TraceError(0, "ones and payload are mutually exclusive");
  if (ev.ones && *ev.ones > block_bits)
    throw TraceError(0, "ones=" + std::to_string(*ev.ones) + " exceeds block size of " +
                            std::to_string(block_bits) + " bits");
  if (ev.payload && ev.payload->size() * 8 > (std::size_t{block_bits} + 7) / 8 * 8)
    throw TraceError(0, "payload is longer than the block");
  if (ev.payload && payload_ones(*ev.payload) > block_bits)
    throw TraceError(0, "payload has more ones than the block has bits");
  return ev;
}

inline std::string format_trace_line(const AccessEvent& ev) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s = ev.kind == AccessKind::Read ? "R 0x" : "W 0x";
  char buf[17];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, ev.address, 16);
  s.append(buf, ptr);
  if (ev.ones) s += " ones=" + std::to_string(*ev.ones);
  if (ev.payload) {
    s += " payload=";
    for (auto b : *ev.payload) {
      s += kHex[b >> 4];
      s += kHex[b & 15];
    }
  }
  return s;
}

/// How content is assigned to events that carry no descriptor.
struct OnesModel {
  enum class Kind { Fixed, UniformRandom, FromSeed };
  Kind kind = Kind::Fixed;
  std::uint32_t fixed = 128;

  static OnesModel fixed_count(std::uint32_t n) { return {Kind::Fixed, n}; }
  static OnesModel defaults_for(std::uint32_t block_bits) { return {Kind::Fixed, block_bits / 4}; }
};

inline std::string to_string(const OnesModel& m) {
  switch (m.kind) {
    case OnesModel::Kind::Fixed: return "fixed:" + std::to_string(m.fixed);
    case OnesModel::Kind::UniformRandom: return "uniform";
    case OnesModel::Kind::FromSeed: return "from-seed";
  }
  return "?";
}

inline OnesModel parse_ones_model(const std::string& s) {
  if (s == "uniform") return {OnesModel::Kind::UniformRandom, 0};
  if (s == "from-seed") return {OnesModel::Kind::FromSeed, 0};
  if (s.rfind("fixed:", 0) == 0) {
    const std::string_view v = std::string_view(s).substr(6);
    std::uint32_t n = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n, 10);
    if (ec == std::errc{} && ptr == v.data() + v.size() && !v.empty()) return OnesModel::fixed_count(n);
  }
  throw std::invalid_argument("unknown ones model '" + s + "' (expected fixed:<n>, uniform, from-seed)");
}

/// Draws ones-counts for a stream. FromSeed gives each block address a stable
/// count; UniformRandom redraws per event.
class OnesSampler {
 public:
  OnesSampler(OnesModel model, std::uint32_t block_bits, std::uint64_t seed)
      : model_(model), block_bits_(block_bits), seed_(seed), rng_(derive_seed(seed, 0x0e5)) {
    if (model_.kind == OnesModel::Kind::Fixed && model_.fixed > block_bits_)
      throw std::invalid_argument("ones model: fixed count exceeds block size");
  }

  std::uint32_t operator()(std::uint64_t block_address) {
    switch (model_.kind) {
      case OnesModel::Kind::Fixed: return model_.fixed;
      case OnesModel::Kind::UniformRandom:
        return static_cast<std::uint32_t>(rng_.uniform_below(std::uint64_t{block_bits_} + 1));
      case OnesModel::Kind::FromSeed:
        return static_cast<std::uint32_t>(derive_seed(seed_, block_address) % (std::uint64_t{block_bits_} + 1));
    }
    return 0;
  }

 private:
  OnesModel model_;
  std::uint32_t block_bits_;
  std::uint64_t seed_;
  Rng rng_;
};

/// Streams events from a text source without buffering the whole file.
/// Events lacking a content descriptor get ones from the default model.
class TraceReader {
 public:
  TraceReader(std::istream& in, const CacheGeometry& geometry, OnesModel defaults, std::uint64_t seed = 0)
      : in_(in), geometry_(geometry), defaults_(defaults, geometry.block_bits, seed) {}

  TraceReader(std::istream& in, const CacheGeometry& geometry)
      : TraceReader(in, geometry, OnesModel::defaults_for(geometry.block_bits)) {}

  std::optional<AccessEvent> next() {
    while (std::getline(in_, buffer_)) {
      ++line_no_;
      std::optional<AccessEvent> ev;
      try {
        ev = parse_trace_line(buffer_, geometry_.block_bits);
      } catch (const TraceError& e) {
        throw TraceError(line_no_, e.what());
      }
      if (!ev) continue;
      if (!ev->ones && !ev->payload) ev->ones = defaults_(ev->address >> geometry_.offset_bits());
      return ev;
    }
    if (in_.bad()) throw TraceError(line_no_, "read error");
    return std::nullopt;
  }

  std::uint64_t line_number() const { return line_no_; }

 private:
  std::istream& in_;
  CacheGeometry geometry_;
  OnesSampler defaults_;
  std::string buffer_;
  std::uint64_t line_no_ = 0;
};

struct SyntheticSpec {
  std::uint64_t num_events = 100000;
  double read_fraction = 0.7;
  std::uint64_t address_space = 32768;  // distinct blocks
  double set_skew = 1.1;                // Zipf exponent over block ranks
  OnesModel ones_model = OnesModel::fixed_count(128);
  std::uint64_t seed = 42;

  void validate() const {
    if (!(read_fraction >= 0.0 && read_fraction <= 1.0))
      throw std::invalid_argument("synthetic: read_fraction must lie in [0, 1]");
    if (address_space < 1) throw std::invalid_argument("synthetic: address_space must be >= 1");
    if (address_space > (std::uint64_t{1} << 26))
      throw std::invalid_argument("synthetic: address_space above 2^26 blocks is not supported");
    if (!(set_skew >= 0.0)) throw std::invalid_argument("synthetic: set_skew must be >= 0");
  }
};

/// Deterministic synthetic workload. Block rank r (1-based) is drawn with
/// probability proportional to r^-set_skew and maps to block index r - 1, so
/// hot blocks spread over consecutive sets and set pressure comes from the
/// geometry.
class SyntheticGenerator {
 public:
  SyntheticGenerator(const SyntheticSpec& spec, const CacheGeometry& geometry)
      : spec_(spec),
        offset_bits_(geometry.offset_bits()),
        rng_(derive_seed(spec.seed, 0)),
        ones_(spec.ones_model, geometry.block_bits, spec.seed) {
    spec_.validate();
    geometry.validate();
    cdf_.resize(spec_.address_space);
    double acc = 0.0;
    for (std::uint64_t r = 0; r < spec_.address_space; ++r) {
      acc += std::pow(static_cast<double>(r + 1), -spec_.set_skew);
      cdf_[r] = acc;
    }
    for (auto& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
  }

  std::optional<AccessEvent> next() {
    if (emitted_ == spec_.num_events) return std::nullopt;
    ++emitted_;
    AccessEvent ev;
    const double u_block = rng_.uniform01();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u_block);
    const auto block = static_cast<std::uint64_t>(it - cdf_.begin());
    ev.address = block << offset_bits_;
    ev.kind = rng_.uniform01() < spec_.read_fraction ? AccessKind::Read : AccessKind::Write;
    ev.ones = ones_(block);
    return ev;
  }

 private:
  SyntheticSpec spec_;
  std::uint32_t offset_bits_;
  Rng rng_;
  OnesSampler ones_;
  std::vector<double> cdf_;
  std::uint64_t emitted_ = 0;
};

inline std::vector<AccessEvent> generate_synthetic(const SyntheticSpec& spec, const CacheGeometry& geometry) {
  SyntheticGenerator gen(spec, geometry);
  std::vector<AccessEvent> out;
  out.reserve(spec.num_events);
  while (auto ev = gen.next()) out.push_back(std::move(*ev));
  return out;
}

}  // namespace reap
