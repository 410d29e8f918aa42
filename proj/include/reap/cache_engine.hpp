#pragma once

// Set-associative STT-MRAM cache model with reliability accounting.
//
// Cache contents, hit/miss outcomes, and LRU victims never depend on the read
// path scheme. The scheme only decides which data lines are read on an access
// and which of those reads pass through an ECC decoder:
//
//   ConventionalParallel  every valid way is read while tags are compared; only
//                         the hit way is checked, the rest take a concealed read
//   ReapParallel          every valid way is read and every one is checked
//   SerialTagThenData     tags first, then only the hit way is read and checked
//
// A checked read settles the line: its expected uncorrectable probability is
// charged to the ledger and its concealed-read count returns to zero.

#include <bit>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reap/access_event.hpp"
#include "reap/disturbance_model.hpp"

namespace reap {

enum class Scheme { ConventionalParallel, ReapParallel, SerialTagThenData };
enum class Replacement { LRU };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::ConventionalParallel: return "conventional";
    case Scheme::ReapParallel: return "reap";
    case Scheme::SerialTagThenData: return "serial";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "conventional") return Scheme::ConventionalParallel;
  if (s == "reap") return Scheme::ReapParallel;
  if (s == "serial") return Scheme::SerialTagThenData;
  throw std::invalid_argument("unknown scheme '" + s + "' (expected conventional, reap, serial)");
}

struct CacheGeometry {
  std::uint64_t num_sets = 1024;
  std::uint32_t ways = 8;
  std::uint32_t block_bits = 512;
  std::uint32_t ecc_t = 1;

  void validate() const {
    if (num_sets == 0 || !std::has_single_bit(num_sets))
      throw std::invalid_argument("geometry: num_sets must be a power of two");
    if (ways < 1) throw std::invalid_argument("geometry: ways must be >= 1");
    if (block_bits < 1) throw std::invalid_argument("geometry: block_bits must be >= 1");
  }

  std::uint32_t block_bytes() const { return (block_bits + 7) / 8; }
  std::uint32_t offset_bits() const {
    return static_cast<std::uint32_t>(std::bit_width(std::uint64_t{block_bytes()} - 1));
  }
  std::uint32_t set_bits() const { return static_cast<std::uint32_t>(std::countr_zero(num_sets)); }
};

struct AddressParts {
  std::uint64_t tag = 0;
  std::uint64_t set = 0;
  std::uint64_t offset = 0;

  bool operator==(const AddressParts&) const = default;
};

namespace detail {
inline std::uint64_t shr(std::uint64_t x, std::uint32_t s) { return s >= 64 ? 0 : x >> s; }
inline std::uint64_t shl(std::uint64_t x, std::uint32_t s) { return s >= 64 ? 0 : x << s; }
inline std::uint64_t low_mask(std::uint32_t bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}
}  // namespace detail

inline AddressParts decompose_address(std::uint64_t addr, const CacheGeometry& g) {
  const auto ob = g.offset_bits();
  const auto sb = g.set_bits();
  return {detail::shr(addr, ob + sb), detail::shr(addr, ob) & detail::low_mask(sb),
          addr & detail::low_mask(ob)};
}

inline std::uint64_t compose_address(const AddressParts& p, const CacheGeometry& g) {
  const auto ob = g.offset_bits();
  const auto sb = g.set_bits();
  return detail::shl(p.tag, ob + sb) | detail::shl(p.set, ob) | p.offset;
}

struct LineState {
  bool valid = false;
  std::uint64_t tag = 0;
  bool dirty = false;
  std::uint32_t ones_count = 0;
  std::uint64_t unchecked_reads = 0;
};

struct SchemeConfig {
  Scheme scheme = Scheme::ConventionalParallel;
  bool writes_cause_concealed_reads = false;
  bool account_dirty_writeback = true;
  bool drain_dirty_at_end = true;
  Replacement replacement = Replacement::LRU;
};

struct ReliabilityLedger {
  double expected_failures = 0.0;
  std::uint64_t checked_reads = 0;
  std::uint64_t concealed_increments = 0;
  // Concealed reads a line had taken when its check happened -> occurrences.
  std::map<std::uint64_t, std::uint64_t> check_histogram;
  std::string label;
};

/// Event counts that drive the energy model. Identical traces give identical
/// hit/miss/writeback counts under every scheme; line_reads and decodes are
/// what the scheme changes.
struct AccessCounters {
  Scheme scheme = Scheme::ConventionalParallel;
  std::uint64_t read_accesses = 0;
  std::uint64_t write_accesses = 0;
  std::uint64_t read_hits = 0;
  std::uint64_t write_hits = 0;
  std::uint64_t line_reads = 0;  // data-line reads issued by read (and, if enabled, write) accesses
  std::uint64_t decodes = 0;     // ECC decoder activations, writeback and drain checks included
  std::uint64_t evictions = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t drain_checks = 0;

  std::uint64_t accesses() const { return read_accesses + write_accesses; }
};

struct AccessOutcome {
  bool hit = false;
  std::uint64_t set = 0;
  std::uint32_t way = 0;
  std::uint32_t valid_lines = 0;  // valid ways in the set before the access
  std::uint32_t line_reads = 0;
  std::uint32_t decodes = 0;
  std::uint32_t concealed = 0;
  bool evicted = false;
  std::uint64_t evicted_tag = 0;
  bool writeback = false;
  double added_failure = 0.0;
};

class Cache {
 public:
  /// Unusable placeholder; access() and drain() reject it.
  Cache() = default;

  Cache(CacheGeometry geometry, SchemeConfig scheme, double flip_probability)
      : geometry_(geometry), scheme_(scheme), p_(flip_probability) {
    geometry_.validate();
    if (!(p_ >= 0.0 && p_ <= 1.0)) throw std::invalid_argument("cache: flip probability must lie in [0, 1]");
    lines_.assign(geometry_.num_sets * geometry_.ways, LineState{});
    stamps_.assign(lines_.size(), 0);
    single_read_error_.assign(std::size_t{geometry_.block_bits} + 1, -1.0);
    ledger_.label = to_string(scheme_.scheme);
    counters_.scheme = scheme_.scheme;
    initialized_ = true;
  }

  Cache(CacheGeometry geometry, SchemeConfig scheme, const DeviceParams& device)
      : Cache(geometry, scheme, read_disturbance_probability(device)) {}

  bool initialized() const { return initialized_; }
  const CacheGeometry& geometry() const { return geometry_; }
  const SchemeConfig& scheme() const { return scheme_; }
  double flip_probability() const { return p_; }
  const ReliabilityLedger& ledger() const { return ledger_; }
  const AccessCounters& counters() const { return counters_; }

  const LineState& line(std::uint64_t set, std::uint32_t way) const {
    return lines_.at(set * geometry_.ways + way);
  }

  AccessOutcome access(const AccessEvent& event) {
    require_initialized();
    const auto parts = decompose_address(event.address, geometry_);
    const std::size_t base = parts.set * geometry_.ways;

    AccessOutcome out;
    out.set = parts.set;
    std::optional<std::uint32_t> hit_way;
    for (std::uint32_t w = 0; w < geometry_.ways; ++w) {
      const auto& l = lines_[base + w];
      if (!l.valid) continue;
      ++out.valid_lines;
      if (l.tag == parts.tag) hit_way = w;
    }
    out.hit = hit_way.has_value();

    if (event.kind == AccessKind::Read) {
      ++counters_.read_accesses;
      if (out.hit) ++counters_.read_hits;
      parallel_read(base, hit_way, true, out);
    } else {
      ++counters_.write_accesses;
      if (out.hit) ++counters_.write_hits;
      if (scheme_.writes_cause_concealed_reads) parallel_read(base, hit_way, false, out);
    }

    const std::uint32_t ones = content_ones(event);
    if (out.hit) {
      out.way = *hit_way;
      if (event.kind == AccessKind::Write) {
        auto& l = lines_[base + out.way];
        l.ones_count = ones;
        l.dirty = true;
        l.unchecked_reads = 0;
      }
    } else {
      out.way = fill(base, parts.tag, ones, event.kind == AccessKind::Write, out);
    }
    stamps_[base + out.way] = ++clock_;
    return out;
  }

  /// Settles every dirty line as one final checked read. Idempotent.
  const ReliabilityLedger& drain() {
    require_initialized();
    if (!scheme_.drain_dirty_at_end) return ledger_;
    for (auto& l : lines_) {
      if (!l.valid || !l.dirty) continue;
      charge_check(l);
      ++counters_.decodes;
      ++counters_.drain_checks;
      l.dirty = false;
    }
    return ledger_;
  }

 private:
  void require_initialized() const {
    if (!initialized_) throw std::logic_error("cache: not initialized");
  }

  std::uint32_t content_ones(const AccessEvent& e) const {
    const auto ones = described_ones(e).value_or(geometry_.block_bits / 4);
    if (ones > geometry_.block_bits)
      throw std::invalid_argument("access: content has more ones than the block has bits");
    return ones;
  }

  double single_read_error(std::uint32_t ones) {
    auto& slot = single_read_error_[ones];
    if (slot < 0.0) slot = block_error_probability(p_, ones, geometry_.ecc_t);
    return slot;
  }

  // Charges the check a line receives now. Under the conventional path the
  // line has absorbed its concealed reads plus this one; the other schemes
  // never leave a line unchecked, so a check always covers exactly one read.
  double charge_check(LineState& l) {
    const std::uint64_t reads = l.unchecked_reads + 1;
    const double pf = reads == 1 ? single_read_error(l.ones_count)
                                 : accumulated_error_probability(p_, l.ones_count, reads, geometry_.ecc_t);
    ledger_.expected_failures += pf;
    ++ledger_.checked_reads;
    ++ledger_.check_histogram[l.unchecked_reads];
    l.unchecked_reads = 0;
    return pf;
  }

  // Data-array read for an access to the set at `base`. On reads the hit way
  // is the requested line; on writes (when enabled) it is about to be
  // overwritten and is neither disturbed nor checked.
  void parallel_read(std::size_t base, std::optional<std::uint32_t> hit_way, bool is_read,
                     AccessOutcome& out) {
    for (std::uint32_t w = 0; w < geometry_.ways; ++w) {
      auto& l = lines_[base + w];
      if (!l.valid) continue;
      const bool target = hit_way && *hit_way == w;
      switch (scheme_.scheme) {
        case Scheme::ConventionalParallel:
          ++out.line_reads;
          if (target) {
            if (is_read) {
              out.added_failure += charge_check(l);
              ++out.decodes;
            }
          } else {
            ++l.unchecked_reads;
            ++ledger_.concealed_increments;
            ++out.concealed;
          }
          break;
        case Scheme::ReapParallel:
          ++out.line_reads;
          if (target && !is_read) break;
          out.added_failure += charge_check(l);
          ++out.decodes;
          break;
        case Scheme::SerialTagThenData:
          if (target && is_read) {
            ++out.line_reads;
            out.added_failure += charge_check(l);
            ++out.decodes;
          }
          break;
      }
    }
    counters_.line_reads += out.line_reads;
    counters_.decodes += out.decodes;
  }

  std::uint32_t fill(std::size_t base, std::uint64_t tag, std::uint32_t ones, bool dirty,
                     AccessOutcome& out) {
    std::uint32_t victim = 0;
    bool found_invalid = false;
    std::uint64_t oldest = std::numeric_limits<std::uint64_t>::max();
    for (std::uint32_t w = 0; w < geometry_.ways; ++w) {
      if (!lines_[base + w].valid) {
        victim = w;
        found_invalid = true;
        break;
      }
      if (stamps_[base + w] < oldest) {
        oldest = stamps_[base + w];
        victim = w;
      }
    }

    auto& l = lines_[base + victim];
    if (!found_invalid) {
      out.evicted = true;
      out.evicted_tag = l.tag;
      ++counters_.evictions;
      if (l.dirty) {
        out.writeback = true;
        ++counters_.writebacks;
        if (scheme_.account_dirty_writeback) {
          out.added_failure += charge_check(l);
          ++out.decodes;
          ++counters_.decodes;
        }
      }
    }
    l = LineState{true, tag, dirty, ones, 0};
    return victim;
  }

  CacheGeometry geometry_{};
  SchemeConfig scheme_{};
  double p_ = 0.0;
  bool initialized_ = false;
  std::vector<LineState> lines_;
  std::vector<std::uint64_t> stamps_;
  std::vector<double> single_read_error_;
  std::uint64_t clock_ = 0;
  ReliabilityLedger ledger_;
  AccessCounters counters_;
};

}  // namespace reap
