#pragma once

// Bit-level Monte Carlo counterpart of the analytical block-error formulas.
//
// A block keeps its golden content next to the possibly disturbed copy. Reads
// only ever clear '1' bits. Flip positions are drawn with geometric skips over
// the susceptible cells, so a read costs O(expected flips + words) instead of
// one Bernoulli draw per cell.
//
// Rebinomial depletion re-exposes every golden '1' cell on every read, which
// is the fixed-n idealization behind the accumulated-error formula. A repeat
// hit on a cell that already flipped cannot change the stored bit, so it is
// tallied as an extra error that the decoder must also correct; that keeps the
// error count equal to the number of disturbance events, i.e. a binomial over
// reads * n trials.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "reap/rng.hpp"

namespace reap {

enum class Depletion { Physical, Rebinomial };
enum class McProtocol { Conventional, Reap };

inline std::string to_string(Depletion d) { return d == Depletion::Physical ? "physical" : "rebinomial"; }
inline std::string to_string(McProtocol p) { return p == McProtocol::Conventional ? "conventional" : "reap"; }

inline Depletion parse_depletion(const std::string& s) {
  if (s == "physical") return Depletion::Physical;
  if (s == "rebinomial") return Depletion::Rebinomial;
  throw std::invalid_argument("unknown depletion mode '" + s + "' (expected physical, rebinomial)");
}

class BlockBits {
 public:
  BlockBits() = default;

  /// Block of `block_bits` cells whose first `ones` cells hold '1'.
  BlockBits(std::uint32_t block_bits, std::uint32_t ones) : bits_(block_bits) {
    if (ones > block_bits) throw std::invalid_argument("block: more ones than bits");
    reference_.assign((block_bits + 63) / 64, 0);
    for (std::uint32_t i = 0; i < ones; ++i) reference_[i / 64] |= std::uint64_t{1} << (i % 64);
    current_ = reference_;
  }

  std::uint32_t size() const { return bits_; }
  bool reference_bit(std::uint32_t i) const { return (reference_[i / 64] >> (i % 64)) & 1; }
  bool current_bit(std::uint32_t i) const { return (current_[i / 64] >> (i % 64)) & 1; }
  const std::vector<std::uint64_t>& reference_words() const { return reference_; }
  const std::vector<std::uint64_t>& current_words() const { return current_; }

  /// Repeat disturbance events on already-flipped cells (Rebinomial only).
  std::uint64_t repeat_hits() const { return repeat_hits_; }

  std::uint64_t mismatches() const {
    std::uint64_t m = repeat_hits_;
    for (std::size_t w = 0; w < current_.size(); ++w)
      m += static_cast<std::uint64_t>(std::popcount(current_[w] ^ reference_[w]));
    return m;
  }

  /// True when no cell holds '1' unless its golden value is '1'.
  bool unidirectional() const {
    for (std::size_t w = 0; w < current_.size(); ++w)
      if (current_[w] & ~reference_[w]) return false;
    return true;
  }

  void restore() {
    current_ = reference_;
    repeat_hits_ = 0;
  }

 private:
  friend std::uint64_t inject_read(BlockBits&, double, Depletion, Rng&);

  std::uint32_t bits_ = 0;
  std::vector<std::uint64_t> reference_;
  std::vector<std::uint64_t> current_;
  std::uint64_t repeat_hits_ = 0;
};

namespace detail {

// Number of susceptible cells skipped before the next flip.
inline std::uint64_t geometric_gap(double log_keep, Rng& rng) {
  if (log_keep == -INFINITY) return 0;
  const double g = std::floor(std::log(rng.uniform01()) / log_keep);
  return g >= 0x1.0p62 ? (std::uint64_t{1} << 62) : static_cast<std::uint64_t>(g);
}

inline unsigned select_bit(std::uint64_t mask, std::uint64_t k) {
  for (; k > 0; --k) mask &= mask - 1;
  return static_cast<unsigned>(std::countr_zero(mask));
}

}  // namespace detail

/// One read of the block: each susceptible cell flips 1->0 with probability p.
/// Returns the number of cells that changed state; repeat hits are tallied on
/// the block instead.
inline std::uint64_t inject_read(BlockBits& block, double p, Depletion depletion, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("inject_read: p must lie in [0, 1]");
  if (p == 0.0) return 0;
  const double log_keep = std::log1p(-p);
  std::uint64_t flipped = 0;
  std::uint64_t skip = detail::geometric_gap(log_keep, rng);
  for (std::size_t w = 0; w < block.current_.size(); ++w) {
    std::uint64_t mask = depletion == Depletion::Physical ? block.current_[w] : block.reference_[w];
    auto count = static_cast<std::uint64_t>(std::popcount(mask));
    while (skip < count) {
      const unsigned b = detail::select_bit(mask, skip);
      const std::uint64_t bit = std::uint64_t{1} << b;
      if (block.current_[w] & bit) {
        block.current_[w] &= ~bit;
        ++flipped;
      } else {
        ++block.repeat_hits_;
      }
      mask = b == 63 ? 0 : mask & (~std::uint64_t{0} << (b + 1));
      count = static_cast<std::uint64_t>(std::popcount(mask));
      skip = detail::geometric_gap(log_keep, rng);
    }
    skip -= count;
  }
  return flipped;
}

enum class DecodeStatus { Clean, Corrected, Uncorrectable };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::Clean;
  std::uint64_t errors = 0;

  bool operator==(const DecodeResult&) const = default;
};

/// Correct-up-to-t decode against the golden copy. A correctable block is
/// restored; an uncorrectable one is left as is.
inline DecodeResult ecc_decode(BlockBits& block, std::uint32_t ecc_t) {
  const std::uint64_t m = block.mismatches();
  if (m == 0) return {DecodeStatus::Clean, 0};
  if (m <= ecc_t) {
    block.restore();
    return {DecodeStatus::Corrected, m};
  }
  return {DecodeStatus::Uncorrectable, m};
}

struct McScenario {
  double p = 1e-3;
  std::uint32_t n_ones = 100;
  std::uint64_t reads_between_checks = 1;
  std::uint32_t ecc_t = 1;
  std::uint64_t trials = 1000000;
  std::uint64_t seed = 1;
  Depletion depletion = Depletion::Rebinomial;
  McProtocol protocol = McProtocol::Conventional;
  unsigned workers = 0;  // 0: one per hardware thread

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("scenario: p must lie in [0, 1]");
    if (reads_between_checks < 1) throw std::invalid_argument("scenario: reads must be >= 1");
    if (trials < 1) throw std::invalid_argument("scenario: trials must be >= 1");
  }
};

struct McStats {
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  double uncorrectable_rate = 0.0;
  double stderr_rate = 0.0;

  bool operator==(const McStats&) const = default;
};

// Trials are cut into fixed chunks, each with its own derived seed, so the
// result depends on the seed alone and not on how many workers ran it.
inline constexpr std::uint64_t kMcChunkTrials = 1 << 15;

namespace detail {

inline std::uint64_t run_chunk(const McScenario& s, std::uint64_t chunk, std::uint64_t count) {
  Rng rng(derive_seed(s.seed, chunk));
  BlockBits block(std::max<std::uint32_t>(s.n_ones, 1), s.n_ones);
  std::uint64_t failures = 0;
  for (std::uint64_t t = 0; t < count; ++t) {
    block.restore();
    bool failed = false;
    if (s.protocol == McProtocol::Conventional) {
      for (std::uint64_t r = 0; r < s.reads_between_checks; ++r) inject_read(block, s.p, s.depletion, rng);
      failed = ecc_decode(block, s.ecc_t).status == DecodeStatus::Uncorrectable;
    } else {
      for (std::uint64_t r = 0; r < s.reads_between_checks && !failed; ++r) {
        inject_read(block, s.p, s.depletion, rng);
        failed = ecc_decode(block, s.ecc_t).status == DecodeStatus::Uncorrectable;
      }
    }
    failures += failed;
  }
  return failures;
}

}  // namespace detail

inline McStats run_trials(const McScenario& s) {
  s.validate();
  const std::uint64_t chunks = (s.trials + kMcChunkTrials - 1) / kMcChunkTrials;
  std::vector<std::uint64_t> per_chunk(chunks, 0);
  std::atomic<std::uint64_t> next{0};
  auto work = [&] {
    for (std::uint64_t c; (c = next.fetch_add(1)) < chunks;) {
      const std::uint64_t count = std::min(kMcChunkTrials, s.trials - c * kMcChunkTrials);
      per_chunk[c] = detail::run_chunk(s, c, count);
    }
  };

  unsigned workers = s.workers ? s.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, chunks));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  McStats st;
  st.trials = s.trials;
  for (auto f : per_chunk) st.failures += f;
  st.uncorrectable_rate = static_cast<double>(st.failures) / static_cast<double>(st.trials);
  st.stderr_rate = std::sqrt(st.uncorrectable_rate * (1.0 - st.uncorrectable_rate) / static_cast<double>(st.trials));
  return st;
}

}  // namespace reap
