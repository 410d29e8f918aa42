#pragma once

// Read-disturbance reliability formulas for ECC-protected STT-MRAM blocks.
//
// Every routine here is a pure function. Failure probabilities are always
// summed directly from the binomial failure tail; the probability of correct
// delivery sits within ~1e-13 of one at realistic parameters, so forming it
// and subtracting from one would destroy all significant digits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace reap {

enum class SignConvention {
  Standard,  // exp(-delta * (1 - I_read / I_c0))
  AsPrinted  // exp(-delta * (I_read - I_c0) / I_c0)
};

struct DeviceParams {
  double tau_ns = 1.0;
  double delta = 60.0;
  double i_read_ua = 0.0;
  double i_c0_ua = 1.0;
  double t_read_ns = 1.0;
  SignConvention sign_convention = SignConvention::Standard;
  // Direct per-cell per-read flip probability; bypasses the thermal model.
  std::optional<double> p_override = 1e-8;

  void validate() const {
    if (!(tau_ns > 0.0)) throw std::invalid_argument("device: tau must be > 0");
    if (!(t_read_ns >= 0.0)) throw std::invalid_argument("device: t_read must be >= 0");
    if (!(i_c0_ua > 0.0)) throw std::invalid_argument("device: i_c0 must be > 0");
    if (!(i_read_ua >= 0.0)) throw std::invalid_argument("device: i_read must be >= 0");
    if (!(delta > 0.0)) throw std::invalid_argument("device: delta must be > 0");
    if (p_override && !(*p_override >= 0.0 && *p_override <= 1.0))
      throw std::invalid_argument("device: p_override must lie in [0, 1]");
  }
};

struct BlockErrorQuery {
  double p = 0.0;          // per-cell flip probability for one read
  std::uint64_t n = 0;     // cells holding '1'
  std::uint64_t reads = 1; // reads since the last ECC check
  std::uint32_t ecc_t = 1; // correctable bits per block

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("query: p must lie in [0, 1]");
    if (reads < 1) throw std::invalid_argument("query: reads must be >= 1");
  }
};

/// Per-cell probability that one read pulse flips a stored '1'.
inline double read_disturbance_probability(const DeviceParams& d) {
  d.validate();
  if (d.p_override) return *d.p_override;
  if (d.t_read_ns == 0.0) return 0.0;
  const double ratio = d.i_read_ua / d.i_c0_ua;
  const double exponent = d.sign_convention == SignConvention::Standard
                              ? -d.delta * (1.0 - ratio)
                              : -d.delta * (d.i_read_ua - d.i_c0_ua) / d.i_c0_ua;
  const double rate = (d.t_read_ns / d.tau_ns) * std::exp(exponent);
  return std::clamp(-std::expm1(-rate), 0.0, 1.0);
}

namespace detail {

inline double log_choose(std::uint64_t n, std::uint64_t k) {
  k = std::min(k, n - k);
  if (k <= 256) {
    // Summing logs keeps full precision when n is huge and k is small,
    // where lgamma(n + 1) would carry an absolute error far above 1e-9.
    double s = 0.0;
    for (std::uint64_t i = 0; i < k; ++i) s += std::log(static_cast<double>(n - i));
    return s - std::lgamma(static_cast<double>(k) + 1.0);
  }
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

inline double log_binomial_term(std::uint64_t n, std::uint64_t k, double p) {
  return log_choose(n, k) + static_cast<double>(k) * std::log(p) +
         static_cast<double>(n - k) * std::log1p(-p);
}

inline constexpr double kTailRelEps = 1e-17;

}  // namespace detail

/// P(X >= k_min) for X ~ Binomial(trials, p).
///
/// Sums whichever side of the distribution carries the smaller mass, starting
/// at the boundary term and walking outward with the term-ratio recurrence.
/// The partial sum is kept relative to the boundary term so neither side
/// underflows before the final scaling.
inline double binomial_tail(std::uint64_t trials, double p, std::uint64_t k_min) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial_tail: p must lie in [0, 1]");
  if (k_min == 0) return 1.0;
  if (k_min > trials) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return 1.0;

  const double n = static_cast<double>(trials);
  const double odds = p / (1.0 - p);
  const double mode = std::floor((n + 1.0) * p);

  if (static_cast<double>(k_min) >= n * p) {
    double term = 1.0;
    double sum = 1.0;
    for (std::uint64_t i = k_min; i < trials; ++i) {
      term *= (static_cast<double>(trials - i) / static_cast<double>(i + 1)) * odds;
      sum += term;
      if (term == 0.0) break;
      if (static_cast<double>(i + 1) > mode && term < detail::kTailRelEps * sum) break;
    }
    const double log_tail = detail::log_binomial_term(trials, k_min, p) + std::log(sum);
    return std::clamp(std::exp(log_tail), 0.0, 1.0);
  }

  // Lower side: 1 - P(X <= k_min - 1).
  const std::uint64_t top = k_min - 1;
  double term = 1.0;
  double sum = 1.0;
  for (std::uint64_t i = top; i > 0; --i) {
    term *= (static_cast<double>(i) / static_cast<double>(trials - i + 1)) / odds;
    sum += term;
    if (term == 0.0) break;
    if (static_cast<double>(i - 1) < mode && term < detail::kTailRelEps * sum) break;
  }
  const double log_lower = detail::log_binomial_term(trials, top, p) + std::log(sum);
  return std::clamp(-std::expm1(log_lower), 0.0, 1.0);
}

/// Probability that a single read leaves more than ecc_t of the n '1' cells
/// flipped, i.e. an uncorrectable block.
inline double block_error_probability(double p, std::uint64_t n, std::uint32_t ecc_t = 1) {
  return binomial_tail(n, p, static_cast<std::uint64_t>(ecc_t) + 1);
}

inline double block_error_probability(const BlockErrorQuery& q) {
  q.validate();
  if (q.reads != 1) throw std::invalid_argument("block_error_probability: reads must be 1");
  return block_error_probability(q.p, q.n, q.ecc_t);
}

/// Uncorrectable probability when `reads` reads hit the block before a single
/// ECC check: the n-trial binomial widens to reads * n trials.
inline double accumulated_error_probability(double p, std::uint64_t n, std::uint64_t reads,
                                            std::uint32_t ecc_t = 1) {
  if (reads < 1) throw std::invalid_argument("accumulated_error_probability: reads must be >= 1");
  if (n != 0 && reads > std::numeric_limits<std::uint64_t>::max() / n)
    throw std::invalid_argument("accumulated_error_probability: reads * n overflows");
  return binomial_tail(reads * n, p, static_cast<std::uint64_t>(ecc_t) + 1);
}

inline double accumulated_error_probability(const BlockErrorQuery& q) {
  q.validate();
  return accumulated_error_probability(q.p, q.n, q.reads, q.ecc_t);
}

/// Uncorrectable probability when every one of `reads` reads is followed by
/// its own ECC check: 1 - (1 - e1)^reads, evaluated in the log domain.
inline double reap_error_probability(double p, std::uint64_t n, std::uint64_t reads,
                                     std::uint32_t ecc_t = 1) {
  if (reads < 1) throw std::invalid_argument("reap_error_probability: reads must be >= 1");
  const double e1 = block_error_probability(p, n, ecc_t);
  if (reads == 1) return e1;
  if (e1 >= 1.0) return 1.0;
  return std::clamp(-std::expm1(static_cast<double>(reads) * std::log1p(-e1)), 0.0, 1.0);
}

inline double reap_error_probability(const BlockErrorQuery& q) {
  q.validate();
  return reap_error_probability(q.p, q.n, q.reads, q.ecc_t);
}

inline constexpr double kInfiniteMttf = std::numeric_limits<double>::infinity();

/// Constant-hazard MTTF: simulated time over expected failures.
inline double mttf_from_ledger(double expected_failures, double sim_time) {
  if (!(expected_failures >= 0.0)) throw std::invalid_argument("mttf: expected_failures must be >= 0");
  if (!(sim_time > 0.0)) throw std::invalid_argument("mttf: sim_time must be > 0");
  if (expected_failures == 0.0) return kInfiniteMttf;
  return sim_time / expected_failures;
}

/// MTTF of `scheme` relative to `baseline` over one trace. Two failure-free
/// runs compare as equal.
inline double normalized_mttf(double baseline_failures, double scheme_failures) {
  if (scheme_failures == 0.0) return baseline_failures == 0.0 ? 1.0 : kInfiniteMttf;
  return baseline_failures / scheme_failures;
}

inline std::string to_string(SignConvention c) {
  return c == SignConvention::Standard ? "standard" : "as-printed";
}

inline SignConvention parse_sign_convention(const std::string& s) {
  if (s == "standard") return SignConvention::Standard;
  if (s == "as-printed") return SignConvention::AsPrinted;
  throw std::invalid_argument("unknown sign convention '" + s + "'");
}

}  // namespace reap
