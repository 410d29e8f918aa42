#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <vector>

namespace reap {

enum class AccessKind { Read, Write };

/// One cache access. `ones` or `payload` describes the block content that a
/// fill or write installs; at most one of them is present.
struct AccessEvent {
  AccessKind kind = AccessKind::Read;
  std::uint64_t address = 0;
  std::optional<std::uint32_t> ones;
  std::optional<std::vector<std::uint8_t>> payload;

  bool operator==(const AccessEvent&) const = default;
};

inline std::uint32_t payload_ones(const std::vector<std::uint8_t>& bytes) {
  std::uint32_t n = 0;
  for (auto b : bytes) n += static_cast<std::uint32_t>(std::popcount(b));
  return n;
}

/// Ones-count carried by the event, if it carries a content descriptor.
inline std::optional<std::uint32_t> described_ones(const AccessEvent& e) {
  if (e.ones) return e.ones;
  if (e.payload) return payload_ones(*e.payload);
  return std::nullopt;
}

}  // namespace reap
