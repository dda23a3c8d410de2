#pragma once

#include <cstdint>
#include <optional>

namespace babel {

using Metric = std::uint16_t;
inline constexpr Metric kInfinity = 0xFFFF;

/// 16-bit sequence number compared with serial arithmetic (window 32768).
struct SeqNo {
  std::uint16_t value = 0;

  constexpr SeqNo next() const { return SeqNo{static_cast<std::uint16_t>(value + 1)}; }
  friend constexpr bool operator==(SeqNo, SeqNo) = default;
};

constexpr bool seqno_less(SeqNo a, SeqNo b) {
  const auto diff = static_cast<std::uint16_t>(b.value - a.value);
  return diff != 0 && diff < 0x8000;
}

constexpr bool seqno_greater(SeqNo a, SeqNo b) { return seqno_less(b, a); }

/// m_A = m_B + c, saturating at infinity.
constexpr Metric compute_metric(Metric advertised, Metric link_cost) {
  if (advertised == kInfinity || link_cost == kInfinity) return kInfinity;
  const unsigned sum = unsigned{advertised} + unsigned{link_cost};
  return sum >= kInfinity ? kInfinity : static_cast<Metric>(sum);
}

struct FeasibilityDistance {
  SeqNo seqno;
  Metric metric = kInfinity;

  friend constexpr bool operator==(const FeasibilityDistance&, const FeasibilityDistance&) = default;
};

/// Feasibility condition for an advertised (seqno, metric) against a stored
/// distance. No stored distance and retractions are always feasible.
constexpr bool satisfies_fc(SeqNo seqno, Metric metric, const std::optional<FeasibilityDistance>& fd) {
  if (!fd || metric == kInfinity) return true;
  return (seqno == fd->seqno && metric < fd->metric) || seqno_greater(seqno, fd->seqno);
}

/// Strict improvement order used when refreshing a stored distance.
constexpr bool fd_better(const FeasibilityDistance& candidate, const FeasibilityDistance& current) {
  return seqno_greater(candidate.seqno, current.seqno) ||
         (candidate.seqno == current.seqno && candidate.metric < current.metric);
}

}  // namespace babel
