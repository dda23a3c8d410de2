#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>

#include "babel/metric.hpp"

namespace babel::cost {

/// Sliding window of received/missed Hellos, newest at the back.
class HelloHistory {
 public:
  explicit HelloHistory(std::size_t capacity = 16) : capacity_(capacity == 0 ? 1 : capacity) {}

  /// Marks a received Hello. Forward seqno gaps append the skipped Hellos as
  /// misses first; a serial regression is treated as a neighbor restart.
  void record_received(std::uint16_t seqno);
  /// Marks the expected Hello as missed (timer driven).
  void record_missed();

  std::size_t capacity() const { return capacity_; }
  const std::deque<bool>& window() const { return window_; }
  std::optional<std::uint16_t> expected_seqno() const { return expected_; }
  /// Received marks among the newest `last` entries.
  std::size_t received_in_last(std::size_t last) const;
  std::size_t received() const { return received_in_last(capacity_); }

  friend bool operator==(const HelloHistory&, const HelloHistory&) = default;

 private:
  void push(bool received);

  std::size_t capacity_;
  std::deque<bool> window_;
  std::optional<std::uint16_t> expected_;
};

HelloHistory record_hello(HelloHistory history, std::uint16_t seqno);

/// Nominal cost iff at least k of the last j entries were received.
Metric rxcost_k_out_of_j(const HelloHistory& history, std::size_t k, std::size_t j, Metric nominal);

/// round(256 / (alpha * beta)), infinite when the product is zero.
Metric cost_etx(double alpha, double beta);

/// Infinite when reception is dead, otherwise the neighbor-reported cost.
Metric link_cost_wired(Metric rxcost, Metric txcost);

class CostPolicy {
 public:
  virtual ~CostPolicy() = default;

  /// Hello history window this policy needs.
  virtual std::size_t window() const = 0;
  virtual Metric rxcost(const HelloHistory& history) const = 0;
  virtual Metric link_cost(Metric rxcost, Metric txcost) const = 0;
  virtual std::string describe() const = 0;
};

class KOutOfJ final : public CostPolicy {
 public:
  /// Throws std::invalid_argument unless 0 < k <= j and nominal is finite.
  KOutOfJ(std::size_t k, std::size_t j, Metric nominal);

  std::size_t window() const override { return j_; }
  Metric rxcost(const HelloHistory& history) const override {
    return rxcost_k_out_of_j(history, k_, j_, nominal_);
  }
  Metric link_cost(Metric rxcost, Metric txcost) const override { return link_cost_wired(rxcost, txcost); }
  std::string describe() const override;

  std::size_t k() const { return k_; }
  std::size_t j() const { return j_; }
  Metric nominal() const { return nominal_; }

 private:
  std::size_t k_;
  std::size_t j_;
  Metric nominal_;
};

/// beta = received / j over the Hello window; alpha recovered from the
/// neighbor's reported rxcost as 256 / rxcost.
class Etx final : public CostPolicy {
 public:
  explicit Etx(std::size_t j = 16);

  std::size_t window() const override { return j_; }
  Metric rxcost(const HelloHistory& history) const override;
  Metric link_cost(Metric rxcost, Metric txcost) const override;
  std::string describe() const override;

 private:
  std::size_t j_;
};

inline constexpr Metric kNominalWired = 96;
inline constexpr Metric kNominalWireless = 256;

std::shared_ptr<const CostPolicy> default_wired_policy();

}  // namespace babel::cost
