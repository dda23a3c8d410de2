#include "babel/cost.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace babel::cost {

void HelloHistory::push(bool received) {
  window_.push_back(received);
  while (window_.size() > capacity_) window_.pop_front();
}

void HelloHistory::record_received(std::uint16_t seqno) {
  if (expected_) {
    const auto gap = static_cast<std::uint16_t>(seqno - *expected_);
    if (gap >= 0x8000) {
      window_.clear();
    } else {
      // Anything beyond the capacity would be evicted anyway.
      for (std::size_t i = 0; i < std::min<std::size_t>(gap, capacity_); ++i) push(false);
    }
  }
  push(true);
  expected_ = static_cast<std::uint16_t>(seqno + 1);
}

void HelloHistory::record_missed() {
  push(false);
  if (expected_) expected_ = static_cast<std::uint16_t>(*expected_ + 1);
}

std::size_t HelloHistory::received_in_last(std::size_t last) const {
  const std::size_t n = std::min(last, window_.size());
  return static_cast<std::size_t>(std::count(window_.end() - static_cast<std::ptrdiff_t>(n), window_.end(), true));
}

HelloHistory record_hello(HelloHistory history, std::uint16_t seqno) {
  history.record_received(seqno);
  return history;
}

Metric rxcost_k_out_of_j(const HelloHistory& history, std::size_t k, std::size_t j, Metric nominal) {
  return history.received_in_last(j) >= k ? nominal : kInfinity;
}

Metric cost_etx(double alpha, double beta) {
  const double product = alpha * beta;
  if (!(product > 0.0)) return kInfinity;
  const double cost = std::round(256.0 / product);
  if (cost >= kInfinity) return kInfinity;
  return static_cast<Metric>(cost);
}

Metric link_cost_wired(Metric rxcost, Metric txcost) {
  if (rxcost == kInfinity) return kInfinity;
  return txcost;
}

KOutOfJ::KOutOfJ(std::size_t k, std::size_t j, Metric nominal) : k_(k), j_(j), nominal_(nominal) {
  if (k == 0 || k > j) throw std::invalid_argument("k-out-of-j requires 0 < k <= j");
  if (nominal == kInfinity) throw std::invalid_argument("nominal cost must be finite");
}

std::string KOutOfJ::describe() const {
  return "k-out-of-j k=" + std::to_string(k_) + " j=" + std::to_string(j_) +
         " nominal=" + std::to_string(nominal_);
}

Etx::Etx(std::size_t j) : j_(j) {
  if (j == 0) throw std::invalid_argument("etx window must be positive");
}

Metric Etx::rxcost(const HelloHistory& history) const {
  const double beta = static_cast<double>(history.received_in_last(j_)) / static_cast<double>(j_);
  return cost_etx(1.0, beta);
}

Metric Etx::link_cost(Metric rxcost, Metric txcost) const {
  if (rxcost == kInfinity || txcost == kInfinity || rxcost == 0 || txcost == 0) return kInfinity;
  const double alpha = std::min(1.0, 256.0 / txcost);
  const double beta = std::min(1.0, 256.0 / rxcost);
  return cost_etx(alpha, beta);
}

std::string Etx::describe() const { return "etx j=" + std::to_string(j_); }

std::shared_ptr<const CostPolicy> default_wired_policy() {
  static const auto policy = std::make_shared<const KOutOfJ>(2, 3, kNominalWired);
  return policy;
}

}  // namespace babel::cost
