#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "dcra/rng.hpp"

namespace dcra {

/// Per-slot decision of a device. The numeric order is the argmax tie-break order.
enum class Action : std::uint8_t { Wait = 0, Transmit = 1 };

inline constexpr std::size_t kNumActions = 2;

/// What a device learns at the start of slot t about slot t-1.
/// The numeric order is the enumeration order used by every state space.
enum class ChannelObservation : std::uint8_t { Idle = 0, Busy = 1, Successful = 2, Failed = 3 };

inline constexpr std::size_t kNumObservations = 4;

/// Access point broadcast at the end of a slot.
enum class ApFeedback : std::uint8_t { Ack = 0, Nack = 1, Nothing = 2 };

std::string_view to_string(Action a);
std::string_view to_string(ChannelObservation o);
std::string_view to_string(ApFeedback f);
char short_name(ChannelObservation o);

/// Consistency of an observation with the device's own action: a device that sent in slot t-1 can only
/// observe SUCCESSFUL or FAILED, a device that did not send never observes SUCCESSFUL.
bool observation_possible(ChannelObservation o, bool sent);

/**
 * Pending packets of one device, bucketed by remaining lifetime.
 *
 * counts()[k] is the number of packets that expire in k+1 slots, so index 0 is the
 * urgent class and index D-1 holds packets that arrived this slot.
 */
class LeadTimeQueue {
 public:
  LeadTimeQueue() = default;
  explicit LeadTimeQueue(std::size_t hard_delay);
  LeadTimeQueue(std::vector<std::uint32_t> counts);

  std::size_t hard_delay() const { return counts_.size(); }
  const std::vector<std::uint32_t>& counts() const { return counts_; }
  std::uint32_t count(std::size_t k) const { return counts_[k]; }

  std::uint64_t total() const;
  bool empty() const;

  /// 1 iff a lead-time-1 packet is pending.
  int urgent_flag() const { return !counts_.empty() && counts_[0] > 0 ? 1 : 0; }

  /// Lead time of the head-of-line packet, 0 for an empty queue.
  std::size_t hol_lead_time() const;

  /// Bit k set iff counts()[k] > 0. Requires hard_delay() <= 64.
  std::uint64_t occupancy_mask() const;
  static LeadTimeQueue from_mask(std::uint64_t mask, std::size_t hard_delay);

  bool operator==(const LeadTimeQueue&) const = default;

 private:
  std::vector<std::uint32_t> counts_;
};

struct AdvanceResult {
  LeadTimeQueue queue;
  std::uint32_t expired = 0;
};

/// One slot of queue dynamics: remove the delivered HoL packet, age every packet by one
/// slot (whatever was in the lead-time-1 class expires), then add the new arrivals with
/// lead time D. Throws std::logic_error when delivered is set on an empty queue.
AdvanceResult advance_queue(const LeadTimeQueue& q, bool delivered, std::uint32_t arrivals);

enum class ArrivalKind : std::uint8_t { Bernoulli, Poisson };

struct ArrivalModel {
  ArrivalKind kind = ArrivalKind::Bernoulli;
  double rate = 1.0;  // Bernoulli probability or Poisson mean

  static ArrivalModel bernoulli(double p) { return {ArrivalKind::Bernoulli, p}; }
  static ArrivalModel poisson(double lambda) { return {ArrivalKind::Poisson, lambda}; }
};

struct DeviceParams {
  ArrivalModel arrivals;
  std::size_t hard_delay = 1;
  double success_prob = 1.0;
  double transmit_prob = 1.0;  // only read for ALOHA devices

  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
};

std::uint32_t draw_arrivals(const DeviceParams& params, Rng& rng);

}  // namespace dcra
