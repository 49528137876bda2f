#include "dcra/core_model.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace dcra {

std::string_view to_string(Action a) { return a == Action::Transmit ? "TRANSMIT" : "WAIT"; }

std::string_view to_string(ChannelObservation o) {
  switch (o) {
    case ChannelObservation::Idle: return "IDLE";
    case ChannelObservation::Busy: return "BUSY";
    case ChannelObservation::Successful: return "SUCCESSFUL";
    case ChannelObservation::Failed: return "FAILED";
  }
  return "?";
}

std::string_view to_string(ApFeedback f) {
  switch (f) {
    case ApFeedback::Ack: return "ACK";
    case ApFeedback::Nack: return "NACK";
    case ApFeedback::Nothing: return "NOTHING";
  }
  return "?";
}

char short_name(ChannelObservation o) { return to_string(o).front(); }

bool observation_possible(ChannelObservation o, bool sent) {
  switch (o) {
    case ChannelObservation::Idle:
    case ChannelObservation::Busy: return !sent;
    case ChannelObservation::Successful: return sent;
    case ChannelObservation::Failed: return true;
  }
  return false;
}

LeadTimeQueue::LeadTimeQueue(std::size_t hard_delay) : counts_(hard_delay, 0) {
  if (hard_delay == 0) throw std::invalid_argument("hard delay must be at least one slot");
}

LeadTimeQueue::LeadTimeQueue(std::vector<std::uint32_t> counts) : counts_(std::move(counts)) {
  if (counts_.empty()) throw std::invalid_argument("hard delay must be at least one slot");
}

std::uint64_t LeadTimeQueue::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

bool LeadTimeQueue::empty() const {
  for (auto c : counts_)
    if (c != 0) return false;
  return true;
}

std::size_t LeadTimeQueue::hol_lead_time() const {
  for (std::size_t k = 0; k < counts_.size(); ++k)
    if (counts_[k] > 0) return k + 1;
  return 0;
}

std::uint64_t LeadTimeQueue::occupancy_mask() const {
  if (counts_.size() > 64) throw std::logic_error("occupancy mask needs hard delay <= 64");
  std::uint64_t mask = 0;
  for (std::size_t k = 0; k < counts_.size(); ++k)
    if (counts_[k] > 0) mask |= std::uint64_t{1} << k;
  return mask;
}

LeadTimeQueue LeadTimeQueue::from_mask(std::uint64_t mask, std::size_t hard_delay) {
  LeadTimeQueue q(hard_delay);
  for (std::size_t k = 0; k < hard_delay; ++k) q.counts_[k] = (mask >> k) & 1u;
  return q;
}

AdvanceResult advance_queue(const LeadTimeQueue& q, bool delivered, std::uint32_t arrivals) {
  const std::size_t d = q.hard_delay();
  if (d == 0) throw std::logic_error("advance_queue on a queue without lifetime classes");
  std::vector<std::uint32_t> counts = q.counts();
  if (delivered) {
    bool removed = false;
    for (auto& c : counts) {
      if (c > 0) {
        --c;
        removed = true;
        break;
      }
    }
    if (!removed) throw std::logic_error("advance_queue: delivery reported for an empty queue");
  }
  AdvanceResult out;
  out.expired = counts[0];
  for (std::size_t k = 0; k + 1 < d; ++k) counts[k] = counts[k + 1];
  counts[d - 1] = arrivals;
  out.queue = LeadTimeQueue(std::move(counts));
  return out;
}

void DeviceParams::validate() const {
  auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (hard_delay < 1) throw std::invalid_argument("hard delay must be >= 1");
  if (arrivals.kind == ArrivalKind::Bernoulli) {
    if (!(arrivals.rate > 0.0 && arrivals.rate <= 1.0))
      throw std::invalid_argument("Bernoulli arrival probability must lie in (0,1], got " +
                                  std::to_string(arrivals.rate));
  } else if (!(arrivals.rate > 0.0)) {
    throw std::invalid_argument("Poisson arrival rate must be positive");
  }
  if (!(success_prob > 0.0 && success_prob <= 1.0))
    throw std::invalid_argument("channel success probability must lie in (0,1], got " +
                                std::to_string(success_prob));
  if (!in(transmit_prob, 0.0, 1.0))
    throw std::invalid_argument("transmit probability must lie in [0,1], got " +
                                std::to_string(transmit_prob));
}

std::uint32_t draw_arrivals(const DeviceParams& params, Rng& rng) {
  if (params.arrivals.kind == ArrivalKind::Bernoulli) return rng.bernoulli(params.arrivals.rate) ? 1u : 0u;
  return rng.poisson(params.arrivals.rate);
}

}  // namespace dcra
