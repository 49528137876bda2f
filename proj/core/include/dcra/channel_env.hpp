#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dcra/agents.hpp"
#include "dcra/core_model.hpp"
#include "dcra/rng.hpp"

namespace dcra {

/// Device population of one run: the first N1 devices run ALOHA and are not controlled,
/// the remaining N2 are driven by caller-supplied agents.
struct ScenarioConfig {
  std::vector<DeviceParams> aloha;
  std::vector<DeviceParams> controlled;
  std::uint64_t seed = 0;

  std::size_t total() const { return aloha.size() + controlled.size(); }
  const DeviceParams& device(std::size_t i) const {
    return i < aloha.size() ? aloha[i] : controlled[i - aloha.size()];
  }
  void validate() const;
};

struct SlotRecord {
  std::uint64_t t = 0;
  std::vector<Action> intents;
  std::vector<std::uint8_t> sent;
  ApFeedback feedback = ApFeedback::Nothing;
  std::optional<std::size_t> success_id;
  std::vector<ChannelObservation> next_observation;
  // Filled in by run(): per-device queue bookkeeping for the slot.
  std::vector<std::uint32_t> expired;
  std::vector<std::uint32_t> arrivals;
  std::vector<std::uint64_t> queue_before;
  std::vector<std::uint64_t> queue_after;
};

/// Resolves one slot of the collision channel. A device sends iff it intends to and its
/// queue is non-empty; two or more senders always collide; a lone sender succeeds with its
/// own success probability (one draw from `channel`).
SlotRecord resolve_slot(std::span<const Action> intents, std::span<const LeadTimeQueue> queues,
                        std::span<const DeviceParams> params, Rng& channel);
void resolve_slot(std::span<const Action> intents, std::span<const LeadTimeQueue> queues,
                  std::span<const DeviceParams> params, Rng& channel, SlotRecord& out);

/// Running totals plus a ring buffer over the most recent `window_capacity` slots.
class MetricsAccumulator {
 public:
  MetricsAccumulator(std::size_t devices, std::size_t window_capacity, std::size_t series_block = 0);

  void record(std::uint32_t deliveries, std::uint32_t transmissions);

  std::uint64_t slots() const { return slots_; }
  std::uint64_t deliveries() const { return deliveries_; }
  std::uint64_t transmissions() const { return transmissions_; }
  std::size_t devices() const { return devices_; }
  std::size_t window_capacity() const { return capacity_; }

  /// Deliveries per slot over the last `window` slots.
  double timely_throughput(std::size_t window) const;
  /// Physical transmissions per slot over the last `window` slots.
  double power(std::size_t window) const;

  /// Per-block throughput and power (one entry per completed block).
  std::size_t series_block() const { return block_; }
  const std::vector<double>& throughput_series() const { return throughput_series_; }
  const std::vector<double>& power_series() const { return power_series_; }

 private:
  void check_window(std::size_t window) const;

  std::size_t devices_;
  std::size_t capacity_;
  std::size_t block_;
  std::uint64_t slots_ = 0;
  std::uint64_t deliveries_ = 0;
  std::uint64_t transmissions_ = 0;
  std::vector<std::uint8_t> ring_deliveries_;
  std::vector<std::uint32_t> ring_transmissions_;
  std::uint64_t block_deliveries_ = 0;
  std::uint64_t block_transmissions_ = 0;
  std::vector<double> throughput_series_;
  std::vector<double> power_series_;
};

inline constexpr std::size_t kDefaultWindow = 100'000;

struct RunOptions {
  std::uint64_t slots = 0;
  std::size_t window = kDefaultWindow;  // ring-buffer capacity, clamped to slots
  std::size_t series_block = 0;         // 0 disables the time series
  std::ostream* trace = nullptr;        // CSV trace, one row per slot
  std::function<void(const SlotRecord&)> on_slot;
};

struct RunResult {
  MetricsAccumulator metrics;
  std::vector<std::uint64_t> device_deliveries;
  std::vector<std::uint64_t> device_transmissions;
  std::vector<std::uint64_t> device_expired;
};

/**
 * Runs the slot loop for `options.slots` slots.
 *
 * `agents` holds one agent per controlled device, in order. Every device starts with the
 * arrivals of slot 1 in its queue and observation IDLE. Per slot: each device picks an
 * action, the channel is resolved, the metrics are updated, every queue advances with a
 * fresh arrival draw, then controlled agents observe the new state.
 *
 * Random substreams: Arrivals(i) and Policy(i) for device i, Channel(0) for the channel.
 */
RunResult run(const ScenarioConfig& scenario, std::span<Agent* const> agents, const RunOptions& options);

void write_trace_header(std::ostream& out, std::size_t devices);
void write_trace_row(std::ostream& out, const SlotRecord& rec, std::uint64_t deliveries_cum,
                     std::uint64_t transmissions_cum);

}  // namespace dcra
