#include "dcra/channel_env.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dcra {

void ScenarioConfig::validate() const {
  if (total() == 0) throw std::invalid_argument("scenario needs at least one device");
  for (const auto& p : aloha) p.validate();
  for (const auto& p : controlled) p.validate();
}

void resolve_slot(std::span<const Action> intents, std::span<const LeadTimeQueue> queues,
                  std::span<const DeviceParams> params, Rng& channel, SlotRecord& out) {
  const std::size_t n = intents.size();
  if (queues.size() != n || params.size() != n)
    throw std::invalid_argument("resolve_slot: one intent, queue and parameter set per device");

  out.intents.assign(intents.begin(), intents.end());
  out.sent.assign(n, 0);
  out.next_observation.assign(n, ChannelObservation::Idle);
  out.success_id.reset();

  std::size_t senders = 0;
  std::size_t last_sender = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (intents[i] == Action::Transmit && !queues[i].empty()) {
      out.sent[i] = 1;
      ++senders;
      last_sender = i;
    }
  }

  if (senders == 0) {
    out.feedback = ApFeedback::Nothing;
  } else if (senders == 1 && channel.bernoulli(params[last_sender].success_prob)) {
    out.feedback = ApFeedback::Ack;
    out.success_id = last_sender;
  } else {
    out.feedback = ApFeedback::Nack;
  }

  for (std::size_t i = 0; i < n; ++i) {
    switch (out.feedback) {
      case ApFeedback::Nothing: out.next_observation[i] = ChannelObservation::Idle; break;
      case ApFeedback::Ack:
        out.next_observation[i] = out.sent[i] ? ChannelObservation::Successful : ChannelObservation::Busy;
        break;
      case ApFeedback::Nack: out.next_observation[i] = ChannelObservation::Failed; break;
    }
  }
}

SlotRecord resolve_slot(std::span<const Action> intents, std::span<const LeadTimeQueue> queues,
                        std::span<const DeviceParams> params, Rng& channel) {
  SlotRecord rec;
  resolve_slot(intents, queues, params, channel, rec);
  return rec;
}

// ---------------------------------------------------------------------------

MetricsAccumulator::MetricsAccumulator(std::size_t devices, std::size_t window_capacity,
                                       std::size_t series_block)
    : devices_(devices),
      capacity_(window_capacity),
      block_(series_block),
      ring_deliveries_(window_capacity, 0),
      ring_transmissions_(window_capacity, 0) {
  if (window_capacity == 0) throw std::invalid_argument("evaluation window must be positive");
}

void MetricsAccumulator::record(std::uint32_t deliveries, std::uint32_t transmissions) {
  if (deliveries > 1) throw std::logic_error("more than one delivery in a slot");
  if (transmissions > devices_) throw std::logic_error("more transmissions than devices");
  const std::size_t pos = slots_ % capacity_;
  ring_deliveries_[pos] = static_cast<std::uint8_t>(deliveries);
  ring_transmissions_[pos] = transmissions;
  ++slots_;
  deliveries_ += deliveries;
  transmissions_ += transmissions;
  if (block_ > 0) {
    block_deliveries_ += deliveries;
    block_transmissions_ += transmissions;
    if (slots_ % block_ == 0) {
      throughput_series_.push_back(static_cast<double>(block_deliveries_) / static_cast<double>(block_));
      power_series_.push_back(static_cast<double>(block_transmissions_) / static_cast<double>(block_));
      block_deliveries_ = 0;
      block_transmissions_ = 0;
    }
  }
}

void MetricsAccumulator::check_window(std::size_t window) const {
  if (window == 0) throw std::invalid_argument("evaluation window must be positive");
  if (window > slots_)
    throw std::invalid_argument("evaluation window " + std::to_string(window) + " exceeds elapsed slots " +
                                std::to_string(slots_));
  if (window > capacity_)
    throw std::invalid_argument("evaluation window " + std::to_string(window) + " exceeds tracked capacity " +
                                std::to_string(capacity_));
}

double MetricsAccumulator::timely_throughput(std::size_t window) const {
  check_window(window);
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < window; ++k) sum += ring_deliveries_[(slots_ - 1 - k) % capacity_];
  return static_cast<double>(sum) / static_cast<double>(window);
}

double MetricsAccumulator::power(std::size_t window) const {
  check_window(window);
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < window; ++k) sum += ring_transmissions_[(slots_ - 1 - k) % capacity_];
  return static_cast<double>(sum) / static_cast<double>(window);
}

// ---------------------------------------------------------------------------

void write_trace_header(std::ostream& out, std::size_t devices) {
  out << 't';
  for (std::size_t i = 0; i < devices; ++i) out << ",a" << i;
  out << ",feedback,success_id";
  for (std::size_t i = 0; i < devices; ++i) out << ",o" << i;
  out << ",deliveries_cum,transmissions_cum\n";
}

void write_trace_row(std::ostream& out, const SlotRecord& rec, std::uint64_t deliveries_cum,
                     std::uint64_t transmissions_cum) {
  out << rec.t;
  for (auto a : rec.intents) out << ',' << (a == Action::Transmit ? 'T' : 'W');
  out << ',' << to_string(rec.feedback) << ',';
  if (rec.success_id) out << *rec.success_id;
  for (auto o : rec.next_observation) out << ',' << short_name(o);
  out << ',' << deliveries_cum << ',' << transmissions_cum << '\n';
}

RunResult run(const ScenarioConfig& scenario, std::span<Agent* const> agents, const RunOptions& options) {
  scenario.validate();
  if (options.slots == 0) throw std::invalid_argument("run needs at least one slot");
  const std::size_t n1 = scenario.aloha.size();
  const std::size_t n = scenario.total();
  if (agents.size() != scenario.controlled.size())
    throw std::invalid_argument("run: expected one agent per controlled device");
  for (auto* a : agents)
    if (a == nullptr) throw std::invalid_argument("run: null agent");

  const bool peer_view = std::any_of(agents.begin(), agents.end(), [](Agent* a) { return a->needs_peer_queue(); });
  if (peer_view && !(n1 == 1 && n == 2))
    throw std::invalid_argument("model-based policies need exactly one ALOHA and one controlled device");

  std::vector<DeviceParams> params(n);
  for (std::size_t i = 0; i < n; ++i) params[i] = scenario.device(i);

  std::vector<Rng> arrival_rng, policy_rng;
  arrival_rng.reserve(n);
  policy_rng.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    arrival_rng.push_back(Rng::substream(scenario.seed, StreamKind::Arrivals, i));
    policy_rng.push_back(Rng::substream(scenario.seed, StreamKind::Policy, i));
  }
  Rng channel = Rng::substream(scenario.seed, StreamKind::Channel, 0);

  std::vector<LeadTimeQueue> queues;
  queues.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    queues.push_back(advance_queue(LeadTimeQueue(params[i].hard_delay), false, draw_arrivals(params[i], arrival_rng[i])).queue);
  std::vector<ChannelObservation> obs(n, ChannelObservation::Idle);

  const std::size_t capacity = static_cast<std::size_t>(std::min<std::uint64_t>(options.window, options.slots));
  RunResult result{MetricsAccumulator(n, capacity, options.series_block), std::vector<std::uint64_t>(n, 0),
                   std::vector<std::uint64_t>(n, 0), std::vector<std::uint64_t>(n, 0)};

  auto view_of = [&](std::size_t i) {
    return DeviceView{queues[i], obs[i], peer_view ? &queues[0] : nullptr};
  };

  if (options.trace) write_trace_header(*options.trace, n);

  std::vector<Action> intents(n, Action::Wait);
  SlotRecord rec;
  rec.expired.assign(n, 0);
  rec.arrivals.assign(n, 0);
  rec.queue_before.assign(n, 0);
  rec.queue_after.assign(n, 0);

  for (std::uint64_t t = 1; t <= options.slots; ++t) {
    for (std::size_t i = 0; i < n1; ++i) intents[i] = aloha_policy(params[i], !queues[i].empty(), policy_rng[i]);
    for (std::size_t j = 0; j < agents.size(); ++j) intents[n1 + j] = agents[j]->act(view_of(n1 + j), policy_rng[n1 + j]);

    resolve_slot(intents, queues, params, channel, rec);
    rec.t = t;

    std::uint32_t transmissions = 0;
    for (std::size_t i = 0; i < n; ++i) {
      transmissions += rec.sent[i];
      result.device_transmissions[i] += rec.sent[i];
    }
    result.metrics.record(rec.success_id ? 1u : 0u, transmissions);
    if (rec.success_id) ++result.device_deliveries[*rec.success_id];

    for (std::size_t i = 0; i < n; ++i) {
      const bool delivered = rec.success_id && *rec.success_id == i;
      const std::uint32_t arrivals = draw_arrivals(params[i], arrival_rng[i]);
      rec.queue_before[i] = queues[i].total();
      auto next = advance_queue(queues[i], delivered, arrivals);
      queues[i] = std::move(next.queue);
      rec.expired[i] = next.expired;
      rec.arrivals[i] = arrivals;
      rec.queue_after[i] = queues[i].total();
      result.device_expired[i] += next.expired;
    }
    obs.assign(rec.next_observation.begin(), rec.next_observation.end());

    for (std::size_t j = 0; j < agents.size(); ++j) agents[j]->observe(view_of(n1 + j), rec.sent[n1 + j] != 0);

    if (options.trace)
      write_trace_row(*options.trace, rec, result.metrics.deliveries(), result.metrics.transmissions());
    if (options.on_slot) options.on_slot(rec);
  }
  return result;
}

}  // namespace dcra
