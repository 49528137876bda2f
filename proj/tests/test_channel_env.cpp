#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "dcra/agents.hpp"
#include "dcra/channel_env.hpp"

using namespace dcra;
using O = ChannelObservation;

namespace {

DeviceParams device(double arrival, double success, double transmit, std::size_t d) {
  DeviceParams p;
  p.arrivals = ArrivalModel::bernoulli(arrival);
  p.success_prob = success;
  p.transmit_prob = transmit;
  p.hard_delay = d;
  return p;
}

LeadTimeQueue full(std::size_t d) {
  LeadTimeQueue q(d);
  return advance_queue(q, false, 1).queue;
}

}  // namespace

TEST_CASE("collision: both send, both see FAILED") {
  std::array<Action, 2> intents{Action::Transmit, Action::Transmit};
  std::array<LeadTimeQueue, 2> queues{full(1), full(1)};
  std::array<DeviceParams, 2> params{device(1, 1, 1, 1), device(1, 1, 1, 1)};
  Rng rng(1);
  auto rec = resolve_slot(intents, queues, params, rng);
  CHECK(rec.feedback == ApFeedback::Nack);
  CHECK_FALSE(rec.success_id.has_value());
  CHECK(rec.next_observation[0] == O::Failed);
  CHECK(rec.next_observation[1] == O::Failed);
}

TEST_CASE("lone sender succeeds: sender SUCCESSFUL, other BUSY") {
  std::array<Action, 2> intents{Action::Wait, Action::Transmit};
  std::array<LeadTimeQueue, 2> queues{full(2), full(2)};
  std::array<DeviceParams, 2> params{device(1, 1, 1, 2), device(1, 1, 1, 2)};
  Rng rng(1);
  auto rec = resolve_slot(intents, queues, params, rng);
  CHECK(rec.feedback == ApFeedback::Ack);
  CHECK(rec.success_id == 1u);
  CHECK(rec.next_observation[0] == O::Busy);
  CHECK(rec.next_observation[1] == O::Successful);
}

TEST_CASE("nobody sends: all IDLE") {
  std::array<Action, 2> intents{Action::Wait, Action::Transmit};
  std::array<LeadTimeQueue, 2> queues{full(2), LeadTimeQueue(2)};
  std::array<DeviceParams, 2> params{device(1, 1, 1, 2), device(1, 1, 1, 2)};
  Rng rng(1);
  auto rec = resolve_slot(intents, queues, params, rng);
  CHECK(rec.feedback == ApFeedback::Nothing);
  CHECK(rec.sent[1] == 0);  // intent without a packet is not a transmission
  CHECK(rec.next_observation[0] == O::Idle);
  CHECK(rec.next_observation[1] == O::Idle);
}

TEST_CASE("channel error: lone sender fails, everyone sees FAILED") {
  std::array<Action, 2> intents{Action::Transmit, Action::Wait};
  std::array<LeadTimeQueue, 2> queues{full(1), full(1)};
  std::array<DeviceParams, 2> params{device(1, 0.5, 1, 1), device(1, 1, 1, 1)};
  Rng rng(3);
  int fails = 0;
  for (int i = 0; i < 2000; ++i) {
    auto rec = resolve_slot(intents, queues, params, rng);
    if (rec.feedback == ApFeedback::Nack) {
      ++fails;
      CHECK(rec.next_observation[0] == O::Failed);
      CHECK(rec.next_observation[1] == O::Failed);
    }
  }
  CHECK(std::abs(fails / 2000.0 - 0.5) < 0.05);
}

TEST_CASE("resolve_slot rejects mismatched spans") {
  std::array<Action, 1> intents{Action::Wait};
  std::array<LeadTimeQueue, 2> queues{full(1), full(1)};
  std::array<DeviceParams, 2> params{device(1, 1, 1, 1), device(1, 1, 1, 1)};
  Rng rng(1);
  CHECK_THROWS_AS(resolve_slot(intents, queues, params, rng), std::invalid_argument);
}

TEST_CASE("run: saturated lone ALOHA device delivers every slot") {
  ScenarioConfig sc;
  sc.aloha = {device(1, 1, 1, 3)};
  sc.seed = 9;
  RunOptions opt;
  opt.slots = 10'000;
  opt.window = 10'000;
  auto res = run(sc, {}, opt);
  CHECK(res.metrics.timely_throughput(10'000) == 1.0);
  CHECK(res.metrics.power(10'000) == 1.0);
}

TEST_CASE("run: two saturated ALOHA devices always collide") {
  ScenarioConfig sc;
  sc.aloha = {device(1, 1, 1, 2), device(1, 1, 1, 2)};
  RunOptions opt;
  opt.slots = 5'000;
  opt.window = 5'000;
  auto res = run(sc, {}, opt);
  CHECK(res.metrics.timely_throughput(5'000) == 0.0);
  CHECK(res.metrics.power(5'000) == 2.0);
}

TEST_CASE("run: ALOHA vs always-transmit at single-slot lifetimes") {
  ScenarioConfig sc;
  sc.aloha = {device(0.5, 0.7, 0.4, 1)};
  sc.controlled = {device(0.4, 0.6, 1.0, 1)};
  sc.seed = 2024;
  FixedAgent agent(Action::Transmit);
  std::array<Agent*, 1> agents{&agent};
  RunOptions opt;
  opt.slots = 1'000'000;
  opt.window = 1'000'000;
  auto res = run(sc, agents, opt);
  CHECK(std::abs(res.metrics.timely_throughput(1'000'000) - 0.276) < 0.005);
}

TEST_CASE("run: per-device bookkeeping conserves packets") {
  ScenarioConfig sc;
  sc.aloha = {device(0.6, 0.8, 0.5, 3), device(0.3, 0.9, 0.7, 3)};
  sc.seed = 5;
  std::vector<std::uint64_t> arrived(2, 0);
  std::vector<std::uint64_t> last_after(2, 0);
  RunOptions opt;
  opt.slots = 20'000;
  opt.window = 1000;
  bool first = true;
  opt.on_slot = [&](const SlotRecord& r) {
    for (std::size_t i = 0; i < 2; ++i) {
      if (first) arrived[i] += r.queue_before[i];
      arrived[i] += r.arrivals[i];
      last_after[i] = r.queue_after[i];
    }
    first = false;
  };
  auto res = run(sc, {}, opt);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(arrived[i] == res.device_deliveries[i] + res.device_expired[i] + last_after[i]);
}

TEST_CASE("metrics windows") {
  MetricsAccumulator m(10, 100);
  for (int t = 0; t < 100; ++t) m.record(0, 10);
  CHECK(m.timely_throughput(100) == 0.0);
  CHECK(m.power(100) == 10.0);
  CHECK(m.power(50) == 10.0);
  CHECK_THROWS_AS(m.timely_throughput(0), std::invalid_argument);
  CHECK_THROWS_AS(m.timely_throughput(101), std::invalid_argument);
}

TEST_CASE("metrics ring buffer keeps only the most recent slots") {
  MetricsAccumulator m(1, 4, 2);
  for (int t = 0; t < 6; ++t) m.record(t < 2 ? 1 : 0, 1);
  CHECK(m.timely_throughput(4) == 0.0);
  CHECK(m.throughput_series() == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("trace output has one row per slot") {
  ScenarioConfig sc;
  sc.aloha = {device(1, 1, 1, 1)};
  std::ostringstream out;
  RunOptions opt;
  opt.slots = 5;
  opt.window = 5;
  opt.trace = &out;
  run(sc, {}, opt);
  std::size_t lines = 0;
  for (char c : out.str()) lines += c == '\n';
  CHECK(lines == 6);
}
