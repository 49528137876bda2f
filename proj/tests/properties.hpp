#pragma once

// Cross-cutting invariants shared by the unit property test and the acceptance binary.
// Each check returns an empty string on success, otherwise a description of the failure.

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dcra/agents.hpp"
#include "dcra/channel_env.hpp"
#include "dcra/experiment.hpp"
#include "dcra/mdp_bound.hpp"

namespace props {

inline dcra::SystemParams random_system(std::mt19937_64& gen, std::size_t d, std::size_t n1, std::size_t n2) {
  std::uniform_real_distribution<double> u(0.1, 1.0), t(0.05, 0.95);
  dcra::SystemParams p;
  p.p_b = u(gen);
  p.p_b2 = u(gen);
  p.p_s = u(gen);
  p.p_s2 = u(gen);
  p.p_t = t(gen);
  p.hard_delay = d;
  p.n1 = n1;
  p.n2 = n2;
  return p;
}

inline std::string traced_run(const dcra::SystemParams& params, const char* controller, std::uint64_t seed,
                              std::uint64_t slots) {
  auto spec = dcra::ControllerSpec::parse(controller);
  auto agents = dcra::make_agents(spec, params);
  std::ostringstream out;
  dcra::RunOptions opt;
  opt.slots = slots;
  opt.window = slots;
  opt.trace = &out;
  auto res = dcra::run(dcra::make_scenario(params, seed), agents.agents, opt);
  out << "throughput=" << res.metrics.timely_throughput(slots) << '\n';
  return out.str();
}

inline std::string check_determinism() {
  std::mt19937_64 gen(1);
  for (const char* c : {"tsra", "fsra", "hsqa-multi", "aloha"}) {
    auto p = random_system(gen, 3, 1, 2);
    if (traced_run(p, c, 99, 3000) != traced_run(p, c, 99, 3000))
      return std::string("trace differs between identical runs of ") + c;
  }
  dcra::ExperimentSpec s;
  s.groups = 4;
  s.hard_delays = {1, 2};
  s.slots = 5000;
  s.controllers = {dcra::ControllerSpec::parse("tsra"), dcra::ControllerSpec::parse("fsqa")};
  std::ostringstream a, b;
  s.threads = 1;
  dcra::write_sweep_csv(a, dcra::run_experiment(s), false);
  s.threads = 3;
  dcra::write_sweep_csv(b, dcra::run_experiment(s), false);
  if (a.str() != b.str()) return "sweep CSV depends on the thread count";
  return {};
}

// Replays runs and checks every per-slot record against the channel rules and packet
// bookkeeping.
inline std::string check_slot_invariants() {
  using dcra::ChannelObservation;
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t d = 1 + trial % 4;
    auto p = random_system(gen, d, 1 + trial % 2, 1 + trial % 3);
    if (trial % 3 == 0) p.arrivals = dcra::ArrivalKind::Poisson;
    auto agents = dcra::make_agents(dcra::ControllerSpec::parse(trial % 2 ? "tsra" : "fsqa"), p);
    const std::size_t n = p.n1 + p.n2;
    std::vector<std::uint64_t> arrived(n, 0), delivered(n, 0), expired(n, 0), last(n, 0);
    std::string err;
    bool first = true;
    dcra::RunOptions opt;
    opt.slots = 4000;
    opt.window = 4000;
    opt.on_slot = [&](const dcra::SlotRecord& r) {
      std::size_t senders = 0;
      for (std::size_t i = 0; i < n; ++i) {
        senders += r.sent[i];
        if (r.sent[i] && r.intents[i] != dcra::Action::Transmit) err = "sent without intent";
        if (r.sent[i] && r.queue_before[i] == 0) err = "sent from an empty queue";
        if (!dcra::observation_possible(r.next_observation[i], r.sent[i] != 0))
          err = "impossible observation at slot " + std::to_string(r.t);
        if (first) arrived[i] += r.queue_before[i];
        arrived[i] += r.arrivals[i];
        expired[i] += r.expired[i];
        last[i] = r.queue_after[i];
      }
      if (senders >= 2 && r.success_id) err = "success despite a collision";
      if (r.success_id) ++delivered[*r.success_id];
      first = false;
    };
    dcra::run(dcra::make_scenario(p, 1000 + trial), agents.agents, opt);
    if (!err.empty()) return err;
    for (std::size_t i = 0; i < n; ++i)
      if (arrived[i] != delivered[i] + expired[i] + last[i])
        return "packet conservation fails for device " + std::to_string(i);
  }
  return {};
}

inline std::string check_epsilon_schedule() {
  dcra::LearnerConfig cfg;
  if (cfg.epsilon(1) != 1.0) return "epsilon_1 != 1";
  double prev = 1.0;
  for (std::uint64_t t = 2; t <= 5000; ++t) {
    const double e = cfg.epsilon(t);
    const double expect = std::max(std::pow(0.995, double(t - 1)), 0.01);
    if (std::abs(e - expect) > 1e-12) return "epsilon deviates from max(0.995^(t-1), 0.01) at t=" + std::to_string(t);
    if (e > prev) return "epsilon increases at t=" + std::to_string(t);
    prev = e;
  }
  if (cfg.epsilon(1'000'000) != 0.01) return "epsilon floor not reached";
  return {};
}

inline std::string check_lp_residuals() {
  std::mt19937_64 gen(3);
  for (std::size_t d = 1; d <= 3; ++d)
    for (int i = 0; i < 3; ++i) {
      auto p = random_system(gen, d, 1, 1);
      auto b = dcra::upper_bound(dcra::build_mdp(p.two_device_params()));
      if (b.lp.residual > 1e-9) return "LP residual " + std::to_string(b.lp.residual) + " at D=" + std::to_string(d);
      for (double v : b.lp.x)
        if (v < -1e-9) return "negative LP variable at D=" + std::to_string(d);
      for (const auto& pi : b.policy)
        if (pi[0] < -1e-12 || pi[1] < -1e-12 || std::abs(pi[0] + pi[1] - 1.0) > 1e-9)
          return "extracted policy is not a distribution";
      if (b.value < -1e-9 || b.value > 1.0 + 1e-9) return "bound outside [0,1]";
    }
  return {};
}

inline std::string check_single_slot_affine() {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    auto s = random_system(gen, 1, 1, 1).two_device_params();
    const double r0 = dcra::appendix_a_oracle(s, 0.0), r1 = dcra::appendix_a_oracle(s, 1.0);
    for (int k = 0; k < 5; ++k) {
      const double q = u(gen);
      if (std::abs(dcra::appendix_a_oracle(s, q) - ((1 - q) * r0 + q * r1)) > 1e-12)
        return "single-slot throughput is not affine in the transmit probability";
    }
    if (std::abs(dcra::theorem1(s).value - std::max(r0, r1)) > 1e-12) return "theorem1 is not the better endpoint";
  }
  return {};
}

}  // namespace props
