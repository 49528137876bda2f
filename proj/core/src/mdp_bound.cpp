#include "dcra/mdp_bound.hpp"

#include <chrono>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

namespace dcra {

void TwoDeviceParams::validate() const {
  aloha_device().validate();
  controlled_device().validate();
}

DeviceParams TwoDeviceParams::aloha_device() const {
  return DeviceParams{ArrivalModel::bernoulli(arrival1), hard_delay, success1, transmit1};
}

DeviceParams TwoDeviceParams::controlled_device() const {
  return DeviceParams{ArrivalModel::bernoulli(arrival2), hard_delay, success2, 1.0};
}

MdpModel::MdpModel(const TwoDeviceParams& params, std::vector<std::vector<Transition>> rows)
    : params_(params), rows_(std::move(rows)) {}

std::size_t MdpModel::encode(const MdpState& s) const {
  const std::size_t side = std::size_t{1} << hard_delay();
  return ((static_cast<std::size_t>(s.l1) * side) + s.l2) * kNumObservations + static_cast<std::size_t>(s.o);
}

MdpState MdpModel::decode(std::size_t index) const {
  const std::size_t side = std::size_t{1} << hard_delay();
  MdpState s;
  s.o = static_cast<ChannelObservation>(index % kNumObservations);
  index /= kNumObservations;
  s.l2 = static_cast<std::uint32_t>(index % side);
  s.l1 = static_cast<std::uint32_t>(index / side);
  return s;
}

double MdpModel::reward(std::size_t s, Action) const {
  const auto o = static_cast<ChannelObservation>(s % kNumObservations);
  return (o == ChannelObservation::Busy || o == ChannelObservation::Successful) ? 1.0 : 0.0;
}

MdpModel build_mdp(const TwoDeviceParams& params) {
  params.validate();
  const std::size_t d = params.hard_delay;
  if (d > MdpModel::kMaxHardDelay)
    throw std::invalid_argument("exact model supports hard delay <= " + std::to_string(MdpModel::kMaxHardDelay));
  const std::size_t side = std::size_t{1} << d;
  const std::size_t states = side * side * kNumObservations;

  MdpModel shell(params, {});
  std::vector<std::vector<Transition>> rows(states * kNumActions);

  struct Branch {
    double prob;
    bool delivered1;
    bool delivered2;
    ChannelObservation o;
  };

  for (std::size_t l1 = 0; l1 < side; ++l1) {
    for (std::size_t l2 = 0; l2 < side; ++l2) {
      const auto q1 = LeadTimeQueue::from_mask(l1, d);
      const auto q2 = LeadTimeQueue::from_mask(l2, d);
      for (std::size_t a = 0; a < kNumActions; ++a) {
        // Channel outcome lattice.
        std::vector<Branch> branches;
        const bool sends2 = a == static_cast<std::size_t>(Action::Transmit) && l2 != 0;
        for (int sends1 = 0; sends1 <= 1; ++sends1) {
          double p1 = l1 != 0 ? (sends1 ? params.transmit1 : 1.0 - params.transmit1) : (sends1 ? 0.0 : 1.0);
          if (p1 == 0.0) continue;
          if (sends1 && sends2) {
            branches.push_back({p1, false, false, ChannelObservation::Failed});
          } else if (sends1) {
            branches.push_back({p1 * params.success1, true, false, ChannelObservation::Busy});
            branches.push_back({p1 * (1.0 - params.success1), false, false, ChannelObservation::Failed});
          } else if (sends2) {
            branches.push_back({p1 * params.success2, false, true, ChannelObservation::Successful});
            branches.push_back({p1 * (1.0 - params.success2), false, false, ChannelObservation::Failed});
          } else {
            branches.push_back({p1, false, false, ChannelObservation::Idle});
          }
        }

        std::map<std::size_t, double> next;
        for (const auto& br : branches) {
          if (br.prob == 0.0) continue;
          for (int arr1 = 0; arr1 <= 1; ++arr1) {
            const double pa1 = arr1 ? params.arrival1 : 1.0 - params.arrival1;
            if (pa1 == 0.0) continue;
            const auto n1 = advance_queue(q1, br.delivered1, static_cast<std::uint32_t>(arr1)).queue;
            for (int arr2 = 0; arr2 <= 1; ++arr2) {
              const double pa2 = arr2 ? params.arrival2 : 1.0 - params.arrival2;
              if (pa2 == 0.0) continue;
              const auto n2 = advance_queue(q2, br.delivered2, static_cast<std::uint32_t>(arr2)).queue;
              MdpState ns{static_cast<std::uint32_t>(n1.occupancy_mask()),
                          static_cast<std::uint32_t>(n2.occupancy_mask()), br.o};
              next[shell.encode(ns)] += br.prob * pa1 * pa2;
            }
          }
        }

        std::vector<Transition> row;
        row.reserve(next.size());
        for (const auto& [idx, p] : next) row.push_back({idx, p});
        for (std::size_t o = 0; o < kNumObservations; ++o) {
          const std::size_t s = ((l1 * side) + l2) * kNumObservations + o;
          rows[s * kNumActions + a] = row;
        }
      }
    }
  }
  return MdpModel(params, std::move(rows));
}

lp::LpProgram build_dual_lp(const MdpModel& model) {
  const std::size_t ns = model.state_count();
  const double alpha = 1.0 / static_cast<double>(ns);
  lp::LpProgram program(2 * ns);
  for (std::size_t s = 0; s < ns; ++s) program.set_rhs(ns + s, alpha);

  // x(s,a): sum_a x(s',a) - sum P x = 0 in the first block, plus its share of the
  // second block's left-hand side.
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t a = 0; a < kNumActions; ++a) {
      std::vector<lp::Entry> col{{s, 1.0}, {ns + s, 1.0}};
      for (const auto& tr : model.transitions(s, static_cast<Action>(a))) col.push_back({tr.next, -tr.prob});
      program.add_column(model.reward(s, static_cast<Action>(a)), std::move(col));
    }
  }
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t a = 0; a < kNumActions; ++a) {
      std::vector<lp::Entry> col{{ns + s, 1.0}};
      for (const auto& tr : model.transitions(s, static_cast<Action>(a))) col.push_back({ns + tr.next, -tr.prob});
      program.add_column(0.0, std::move(col));
    }
  }
  return program;
}

BoundResult upper_bound(const MdpModel& model, const lp::SolverOptions& options) {
  const auto program = build_dual_lp(model);
  const auto start = std::chrono::steady_clock::now();
  BoundResult out;
  out.lp = lp::solve(program, options);
  out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.hard_delay = model.hard_delay();
  if (out.lp.status != lp::Status::Optimal)
    throw std::runtime_error("upper bound: LP solve ended with status " + std::string(lp::to_string(out.lp.status)));
  out.value = out.lp.objective;

  const std::size_t ns = model.state_count();
  const std::size_t y_offset = ns * kNumActions;
  out.policy.assign(ns, {0.0, 0.0});
  for (std::size_t s = 0; s < ns; ++s) {
    const double xw = out.lp.x[s * 2], xt = out.lp.x[s * 2 + 1];
    const double yw = out.lp.x[y_offset + s * 2], yt = out.lp.x[y_offset + s * 2 + 1];
    if (xw + xt > 1e-12) {
      out.policy[s] = {xw / (xw + xt), xt / (xw + xt)};
    } else if (yw + yt > 0.0) {
      out.policy[s] = {yw / (yw + yt), yt / (yw + yt)};
    } else {
      // Unreachable given the alpha constraint; keep the distribution proper anyway.
      out.policy[s] = {1.0, 0.0};
    }
  }
  return out;
}

BinaryPolicyResult theorem1(const TwoDeviceParams& p) {
  if (p.hard_delay != 1) throw std::invalid_argument("theorem1 applies to hard delay 1 only");
  p.validate();
  const double load1 = p.arrival1 * p.transmit1;
  if (load1 < p.success2 / (p.success1 + p.success2))
    return {BinaryPolicy::AlwaysTransmit,
            (p.success2 - (p.success1 + p.success2) * load1) * p.arrival2 + p.success1 * load1};
  return {BinaryPolicy::AlwaysIdle, p.success1 * load1};
}

double appendix_a_oracle(const TwoDeviceParams& p, double p_t2) {
  if (p.hard_delay != 1) throw std::invalid_argument("appendix_a_oracle applies to hard delay 1 only");
  if (!(p_t2 >= 0.0 && p_t2 <= 1.0)) throw std::invalid_argument("device-2 transmit probability must lie in [0,1]");
  return p.success1 * p.transmit1 * p.arrival1 * (1.0 - p_t2 * p.arrival2) +
         p.success2 * p_t2 * p.arrival2 * (1.0 - p.transmit1 * p.arrival1);
}

std::vector<Action> majority_policy(const BoundResult& bound) {
  const std::size_t d = bound.hard_delay;
  const std::size_t side = std::size_t{1} << d;
  std::vector<Action> out(side * kNumObservations, Action::Wait);
  for (std::size_t l2 = 0; l2 < side; ++l2) {
    for (std::size_t o = 0; o < kNumObservations; ++o) {
      std::size_t transmit_votes = 0;
      for (std::size_t l1 = 0; l1 < side; ++l1) {
        const auto& pi = bound.policy[((l1 * side) + l2) * kNumObservations + o];
        if (pi[1] > 0.5) ++transmit_votes;
      }
      out[l2 * kNumObservations + o] = 2 * transmit_votes > side ? Action::Transmit : Action::Wait;
    }
  }
  return out;
}

BoundPolicyAgent::BoundPolicyAgent(const BoundResult& bound) : hard_delay_(bound.hard_delay), policy_(bound.policy) {}

Action BoundPolicyAgent::act(const DeviceView& view, Rng& rng) {
  if (view.peer_queue == nullptr) throw std::logic_error("bound policy needs device 1's queue");
  const std::size_t side = std::size_t{1} << hard_delay_;
  const std::size_t s = ((view.peer_queue->occupancy_mask() * side) + view.queue.occupancy_mask()) * kNumObservations +
                        static_cast<std::size_t>(view.observation);
  const double p_transmit = policy_.at(s)[1];
  if (p_transmit >= 1.0) return Action::Transmit;
  if (p_transmit <= 0.0) return Action::Wait;
  return rng.bernoulli(p_transmit) ? Action::Transmit : Action::Wait;
}

void write_bound_policy_csv(std::ostream& out, const BoundResult& bound) {
  const std::size_t d = bound.hard_delay;
  const std::size_t side = std::size_t{1} << d;
  auto tuple = [d](std::size_t mask) {
    std::string s = "(";
    for (std::size_t k = 0; k < d; ++k) {
      if (k) s += ',';
      s += ((mask >> k) & 1u) ? '1' : '0';
    }
    return s + ")";
  };
  const auto old = out.precision(17);
  out << "# R*=" << bound.value << '\n';
  out << "abstraction,state,observation,action,q_wait,q_transmit\n";
  for (std::size_t s = 0; s < bound.policy.size(); ++s) {
    const std::size_t o = s % kNumObservations;
    const std::size_t l2 = (s / kNumObservations) % side;
    const std::size_t l1 = s / kNumObservations / side;
    const auto& pi = bound.policy[s];
    out << "bound,\"" << tuple(l1) << ';' << tuple(l2) << "\"," << to_string(static_cast<ChannelObservation>(o)) << ','
        << to_string(pi[1] > pi[0] ? Action::Transmit : Action::Wait) << ',' << pi[0] << ',' << pi[1] << '\n';
  }
  out.precision(old);
}

}  // namespace dcra
