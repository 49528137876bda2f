#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dcra/agents.hpp"
#include "dcra/core_model.hpp"
#include "dcra/lp_solver.hpp"

namespace dcra {

/// Parameters of the two-device system: device 1 runs ALOHA, device 2 is controlled.
/// Both devices use Bernoulli arrivals and share the hard delay.
struct TwoDeviceParams {
  double arrival1 = 0.5;   // p_b
  double arrival2 = 0.5;   // p'_b
  double success1 = 1.0;   // p_s
  double success2 = 1.0;   // p'_s
  double transmit1 = 0.5;  // p_t
  std::size_t hard_delay = 1;

  void validate() const;
  DeviceParams aloha_device() const;
  DeviceParams controlled_device() const;
};

struct MdpState {
  std::uint32_t l1 = 0;  // bit k set iff device 1 holds a packet with lead time k+1
  std::uint32_t l2 = 0;
  ChannelObservation o = ChannelObservation::Idle;
};

struct Transition {
  std::size_t next;
  double prob;
};

/**
 * Exact two-device model with full knowledge of both queues.
 *
 * States are enumerated (l1, l2, o) lexicographically with the observation fastest,
 * index = (l1 * 2^D + l2) * 4 + o. The observation is taken from device 2's viewpoint.
 */
class MdpModel {
 public:
  static constexpr std::size_t kMaxHardDelay = 6;

  MdpModel(const TwoDeviceParams& params, std::vector<std::vector<Transition>> rows);

  const TwoDeviceParams& params() const { return params_; }
  std::size_t hard_delay() const { return params_.hard_delay; }
  std::size_t state_count() const { return rows_.size() / kNumActions; }

  std::size_t encode(const MdpState& s) const;
  MdpState decode(std::size_t index) const;

  const std::vector<Transition>& transitions(std::size_t s, Action a) const {
    return rows_[s * kNumActions + static_cast<std::size_t>(a)];
  }
  /// 1 iff the state's observation reports a delivery in the previous slot.
  double reward(std::size_t s, Action) const;

 private:
  TwoDeviceParams params_;
  std::vector<std::vector<Transition>> rows_;
};

MdpModel build_mdp(const TwoDeviceParams& params);

struct BoundResult {
  double value = 0.0;
  // policy[s] = {pi(WAIT|s), pi(TRANSMIT|s)}
  std::vector<std::array<double, kNumActions>> policy;
  lp::LpSolution lp;
  double solve_seconds = 0.0;
  std::size_t hard_delay = 0;
};

/// Average-reward dual program over state-action frequencies x (recurrent) and y
/// (transient) with uniform initial weights. Columns: every x(s,a), then every y(s,a),
/// states in enumeration order, WAIT before TRANSMIT.
lp::LpProgram build_dual_lp(const MdpModel& model);

/// Solves the dual program and extracts the randomized policy from x (or y where the
/// x-mass of a state is zero). Throws std::runtime_error on a non-optimal solve.
BoundResult upper_bound(const MdpModel& model, const lp::SolverOptions& options = {});

enum class BinaryPolicy { AlwaysTransmit, AlwaysIdle };

struct BinaryPolicyResult {
  BinaryPolicy policy;
  double value;
};

/// Closed-form optimum over device-2 transmit probabilities for single-slot lifetimes.
/// Throws std::invalid_argument unless hard_delay == 1.
BinaryPolicyResult theorem1(const TwoDeviceParams& params);

/// Single-slot-lifetime throughput when device 2 transmits with probability p_t2.
double appendix_a_oracle(const TwoDeviceParams& params, double p_t2);

/// For every (l2, o), each l1 votes for its more likely action (ties to WAIT) and the
/// majority wins (ties to WAIT). Indexed like the full-state learner: l2 * 4 + o.
std::vector<Action> majority_policy(const BoundResult& bound);

/// Samples actions from the extracted bound policy; needs to see device 1's queue.
class BoundPolicyAgent final : public Agent {
 public:
  explicit BoundPolicyAgent(const BoundResult& bound);
  std::string name() const override { return "bound-policy"; }
  bool needs_peer_queue() const override { return true; }
  Action act(const DeviceView& view, Rng& rng) override;

 private:
  std::size_t hard_delay_;
  std::vector<std::array<double, kNumActions>> policy_;
};

/// Bound policy in the policy-dump layout; the value columns hold pi(WAIT), pi(TRANSMIT).
void write_bound_policy_csv(std::ostream& out, const BoundResult& bound);

}  // namespace dcra
