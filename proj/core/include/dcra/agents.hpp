#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcra/core_model.hpp"
#include "dcra/rng.hpp"

namespace dcra {

/// What the environment shows a device at the start of a slot.
struct DeviceView {
  const LeadTimeQueue& queue;
  ChannelObservation observation;
  // Queue of the uncontrollable device, only exposed to model-based policies in
  // two-device runs.
  const LeadTimeQueue* peer_queue = nullptr;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual Action act(const DeviceView& view, Rng& rng) = 0;
  /// Called once the slot is resolved and queues have advanced. `sent` is true iff the
  /// device physically transmitted in the slot just finished.
  virtual void observe(const DeviceView& /*next*/, bool /*sent*/) {}
  /// Set when the agent needs the peer queue in its view.
  virtual bool needs_peer_queue() const { return false; }
};

/// TRANSMIT with probability p_t when there is something to send.
Action aloha_policy(const DeviceParams& params, bool queue_nonempty, Rng& rng);

class AlohaAgent final : public Agent {
 public:
  explicit AlohaAgent(double transmit_prob) : transmit_prob_(transmit_prob) {}
  std::string name() const override { return "aloha"; }
  Action act(const DeviceView& view, Rng& rng) override;

 private:
  double transmit_prob_;
};

/// Stationary deterministic policy ignoring the channel: the two binary policies of the
/// single-slot-lifetime analysis.
class FixedAgent final : public Agent {
 public:
  explicit FixedAgent(Action action) : action_(action) {}
  std::string name() const override {
    return action_ == Action::Transmit ? "always-transmit" : "always-idle";
  }
  Action act(const DeviceView& view, Rng&) override {
    return view.queue.empty() ? Action::Wait : action_;
  }

 private:
  Action action_;
};

// ---------------------------------------------------------------------------
// Rewards

enum class RewardKind : std::uint8_t { TwoLevel, TwoLevelShifted, MultiLevel };

struct RewardSpec {
  RewardKind kind = RewardKind::TwoLevel;
  double shift = 0.0;  // only for TwoLevelShifted, in [0,1]

  static RewardSpec two_level() { return {}; }
  static RewardSpec shifted(double c) { return {RewardKind::TwoLevelShifted, c}; }
  static RewardSpec multi_level() { return {RewardKind::MultiLevel, 0.0}; }
};

/// Reward for the observation `o_next` that followed action `a_prev` taken while the
/// device's urgent flag was `f_prev`. Throws std::logic_error for pairs that cannot occur.
double reward(const RewardSpec& spec, ChannelObservation o_next, Action a_prev, int f_prev);

// ---------------------------------------------------------------------------
// State abstractions

enum class Abstraction : std::uint8_t { Full, Hol, Tiny };

std::string_view to_string(Abstraction a);

/// Number of learner states: 2^D * 4 (full), 4(D+1) (HoL lead time), 8 (urgent flag).
std::size_t state_count(Abstraction kind, std::size_t hard_delay);

/// Encodes the device's own queue and observation; index = payload * 4 + observation.
std::size_t encode_state(Abstraction kind, const LeadTimeQueue& queue, ChannelObservation o);

/// False when the abstraction proves the queue is empty, making TRANSMIT a no-op.
bool transmit_feasible(Abstraction kind, std::size_t state_index);

ChannelObservation state_observation(std::size_t state_index);
/// Human-readable payload ("(1,0)", "2", "1").
std::string state_payload(Abstraction kind, std::size_t hard_delay, std::size_t state_index);

// ---------------------------------------------------------------------------
// Tabular learners

enum class Algorithm : std::uint8_t { QLearning, RLearning };

enum class RewardTiming : std::uint8_t {
  // Q(s_t, a_t) is credited with the reward of o_{t+1}, the outcome of a_t.
  OutcomeAligned,
  // Q(s_t, a_t) is credited with the reward of o_t (the outcome of a_{t-1}).
  Literal,
};

struct LearnerConfig {
  Algorithm algorithm = Algorithm::RLearning;
  Abstraction abstraction = Abstraction::Tiny;
  double alpha = 0.01;
  double beta = 0.01;
  double gamma = 0.9;
  double epsilon_decay = 0.995;
  double epsilon_floor = 0.01;
  RewardSpec reward = RewardSpec::two_level();
  RewardTiming timing = RewardTiming::OutcomeAligned;

  void validate() const;
  /// epsilon_t = max(decay^(t-1), floor) for t >= 1.
  double epsilon(std::uint64_t t) const;
};

struct LearnerState {
  std::vector<std::array<double, kNumActions>> q;
  double rho = 0.0;
  std::uint64_t t = 0;  // decisions taken so far

  LearnerState() = default;
  explicit LearnerState(std::size_t states) : q(states, {0.0, 0.0}) {}

  double value(std::size_t s, Action a) const { return q[s][static_cast<std::size_t>(a)]; }
};

/// First maximal action in [WAIT, TRANSMIT] order, restricted to WAIT when TRANSMIT is
/// infeasible.
Action argmax_action(const LearnerState& ls, std::size_t s, bool transmit_allowed = true);
double max_value(const LearnerState& ls, std::size_t s, bool transmit_allowed = true);

/// epsilon-greedy choice; exploration draws uniformly over the feasible actions.
Action select_action(const LearnerState& ls, std::size_t s, double epsilon, Rng& rng,
                     bool transmit_allowed = true);

void q_update(LearnerState& ls, const LearnerConfig& cfg, std::size_t s, Action a, double r,
              std::size_t s_next, bool next_transmit_allowed = true);

/// Average-reward update: one TD error from pre-update values drives both the Q-table
/// and rho.
void r_update(LearnerState& ls, const LearnerConfig& cfg, std::size_t s, Action a, double r,
              std::size_t s_next, bool next_transmit_allowed = true);

std::vector<Action> greedy_policy(const LearnerState& ls, Abstraction kind);

/// Tabular FSQA / FSRA / HSRA / TSRA device.
class LearnerAgent final : public Agent {
 public:
  LearnerAgent(LearnerConfig cfg, std::size_t hard_delay);

  std::string name() const override;
  Action act(const DeviceView& view, Rng& rng) override;
  void observe(const DeviceView& next, bool sent) override;

  const LearnerConfig& config() const { return cfg_; }
  const LearnerState& state() const { return ls_; }
  LearnerState& state() { return ls_; }
  std::size_t hard_delay() const { return hard_delay_; }

 private:
  struct Pending {
    std::size_t state;
    Action action;
    int urgent;
  };

  LearnerConfig cfg_;
  std::size_t hard_delay_;
  LearnerState ls_;
  std::optional<Pending> pending_;
  // Literal timing: the reward carried by the current observation.
  double carried_reward_ = 0.0;
};

/// Names used on the command line and in CSV output.
std::string learner_label(const LearnerConfig& cfg);

/// CSV policy table: header comment with rho, then
/// abstraction,state,observation,action,q_wait,q_transmit.
void write_policy_csv(std::ostream& out, const LearnerState& ls, Abstraction kind,
                      std::size_t hard_delay, bool with_rho);

}  // namespace dcra
