#include "dcra/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dcra {

Action aloha_policy(const DeviceParams& params, bool queue_nonempty, Rng& rng) {
  if (!queue_nonempty) return Action::Wait;
  return rng.bernoulli(params.transmit_prob) ? Action::Transmit : Action::Wait;
}

Action AlohaAgent::act(const DeviceView& view, Rng& rng) {
  if (view.queue.empty()) return Action::Wait;
  return rng.bernoulli(transmit_prob_) ? Action::Transmit : Action::Wait;
}

// ---------------------------------------------------------------------------

namespace {

// Rows: observation. Columns: (TRANSMIT,f=1), (TRANSMIT,f=0), (WAIT,f=1), (WAIT,f=0).
constexpr double kImpossible = std::numeric_limits<double>::quiet_NaN();
constexpr std::array<std::array<double, 4>, kNumObservations> kMultiLevel{{
    {kImpossible, kImpossible, -3.0, 2.0},   // IDLE
    {kImpossible, kImpossible, 10.0, 10.0},  // BUSY
    {10.0, 10.0, kImpossible, kImpossible},  // SUCCESSFUL
    {-5.0, -5.0, 2.0, 2.0},                  // FAILED
}};

}  // namespace

double reward(const RewardSpec& spec, ChannelObservation o_next, Action a_prev, int f_prev) {
  if (!observation_possible(o_next, a_prev == Action::Transmit))
    throw std::logic_error("reward requested for an impossible (observation, action) pair: " +
                           std::string(to_string(o_next)) + "/" + std::string(to_string(a_prev)));
  switch (spec.kind) {
    case RewardKind::TwoLevel:
    case RewardKind::TwoLevelShifted: {
      double r = (o_next == ChannelObservation::Busy || o_next == ChannelObservation::Successful) ? 1.0 : 0.0;
      return spec.kind == RewardKind::TwoLevelShifted ? r - spec.shift : r;
    }
    case RewardKind::MultiLevel: {
      std::size_t col = (a_prev == Action::Transmit ? 0 : 2) + (f_prev ? 0 : 1);
      return kMultiLevel[static_cast<std::size_t>(o_next)][col];
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Abstraction a) {
  switch (a) {
    case Abstraction::Full: return "full";
    case Abstraction::Hol: return "hol";
    case Abstraction::Tiny: return "tiny";
  }
  return "?";
}

std::size_t state_count(Abstraction kind, std::size_t hard_delay) {
  switch (kind) {
    case Abstraction::Full:
      if (hard_delay > 24) throw std::invalid_argument("full-state learners support hard delay <= 24");
      return (std::size_t{1} << hard_delay) * kNumObservations;
    case Abstraction::Hol: return (hard_delay + 1) * kNumObservations;
    case Abstraction::Tiny: return 2 * kNumObservations;
  }
  return 0;
}

std::size_t encode_state(Abstraction kind, const LeadTimeQueue& queue, ChannelObservation o) {
  std::size_t payload = 0;
  switch (kind) {
    case Abstraction::Full: payload = static_cast<std::size_t>(queue.occupancy_mask()); break;
    case Abstraction::Hol: payload = queue.hol_lead_time(); break;
    case Abstraction::Tiny: payload = static_cast<std::size_t>(queue.urgent_flag()); break;
  }
  return payload * kNumObservations + static_cast<std::size_t>(o);
}

bool transmit_feasible(Abstraction kind, std::size_t state_index) {
  if (kind == Abstraction::Tiny) return true;
  return state_index / kNumObservations != 0;
}

ChannelObservation state_observation(std::size_t state_index) {
  return static_cast<ChannelObservation>(state_index % kNumObservations);
}

std::string state_payload(Abstraction kind, std::size_t hard_delay, std::size_t state_index) {
  std::size_t payload = state_index / kNumObservations;
  if (kind != Abstraction::Full) return std::to_string(payload);
  std::string out = "(";
  for (std::size_t k = 0; k < hard_delay; ++k) {
    if (k) out += ',';
    out += ((payload >> k) & 1u) ? '1' : '0';
  }
  return out + ")";
}

// ---------------------------------------------------------------------------

void LearnerConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0,1]");
  if (algorithm == Algorithm::RLearning && !(beta > 0.0 && beta <= 1.0))
    throw std::invalid_argument("beta must lie in (0,1]");
  if (algorithm == Algorithm::QLearning && !(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("gamma must lie in (0,1)");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw std::invalid_argument("epsilon decay must lie in (0,1]");
  if (!(epsilon_floor >= 0.0 && epsilon_floor <= 1.0)) throw std::invalid_argument("epsilon floor must lie in [0,1]");
  if (reward.kind == RewardKind::TwoLevelShifted && !(reward.shift >= 0.0 && reward.shift <= 1.0))
    throw std::invalid_argument("reward shift must lie in [0,1]");
}

double LearnerConfig::epsilon(std::uint64_t t) const {
  if (t == 0) throw std::invalid_argument("slot index starts at 1");
  return std::max(std::pow(epsilon_decay, static_cast<double>(t - 1)), epsilon_floor);
}

Action argmax_action(const LearnerState& ls, std::size_t s, bool transmit_allowed) {
  const auto& row = ls.q[s];
  return transmit_allowed && row[1] > row[0] ? Action::Transmit : Action::Wait;
}

double max_value(const LearnerState& ls, std::size_t s, bool transmit_allowed) {
  const auto& row = ls.q[s];
  return transmit_allowed ? std::max(row[0], row[1]) : row[0];
}

Action select_action(const LearnerState& ls, std::size_t s, double epsilon, Rng& rng,
                     bool transmit_allowed) {
  if (epsilon > 0.0 && rng.bernoulli(epsilon)) {
    if (!transmit_allowed) return Action::Wait;
    return rng.bernoulli(0.5) ? Action::Transmit : Action::Wait;
  }
  return argmax_action(ls, s, transmit_allowed);
}

void q_update(LearnerState& ls, const LearnerConfig& cfg, std::size_t s, Action a, double r,
              std::size_t s_next, bool next_transmit_allowed) {
  double& q = ls.q[s][static_cast<std::size_t>(a)];
  q += cfg.alpha * (r + cfg.gamma * max_value(ls, s_next, next_transmit_allowed) - q);
}

void r_update(LearnerState& ls, const LearnerConfig& cfg, std::size_t s, Action a, double r,
              std::size_t s_next, bool next_transmit_allowed) {
  double& q = ls.q[s][static_cast<std::size_t>(a)];
  const double delta = r + max_value(ls, s_next, next_transmit_allowed) - q - ls.rho;
  q += cfg.alpha * delta;
  ls.rho += cfg.beta * delta;
}

std::vector<Action> greedy_policy(const LearnerState& ls, Abstraction kind) {
  std::vector<Action> out(ls.q.size());
  for (std::size_t s = 0; s < ls.q.size(); ++s) out[s] = argmax_action(ls, s, transmit_feasible(kind, s));
  return out;
}

// ---------------------------------------------------------------------------

LearnerAgent::LearnerAgent(LearnerConfig cfg, std::size_t hard_delay)
    : cfg_(cfg), hard_delay_(hard_delay), ls_(state_count(cfg.abstraction, hard_delay)) {
  cfg_.validate();
}

std::string LearnerAgent::name() const { return learner_label(cfg_); }

Action LearnerAgent::act(const DeviceView& view, Rng& rng) {
  const std::size_t s = encode_state(cfg_.abstraction, view.queue, view.observation);
  ++ls_.t;
  const Action a =
      select_action(ls_, s, cfg_.epsilon(ls_.t), rng, transmit_feasible(cfg_.abstraction, s));
  pending_ = Pending{s, a, view.queue.urgent_flag()};
  return a;
}

void LearnerAgent::observe(const DeviceView& next, bool sent) {
  if (!pending_) return;
  const std::size_t s_next = encode_state(cfg_.abstraction, next.queue, next.observation);
  const bool next_tx = transmit_feasible(cfg_.abstraction, s_next);
  const double outcome =
      reward(cfg_.reward, next.observation, sent ? Action::Transmit : Action::Wait, pending_->urgent);
  double r = outcome;
  if (cfg_.timing == RewardTiming::Literal) {
    r = carried_reward_;
    carried_reward_ = outcome;
  }
  if (cfg_.algorithm == Algorithm::QLearning)
    q_update(ls_, cfg_, pending_->state, pending_->action, r, s_next, next_tx);
  else
    r_update(ls_, cfg_, pending_->state, pending_->action, r, s_next, next_tx);
  pending_.reset();
}

std::string learner_label(const LearnerConfig& cfg) {
  if (cfg.algorithm == Algorithm::QLearning) {
    switch (cfg.abstraction) {
      case Abstraction::Full: return "fsqa";
      case Abstraction::Hol: return "hsqa";
      case Abstraction::Tiny: return "tsqa";
    }
  }
  switch (cfg.abstraction) {
    case Abstraction::Full: return "fsra";
    case Abstraction::Hol: return "hsra";
    case Abstraction::Tiny: return "tsra";
  }
  return "learner";
}

void write_policy_csv(std::ostream& out, const LearnerState& ls, Abstraction kind,
                      std::size_t hard_delay, bool with_rho) {
  const auto old_precision = out.precision(17);
  if (with_rho) out << "# rho=" << ls.rho << '\n';
  out << "abstraction,state,observation,action,q_wait,q_transmit\n";
  const auto policy = greedy_policy(ls, kind);
  for (std::size_t s = 0; s < ls.q.size(); ++s) {
    out << to_string(kind) << ",\"" << state_payload(kind, hard_delay, s) << "\","
        << to_string(state_observation(s)) << ',' << to_string(policy[s]) << ',' << ls.q[s][0] << ','
        << ls.q[s][1] << '\n';
  }
  out.precision(old_precision);
}

}  // namespace dcra
