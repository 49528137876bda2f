#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "dcra/agents.hpp"

using namespace dcra;
using O = ChannelObservation;
using A = Action;

TEST_CASE("multi-level reward table") {
  const auto m = RewardSpec::multi_level();
  CHECK(reward(m, O::Idle, A::Wait, 1) == -3.0);
  CHECK(reward(m, O::Idle, A::Wait, 0) == 2.0);
  CHECK(reward(m, O::Busy, A::Wait, 1) == 10.0);
  CHECK(reward(m, O::Busy, A::Wait, 0) == 10.0);
  CHECK(reward(m, O::Successful, A::Transmit, 1) == 10.0);
  CHECK(reward(m, O::Successful, A::Transmit, 0) == 10.0);
  CHECK(reward(m, O::Failed, A::Transmit, 1) == -5.0);
  CHECK(reward(m, O::Failed, A::Transmit, 0) == -5.0);
  CHECK(reward(m, O::Failed, A::Wait, 1) == 2.0);
  CHECK(reward(m, O::Failed, A::Wait, 0) == 2.0);
}

TEST_CASE("impossible reward pairs are logic errors") {
  for (auto spec : {RewardSpec::two_level(), RewardSpec::multi_level()}) {
    CHECK_THROWS_AS(reward(spec, O::Idle, A::Transmit, 0), std::logic_error);
    CHECK_THROWS_AS(reward(spec, O::Busy, A::Transmit, 1), std::logic_error);
    CHECK_THROWS_AS(reward(spec, O::Successful, A::Wait, 0), std::logic_error);
  }
}

TEST_CASE("two-level and shifted rewards") {
  const auto t = RewardSpec::two_level();
  CHECK(reward(t, O::Busy, A::Wait, 0) == 1.0);
  CHECK(reward(t, O::Busy, A::Wait, 1) == 1.0);
  CHECK(reward(t, O::Successful, A::Transmit, 0) == 1.0);
  CHECK(reward(t, O::Idle, A::Wait, 1) == 0.0);
  CHECK(reward(t, O::Failed, A::Transmit, 1) == 0.0);
  const auto s = RewardSpec::shifted(0.3);
  CHECK(reward(s, O::Busy, A::Wait, 0) == doctest::Approx(0.7));
  CHECK(reward(s, O::Idle, A::Wait, 0) == doctest::Approx(-0.3));
}

TEST_CASE("state abstractions") {
  LeadTimeQueue q(std::vector<std::uint32_t>{0, 1, 1});
  CHECK(state_count(Abstraction::Full, 3) == 32);
  CHECK(state_count(Abstraction::Hol, 3) == 16);
  CHECK(state_count(Abstraction::Tiny, 3) == 8);
  CHECK(encode_state(Abstraction::Full, q, O::Successful) == 6 * 4 + 2);
  CHECK(encode_state(Abstraction::Hol, q, O::Busy) == 2 * 4 + 1);
  CHECK(encode_state(Abstraction::Tiny, q, O::Failed) == 3);
  CHECK(state_payload(Abstraction::Full, 3, 6 * 4) == "(0,1,1)");
  CHECK_FALSE(transmit_feasible(Abstraction::Full, 2));
  CHECK(transmit_feasible(Abstraction::Full, 4));
  CHECK(transmit_feasible(Abstraction::Tiny, 0));
}

TEST_CASE("select_action: greedy and tie-break") {
  LearnerState ls(1);
  Rng rng(1);
  CHECK(select_action(ls, 0, 0.0, rng) == A::Wait);
  ls.q[0] = {0.2, 0.1};
  CHECK(select_action(ls, 0, 0.0, rng) == A::Wait);
  ls.q[0] = {0.1, 0.2};
  CHECK(select_action(ls, 0, 0.0, rng) == A::Transmit);
  CHECK(select_action(ls, 0, 0.0, rng, false) == A::Wait);
}

TEST_CASE("select_action: full exploration is uniform") {
  LearnerState ls(1);
  ls.q[0] = {0.0, 1.0};
  Rng rng(11);
  const int n = 100'000;
  int tx = 0;
  for (int i = 0; i < n; ++i) tx += select_action(ls, 0, 1.0, rng) == A::Transmit;
  CHECK(std::abs(tx / double(n) - 0.5) < 0.01);
}

TEST_CASE("q_update examples") {
  LearnerConfig cfg;
  cfg.algorithm = Algorithm::QLearning;
  LearnerState ls(2);
  q_update(ls, cfg, 0, A::Transmit, 1.0, 1);
  CHECK(ls.value(0, A::Transmit) == doctest::Approx(0.01));

  LearnerState z(2);
  q_update(z, cfg, 0, A::Wait, 0.0, 1);
  CHECK(z.q[0][0] == 0.0);
  CHECK(z.q[0][1] == 0.0);

  LearnerState e(2);
  e.q[0][0] = 0.5;
  e.q[1] = {1.0, 0.3};
  q_update(e, cfg, 0, A::Wait, 1.0, 1);
  CHECK(e.value(0, A::Wait) == doctest::Approx(0.514));
}

TEST_CASE("r_update examples") {
  LearnerConfig cfg;
  LearnerState ls(2);
  r_update(ls, cfg, 0, A::Wait, 1.0, 1);
  CHECK(ls.value(0, A::Wait) == doctest::Approx(0.01));
  CHECK(ls.rho == doctest::Approx(0.01));

  LearnerState z(2);
  r_update(z, cfg, 0, A::Wait, 0.0, 1);
  CHECK(z.rho == 0.0);
  CHECK(z.q[0][0] == 0.0);
}

TEST_CASE("r_update: constant reward chain drives rho to the reward") {
  LearnerConfig cfg;
  LearnerState ls(1);
  const double c = 0.37;
  for (int i = 0; i < 100'000; ++i) r_update(ls, cfg, 0, A::Wait, c, 0, false);
  CHECK(std::abs(ls.rho - c) < 0.01);
}

TEST_CASE("epsilon schedule") {
  LearnerConfig cfg;
  CHECK(cfg.epsilon(1) == 1.0);
  CHECK(cfg.epsilon(2) == doctest::Approx(0.995));
  CHECK(cfg.epsilon(100) == doctest::Approx(std::pow(0.995, 99)));
  CHECK(cfg.epsilon(100'000) == 0.01);
  double prev = 2.0;
  for (std::uint64_t t = 1; t < 2000; ++t) {
    CHECK(cfg.epsilon(t) <= prev);
    CHECK(cfg.epsilon(t) >= 0.01);
    prev = cfg.epsilon(t);
  }
}

TEST_CASE("learner config validation") {
  LearnerConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.gamma = 1.0;
  cfg.algorithm = Algorithm::QLearning;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("greedy_policy") {
  LearnerState ls(state_count(Abstraction::Full, 2));
  for (auto a : greedy_policy(ls, Abstraction::Full)) CHECK(a == A::Wait);
  // Known-empty states never pick TRANSMIT even if its value is higher.
  ls.q[0] = {0.0, 1.0};
  ls.q[5] = {0.0, 1.0};
  auto pol = greedy_policy(ls, Abstraction::Full);
  CHECK(pol[0] == A::Wait);
  CHECK(pol[5] == A::Transmit);
}

TEST_CASE("aloha_policy") {
  DeviceParams p;
  p.transmit_prob = 1.0;
  Rng rng(3);
  CHECK(aloha_policy(p, true, rng) == A::Transmit);
  p.transmit_prob = 0.7;
  for (int i = 0; i < 100; ++i) CHECK(aloha_policy(p, false, rng) == A::Wait);
}

TEST_CASE("policy CSV layout") {
  LearnerState ls(8);
  ls.rho = 0.25;
  std::ostringstream out;
  write_policy_csv(out, ls, Abstraction::Tiny, 2, true);
  const auto s = out.str();
  CHECK(s.find("abstraction,state,observation,action,q_wait,q_transmit") != std::string::npos);
  CHECK(s.find("0.25") != std::string::npos);
}
