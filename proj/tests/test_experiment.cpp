#include <cmath>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "dcra/experiment.hpp"

using namespace dcra;

namespace {

std::string sweep_csv(const ExperimentSpec& spec) {
  std::ostringstream out;
  write_sweep_csv(out, run_experiment(spec), spec.with_bound);
  return out.str();
}

}  // namespace

TEST_CASE("parameter sampling") {
  SamplingRanges r;
  SystemParams base;
  Rng rng(3);
  const int n = 100'000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += sample_params(r, base, rng).p_b;
  CHECK(std::abs(sum / n - 0.55) < 0.01);

  r.arrival = {0.5, 0.5};
  auto p = sample_params(r, base, rng);
  CHECK(p.p_b == 0.5);
  CHECK(p.p_b2 == 0.5);

  Rng a(9), b(9);
  auto x = sample_params({}, base, a);
  auto y = sample_params({}, base, b);
  CHECK(x.p_t == y.p_t);
  CHECK(x.p_s2 == y.p_s2);
}

TEST_CASE("controller names") {
  CHECK(ControllerSpec::parse("tsra").label() == "tsra");
  CHECK(ControllerSpec::parse("fsqa").learner.algorithm == Algorithm::QLearning);
  CHECK(ControllerSpec::parse("fsqa").learner.abstraction == Abstraction::Full);
  CHECK(ControllerSpec::parse("tsra-multi").learner.reward.kind == RewardKind::MultiLevel);
  auto shifted = ControllerSpec::parse("fsqa-shift0.3");
  CHECK(shifted.learner.reward.kind == RewardKind::TwoLevelShifted);
  CHECK(shifted.learner.reward.shift == doctest::Approx(0.3));
  CHECK(ControllerSpec::parse("aloha").kind == ControllerKind::Aloha);
  CHECK(ControllerSpec::parse("fsra").default_slots() == 1'000'000);
  CHECK(ControllerSpec::parse("tsra").default_slots() == 200'000);
  CHECK_THROWS_AS(ControllerSpec::parse("nope"), std::invalid_argument);
}

TEST_CASE("spec validation") {
  ExperimentSpec s;
  s.groups = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.params.hard_delay = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = {};
  s.params.p_s = 1.5;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("case planning order") {
  ExperimentSpec s;
  s.hard_delays = {1, 2};
  s.n2_values = {1, 2, 3};
  s.groups = 2;
  CHECK(case_count(s) == 12);
  auto g = plan_group(s, 7);  // groups fastest: group 1 of (D=2, N2=1)
  CHECK(g.params.hard_delay == 2);
  CHECK(g.params.n2 == 1);
  CHECK(g.seed == Rng::derive_seed(1, StreamKind::Group, 7));
}

TEST_CASE("single ALOHA device, saturated, single-slot lifetimes") {
  ExperimentSpec s;
  s.kind = ExperimentKind::Simulate;
  s.sample = false;
  s.params.p_b = 1.0;
  s.params.p_s = 0.7;
  s.params.p_t = 0.4;
  s.params.hard_delay = 1;
  s.params.n1 = 1;
  s.params.n2 = 0;
  s.controllers = {ControllerSpec::parse("tsra")};
  s.slots = 400'000;
  s.window = 400'000;
  s.threads = 1;
  auto r = run_experiment(s);
  CHECK(std::abs(r.mean_throughput[0] - 0.28) < 0.005);
}

TEST_CASE("congestion cases") {
  ExperimentSpec s = congestion_defaults({});
  s.n1_values = {1};
  s.n2_values = {0, 10};
  s.groups = 1;
  s.slots = 200'000;
  s.threads = 2;
  auto r = run_experiment(s);
  REQUIRE(r.rows.size() == 2);
  REQUIRE(r.labels.size() == 2);
  const double baseline = r.rows[0].outcomes[0].throughput;
  CHECK(std::abs(baseline - 0.125) < 0.005);
  const double tsra = r.rows[1].outcomes[0].throughput;
  const double aloha = r.rows[1].outcomes[1].throughput;
  CHECK(tsra > baseline);
  CHECK(tsra > aloha);
}

TEST_CASE("sweeps are reproducible and independent of the thread count") {
  ExperimentSpec s;
  s.hard_delays = {1, 2};
  s.groups = 3;
  s.slots = 20'000;
  s.controllers = {ControllerSpec::parse("tsra"), ControllerSpec::parse("aloha")};
  s.with_bound = true;
  s.seed = 11;
  s.threads = 1;
  const auto a = sweep_csv(s);
  s.threads = 4;
  const auto b = sweep_csv(s);
  CHECK(a == b);
  s.seed = 12;
  CHECK(sweep_csv(s) != a);
  CHECK(a.rfind("group,seed,p_b,p_b2,p_s,p_s2,p_t,D,N1,N2,tsra_throughput", 0) == 0);
  CHECK(a.find("\nmean,") != std::string::npos);
}

TEST_CASE("sweep mean row is the column mean") {
  ExperimentSpec s;
  s.groups = 4;
  s.slots = 10'000;
  s.threads = 2;
  auto r = run_experiment(s);
  double sum = 0.0;
  for (const auto& row : r.rows) sum += row.outcomes[0].throughput;
  CHECK(r.mean_throughput[0] == doctest::Approx(sum / 4));
}

TEST_CASE("convergence slot") {
  std::vector<double> series{0.0, 0.2, 0.5, 0.49, 0.51, 0.5};
  CHECK(convergence_slot(series, 100, 0.5, 0.1) == 300u);
  std::vector<double> late{0.5, 0.5, 0.0};
  CHECK_FALSE(convergence_slot(late, 100, 0.5, 0.1).has_value());
}

TEST_CASE("evaluation window defaults") {
  ExperimentSpec s;
  CHECK(evaluation_window(s, 1'000'000) == 100'000);
  CHECK(evaluation_window(s, 200'000) == 50'000);
  s.window = 7;
  CHECK(evaluation_window(s, 200'000) == 7);
}
