#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dcra/agents.hpp"
#include "dcra/channel_env.hpp"
#include "dcra/mdp_bound.hpp"

namespace dcra {

/// One system: N1 ALOHA devices sharing (p_b, p_s, p_t) and N2 controlled devices
/// sharing (p_b2, p_s2), all with hard delay D.
struct SystemParams {
  double p_b = 0.5;
  double p_b2 = 0.4;
  double p_s = 0.7;
  double p_s2 = 0.6;
  double p_t = 0.4;
  std::size_t hard_delay = 2;
  std::size_t n1 = 1;
  std::size_t n2 = 1;
  ArrivalKind arrivals = ArrivalKind::Bernoulli;

  void validate() const;
  bool two_device() const { return n1 == 1 && n2 == 1; }
  /// Requires two_device() and Bernoulli arrivals.
  TwoDeviceParams two_device_params() const;
};

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

struct SamplingRanges {
  Range arrival{0.1, 1.0};
  Range success{0.1, 1.0};
  Range transmit{0.05, 0.95};

  void validate() const;
};

/// Independent uniform draws in the order p_b, p'_b, p_s, p'_s, p_t; D, N1 and N2 are
/// copied from `base`.
SystemParams sample_params(const SamplingRanges& ranges, const SystemParams& base, Rng& rng);

ScenarioConfig make_scenario(const SystemParams& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Controllers

enum class ControllerKind : std::uint8_t { Learner, Aloha, AlwaysTransmit, AlwaysIdle, Theorem1, Bound };

struct ControllerSpec {
  ControllerKind kind = ControllerKind::Learner;
  LearnerConfig learner;
  double aloha_p = 0.0;  // 0 means 1/N2

  /// tsra, hsra, fsra, tsqa, hsqa, fsqa, aloha, always-transmit, always-idle, theorem1, bound.
  static ControllerSpec parse(std::string_view name);
  std::string label() const;
  /// 1,000,000 slots for full-state learners, 200,000 otherwise.
  std::uint64_t default_slots() const;
};

/// Agents for every controlled device of `params`, plus the LP result for Bound.
struct AgentSet {
  std::vector<std::unique_ptr<Agent>> owned;
  std::vector<Agent*> agents;
  std::optional<BoundResult> bound;
};

AgentSet make_agents(const ControllerSpec& controller, const SystemParams& params);

// ---------------------------------------------------------------------------
// Experiments

enum class ExperimentKind : std::uint8_t { Simulate, UpperBound, Sweep, Convergence, PolicyDump, Congestion };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view name);

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::Sweep;
  std::string name;  // output file stem; defaults to the kind
  SystemParams params;
  bool sample = true;  // draw (p_b, p'_b, p_s, p'_s, p_t) per group
  SamplingRanges ranges;
  // Grid axes; an empty axis uses the value in `params`.
  std::vector<std::size_t> hard_delays;
  std::vector<std::size_t> n1_values;
  std::vector<std::size_t> n2_values;
  std::vector<ControllerSpec> controllers{ControllerSpec::parse("tsra")};
  std::size_t groups = 1;
  std::uint64_t slots = 0;     // 0: each controller's default
  std::size_t window = 0;      // 0: min(100000, slots / 4)
  std::size_t series_block = 2000;
  double convergence_tol = 0.1;
  bool with_bound = false;     // LP bound per group (two-device, D <= 4)
  std::uint64_t seed = 1;
  std::size_t threads = 0;     // 0: hardware concurrency
  std::filesystem::path output_dir;

  void validate() const;
  std::string stem() const { return name.empty() ? std::string(to_string(kind)) : name; }
};

/// Applies the congestion-study defaults: the N1 grid {1,2,3}, the N2 grid {0,10,...,100},
/// TSRA and ALOHA(1/N2) controllers. Per case the ALOHA devices get p_b = 1,
/// p_t = 1/(4 N1), p_s = 0.5.
ExperimentSpec congestion_defaults(ExperimentSpec spec);

struct ControllerOutcome {
  double throughput = 0.0;
  double power = 0.0;
  std::optional<std::uint64_t> convergence_slot;
  std::vector<double> throughput_series;
  std::vector<double> power_series;
};

struct GroupResult {
  std::size_t group = 0;
  std::uint64_t seed = 0;
  SystemParams params;
  std::vector<ControllerOutcome> outcomes;  // one per controller
  std::optional<double> bound;
};

struct SweepResult {
  std::vector<std::string> labels;
  std::vector<GroupResult> rows;
  std::vector<double> mean_throughput;
  std::vector<double> mean_power;
  std::optional<double> mean_bound;
};

/// Window used for a controller run of `slots` slots.
std::size_t evaluation_window(const ExperimentSpec& spec, std::uint64_t slots);

/// Parameters and seed of case `index` (grid position times groups), exactly as the
/// sweep would run them.
GroupResult plan_group(const ExperimentSpec& spec, std::size_t index);
std::size_t case_count(const ExperimentSpec& spec);

/// Runs one case for every controller.
GroupResult run_group(const ExperimentSpec& spec, std::size_t index);

/// Runs every case on a worker pool. Any failure aborts with the case index and seed.
SweepResult run_experiment(const ExperimentSpec& spec);

/// First block end after which every block throughput stays within
/// max(tol * final, 0.01) of `final_value`.
std::optional<std::uint64_t> convergence_slot(const std::vector<double>& series, std::size_t block,
                                              double final_value, double tol);

/// One row per case plus a final "mean" row. Columns: group,seed,p_b,p_b2,p_s,p_s2,p_t,D,N1,N2,
/// then <label>_throughput,<label>_power,<label>_convergence_slot per controller, then bound.
void write_sweep_csv(std::ostream& out, const SweepResult& result, bool with_bound);

/// Long format: group,D,N1,N2,controller,slot,throughput,power.
void write_series_csv(std::ostream& out, const SweepResult& result, std::size_t block);

/// Writes <stem>.csv (and <stem>_series.csv for convergence runs) under the output
/// directory; returns the paths written. Throws std::runtime_error naming the path on
/// I/O failure.
std::vector<std::filesystem::path> write_outputs(const ExperimentSpec& spec, const SweepResult& result);

/// $DCRA_OUTPUT_DIR, or "results" when unset.
std::filesystem::path default_output_dir();

}  // namespace dcra
