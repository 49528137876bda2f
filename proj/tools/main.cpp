#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "dcra/experiment.hpp"
#include "dcra/lp_solver.hpp"
#include "dcra/mdp_bound.hpp"

using namespace dcra;

namespace {

// Flags shared by every subcommand. Only flags given on the command line override the
// config file.
struct Flags {
  std::string config;
  std::optional<double> p_b, p_b2, p_s, p_s2, p_t;
  std::optional<std::size_t> hard_delay, n1, n2;
  bool poisson = false;
  std::optional<bool> sample;
  std::vector<double> arrival_range, success_range, transmit_range;
  std::vector<std::size_t> hard_delays, n1_values, n2_values;
  std::vector<std::string> controllers;
  std::optional<std::size_t> groups, window, series_block, threads;
  std::optional<std::uint64_t> slots, seed;
  std::optional<double> convergence_tol;
  bool with_bound = false;
  std::string output_dir, name;
  bool print_config = false;

  // subcommand specific
  std::string trace, lp_export, policy;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("-c,--config", f.config, "JSON experiment file; flags override its values");
  app->add_option("--p-b", f.p_b, "ALOHA arrival probability p_b");
  app->add_option("--p-b2", f.p_b2, "controlled-device arrival probability p'_b");
  app->add_option("--p-s", f.p_s, "ALOHA success probability p_s");
  app->add_option("--p-s2", f.p_s2, "controlled-device success probability p'_s");
  app->add_option("--p-t", f.p_t, "ALOHA transmit probability p_t");
  app->add_option("-D,--hard-delay", f.hard_delay, "hard delay D in slots");
  app->add_option("--n1", f.n1, "number of ALOHA devices N1");
  app->add_option("--n2", f.n2, "number of controlled devices N2");
  app->add_flag("--poisson", f.poisson, "Poisson arrivals (rates taken from p_b, p'_b)");
  app->add_flag("--sample,!--no-sample", f.sample, "draw (p_b, p'_b, p_s, p'_s, p_t) per group");
  app->add_option("--arrival-range", f.arrival_range, "sampling range for arrival probabilities")->expected(2);
  app->add_option("--success-range", f.success_range, "sampling range for success probabilities")->expected(2);
  app->add_option("--transmit-range", f.transmit_range, "sampling range for p_t")->expected(2);
  app->add_option("--delays", f.hard_delays, "grid of hard delays");
  app->add_option("--n1-grid", f.n1_values, "grid of N1 values");
  app->add_option("--n2-grid", f.n2_values, "grid of N2 values");
  app->add_option("--controllers", f.controllers,
                  "tsra, hsra, fsra, tsqa, hsqa, fsqa (suffixes -multi, -shift<c>, -literal), aloha, "
                  "always-transmit, always-idle, theorem1, bound");
  app->add_option("-g,--groups", f.groups, "groups (parameter draws / seeds) per grid point");
  app->add_option("-T,--slots", f.slots, "slots per run (0: per-controller default)");
  app->add_option("-w,--window", f.window, "evaluation window (0: min(100000, slots/4))");
  app->add_option("--block", f.series_block, "time-series block length in slots (0: off)");
  app->add_option("--convergence-tol", f.convergence_tol, "relative band for the convergence slot");
  app->add_flag("--with-bound", f.with_bound, "also solve the LP bound per group (two devices, D <= 4)");
  app->add_option("-s,--seed", f.seed, "master seed");
  app->add_option("-j,--threads", f.threads, "worker threads (0: all cores)");
  app->add_option("-o,--output-dir", f.output_dir, "output directory (default $DCRA_OUTPUT_DIR or ./results)");
  app->add_option("--name", f.name, "output file stem");
  app->add_flag("--print-config", f.print_config, "print the effective configuration as JSON and exit");
}

ExperimentSpec build_spec(ExperimentKind kind, const Flags& f) {
  ExperimentSpec s;
  s.kind = kind;
  switch (kind) {
    case ExperimentKind::Simulate:
    case ExperimentKind::UpperBound:
    case ExperimentKind::Convergence:
    case ExperimentKind::PolicyDump: s.sample = false; break;
    case ExperimentKind::Sweep: s.groups = 20; break;
    case ExperimentKind::Congestion:
      s = congestion_defaults(s);
      s.params.n2 = 0;
      s.groups = 10;
      break;
  }
  if (kind == ExperimentKind::PolicyDump) s.controllers = {ControllerSpec::parse("fsra")};
  if (kind != ExperimentKind::Convergence) s.series_block = kind == ExperimentKind::Congestion ? 0 : 2000;

  if (!f.config.empty()) s = cli::load_spec(f.config, s);
  s.kind = kind;
  if (f.p_b) s.params.p_b = *f.p_b;
  if (f.p_b2) s.params.p_b2 = *f.p_b2;
  if (f.p_s) s.params.p_s = *f.p_s;
  if (f.p_s2) s.params.p_s2 = *f.p_s2;
  if (f.p_t) s.params.p_t = *f.p_t;
  if (f.hard_delay) s.params.hard_delay = *f.hard_delay;
  if (f.n1) s.params.n1 = *f.n1;
  if (f.n2) s.params.n2 = *f.n2;
  if (f.poisson) s.params.arrivals = ArrivalKind::Poisson;
  if (f.sample) s.sample = *f.sample;
  if (!f.arrival_range.empty()) s.ranges.arrival = {f.arrival_range[0], f.arrival_range[1]};
  if (!f.success_range.empty()) s.ranges.success = {f.success_range[0], f.success_range[1]};
  if (!f.transmit_range.empty()) s.ranges.transmit = {f.transmit_range[0], f.transmit_range[1]};
  if (!f.hard_delays.empty()) s.hard_delays = f.hard_delays;
  if (!f.n1_values.empty()) s.n1_values = f.n1_values;
  if (!f.n2_values.empty()) s.n2_values = f.n2_values;
  if (!f.controllers.empty()) {
    s.controllers.clear();
    for (const auto& c : f.controllers) s.controllers.push_back(ControllerSpec::parse(c));
  }
  if (f.groups) s.groups = *f.groups;
  if (f.slots) s.slots = *f.slots;
  if (f.window) s.window = *f.window;
  if (f.series_block) s.series_block = *f.series_block;
  if (f.convergence_tol) s.convergence_tol = *f.convergence_tol;
  if (f.with_bound) s.with_bound = true;
  if (f.seed) s.seed = *f.seed;
  if (f.threads) s.threads = *f.threads;
  if (!f.output_dir.empty()) s.output_dir = f.output_dir;
  if (!f.name.empty()) s.name = f.name;
  if (s.output_dir.empty()) s.output_dir = default_output_dir();
  s.validate();
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return f;
}

void report_written(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << "wrote " << p.string() << '\n';
}

int cmd_experiment(const ExperimentSpec& spec, const Flags& f) {
  const SweepResult r = run_experiment(spec);
  std::printf("%-24s %12s %10s %14s\n", "controller", "throughput", "power", "converged@");
  for (std::size_t c = 0; c < r.labels.size(); ++c) {
    std::string conv = "-";
    if (r.rows.size() == 1 && r.rows[0].outcomes[c].convergence_slot)
      conv = std::to_string(*r.rows[0].outcomes[c].convergence_slot);
    std::printf("%-24s %12.6f %10.4f %14s\n", r.labels[c].c_str(), r.mean_throughput[c], r.mean_power[c], conv.c_str());
  }
  if (r.mean_bound) std::printf("%-24s %12.6f\n", "bound", *r.mean_bound);
  report_written(write_outputs(spec, r));

  if (!f.trace.empty()) {
    // Replays case 0 of the first controller with a per-slot trace; same seed, same run.
    const GroupResult g = plan_group(spec, 0);
    const auto& c = spec.controllers.front();
    AgentSet set = make_agents(c, g.params);
    auto out = open_out(f.trace);
    RunOptions opts;
    opts.slots = spec.slots ? spec.slots : c.default_slots();
    opts.window = evaluation_window(spec, opts.slots);
    opts.trace = &out;
    run(make_scenario(g.params, g.seed), set.agents, opts);
    std::cout << "wrote " << f.trace << '\n';
  }
  return 0;
}

int cmd_upper_bound(const ExperimentSpec& spec, const Flags& f) {
  const auto dir = spec.output_dir;
  std::filesystem::create_directories(dir);
  const auto path = dir / (spec.stem() + ".csv");
  auto out = open_out(path);
  out.precision(12);
  out << "p_b,p_b2,p_s,p_s2,p_t,D,N1,N2,R_star,solve_seconds,iterations,residual,theorem1\n";
  for (std::size_t i = 0; i < case_count(spec); ++i) {
    const SystemParams p = plan_group(spec, i).params;
    const TwoDeviceParams tp = p.two_device_params();
    if (tp.hard_delay > 4) std::cerr << "dcra: note: D=" << tp.hard_delay << " is beyond the desk-scale cap of 4\n";
    const MdpModel model = build_mdp(tp);
    const BoundResult b = upper_bound(model);
    std::optional<double> th;
    if (tp.hard_delay == 1) th = theorem1(tp).value;
    out << p.p_b << ',' << p.p_b2 << ',' << p.p_s << ',' << p.p_s2 << ',' << p.p_t << ',' << p.hard_delay << ','
        << p.n1 << ',' << p.n2 << ',' << b.value << ',' << b.solve_seconds << ',' << b.lp.iterations << ','
        << b.lp.residual << ',';
    if (th) out << *th;
    out << '\n';
    std::printf("D=%zu R*=%.9f (%zu iterations, %.3fs)%s\n", p.hard_delay, b.value, b.lp.iterations, b.solve_seconds,
                th ? (" theorem1=" + std::to_string(*th)).c_str() : "");
    if (i == 0 && !f.lp_export.empty()) {
      auto lp_out = open_out(f.lp_export);
      lp::write_text(lp_out, build_dual_lp(model));
      std::cout << "wrote " << f.lp_export << '\n';
    }
    if (i == 0 && !f.policy.empty()) {
      auto pol_out = open_out(f.policy);
      write_bound_policy_csv(pol_out, b);
      std::cout << "wrote " << f.policy << '\n';
    }
  }
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_policy_dump(const ExperimentSpec& spec) {
  const SystemParams p = plan_group(spec, 0).params;
  const std::uint64_t seed = plan_group(spec, 0).seed;
  std::filesystem::create_directories(spec.output_dir);
  for (const auto& c : spec.controllers) {
    const auto path = spec.output_dir / (spec.stem() + "_" + c.label() + ".csv");
    AgentSet set = make_agents(c, p);
    if (c.kind == ControllerKind::Bound) {
      auto out = open_out(path);
      write_bound_policy_csv(out, *set.bound);
      const auto maj = majority_policy(*set.bound);
      std::printf("bound R*=%.6f majority:", set.bound->value);
      for (std::size_t s = 0; s < maj.size(); ++s)
        std::printf(" %s/%s=%s", state_payload(Abstraction::Full, p.hard_delay, s).c_str(),
                    std::string(1, short_name(state_observation(s))).c_str(), maj[s] == Action::Transmit ? "T" : "W");
      std::printf("\n");
    } else if (c.kind == ControllerKind::Learner) {
      RunOptions opts;
      opts.slots = spec.slots ? spec.slots : c.default_slots();
      opts.window = evaluation_window(spec, opts.slots);
      const RunResult r = run(make_scenario(p, seed), set.agents, opts);
      const auto* agent = static_cast<const LearnerAgent*>(set.agents.front());
      auto out = open_out(path);
      write_policy_csv(out, agent->state(), c.learner.abstraction, p.hard_delay,
                       c.learner.algorithm == Algorithm::RLearning);
      const auto pol = greedy_policy(agent->state(), c.learner.abstraction);
      std::printf("%s throughput=%.6f rho=%.6f greedy:", c.label().c_str(), r.metrics.timely_throughput(opts.window),
                  agent->state().rho);
      for (std::size_t s = 0; s < pol.size(); ++s)
        std::printf(" %s/%s=%s", state_payload(c.learner.abstraction, p.hard_delay, s).c_str(),
                    std::string(1, short_name(state_observation(s))).c_str(), pol[s] == Action::Transmit ? "T" : "W");
      std::printf("\n");
    } else {
      throw std::invalid_argument("policy-dump supports learners and the bound policy, not " + c.label());
    }
    std::cout << "wrote " << path.string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-constrained random access: simulation, learning agents and the two-device LP bound"};
  app.require_subcommand(1);
  Flags f;

  struct Sub {
    ExperimentKind kind;
    const char* help;
  };
  const Sub subs[] = {
      {ExperimentKind::Simulate, "run controllers on one fixed system"},
      {ExperimentKind::UpperBound, "solve the two-device LP bound"},
      {ExperimentKind::Sweep, "run controllers over sampled parameter groups"},
      {ExperimentKind::Convergence, "windowed-throughput time series"},
      {ExperimentKind::PolicyDump, "train learners and dump their Q tables / the bound policy"},
      {ExperimentKind::Congestion, "N1 saturated ALOHA devices against N2 controlled devices"},
  };
  std::vector<std::pair<CLI::App*, ExperimentKind>> commands;
  for (const auto& s : subs) {
    CLI::App* sub = app.add_subcommand(std::string(to_string(s.kind)), s.help);
    add_common(sub, f);
    if (s.kind == ExperimentKind::Simulate) sub->add_option("--trace", f.trace, "per-slot CSV trace of case 0");
    if (s.kind == ExperimentKind::UpperBound) {
      sub->add_option("--lp-export", f.lp_export, "write the LP of case 0 in the fixed text layout");
      sub->add_option("--policy", f.policy, "write the extracted bound policy of case 0");
    }
    commands.emplace_back(sub, s.kind);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (const auto& [sub, kind] : commands) {
      if (!sub->parsed()) continue;
      const ExperimentSpec spec = build_spec(kind, f);
      if (f.print_config) {
        std::cout << cli::spec_to_json(spec).dump(2) << '\n';
        return 0;
      }
      switch (kind) {
        case ExperimentKind::UpperBound: return cmd_upper_bound(spec, f);
        case ExperimentKind::PolicyDump: return cmd_policy_dump(spec);
        default: return cmd_experiment(spec, f);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "dcra: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
