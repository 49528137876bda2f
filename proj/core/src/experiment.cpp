#include "dcra/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace dcra {

namespace {

void check_probability(double v, const char* what, bool allow_zero = true) {
  if (!(v >= 0.0 && v <= 1.0) || (!allow_zero && v == 0.0))
    throw std::invalid_argument(std::string(what) + " must lie in " + (allow_zero ? "[0,1]" : "(0,1]"));
}

void check_range(const Range& r, const char* what) {
  if (!(r.lo >= 0.0 && r.lo <= r.hi && r.hi <= 1.0))
    throw std::invalid_argument(std::string(what) + " range must satisfy 0 <= lo <= hi <= 1");
}

}  // namespace

void SystemParams::validate() const {
  if (arrivals == ArrivalKind::Bernoulli) {
    check_probability(p_b, "p_b");
    check_probability(p_b2, "p'_b");
  } else if (!(p_b >= 0.0 && p_b2 >= 0.0)) {
    throw std::invalid_argument("Poisson arrival means must be non-negative");
  }
  check_probability(p_s, "p_s");
  check_probability(p_s2, "p'_s");
  check_probability(p_t, "p_t");
  if (hard_delay == 0) throw std::invalid_argument("hard delay must be at least 1");
  if (n1 + n2 == 0) throw std::invalid_argument("system needs at least one device");
}

TwoDeviceParams SystemParams::two_device_params() const {
  if (!two_device()) throw std::invalid_argument("model-based bound needs N1 = 1 and N2 = 1");
  if (arrivals != ArrivalKind::Bernoulli) throw std::invalid_argument("model-based bound needs Bernoulli arrivals");
  return TwoDeviceParams{p_b, p_b2, p_s, p_s2, p_t, hard_delay};
}

void SamplingRanges::validate() const {
  check_range(arrival, "arrival");
  check_range(success, "success");
  check_range(transmit, "transmit");
}

SystemParams sample_params(const SamplingRanges& ranges, const SystemParams& base, Rng& rng) {
  SystemParams p = base;
  p.p_b = rng.uniform(ranges.arrival.lo, ranges.arrival.hi);
  p.p_b2 = rng.uniform(ranges.arrival.lo, ranges.arrival.hi);
  p.p_s = rng.uniform(ranges.success.lo, ranges.success.hi);
  p.p_s2 = rng.uniform(ranges.success.lo, ranges.success.hi);
  p.p_t = rng.uniform(ranges.transmit.lo, ranges.transmit.hi);
  return p;
}

ScenarioConfig make_scenario(const SystemParams& p, std::uint64_t seed) {
  p.validate();
  auto arrivals = [&p](double rate) {
    return p.arrivals == ArrivalKind::Bernoulli ? ArrivalModel::bernoulli(rate) : ArrivalModel::poisson(rate);
  };
  ScenarioConfig sc;
  sc.seed = seed;
  sc.aloha.assign(p.n1, DeviceParams{arrivals(p.p_b), p.hard_delay, p.p_s, p.p_t});
  sc.controlled.assign(p.n2, DeviceParams{arrivals(p.p_b2), p.hard_delay, p.p_s2, 1.0});
  return sc;
}

// ---------------------------------------------------------------------------

ControllerSpec ControllerSpec::parse(std::string_view name) {
  static const std::pair<std::string_view, ControllerKind> fixed[] = {
      {"always-transmit", ControllerKind::AlwaysTransmit},
      {"always-idle", ControllerKind::AlwaysIdle},
      {"theorem1", ControllerKind::Theorem1},
      {"bound", ControllerKind::Bound},
      {"aloha", ControllerKind::Aloha},
  };
  for (const auto& [key, kind] : fixed) {
    if (name == key) {
      ControllerSpec c;
      c.kind = kind;
      return c;
    }
  }

  ControllerSpec c;
  const std::string_view base = name.substr(0, 4);
  if (base.size() != 4 || base[1] != 's') throw std::invalid_argument("unknown controller '" + std::string(name) + "'");
  switch (base[0]) {
    case 'f': c.learner.abstraction = Abstraction::Full; break;
    case 'h': c.learner.abstraction = Abstraction::Hol; break;
    case 't': c.learner.abstraction = Abstraction::Tiny; break;
    default: throw std::invalid_argument("unknown controller '" + std::string(name) + "'");
  }
  if (base.substr(2) == "ra") {
    c.learner.algorithm = Algorithm::RLearning;
  } else if (base.substr(2) == "qa") {
    c.learner.algorithm = Algorithm::QLearning;
  } else {
    throw std::invalid_argument("unknown controller '" + std::string(name) + "'");
  }

  // Optional suffixes: -multi, -shift<c>, -literal.
  std::string_view rest = name.substr(4);
  while (!rest.empty()) {
    if (rest.front() != '-') throw std::invalid_argument("bad controller suffix in '" + std::string(name) + "'");
    rest.remove_prefix(1);
    const auto end = rest.find('-');
    const std::string_view tok = rest.substr(0, end);
    rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
    if (tok == "multi") {
      c.learner.reward = RewardSpec::multi_level();
    } else if (tok == "literal") {
      c.learner.timing = RewardTiming::Literal;
    } else if (tok.substr(0, 5) == "shift") {
      const std::string v(tok.substr(5));
      std::size_t used = 0;
      double shift = 0.0;
      try {
        shift = std::stod(v, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (v.empty() || used != v.size()) throw std::invalid_argument("bad shift in '" + std::string(name) + "'");
      c.learner.reward = RewardSpec::shifted(shift);
    } else {
      throw std::invalid_argument("unknown controller suffix '" + std::string(tok) + "'");
    }
  }
  c.learner.validate();
  return c;
}

std::string ControllerSpec::label() const {
  switch (kind) {
    case ControllerKind::Aloha: return "aloha";
    case ControllerKind::AlwaysTransmit: return "always-transmit";
    case ControllerKind::AlwaysIdle: return "always-idle";
    case ControllerKind::Theorem1: return "theorem1";
    case ControllerKind::Bound: return "bound";
    case ControllerKind::Learner: break;
  }
  std::string s = learner_label(learner);
  if (learner.reward.kind == RewardKind::MultiLevel) s += "-multi";
  if (learner.reward.kind == RewardKind::TwoLevelShifted) {
    std::ostringstream os;
    os << learner.reward.shift;
    s += "-shift" + os.str();
  }
  if (learner.timing == RewardTiming::Literal) s += "-literal";
  return s;
}

std::uint64_t ControllerSpec::default_slots() const {
  return kind == ControllerKind::Learner && learner.abstraction == Abstraction::Full ? 1'000'000 : 200'000;
}

AgentSet make_agents(const ControllerSpec& c, const SystemParams& p) {
  AgentSet set;
  switch (c.kind) {
    case ControllerKind::Theorem1: {
      const auto tp = p.two_device_params();
      const auto th = theorem1(tp);
      set.owned.push_back(std::make_unique<FixedAgent>(th.policy == BinaryPolicy::AlwaysTransmit ? Action::Transmit
                                                                                                   : Action::Wait));
      break;
    }
    case ControllerKind::Bound: {
      set.bound = upper_bound(build_mdp(p.two_device_params()));
      set.owned.push_back(std::make_unique<BoundPolicyAgent>(*set.bound));
      break;
    }
    default:
      for (std::size_t i = 0; i < p.n2; ++i) {
        switch (c.kind) {
          case ControllerKind::Learner: set.owned.push_back(std::make_unique<LearnerAgent>(c.learner, p.hard_delay)); break;
          case ControllerKind::Aloha: {
            const double q = c.aloha_p > 0.0 ? c.aloha_p : 1.0 / static_cast<double>(p.n2);
            set.owned.push_back(std::make_unique<AlohaAgent>(q));
            break;
          }
          case ControllerKind::AlwaysTransmit: set.owned.push_back(std::make_unique<FixedAgent>(Action::Transmit)); break;
          case ControllerKind::AlwaysIdle: set.owned.push_back(std::make_unique<FixedAgent>(Action::Wait)); break;
          default: break;
        }
      }
  }
  for (auto& a : set.owned) set.agents.push_back(a.get());
  return set;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::UpperBound: return "upper-bound";
    case ExperimentKind::Sweep: return "sweep";
    case ExperimentKind::Convergence: return "convergence";
    case ExperimentKind::PolicyDump: return "policy-dump";
    case ExperimentKind::Congestion: return "congestion";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::Simulate, ExperimentKind::UpperBound, ExperimentKind::Sweep, ExperimentKind::Convergence,
                 ExperimentKind::PolicyDump, ExperimentKind::Congestion})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown experiment kind '" + std::string(name) + "'");
}

void ExperimentSpec::validate() const {
  if (groups == 0) throw std::invalid_argument("group count must be at least 1");
  if (controllers.empty()) throw std::invalid_argument("at least one controller is required");
  if (!(convergence_tol > 0.0)) throw std::invalid_argument("convergence tolerance must be positive");
  params.validate();
  ranges.validate();
  for (auto d : hard_delays)
    if (d == 0) throw std::invalid_argument("hard delay must be at least 1");
  for (const auto& c : controllers) {
    const std::uint64_t s = slots ? slots : c.default_slots();
    if (window > s) throw std::invalid_argument("evaluation window exceeds the slot count");
  }
  if (kind == ExperimentKind::Congestion) {
    for (auto n1 : n1_values)
      if (n1 < 1 || n1 > 3) throw std::invalid_argument("congestion study needs N1 in {1,2,3}");
    for (auto n2 : n2_values)
      if (n2 != 0 && (n2 < 10 || n2 > 100)) throw std::invalid_argument("congestion study needs N2 in {0} or [10,100]");
  }
}

ExperimentSpec congestion_defaults(ExperimentSpec spec) {
  spec.kind = ExperimentKind::Congestion;
  if (spec.n1_values.empty()) spec.n1_values = {1, 2, 3};
  if (spec.n2_values.empty()) spec.n2_values = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  spec.controllers = {ControllerSpec::parse("tsra"), ControllerSpec::parse("aloha")};
  return spec;
}

std::size_t evaluation_window(const ExperimentSpec& spec, std::uint64_t slots) {
  if (spec.window) return spec.window;
  return static_cast<std::size_t>(std::max<std::uint64_t>(1, std::min<std::uint64_t>(kDefaultWindow, slots / 4)));
}

namespace {

template <typename T>
std::vector<T> axis(const std::vector<T>& values, T fallback) {
  return values.empty() ? std::vector<T>{fallback} : values;
}

}  // namespace

std::size_t case_count(const ExperimentSpec& spec) {
  return axis(spec.hard_delays, spec.params.hard_delay).size() * axis(spec.n1_values, spec.params.n1).size() *
         axis(spec.n2_values, spec.params.n2).size() * spec.groups;
}

GroupResult plan_group(const ExperimentSpec& spec, std::size_t index) {
  const auto ds = axis(spec.hard_delays, spec.params.hard_delay);
  const auto n1s = axis(spec.n1_values, spec.params.n1);
  const auto n2s = axis(spec.n2_values, spec.params.n2);
  if (index >= case_count(spec)) throw std::out_of_range("case index out of range");

  // Groups vary fastest, then N2, N1 and D.
  std::size_t rest = index / spec.groups;
  const std::size_t n2 = n2s[rest % n2s.size()];
  rest /= n2s.size();
  const std::size_t n1 = n1s[rest % n1s.size()];
  rest /= n1s.size();
  const std::size_t d = ds[rest];

  GroupResult g;
  g.group = index;
  g.seed = Rng::derive_seed(spec.seed, StreamKind::Group, index);
  SystemParams base = spec.params;
  base.hard_delay = d;
  base.n1 = n1;
  base.n2 = n2;
  if (spec.sample) {
    Rng rng = Rng::substream(spec.seed, StreamKind::ParamSampling, index);
    g.params = sample_params(spec.ranges, base, rng);
  } else {
    g.params = base;
  }
  if (spec.kind == ExperimentKind::Congestion && n1 > 0) {
    g.params.p_b = 1.0;
    g.params.p_t = 1.0 / (4.0 * static_cast<double>(n1));
    g.params.p_s = 0.5;
  }
  return g;
}

std::optional<std::uint64_t> convergence_slot(const std::vector<double>& series, std::size_t block,
                                              double final_value, double tol) {
  const double band = std::max(tol * final_value, 0.01);
  std::size_t k = series.size();
  while (k > 0 && std::abs(series[k - 1] - final_value) <= band) --k;
  if (k == series.size()) return std::nullopt;
  return static_cast<std::uint64_t>(k + 1) * block;
}

GroupResult run_group(const ExperimentSpec& spec, std::size_t index) {
  GroupResult g = plan_group(spec, index);
  const ScenarioConfig scenario = make_scenario(g.params, g.seed);
  if (spec.with_bound && g.params.two_device())
    g.bound = upper_bound(build_mdp(g.params.two_device_params())).value;

  for (const auto& c : spec.controllers) {
    AgentSet set = make_agents(c, g.params);
    RunOptions opts;
    opts.slots = spec.slots ? spec.slots : c.default_slots();
    opts.window = evaluation_window(spec, opts.slots);
    opts.series_block = spec.series_block;
    const RunResult r = run(scenario, set.agents, opts);

    ControllerOutcome out;
    out.throughput = r.metrics.timely_throughput(opts.window);
    out.power = r.metrics.power(opts.window);
    if (spec.series_block > 0) {
      out.throughput_series = r.metrics.throughput_series();
      out.power_series = r.metrics.power_series();
      out.convergence_slot = convergence_slot(out.throughput_series, spec.series_block, out.throughput,
                                              spec.convergence_tol);
    }
    g.outcomes.push_back(std::move(out));
  }
  return g;
}

SweepResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t cases = case_count(spec);
  SweepResult result;
  for (const auto& c : spec.controllers) result.labels.push_back(c.label());
  result.rows.resize(cases);

  std::size_t workers = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, cases);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::string error;
  auto work = [&] {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= cases) return;
      try {
        result.rows[i] = run_group(spec, i);
      } catch (const std::exception& e) {
        std::lock_guard lock(error_mutex);
        if (!failed.exchange(true))
          error = "group " + std::to_string(i) + " (seed " + std::to_string(Rng::derive_seed(spec.seed, StreamKind::Group, i)) +
                  ") failed: " + e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failed) throw std::runtime_error(error);

  const std::size_t k = spec.controllers.size();
  result.mean_throughput.assign(k, 0.0);
  result.mean_power.assign(k, 0.0);
  double bound_sum = 0.0;
  std::size_t bound_n = 0;
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < k; ++c) {
      result.mean_throughput[c] += row.outcomes[c].throughput;
      result.mean_power[c] += row.outcomes[c].power;
    }
    if (row.bound) {
      bound_sum += *row.bound;
      ++bound_n;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    result.mean_throughput[c] /= static_cast<double>(cases);
    result.mean_power[c] /= static_cast<double>(cases);
  }
  if (bound_n) result.mean_bound = bound_sum / static_cast<double>(bound_n);
  return result;
}

// ---------------------------------------------------------------------------

void write_sweep_csv(std::ostream& out, const SweepResult& result, bool with_bound) {
  const auto old = out.precision(10);
  out << "group,seed,p_b,p_b2,p_s,p_s2,p_t,D,N1,N2";
  for (const auto& l : result.labels) out << ',' << l << "_throughput," << l << "_power," << l << "_convergence_slot";
  if (with_bound) out << ",bound";
  out << '\n';

  const std::size_t k = result.labels.size();
  const double n = static_cast<double>(result.rows.size());
  std::vector<double> params_sum(8, 0.0);
  for (const auto& row : result.rows) {
    const auto& p = row.params;
    const double vals[8] = {p.p_b, p.p_b2, p.p_s, p.p_s2, p.p_t, static_cast<double>(p.hard_delay),
                            static_cast<double>(p.n1), static_cast<double>(p.n2)};
    out << row.group << ',' << row.seed << ',' << p.p_b << ',' << p.p_b2 << ',' << p.p_s << ',' << p.p_s2 << ','
        << p.p_t << ',' << p.hard_delay << ',' << p.n1 << ',' << p.n2;
    for (std::size_t i = 0; i < 8; ++i) params_sum[i] += vals[i];
    for (std::size_t c = 0; c < k; ++c) {
      const auto& o = row.outcomes[c];
      out << ',' << o.throughput << ',' << o.power << ',';
      if (o.convergence_slot) out << *o.convergence_slot;
    }
    if (with_bound) {
      out << ',';
      if (row.bound) out << *row.bound;
    }
    out << '\n';
  }

  out << "mean,";
  for (std::size_t i = 0; i < 8; ++i) out << ',' << params_sum[i] / n;
  for (std::size_t c = 0; c < k; ++c) out << ',' << result.mean_throughput[c] << ',' << result.mean_power[c] << ',';
  if (with_bound) {
    out << ',';
    if (result.mean_bound) out << *result.mean_bound;
  }
  out << '\n';
  out.precision(old);
}

void write_series_csv(std::ostream& out, const SweepResult& result, std::size_t block) {
  const auto old = out.precision(10);
  out << "group,D,N1,N2,controller,slot,throughput,power\n";
  for (const auto& row : result.rows) {
    for (std::size_t c = 0; c < result.labels.size(); ++c) {
      const auto& o = row.outcomes[c];
      for (std::size_t b = 0; b < o.throughput_series.size(); ++b)
        out << row.group << ',' << row.params.hard_delay << ',' << row.params.n1 << ',' << row.params.n2 << ','
            << result.labels[c] << ',' << (b + 1) * block << ',' << o.throughput_series[b] << ',' << o.power_series[b]
            << '\n';
    }
  }
  out.precision(old);
}

std::vector<std::filesystem::path> write_outputs(const ExperimentSpec& spec, const SweepResult& result) {
  const auto dir = spec.output_dir.empty() ? default_output_dir() : spec.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::filesystem::path& path, auto&& body) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    body(f);
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + path.string());
    written.push_back(path);
  };
  emit(dir / (spec.stem() + ".csv"), [&](std::ostream& f) { write_sweep_csv(f, result, spec.with_bound); });
  if (spec.kind == ExperimentKind::Convergence && spec.series_block > 0)
    emit(dir / (spec.stem() + "_series.csv"), [&](std::ostream& f) { write_series_csv(f, result, spec.series_block); });
  return written;
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("DCRA_OUTPUT_DIR"); env && *env) return env;
  return "results";
}

}  // namespace dcra
