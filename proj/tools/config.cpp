#include "config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace dcra::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw std::invalid_argument("unknown key '" + key + "' in " + where);
}

Range range_from(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument(std::string("range '") + name + "' must be [lo, hi]");
  return Range{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

ExperimentSpec spec_from_json(const json& j, ExperimentSpec spec) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  reject_unknown(j,
                 {"kind", "name", "params", "sample", "ranges", "hard_delays", "n1_values", "n2_values", "controllers",
                  "groups", "slots", "window", "series_block", "convergence_tol", "with_bound", "seed", "threads",
                  "output_dir"},
                 "config");

  if (j.contains("kind")) spec.kind = parse_experiment_kind(j["kind"].get<std::string>());
  if (j.contains("name")) spec.name = j["name"].get<std::string>();
  if (j.contains("params")) {
    const auto& p = j["params"];
    reject_unknown(p, {"p_b", "p_b2", "p_s", "p_s2", "p_t", "D", "N1", "N2", "arrivals"}, "params");
    if (p.contains("p_b")) spec.params.p_b = p["p_b"].get<double>();
    if (p.contains("p_b2")) spec.params.p_b2 = p["p_b2"].get<double>();
    if (p.contains("p_s")) spec.params.p_s = p["p_s"].get<double>();
    if (p.contains("p_s2")) spec.params.p_s2 = p["p_s2"].get<double>();
    if (p.contains("p_t")) spec.params.p_t = p["p_t"].get<double>();
    if (p.contains("D")) spec.params.hard_delay = p["D"].get<std::size_t>();
    if (p.contains("N1")) spec.params.n1 = p["N1"].get<std::size_t>();
    if (p.contains("N2")) spec.params.n2 = p["N2"].get<std::size_t>();
    if (p.contains("arrivals")) {
      const auto a = p["arrivals"].get<std::string>();
      if (a == "bernoulli") spec.params.arrivals = ArrivalKind::Bernoulli;
      else if (a == "poisson") spec.params.arrivals = ArrivalKind::Poisson;
      else throw std::invalid_argument("arrivals must be 'bernoulli' or 'poisson'");
    }
  }
  if (j.contains("sample")) spec.sample = j["sample"].get<bool>();
  if (j.contains("ranges")) {
    const auto& r = j["ranges"];
    reject_unknown(r, {"arrival", "success", "transmit"}, "ranges");
    if (r.contains("arrival")) spec.ranges.arrival = range_from(r["arrival"], "arrival");
    if (r.contains("success")) spec.ranges.success = range_from(r["success"], "success");
    if (r.contains("transmit")) spec.ranges.transmit = range_from(r["transmit"], "transmit");
  }
  if (j.contains("hard_delays")) spec.hard_delays = j["hard_delays"].get<std::vector<std::size_t>>();
  if (j.contains("n1_values")) spec.n1_values = j["n1_values"].get<std::vector<std::size_t>>();
  if (j.contains("n2_values")) spec.n2_values = j["n2_values"].get<std::vector<std::size_t>>();
  if (j.contains("controllers")) {
    spec.controllers.clear();
    for (const auto& c : j["controllers"]) spec.controllers.push_back(ControllerSpec::parse(c.get<std::string>()));
  }
  if (j.contains("groups")) spec.groups = j["groups"].get<std::size_t>();
  if (j.contains("slots")) spec.slots = j["slots"].get<std::uint64_t>();
  if (j.contains("window")) spec.window = j["window"].get<std::size_t>();
  if (j.contains("series_block")) spec.series_block = j["series_block"].get<std::size_t>();
  if (j.contains("convergence_tol")) spec.convergence_tol = j["convergence_tol"].get<double>();
  if (j.contains("with_bound")) spec.with_bound = j["with_bound"].get<bool>();
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("threads")) spec.threads = j["threads"].get<std::size_t>();
  if (j.contains("output_dir")) spec.output_dir = j["output_dir"].get<std::string>();
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path, ExperimentSpec base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
  try {
    return spec_from_json(j, std::move(base));
  } catch (const json::exception& e) {
    throw std::runtime_error("config " + path.string() + ": " + e.what());
  }
}

json spec_to_json(const ExperimentSpec& s) {
  json controllers = json::array();
  for (const auto& c : s.controllers) controllers.push_back(c.label());
  return {
      {"kind", std::string(to_string(s.kind))},
      {"name", s.stem()},
      {"params",
       {{"p_b", s.params.p_b},
        {"p_b2", s.params.p_b2},
        {"p_s", s.params.p_s},
        {"p_s2", s.params.p_s2},
        {"p_t", s.params.p_t},
        {"D", s.params.hard_delay},
        {"N1", s.params.n1},
        {"N2", s.params.n2},
        {"arrivals", s.params.arrivals == ArrivalKind::Bernoulli ? "bernoulli" : "poisson"}}},
      {"sample", s.sample},
      {"ranges",
       {{"arrival", {s.ranges.arrival.lo, s.ranges.arrival.hi}},
        {"success", {s.ranges.success.lo, s.ranges.success.hi}},
        {"transmit", {s.ranges.transmit.lo, s.ranges.transmit.hi}}}},
      {"hard_delays", s.hard_delays},
      {"n1_values", s.n1_values},
      {"n2_values", s.n2_values},
      {"controllers", controllers},
      {"groups", s.groups},
      {"slots", s.slots},
      {"window", s.window},
      {"series_block", s.series_block},
      {"convergence_tol", s.convergence_tol},
      {"with_bound", s.with_bound},
      {"seed", s.seed},
      {"threads", s.threads},
      {"output_dir", s.output_dir.string()},
  };
}

}  // namespace dcra::cli
