#include "wnscale/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>
#include <utility>

#include "json.hpp"
#include "wnscale/erasure.hpp"
#include "wnscale/io.hpp"
#include "wnscale/mobility.hpp"
#include "wnscale/rng.hpp"
#include "wnscale/routing.hpp"
#include "wnscale/topology.hpp"

namespace wnscale {

namespace {

using Json = nlohmann::json;
using Metrics = std::vector<std::pair<std::string, double>>;

constexpr std::size_t kMaxPlacementAttempts = 1000;

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<long>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<long>(mid));
  return (lower + upper) / 2.0;
}

double mean_of(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

Regime parse_regime(const std::string& text) {
  if (text == "dense") return Regime::dense;
  if (text == "extended") return Regime::extended;
  throw ConfigError("regime must be \"dense\" or \"extended\", got \"" + text + "\"");
}

struct Instance {
  Topology topology;
  ConnectivityGraph graph;
  std::size_t attempts = 0;
};

// Redraws the placement (deterministically) until the unit-disk graph is
// connected. `sink_at_origin` pins the last node to the centre.
Instance connected_instance(std::size_t n, int dim, Regime regime, std::uint64_t seed,
                            bool sink_at_origin = false) {
  for (std::size_t attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
    Instance inst;
    inst.topology = place_nodes(n, dim, regime, derive_seed(seed, {attempt}));
    if (sink_at_origin) inst.topology.nodes.back().position = {0.0, 0.0, 0.0};
    inst.graph = build_graph(inst.topology, connectivity_radius(n, inst.topology));
    inst.attempts = attempt + 1;
    if (inst.graph.connected()) return inst;
  }
  throw std::runtime_error("no connected placement in " + std::to_string(kMaxPlacementAttempts) +
                           " attempts");
}

Metrics run_unicast(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed, int dim) {
  const auto inst = connected_instance(n, dim, parse_regime(cfg.params.regime), derive_seed(seed, {0}));
  const auto flows = sample_unicast_pairs(n, derive_seed(seed, {1}));
  const auto routed = route_all(inst.graph, flows);
  const auto loads = compute_loads(routed);
  const auto caps = per_flow_capacity(loads, routed);
  std::vector<double> hops;
  for (const auto& p : routed.paths) hops.push_back(static_cast<double>(p.hops()));
  return {{"median_capacity", median_of(caps.capacity)},
          {"mean_capacity", mean_of(caps.capacity)},
          {"mean_hops", mean_of(hops)},
          {"max_tx_load", static_cast<double>(*std::max_element(loads.tx.begin(), loads.tx.end()))},
          {"placement_attempts", static_cast<double>(inst.attempts)}};
}

Metrics run_receiver(const ScenarioConfig&, std::size_t n, std::uint64_t seed) {
  // n sources plus one sink (id n) at the centre of the disk.
  const auto inst = connected_instance(n + 1, 2, Regime::dense, derive_seed(seed, {0}), true);
  const auto sink = static_cast<NodeId>(n);
  const auto flows = multipoint_to_point(n, sink);
  const auto routed = route_all(inst.graph, flows);
  const auto loads = compute_loads(routed);
  const auto caps = per_flow_capacity(loads, routed);
  const double exact = 1.0 / static_cast<double>(n);
  double worst_error = 0.0;
  for (double c : caps.capacity) worst_error = std::max(worst_error, std::abs(c - exact));
  return {{"median_capacity", median_of(caps.capacity)},
          {"min_capacity", *std::min_element(caps.capacity.begin(), caps.capacity.end())},
          {"max_capacity", *std::max_element(caps.capacity.begin(), caps.capacity.end())},
          {"max_capacity_error", worst_error},
          {"sink_rx_load", static_cast<double>(loads.rx[static_cast<std::size_t>(sink)])}};
}

Metrics run_dumbbell(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed) {
  const auto& prm = cfg.params;
  const auto bell = build_dumbbell(n, prm.bridges, prm.f, derive_seed(seed, {0}));
  const auto routed = route_all(bell.graph, bell.flows);
  const auto loads = compute_loads(routed);
  const auto caps = per_flow_capacity(loads, routed);
  const double bound = law_topological_bottleneck(static_cast<double>(n),
                                                  static_cast<double>(prm.bridges), prm.f);
  std::vector<double> crossing;
  double violations = 0;
  for (std::size_t i = 0; i < bell.crossing.size(); ++i) {
    if (!bell.crossing[i]) continue;
    crossing.push_back(caps.capacity[i]);
    if (caps.capacity[i] > bound) ++violations;
  }
  std::int64_t bridge_load = 0;
  for (NodeId b : bell.bridges) bridge_load = std::max(bridge_load, loads.tx[static_cast<std::size_t>(b)]);
  return {{"median_crossing_capacity", median_of(crossing)},
          {"max_crossing_capacity", *std::max_element(crossing.begin(), crossing.end())},
          {"crossing_flows", static_cast<double>(crossing.size())},
          {"bound_violations", violations},
          {"bridge_max_load", static_cast<double>(bridge_load)},
          {"placement_attempts", static_cast<double>(bell.attempts)}};
}

Metrics run_cluster(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed) {
  const double g = cfg.params.g;
  const auto inst = connected_instance(n, 2, parse_regime(cfg.params.regime), derive_seed(seed, {0}));
  const auto flows = sample_unicast_pairs(n, derive_seed(seed, {1}));
  const auto assignment = form_clusters(inst.topology, g);
  const auto leader_graph =
      build_leader_graph(inst.topology, assignment, inst.graph.comm_radius());
  const auto routed = route_via_leaders(assignment, leader_graph, flows);
  const auto loads = compute_loads(routed);
  const auto caps = per_flow_capacity(loads, routed);

  std::vector<double> inter;
  for (const auto& flow : flows.flows) {
    const auto cs = assignment.cluster_of[static_cast<std::size_t>(flow.source)];
    const auto cd = assignment.cluster_of[static_cast<std::size_t>(flow.destinations.front())];
    if (cs != cd) inter.push_back(caps.capacity[static_cast<std::size_t>(flow.id)]);
  }
  std::int64_t leader_load = 0;
  for (NodeId l : assignment.leaders()) leader_load = std::max(leader_load, loads.tx[static_cast<std::size_t>(l)]);

  Metrics out{{"median_capacity", median_of(caps.capacity)},
              {"inter_cluster_flows", static_cast<double>(inter.size())},
              {"max_leader_tx_load", static_cast<double>(leader_load)},
              {"clusters", static_cast<double>(assignment.clusters.size())},
              {"leader_radius", leader_graph.comm_radius()}};
  if (!inter.empty()) out.emplace_back("median_inter_capacity", median_of(inter));
  if (g == 0.0) {
    const auto plain = route_all(inst.graph, flows);
    bool same = plain.paths.size() == routed.paths.size();
    for (std::size_t i = 0; same && i < plain.paths.size(); ++i)
      same = plain.paths[i].nodes == routed.paths[i].nodes;
    out.emplace_back("paths_identical", same ? 1.0 : 0.0);
  }
  return out;
}

Metrics run_e2e(const ScenarioConfig& cfg, std::size_t hops, std::uint64_t seed) {
  const auto& prm = cfg.params;
  const auto r = simulate_e2e_transfer(hops, prm.p, prm.max_slots, prm.max_slots, seed);
  return {{"throughput", r.throughput},
          {"expected_throughput", e2e_success_probability(hops, prm.p)},
          {"slots", static_cast<double>(r.slots_used)},
          {"delivered", static_cast<double>(r.packets_delivered)}};
}

Metrics run_hop_by_hop(const ScenarioConfig& cfg, std::size_t hops, std::uint64_t seed) {
  const auto r = simulate_hop_by_hop(hops, cfg.params.p, cfg.params.packets, seed);
  return {{"throughput", r.throughput},
          {"window_slots", static_cast<double>(r.slots_used)},
          {"total_slots", static_cast<double>(r.total_slots)}};
}

Metrics run_coded_multicast(const ScenarioConfig& cfg, std::size_t receivers, std::uint64_t seed) {
  const auto& prm = cfg.params;
  const CompletionModel model{prm.k, prm.p, receivers, prm.q};
  const auto exact = min_completion_slots(model);
  const auto mc = simulate_coded_multicast(model, prm.trials, seed);
  Metrics out{{"T_exact", static_cast<double>(exact)},
              {"T_mc_q", static_cast<double>(mc.quantile(prm.q))},
              {"T_mc_mean", mc.mean()},
              {"per_packet_exact", static_cast<double>(exact) / static_cast<double>(prm.k)}};
  for (std::size_t k : prm.k_list) {
    const auto t = min_completion_slots({k, prm.p, receivers, prm.q});
    out.emplace_back("per_packet_k" + std::to_string(k), static_cast<double>(t) / static_cast<double>(k));
  }
  return out;
}

Metrics run_block_synthesis(const ScenarioConfig& cfg, std::size_t receivers, std::uint64_t seed) {
  const auto& prm = cfg.params;
  const auto r = simulate_block_synthesis(prm.block_sizes, prm.p, receivers, prm.q, seed, prm.trials);
  return {{"sequential_total", static_cast<double>(r.sequential_total)},
          {"sequential_per_packet", r.sequential_per_packet},
          {"synthesized_total", static_cast<double>(r.synthesized_total)},
          {"synthesized_per_packet", r.synthesized_per_packet},
          {"synthesized_mean_total", r.synthesized_mean_total},
          {"first_release_slot", static_cast<double>(r.release_slots.front())},
          {"receivers_with_increased_delay", static_cast<double>(r.receivers_with_increased_delay)}};
}

Metrics run_mobility(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed) {
  const auto& prm = cfg.params;
  const auto r = run_mobility_experiment(n, prm.slots, prm.rate, seed, prm.density);
  return {{"throughput_per_node", r.throughput_per_node},
          {"mean_delay", r.mean_delay},
          {"p50", r.p50},
          {"p90", r.p90},
          {"p99", r.p99},
          {"delivered_fraction", r.delivered_fraction},
          {"deliveries", static_cast<double>(r.deliveries)},
          {"max_source_queue", static_cast<double>(r.max_source_queue)},
          {"under_sampled", r.under_sampled ? 1.0 : 0.0}};
}

Metrics run_point(const ScenarioConfig& cfg, std::size_t n, std::uint64_t seed) {
  switch (cfg.scenario) {
    case Scenario::unicast2d: return run_unicast(cfg, n, seed, 2);
    case Scenario::unicast3d: return run_unicast(cfg, n, seed, 3);
    case Scenario::receiver_bottleneck: return run_receiver(cfg, n, seed);
    case Scenario::dumbbell: return run_dumbbell(cfg, n, seed);
    case Scenario::cluster: return run_cluster(cfg, n, seed);
    case Scenario::e2e_erasure: return run_e2e(cfg, n, seed);
    case Scenario::hop_by_hop: return run_hop_by_hop(cfg, n, seed);
    case Scenario::coded_multicast: return run_coded_multicast(cfg, n, seed);
    case Scenario::block_synthesis: return run_block_synthesis(cfg, n, seed);
    case Scenario::mobility: return run_mobility(cfg, n, seed);
  }
  throw std::logic_error("unhandled scenario");
}

// Exponent of a law over the configured n values, via the same fitter.
double law_exponent(const std::vector<std::size_t>& n_list, const std::function<double(double)>& law) {
  ScalingSeries series;
  for (std::size_t n : n_list) series.points.push_back({static_cast<double>(n), law(static_cast<double>(n))});
  return fit_exponent(series).exponent;
}

void add_power_fit(SweepResult& r, const std::string& metric, double predicted, double tol) {
  const auto medians = r.medians(metric);
  if (medians.size() < 3) return;
  FitVerdict v;
  v.metric = metric;
  v.kind = "power";
  v.fit = fit_exponent({medians, metric});
  v.mean_exponent = fit_exponent({r.means(metric), metric}).exponent;
  v.predicted = predicted;
  v.tolerance = tol;
  v.pass = std::abs(v.fit.exponent - predicted) <= tol;
  r.fits.push_back(v);
}

void add_log_linear_fit(SweepResult& r, const std::string& metric, double predicted, double rel_tol) {
  const auto medians = r.medians(metric);
  if (medians.size() < 3) return;
  FitVerdict v;
  v.metric = metric;
  v.kind = "log_linear";
  v.fit = fit_log_linear({medians, metric});
  v.mean_exponent = fit_log_linear({r.means(metric), metric}).exponent;
  v.predicted = predicted;
  v.tolerance = rel_tol * std::abs(predicted);
  v.pass = std::abs(v.fit.exponent - predicted) <= v.tolerance;
  r.fits.push_back(v);
}

void add_flat_fit(SweepResult& r, const std::string& metric, double stderr_multiple) {
  const auto medians = r.medians(metric);
  if (medians.size() < 3) return;
  std::vector<double> x, y;
  for (const auto& p : medians) {
    x.push_back(p.n);
    y.push_back(p.value);
  }
  FitVerdict v;
  v.metric = metric;
  v.kind = "flat";
  v.fit = fit_line(x, y);
  v.mean_exponent = v.fit.exponent;
  v.predicted = 0.0;
  v.tolerance = stderr_multiple * v.fit.standard_error;
  v.pass = std::abs(v.fit.exponent) <= v.tolerance;
  r.fits.push_back(v);
}

std::string fmt(double v) { return format_double(v); }

void evaluate(const ScenarioConfig& cfg, SweepResult& r) {
  const auto& prm = cfg.params;
  const auto& ns = cfg.n_list;
  auto rows_of = [&](const std::string& metric) {
    std::vector<const MetricRow*> out;
    for (const auto& row : r.rows)
      if (row.metric == metric) out.push_back(&row);
    return out;
  };

  switch (cfg.scenario) {
    case Scenario::unicast2d:
    case Scenario::unicast3d: {
      const int dim = cfg.scenario == Scenario::unicast2d ? 2 : 3;
      add_power_fit(r, "median_capacity", law_exponent(ns, [dim](double n) { return law_unicast(n, dim); }),
                    cfg.tolerance("median_capacity"));
      add_power_fit(r, "mean_hops", law_exponent(ns, [dim](double n) { return 1.0 / law_unicast(n, dim); }),
                    cfg.tolerance("mean_hops"));
      break;
    }
    case Scenario::receiver_bottleneck: {
      add_power_fit(r, "median_capacity", law_exponent(ns, law_receiver_bottleneck),
                    cfg.tolerance("median_capacity"));
      Check c{"capacity_exactly_1_over_n", true, "every flow capacity equals 1/n"};
      for (const auto* row : rows_of("max_capacity_error")) {
        if (row->value != 0.0) {
          c.pass = false;
          c.detail = "n=" + std::to_string(row->n) + " repeat=" + std::to_string(row->repeat) +
                     " max |capacity - 1/n| = " + fmt(row->value);
          break;
        }
      }
      r.checks.push_back(c);
      break;
    }
    case Scenario::dumbbell: {
      const double b = static_cast<double>(prm.bridges), f = prm.f;
      add_power_fit(r, "median_crossing_capacity",
                    law_exponent(ns, [b, f](double n) { return law_topological_bottleneck(n, b, f); }),
                    cfg.tolerance("median_crossing_capacity"));
      Check c{"crossing_capacity_within_B_over_fn", true, "no crossing flow above B/(f n)"};
      for (const auto* row : rows_of("bound_violations")) {
        if (row->value != 0.0) {
          c.pass = false;
          c.detail = "n=" + std::to_string(row->n) + ": " + fmt(row->value) + " flows above the bound";
          break;
        }
      }
      r.checks.push_back(c);
      break;
    }
    case Scenario::cluster: {
      const double g = prm.g;
      add_power_fit(r, "median_capacity", law_exponent(ns, [g](double n) { return law_cluster(n, g); }),
                    cfg.tolerance("median_capacity"));
      add_power_fit(r, "max_leader_tx_load",
                    law_exponent(ns, [g](double n) { return 1.0 / law_cluster(n, g); }),
                    cfg.tolerance("max_leader_tx_load"));
      if (g == 0.0) {
        Check c{"g0_paths_identical_to_plain_routing", true, "leader routing equals route_all"};
        for (const auto* row : rows_of("paths_identical")) {
          if (row->value != 1.0) {
            c.pass = false;
            c.detail = "n=" + std::to_string(row->n) + " repeat=" + std::to_string(row->repeat) + " differs";
            break;
          }
        }
        r.checks.push_back(c);
      }
      break;
    }
    case Scenario::e2e_erasure:
      add_log_linear_fit(r, "throughput", std::log1p(-prm.p), cfg.tolerance("throughput_relative_slope"));
      break;
    case Scenario::hop_by_hop: {
      const double expected = 1.0 - prm.p;
      const double sigmas = cfg.tolerance("sigma");
      Check c{"throughput_within_sigma_of_1_minus_p", true, ""};
      const auto thr = rows_of("throughput");
      const auto win = rows_of("window_slots");
      double worst = 0.0;
      for (std::size_t i = 0; i < thr.size(); ++i) {
        const double sigma = std::sqrt(prm.p * (1.0 - prm.p) / win[i]->value);
        const double dev = std::abs(thr[i]->value - expected);
        const double z = sigma > 0.0 ? dev / sigma : (dev == 0.0 ? 0.0 : INFINITY);
        worst = std::max(worst, z);
        if (z > sigmas) c.pass = false;
      }
      c.detail = "worst deviation " + fmt(worst) + " sigma (limit " + fmt(sigmas) + ")";
      r.checks.push_back(c);
      add_flat_fit(r, "throughput", cfg.tolerance("slope_stderr"));
      break;
    }
    case Scenario::coded_multicast: {
      const double gap = cfg.tolerance("mc_slot_gap");
      Check agree{"exact_vs_monte_carlo_quantile", true, ""};
      const auto ex = rows_of("T_exact");
      const auto mc = rows_of("T_mc_q");
      double worst = 0.0;
      for (std::size_t i = 0; i < ex.size(); ++i) worst = std::max(worst, std::abs(ex[i]->value - mc[i]->value));
      agree.pass = worst <= gap;
      agree.detail = "max |T_exact - T_mc_q| = " + fmt(worst) + " (limit " + fmt(gap) + ")";
      r.checks.push_back(agree);

      const auto med = r.medians("T_exact");
      if (med.size() >= 2) {
        const double rise = med.back().value - med.front().value;
        const double limit = cfg.tolerance("max_increase");
        r.checks.push_back({"weak_receiver_dependence", rise <= limit,
                            "T(n=" + fmt(med.back().n) + ") - T(n=" + fmt(med.front().n) + ") = " +
                                fmt(rise) + " (limit " + fmt(limit) + ")"});
      }
      if (prm.k_list.size() >= 2) {
        Check dec{"per_packet_time_decreasing_in_k", true, ""};
        for (const auto& point : r.medians("per_packet_exact")) {
          std::string trace;
          double prev = INFINITY;
          for (std::size_t k : prm.k_list) {
            const auto series = r.medians("per_packet_k" + std::to_string(k));
            const auto it = std::find_if(series.begin(), series.end(),
                                         [&](const ScalingPoint& s) { return s.n == point.n; });
            const double v = it->value;
            trace += (trace.empty() ? "" : " > ") + fmt(v);
            if (!(v < prev)) dec.pass = false;
            prev = v;
          }
          dec.detail += (dec.detail.empty() ? "" : "; ") + std::string("n=") + fmt(point.n) + ": " + trace;
        }
        r.checks.push_back(dec);
      }
      break;
    }
    case Scenario::block_synthesis: {
      const auto seq = r.medians("sequential_per_packet");
      const auto syn = r.medians("synthesized_per_packet");
      const auto inc = r.medians("receivers_with_increased_delay");
      for (std::size_t i = 0; i < seq.size(); ++i) {
        r.checks.push_back({"synthesized_per_packet_not_worse_n" + fmt(seq[i].n), syn[i].value <= seq[i].value,
                            "synthesized " + fmt(syn[i].value) + " vs sequential " + fmt(seq[i].value)});
        r.checks.push_back({"some_receiver_delay_increases_n" + fmt(seq[i].n), inc[i].value >= 1.0,
                            fmt(inc[i].value) + " receivers wait longer than for the first block alone"});
      }
      break;
    }
    case Scenario::mobility: {
      const auto thr = r.medians("throughput_per_node");
      const auto delay = r.medians("mean_delay");
      if (thr.size() >= 2) {
        const double a = thr.front().value, b = thr.back().value;
        const double ratio = std::max(a, b) / std::min(a, b);
        const double limit = cfg.tolerance("throughput_ratio");
        r.checks.push_back({"per_node_throughput_order_one", ratio <= limit,
                            "throughput ratio " + fmt(ratio) + " between n=" + fmt(thr.front().n) +
                                " and n=" + fmt(thr.back().n) + " (limit " + fmt(limit) + ")"});
        Check inc{"mean_delay_increasing_in_n", true, ""};
        for (std::size_t i = 0; i < delay.size(); ++i) {
          inc.detail += (i ? " < " : "") + fmt(delay[i].value);
          if (i > 0 && !(delay[i].value > delay[i - 1].value)) inc.pass = false;
        }
        r.checks.push_back(inc);
      }
      Check sampled{"enough_deliveries", true, "every run has at least 100 deliveries"};
      for (const auto* row : rows_of("under_sampled"))
        if (row->value != 0.0) {
          sampled.pass = false;
          sampled.detail = "n=" + std::to_string(row->n) + " repeat=" + std::to_string(row->repeat) +
                           " is under-sampled";
        }
      r.checks.push_back(sampled);
      break;
    }
  }
}

template <typename T>
T take(const Json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

const std::vector<std::string_view>& scenario_names() {
  static const std::vector<std::string_view> names{
      "unicast2d", "unicast3d", "receiver_bottleneck", "dumbbell", "cluster",
      "e2e_erasure", "hop_by_hop", "coded_multicast", "block_synthesis", "mobility"};
  return names;
}

std::string_view to_string(Scenario scenario) {
  return scenario_names()[static_cast<std::size_t>(scenario)];
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  const auto& names = scenario_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<Scenario>(i);
  return std::nullopt;
}

std::map<std::string, double> default_tolerances(Scenario scenario) {
  switch (scenario) {
    case Scenario::unicast2d: return {{"median_capacity", 0.15}, {"mean_hops", 0.1}};
    case Scenario::unicast3d: return {{"median_capacity", 0.12}, {"mean_hops", 0.1}};
    case Scenario::receiver_bottleneck: return {{"median_capacity", 1e-9}};
    case Scenario::dumbbell: return {{"median_crossing_capacity", 0.1}};
    case Scenario::cluster: return {{"median_capacity", 0.15}, {"max_leader_tx_load", 0.15}};
    case Scenario::e2e_erasure: return {{"throughput_relative_slope", 0.1}};
    case Scenario::hop_by_hop: return {{"sigma", 3.0}, {"slope_stderr", 1.0}};
    case Scenario::coded_multicast: return {{"mc_slot_gap", 2.0}, {"max_increase", 25.0}};
    case Scenario::block_synthesis: return {};
    case Scenario::mobility: return {{"throughput_ratio", 2.0}};
  }
  return {};
}

double ScenarioConfig::tolerance(const std::string& name) const {
  if (auto it = tolerances.find(name); it != tolerances.end()) return it->second;
  const auto defaults = default_tolerances(scenario);
  if (auto it = defaults.find(name); it != defaults.end()) return it->second;
  throw std::logic_error("no tolerance named " + name);
}

ScenarioConfig parse_config(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> top_keys{"scenario", "n_list", "repeats", "seed", "params", "tolerances"};
  for (const auto& [key, _] : doc.items())
    if (!top_keys.count(key)) throw ConfigError("unknown config key '" + key + "'");

  ScenarioConfig cfg;
  if (!doc.contains("scenario")) throw ConfigError("config needs a 'scenario'");
  const auto name = take<std::string>(doc, "scenario", "");
  const auto scenario = parse_scenario(name);
  if (!scenario) throw ConfigError("unknown scenario '" + name + "'");
  cfg.scenario = *scenario;
  cfg.n_list = take<std::vector<std::size_t>>(doc, "n_list", {});
  cfg.repeats = take<std::size_t>(doc, "repeats", 1);
  cfg.seed = take<std::uint64_t>(doc, "seed", 1);

  const Json params = doc.value("params", Json::object());
  if (!params.is_object()) throw ConfigError("'params' must be an object");
  static const std::set<std::string> param_keys{
      "regime", "g", "B", "f", "p", "C", "max_slots", "packets", "k", "k_list", "q",
      "trials", "block_sizes", "slots", "rate", "density"};
  for (const auto& [key, _] : params.items())
    if (!param_keys.count(key)) throw ConfigError("unknown parameter '" + key + "'");
  auto& prm = cfg.params;
  prm.regime = take(params, "regime", prm.regime);
  prm.g = take(params, "g", prm.g);
  prm.bridges = take(params, "B", prm.bridges);
  prm.f = take(params, "f", prm.f);
  prm.p = take(params, "p", prm.p);
  prm.hop_constant = take(params, "C", prm.hop_constant);
  prm.max_slots = take(params, "max_slots", prm.max_slots);
  prm.packets = take(params, "packets", prm.packets);
  prm.k = take(params, "k", prm.k);
  prm.k_list = take(params, "k_list", prm.k_list);
  prm.q = take(params, "q", prm.q);
  prm.trials = take(params, "trials", prm.trials);
  prm.block_sizes = take(params, "block_sizes", prm.block_sizes);
  prm.slots = take(params, "slots", prm.slots);
  prm.rate = take(params, "rate", prm.rate);
  prm.density = take(params, "density", prm.density);

  const Json tol = doc.value("tolerances", Json::object());
  if (!tol.is_object()) throw ConfigError("'tolerances' must be an object");
  const auto known = default_tolerances(cfg.scenario);
  for (const auto& [key, value] : tol.items()) {
    if (!known.count(key)) throw ConfigError("unknown tolerance '" + key + "' for scenario " + name);
    if (!value.is_number()) throw ConfigError("tolerance '" + key + "' must be a number");
    cfg.tolerances[key] = value.get<double>();
  }
  validate(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.n_list.empty()) throw ConfigError("n_list must not be empty");
  for (std::size_t i = 1; i < cfg.n_list.size(); ++i)
    if (cfg.n_list[i] <= cfg.n_list[i - 1]) throw ConfigError("n_list must be strictly ascending");
  if (cfg.repeats < 1) throw ConfigError("repeats must be at least 1");
  const auto& prm = cfg.params;
  const std::size_t n_min = cfg.n_list.front();
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  auto check_p = [&] { need(prm.p >= 0.0 && prm.p < 1.0, "p must lie in [0, 1)"); };
  auto check_q = [&] { need(prm.q > 0.0 && prm.q < 1.0, "q must lie in (0, 1)"); };
  for (const auto& [key, value] : cfg.tolerances) need(value >= 0.0, "tolerance '" + key + "' must be >= 0");

  switch (cfg.scenario) {
    case Scenario::unicast2d:
    case Scenario::unicast3d:
    case Scenario::cluster:
      need(n_min >= 2, "routing scenarios need n >= 2");
      need(prm.regime == "dense" || prm.regime == "extended", "regime must be dense or extended");
      if (cfg.scenario == Scenario::cluster) need(prm.g >= 0.0 && prm.g <= 1.0, "g must lie in [0, 1]");
      break;
    case Scenario::receiver_bottleneck:
      need(n_min >= 1, "receiver_bottleneck needs n >= 1");
      break;
    case Scenario::dumbbell:
      need(prm.bridges >= 1, "B must be at least 1");
      need(prm.f > 0.0 && prm.f <= 1.0, "f must lie in (0, 1]");
      for (std::size_t n : cfg.n_list) {
        need(n >= 4 && n % 2 == 0, "dumbbell n must be even and at least 4");
        need(prm.bridges <= n, "B must not exceed n");
        need(std::llround(prm.f * static_cast<double>(n) / 2.0) >= 1, "f * n too small for a crossing flow");
      }
      break;
    case Scenario::e2e_erasure:
      check_p();
      need(n_min >= 1, "hop counts must be >= 1");
      need(prm.max_slots >= 1, "max_slots must be at least 1");
      break;
    case Scenario::hop_by_hop:
      check_p();
      need(n_min >= 1, "hop counts must be >= 1");
      need(prm.packets >= 1, "packets must be at least 1");
      break;
    case Scenario::coded_multicast:
      check_p();
      check_q();
      need(n_min >= 1, "receiver counts must be >= 1");
      need(prm.k >= 1, "k must be at least 1");
      need(prm.trials >= 1, "trials must be at least 1");
      for (std::size_t i = 0; i < prm.k_list.size(); ++i) {
        need(prm.k_list[i] >= 1, "k_list entries must be >= 1");
        if (i > 0) need(prm.k_list[i] > prm.k_list[i - 1], "k_list must be strictly ascending");
      }
      break;
    case Scenario::block_synthesis:
      check_p();
      check_q();
      need(n_min >= 1, "receiver counts must be >= 1");
      need(prm.block_sizes.size() >= 2, "block_sizes needs at least 2 transmitters");
      for (std::size_t k : prm.block_sizes) need(k >= 1, "block sizes must be >= 1");
      need(prm.trials >= 1, "trials must be at least 1");
      break;
    case Scenario::mobility:
      need(n_min >= 2, "mobility needs n >= 2");
      need(prm.slots >= 1, "slots must be at least 1");
      need(prm.rate >= 0.0 && prm.rate <= 1.0, "rate must lie in [0, 1]");
      need(prm.density > 0.0, "density must be positive");
      break;
  }
}

std::uint64_t point_seed(std::uint64_t master, std::size_t n, std::size_t repeat) {
  return derive_seed(master, {n, repeat});
}

bool SweepResult::passed() const {
  return failures.empty() && std::all_of(fits.begin(), fits.end(), [](const auto& f) { return f.pass; }) &&
         std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const FitVerdict* SweepResult::fit(std::string_view metric) const {
  for (const auto& f : fits)
    if (f.metric == metric) return &f;
  return nullptr;
}

const Check* SweepResult::check(std::string_view name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

std::vector<ScalingPoint> aggregate(const std::vector<MetricRow>& rows, std::string_view metric,
                                    double (*reduce)(const std::vector<double>&)) {
  std::map<std::size_t, std::vector<double>> by_n;
  for (const auto& row : rows)
    if (row.metric == metric) by_n[row.n].push_back(row.value);
  std::vector<ScalingPoint> out;
  for (const auto& [n, values] : by_n) out.push_back({static_cast<double>(n), reduce(values)});
  return out;
}

double median_ref(const std::vector<double>& v) { return median_of(v); }

}  // namespace

std::vector<ScalingPoint> SweepResult::medians(std::string_view metric) const {
  return aggregate(rows, metric, median_ref);
}

std::vector<ScalingPoint> SweepResult::means(std::string_view metric) const {
  return aggregate(rows, metric, mean_of);
}

SweepResult run_scenario(const ScenarioConfig& config, std::size_t jobs) {
  validate(config);
  struct Point {
    std::size_t n, repeat;
    std::uint64_t seed;
    Metrics metrics;
    std::string error;
  };
  std::vector<Point> points;
  for (std::size_t n : config.n_list)
    for (std::size_t rep = 0; rep < config.repeats; ++rep)
      points.push_back({n, rep, point_seed(config.seed, n, rep), {}, {}});

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      auto& pt = points[i];
      try {
        pt.metrics = run_point(config, pt.n, pt.seed);
      } catch (const std::exception& e) {
        pt.error = e.what();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, points.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SweepResult result;
  result.scenario = std::string(to_string(config.scenario));
  for (const auto& pt : points) {
    if (!pt.error.empty()) {
      result.failures.push_back({pt.n, pt.repeat, pt.seed, pt.error});
      continue;
    }
    for (const auto& [metric, value] : pt.metrics) result.rows.push_back({pt.n, pt.repeat, pt.seed, metric, value});
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const MetricRow& a, const MetricRow& b) {
    return std::tie(a.n, a.repeat, a.metric) < std::tie(b.n, b.repeat, b.metric);
  });
  evaluate(config, result);
  return result;
}

std::filesystem::path summary_path_for(const std::filesystem::path& csv_path) {
  auto out = csv_path;
  out.replace_extension(".summary.json");
  return out;
}

void write_results(const SweepResult& result, const std::filesystem::path& csv_path) {
  {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write results to " + csv_path.string());
    out << kResultsHeader << '\n';
    for (const auto& row : result.rows)
      out << result.scenario << ',' << row.n << ',' << row.repeat << ',' << row.seed << ',' << row.metric
          << ',' << format_double(row.value) << '\n';
    if (!out) throw std::runtime_error("error while writing " + csv_path.string());
  }

  nlohmann::ordered_json summary;
  summary["scenario"] = result.scenario;
  summary["passed"] = result.passed();
  summary["fits"] = nlohmann::ordered_json::array();
  for (const auto& f : result.fits) {
    summary["fits"].push_back({{"metric", f.metric},
                               {"kind", f.kind},
                               {"exponent", f.fit.exponent},
                               {"intercept", f.fit.intercept},
                               {"stderr", f.fit.standard_error},
                               {"r_squared", f.fit.r_squared},
                               {"mean_exponent", f.mean_exponent},
                               {"predicted", f.predicted},
                               {"tolerance", f.tolerance},
                               {"pass", f.pass}});
  }
  summary["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : result.checks)
    summary["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  summary["failures"] = nlohmann::ordered_json::array();
  for (const auto& f : result.failures)
    summary["failures"].push_back(
        {{"n", f.n}, {"repeat", f.repeat}, {"seed", f.seed}, {"message", f.message}});

  const auto path = summary_path_for(csv_path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write summary to " + path.string());
  out << summary.dump(2) << '\n';
  if (!out) throw std::runtime_error("error while writing " + path.string());
}

std::vector<MetricRow> read_results(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != split_csv_line(kResultsHeader))
    throw std::runtime_error(csv_path.string() + ": expected header '" + std::string(kResultsHeader) + "'");
  std::vector<MetricRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw std::runtime_error(csv_path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    try {
      rows.push_back({std::stoull(f[1]), std::stoull(f[2]), std::stoull(f[3]), f[4], std::stod(f[5])});
    } catch (const std::exception&) {
      throw std::runtime_error(csv_path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
  }
  return rows;
}

}  // namespace wnscale
