#include "wnscale/routing.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <utility>

#include "wnscale/rng.hpp"

namespace wnscale {

namespace {

struct Leg {
  std::size_t slot;  // index into RoutedFlows::paths
  int flow_id;
  NodeId source;
};

// Breadth-first search from a target with early exit once every requested
// source is labelled. Nodes closer than the farthest source are all labelled
// by then, which is all the forward walk needs.
class BfsRouter {
 public:
  explicit BfsRouter(const ConnectivityGraph& graph)
      : graph_(graph), dist_(graph.size(), -1), wanted_(graph.size(), 0) {}

  // Appends source..target for every leg into paths[leg.slot].
  void route(NodeId target, const std::vector<Leg>& legs, std::vector<Path>& paths) {
    reset();
    label(target, 0);
    std::size_t pending = 0;
    for (const auto& leg : legs) {
      auto& flag = wanted_[idx(leg.source)];
      if (!flag && dist_[idx(leg.source)] < 0) {
        flag = 1;
        ++pending;
      }
    }

    for (std::size_t head = 0; head < queue_.size() && pending > 0; ++head) {
      const NodeId u = queue_[head];
      for (NodeId v : graph_.neighbors(u)) {
        if (dist_[idx(v)] >= 0) continue;
        label(v, dist_[idx(u)] + 1);
        if (wanted_[idx(v)] && --pending == 0) break;
      }
    }

    for (const auto& leg : legs) wanted_[idx(leg.source)] = 0;

    for (const auto& leg : legs) {
      if (dist_[idx(leg.source)] < 0) {
        throw RoutingError("flow " + std::to_string(leg.flow_id) + " (" +
                           std::to_string(leg.source) + " -> " + std::to_string(target) +
                           "): destination unreachable");
      }
      auto& nodes = paths[leg.slot].nodes;
      NodeId cur = leg.source;
      nodes.push_back(cur);
      while (cur != target) {
        const int want = dist_[idx(cur)] - 1;
        for (NodeId v : graph_.neighbors(cur)) {  // ascending: first match is smallest id
          if (dist_[idx(v)] == want) {
            cur = v;
            break;
          }
        }
        nodes.push_back(cur);
      }
    }
  }

 private:
  static std::size_t idx(NodeId v) { return static_cast<std::size_t>(v); }

  void label(NodeId v, int d) {
    dist_[idx(v)] = d;
    queue_.push_back(v);
  }

  void reset() {
    for (NodeId v : queue_) dist_[idx(v)] = -1;
    queue_.clear();
  }

  const ConnectivityGraph& graph_;
  std::vector<int> dist_;
  std::vector<char> wanted_;
  std::vector<NodeId> queue_;
};

void check_flow(const Flow& flow, std::size_t node_count) {
  auto valid = [&](NodeId v) { return v >= 0 && static_cast<std::size_t>(v) < node_count; };
  if (!valid(flow.source)) throw RoutingError("flow " + std::to_string(flow.id) + ": source out of range");
  for (NodeId d : flow.destinations) {
    if (!valid(d)) throw RoutingError("flow " + std::to_string(flow.id) + ": destination out of range");
    if (d == flow.source)
      throw RoutingError("flow " + std::to_string(flow.id) + ": source is its own destination");
  }
}

// Lays out one path slot per (flow, destination) in flow order.
RoutedFlows allocate(const FlowSet& flows, std::size_t node_count) {
  RoutedFlows routed;
  routed.node_count = node_count;
  routed.flow_count = flows.flows.size();
  for (const auto& flow : flows.flows) {
    check_flow(flow, node_count);
    for (std::size_t i = 0; i < flow.destinations.size(); ++i)
      routed.paths.push_back({flow.id, {}});
  }
  return routed;
}

}  // namespace

FlowSet sample_unicast_pairs(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sample_unicast_pairs: n must be at least 2");
  Rng rng(seed);
  std::vector<NodeId> perm(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<NodeId>(i);
    shuffle(perm.begin(), perm.end(), rng);
    bool fixed_point = false;
    for (std::size_t i = 0; i < n && !fixed_point; ++i) fixed_point = perm[i] == static_cast<NodeId>(i);
    if (!fixed_point) break;
  }
  FlowSet out;
  out.kind = FlowKind::unicast_pairs;
  out.seed = seed;
  for (std::size_t i = 0; i < n; ++i)
    out.flows.push_back({static_cast<int>(i), static_cast<NodeId>(i), {perm[i]}});
  return out;
}

FlowSet multipoint_to_point(std::size_t sources, NodeId sink) {
  FlowSet out;
  out.kind = FlowKind::multipoint_to_point;
  for (std::size_t i = 0; i < sources; ++i) {
    const auto source = static_cast<NodeId>(i);
    if (source == sink) continue;
    out.flows.push_back({static_cast<int>(out.flows.size()), source, {sink}});
  }
  return out;
}

FlowSet sample_multicast(std::size_t n, double destination_fraction, std::uint64_t seed) {
  if (!(destination_fraction > 0.0 && destination_fraction <= 1.0))
    throw std::invalid_argument("sample_multicast: destination fraction must lie in (0, 1]");
  std::vector<NodeId> group(n);
  for (std::size_t i = 0; i < n; ++i) group[i] = static_cast<NodeId>(i);
  if (destination_fraction < 1.0) {
    Rng rng(seed);
    shuffle(group.begin(), group.end(), rng);
    const auto size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(destination_fraction * static_cast<double>(n))));
    group.resize(size);
    std::sort(group.begin(), group.end());
  }
  FlowSet out;
  out.kind = FlowKind::multicast;
  out.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    Flow flow{static_cast<int>(i), static_cast<NodeId>(i), {}};
    for (NodeId d : group)
      if (d != flow.source) flow.destinations.push_back(d);
    if (!flow.destinations.empty()) out.flows.push_back(std::move(flow));
  }
  return out;
}

RoutedFlows route_all(const ConnectivityGraph& graph, const FlowSet& flows) {
  RoutedFlows routed = allocate(flows, graph.size());
  std::map<NodeId, std::vector<Leg>> by_target;
  std::size_t slot = 0;
  for (const auto& flow : flows.flows)
    for (NodeId d : flow.destinations) by_target[d].push_back({slot++, flow.id, flow.source});

  BfsRouter router(graph);
  for (const auto& [target, legs] : by_target) router.route(target, legs, routed.paths);
  return routed;
}

LoadMap compute_loads(const RoutedFlows& routed) {
  LoadMap loads;
  loads.tx.assign(routed.node_count, 0);
  loads.rx.assign(routed.node_count, 0);
  std::vector<int> last_tx(routed.node_count, -1), last_rx(routed.node_count, -1);
  // Paths of one flow are contiguous, so a per-node "last flow seen" stamp
  // counts each flow once per node.
  for (const auto& path : routed.paths) {
    for (std::size_t i = 0; i < path.nodes.size(); ++i) {
      const auto v = static_cast<std::size_t>(path.nodes[i]);
      if (i + 1 < path.nodes.size() && last_tx[v] != path.flow_id) {
        last_tx[v] = path.flow_id;
        ++loads.tx[v];
      }
      if (i > 0 && last_rx[v] != path.flow_id) {
        last_rx[v] = path.flow_id;
        ++loads.rx[v];
      }
    }
  }
  return loads;
}

PerFlowCapacity per_flow_capacity(const LoadMap& loads, const RoutedFlows& routed) {
  std::vector<std::int64_t> worst(routed.flow_count, 0);
  int max_id = -1;
  for (const auto& path : routed.paths) max_id = std::max(max_id, path.flow_id);
  if (static_cast<std::size_t>(max_id + 1) > worst.size()) worst.resize(static_cast<std::size_t>(max_id + 1), 0);
  for (const auto& path : routed.paths) {
    auto& w = worst[static_cast<std::size_t>(path.flow_id)];
    for (NodeId v : path.nodes) {
      const auto i = static_cast<std::size_t>(v);
      w = std::max({w, loads.tx[i], loads.rx[i]});
    }
  }
  PerFlowCapacity out;
  out.capacity.reserve(worst.size());
  for (auto w : worst) out.capacity.push_back(w > 0 ? 1.0 / static_cast<double>(w) : 1.0);
  return out;
}

ConnectivityGraph build_leader_graph(const Topology& topology,
                                     const ClusterAssignment& assignment, double base_radius) {
  const auto leaders = assignment.leaders();
  double radius = base_radius;
  while (true) {
    auto graph = build_graph(topology, radius, leaders);
    if (graph.connected(leaders)) return graph;
    radius *= 1.25;
  }
}

RoutedFlows route_via_leaders(const ClusterAssignment& assignment,
                              const ConnectivityGraph& leader_graph, const FlowSet& flows) {
  const std::size_t n = assignment.cluster_of.size();
  RoutedFlows routed = allocate(flows, n);
  auto leader_of = [&](NodeId v) {
    return assignment.clusters[assignment.cluster_of[static_cast<std::size_t>(v)]].leader;
  };

  // Backbone legs grouped by destination leader.
  struct Pending {
    std::size_t slot;
    NodeId source;
    NodeId destination;
  };
  std::map<NodeId, std::vector<Leg>> by_leader;
  std::vector<Pending> inter;
  std::size_t slot = 0;
  for (const auto& flow : flows.flows) {
    for (NodeId d : flow.destinations) {
      const NodeId s = flow.source;
      const NodeId ls = leader_of(s), ld = leader_of(d);
      auto& nodes = routed.paths[slot].nodes;
      if (ls == ld) {
        nodes.push_back(s);
        if (s != ls && d != ls) nodes.push_back(ls);
        nodes.push_back(d);
      } else {
        by_leader[ld].push_back({slot, flow.id, ls});
        inter.push_back({slot, s, d});
      }
      ++slot;
    }
  }

  std::vector<Path> backbone(routed.paths.size());
  BfsRouter router(leader_graph);
  try {
    for (const auto& [target, legs] : by_leader) router.route(target, legs, backbone);
  } catch (const RoutingError& e) {
    throw RoutingError(std::string("leader backbone disconnected: ") + e.what());
  }

  for (const auto& p : inter) {
    auto& nodes = routed.paths[p.slot].nodes;
    const auto& core = backbone[p.slot].nodes;
    if (p.source != core.front()) nodes.push_back(p.source);
    nodes.insert(nodes.end(), core.begin(), core.end());
    if (p.destination != core.back()) nodes.push_back(p.destination);
  }
  return routed;
}

Dumbbell build_dumbbell(std::size_t n, std::size_t bridges, double f, std::uint64_t seed) {
  if (bridges < 1) throw std::invalid_argument("build_dumbbell: need at least one bridge node");
  if (bridges > n) throw std::invalid_argument("build_dumbbell: more bridge nodes than nodes");
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("build_dumbbell: n must be even and at least 4");
  if (!(f > 0.0 && f <= 1.0)) throw std::invalid_argument("build_dumbbell: f must lie in (0, 1]");

  const std::size_t half = n / 2;
  const auto per_side =
      static_cast<std::size_t>(std::llround(f * static_cast<double>(n) / 2.0));
  if (per_side == 0) throw std::invalid_argument("build_dumbbell: f * n too small for any crossing flow");

  // Radius that connects half nodes in a half-disk of unit radius (same area
  // as a disk of radius sqrt(1/2)).
  const double hd = static_cast<double>(half);
  const double radius =
      kConnectivityConstant2d * std::sqrt(0.5) * std::sqrt(std::log(std::max(hd, 2.0)) / hd);
  const double spacing = 0.8 * radius;
  const double gap = static_cast<double>(bridges - 1) * spacing / 2.0 + 0.6 * radius;

  Dumbbell out;
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt == 10000) throw std::runtime_error("build_dumbbell: no connected placement found");
    Rng rng(derive_seed(seed, {attempt, 0}));
    Topology topology;
    topology.dim = 2;
    topology.regime = Regime::dense;
    topology.seed = seed;
    topology.region_radius = gap + 1.0;
    for (int side = 0; side < 2; ++side) {
      const double sign = side == 0 ? -1.0 : 1.0;
      for (std::size_t i = 0; i < half;) {
        const double x = rng.uniform(0.0, 1.0), y = rng.uniform(-1.0, 1.0);
        if (x * x + y * y > 1.0) continue;
        topology.nodes.push_back({static_cast<NodeId>(topology.nodes.size()),
                                  {sign * (gap + x), y, 0.0}});
        ++i;
      }
    }
    for (std::size_t b = 0; b < bridges; ++b) {
      const double x = (static_cast<double>(b) - static_cast<double>(bridges - 1) / 2.0) * spacing;
      topology.nodes.push_back({static_cast<NodeId>(topology.nodes.size()), {x, 0.0, 0.0}});
    }
    auto graph = build_graph(topology, radius);
    if (!graph.connected()) continue;
    out.topology = std::move(topology);
    out.graph = std::move(graph);
    out.attempts = attempt + 1;
    break;
  }
  for (std::size_t b = 0; b < bridges; ++b) out.bridges.push_back(static_cast<NodeId>(n + b));

  // Flow pattern: per side, per_side sources cross and per_side nodes receive
  // crossing flows; the rest pair up within the side with no fixed points.
  Rng rng(derive_seed(seed, {0, 1}));
  std::vector<NodeId> dest(n, -1);
  std::vector<bool> crosses(n, false);
  while (true) {
    std::array<std::vector<NodeId>, 2> sources, targets;
    for (int side = 0; side < 2; ++side) {
      std::vector<NodeId> ids(half);
      for (std::size_t i = 0; i < half; ++i) ids[i] = static_cast<NodeId>(side * half + i);
      sources[side] = ids;
      targets[side] = ids;
      shuffle(sources[side].begin(), sources[side].end(), rng);
      shuffle(targets[side].begin(), targets[side].end(), rng);
    }
    bool ok = true;
    for (int side = 0; side < 2 && ok; ++side) {
      const int other = 1 - side;
      // First per_side shuffled sources cross to the other side's first
      // per_side shuffled targets.
      for (std::size_t i = 0; i < per_side; ++i) {
        dest[static_cast<std::size_t>(sources[side][i])] = targets[other][i];
        crosses[static_cast<std::size_t>(sources[side][i])] = true;
      }
      std::vector<NodeId> local_src(sources[side].begin() + static_cast<long>(per_side), sources[side].end());
      std::vector<NodeId> local_dst(targets[side].begin() + static_cast<long>(per_side), targets[side].end());
      std::sort(local_src.begin(), local_src.end());
      bool found = local_src.empty();
      for (int tries = 0; tries < 64 && !found; ++tries) {
        shuffle(local_dst.begin(), local_dst.end(), rng);
        found = true;
        for (std::size_t i = 0; i < local_src.size() && found; ++i) found = local_src[i] != local_dst[i];
      }
      if (!found) {
        ok = false;
        break;
      }
      for (std::size_t i = 0; i < local_src.size(); ++i) {
        dest[static_cast<std::size_t>(local_src[i])] = local_dst[i];
        crosses[static_cast<std::size_t>(local_src[i])] = false;
      }
    }
    if (ok) break;
  }

  out.flows.kind = FlowKind::unicast_pairs;
  out.flows.seed = seed;
  for (std::size_t i = 0; i < n; ++i) {
    out.flows.flows.push_back({static_cast<int>(i), static_cast<NodeId>(i), {dest[i]}});
    out.crossing.push_back(crosses[i]);
  }
  return out;
}

void write_routes_csv(std::ostream& out, const RoutedFlows& routed) {
  out << "flow_id,hop_index,node_id\n";
  for (const auto& path : routed.paths)
    for (std::size_t i = 0; i < path.nodes.size(); ++i)
      out << path.flow_id << ',' << i << ',' << path.nodes[i] << '\n';
}

void write_loads_csv(std::ostream& out, const LoadMap& loads) {
  out << "node_id,tx_load,rx_load\n";
  for (std::size_t i = 0; i < loads.tx.size(); ++i)
    out << i << ',' << loads.tx[i] << ',' << loads.rx[i] << '\n';
}

}  // namespace wnscale
