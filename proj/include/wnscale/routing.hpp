#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "wnscale/topology.hpp"

namespace wnscale {

enum class FlowKind { unicast_pairs, multipoint_to_point, multicast };

struct Flow {
  int id;
  NodeId source;
  std::vector<NodeId> destinations;
};

struct FlowSet {
  FlowKind kind = FlowKind::unicast_pairs;
  std::vector<Flow> flows;
  std::uint64_t seed = 0;
};

/// One routed source-to-destination path. A multicast flow contributes one
/// path per destination, all sharing the flow id.
struct Path {
  int flow_id;
  std::vector<NodeId> nodes;  // source first, destination last

  std::size_t hops() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

struct RoutedFlows {
  std::vector<Path> paths;
  std::size_t node_count = 0;
  std::size_t flow_count = 0;
};

/// Per-node loads counted in distinct flows. A node carries transmit load
/// for a flow when it is the source or a relay on one of its paths, and
/// receive load when it is anything but the source.
struct LoadMap {
  std::vector<std::int64_t> tx;
  std::vector<std::int64_t> rx;
};

struct PerFlowCapacity {
  std::vector<double> capacity;  // indexed by flow id
};

class RoutingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform derangement pairing: flow i goes from node i to dest(i) != i.
FlowSet sample_unicast_pairs(std::size_t n, std::uint64_t seed);

/// Sources 0..n-1 each send one flow to `sink`.
FlowSet multipoint_to_point(std::size_t sources, NodeId sink);

/// Every node sends one flow to a common group. The group is all nodes when
/// destination_fraction is 1, else a uniform subset of
/// round(fraction * n) nodes; a source never lists itself.
FlowSet sample_multicast(std::size_t n, double destination_fraction, std::uint64_t seed);

/// BFS shortest paths; among equal-length next hops the smallest id wins.
RoutedFlows route_all(const ConnectivityGraph& graph, const FlowSet& flows);

LoadMap compute_loads(const RoutedFlows& routed);

/// Capacity of a flow = min over its path nodes v of 1 / max(tx(v), rx(v)).
PerFlowCapacity per_flow_capacity(const LoadMap& loads, const RoutedFlows& routed);

/// Leader graph: the connectivity graph over the leaders with the smallest
/// radius (base radius grown by 25% steps) that connects them.
ConnectivityGraph build_leader_graph(const Topology& topology,
                                     const ClusterAssignment& assignment,
                                     double base_radius);

/// Intra-cluster flows go member -> leader -> member; inter-cluster flows go
/// source -> own leader -> leader backbone -> destination leader -> destination.
RoutedFlows route_via_leaders(const ClusterAssignment& assignment,
                              const ConnectivityGraph& leader_graph, const FlowSet& flows);

struct Dumbbell {
  Topology topology;
  ConnectivityGraph graph;
  FlowSet flows;
  std::vector<NodeId> bridges;
  std::vector<bool> crossing;  // by flow id
  std::size_t attempts = 1;    // placements drawn until the instance was valid
};

/// Two half-disks of n/2 nodes each, joined only through a chain of B bridge
/// nodes (ids n..n+B-1). Exactly 2*round(f*n/2) flows cross between sides.
Dumbbell build_dumbbell(std::size_t n, std::size_t bridges, double f, std::uint64_t seed);

/// flow_id,hop_index,node_id
void write_routes_csv(std::ostream& out, const RoutedFlows& routed);

/// node_id,tx_load,rx_load
void write_loads_csv(std::ostream& out, const LoadMap& loads);

}  // namespace wnscale
