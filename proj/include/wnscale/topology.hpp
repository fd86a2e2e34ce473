#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace wnscale {

using NodeId = std::int32_t;
using Position = std::array<double, 3>;

enum class Regime { dense, extended };

std::string_view to_string(Regime regime);

struct Node {
  NodeId id;
  Position position;  // unused trailing coordinates are zero
};

/// Node density (nodes per unit area or volume) of the extended regime.
inline constexpr double kExtendedDensity = 1.0;

/// Region radius of the dense regime, independent of node count.
inline constexpr double kDenseRadius = 1.0;

/// Connectivity constants c_r: comm radius = c_r * R * (log n / n)^(1/dim).
/// Calibrated so that at n = 64 at least 99% of seeds give a connected graph
/// (see tests/test_topology.cpp).
inline constexpr double kConnectivityConstant2d = 2.0;
inline constexpr double kConnectivityConstant3d = 1.8;

struct Topology {
  std::vector<Node> nodes;
  int dim = 2;
  Regime regime = Regime::dense;
  double region_radius = kDenseRadius;
  std::uint64_t seed = 0;

  std::size_t size() const { return nodes.size(); }
  const Position& position(NodeId id) const { return nodes[static_cast<std::size_t>(id)].position; }
};

double unit_ball_volume(int dim);

/// Radius of the region holding n nodes in the given regime.
double region_radius_for(std::size_t n, int dim, Regime regime);

/// n nodes i.i.d. uniform in the ball of the regime's radius; deterministic in seed.
Topology place_nodes(std::size_t n, int dim, Regime regime, std::uint64_t seed);

double distance(const Position& a, const Position& b, int dim);

/// c_r * R * (log n / n)^(1/dim) with the calibrated constant for topology.dim.
double connectivity_radius(std::size_t n, const Topology& topology);
double connectivity_radius(std::size_t n, const Topology& topology, double constant);

/// Undirected unit-disk graph in compressed adjacency form. Node ids are
/// those of the topology it was built from; nodes excluded from the build
/// are present but isolated.
class ConnectivityGraph {
 public:
  ConnectivityGraph() = default;
  ConnectivityGraph(std::vector<std::vector<NodeId>> adjacency, double comm_radius);

  std::size_t size() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  double comm_radius() const { return comm_radius_; }
  std::size_t edge_count() const { return targets_.size() / 2; }

  // Sorted ascending.
  std::span<const NodeId> neighbors(NodeId u) const {
    const auto idx = static_cast<std::size_t>(u);
    return {targets_.data() + offsets_[idx], targets_.data() + offsets_[idx + 1]};
  }

  bool has_edge(NodeId u, NodeId v) const;

  /// True when every node in `members` is reachable from the first member.
  bool connected(std::span<const NodeId> members) const;
  bool connected() const;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> targets_;
  double comm_radius_ = 0.0;
};

ConnectivityGraph build_graph(const Topology& topology, double comm_radius);

/// Graph restricted to `members`: only edges between two members exist.
ConnectivityGraph build_graph(const Topology& topology, double comm_radius,
                              std::span<const NodeId> members);

struct Cluster {
  NodeId leader;
  std::vector<NodeId> members;  // ascending, includes leader
};

struct ClusterAssignment {
  double g = 0.0;
  std::size_t target_count = 0;  // round(n^(1-g))
  std::vector<Cluster> clusters;
  std::vector<std::size_t> cluster_of;  // node id -> index into clusters

  std::vector<NodeId> leaders() const;
  bool is_leader(NodeId id) const {
    return clusters[cluster_of[static_cast<std::size_t>(id)]].leader == id;
  }
};

/// Geographic grid clustering into about round(n^(1-g)) clusters: one per
/// nonempty grid cell, on the grid whose cell count is closest to the target.
ClusterAssignment form_clusters(const Topology& topology, double g);

/// node_id,x,y[,z] with a leading metadata comment line.
void write_topology_csv(std::ostream& out, const Topology& topology);

}  // namespace wnscale
