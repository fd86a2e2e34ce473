#include "wnscale/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "wnscale/io.hpp"
#include "wnscale/rng.hpp"

namespace wnscale {

namespace {

void check_dim(int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("dim must be 2 or 3, got " + std::to_string(dim));
}

double squared_distance(const Position& a, const Position& b, int dim) {
  double sum = 0.0;
  for (int axis = 0; axis < dim; ++axis) {
    const double d = a[axis] - b[axis];
    sum += d * d;
  }
  return sum;
}

// Number of cells of an s^dim grid over [-1,1]^dim whose interior meets the
// open unit ball.
std::size_t cells_meeting_ball(std::size_t s, int dim) {
  const double width = 2.0 / static_cast<double>(s);
  auto nearest_sq = [&](std::size_t i) {
    const double lo = -1.0 + width * static_cast<double>(i);
    const double hi = lo + width;
    const double c = std::clamp(0.0, lo, hi);
    return c * c;
  };
  std::size_t count = 0;
  if (dim == 2) {
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        if (nearest_sq(i) + nearest_sq(j) < 1.0) ++count;
  } else {
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < s; ++j)
        for (std::size_t k = 0; k < s; ++k)
          if (nearest_sq(i) + nearest_sq(j) + nearest_sq(k) < 1.0) ++count;
  }
  return count;
}

}  // namespace

std::string_view to_string(Regime regime) {
  return regime == Regime::dense ? "dense" : "extended";
}

double unit_ball_volume(int dim) {
  check_dim(dim);
  return dim == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
}

double region_radius_for(std::size_t n, int dim, Regime regime) {
  check_dim(dim);
  if (regime == Regime::dense) return kDenseRadius;
  const double volume = static_cast<double>(n) / kExtendedDensity;
  return std::pow(volume / unit_ball_volume(dim), 1.0 / dim);
}

Topology place_nodes(std::size_t n, int dim, Regime regime, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("place_nodes: n must be at least 1");
  check_dim(dim);
  Topology topology;
  topology.dim = dim;
  topology.regime = regime;
  topology.seed = seed;
  topology.region_radius = region_radius_for(n, dim, regime);
  topology.nodes.reserve(n);

  const double radius = topology.region_radius;
  Rng rng(seed);
  while (topology.nodes.size() < n) {
    Position p{0.0, 0.0, 0.0};
    double norm_sq = 0.0;
    for (int axis = 0; axis < dim; ++axis) {
      p[axis] = rng.uniform(-1.0, 1.0);
      norm_sq += p[axis] * p[axis];
    }
    if (norm_sq > 1.0) continue;
    for (int axis = 0; axis < dim; ++axis) p[axis] *= radius;
    topology.nodes.push_back({static_cast<NodeId>(topology.nodes.size()), p});
  }
  return topology;
}

double distance(const Position& a, const Position& b, int dim) {
  return std::sqrt(squared_distance(a, b, dim));
}

double connectivity_radius(std::size_t n, const Topology& topology) {
  const double constant = topology.dim == 2 ? kConnectivityConstant2d : kConnectivityConstant3d;
  return connectivity_radius(n, topology, constant);
}

double connectivity_radius(std::size_t n, const Topology& topology, double constant) {
  if (n < 2) throw std::invalid_argument("connectivity_radius: n must be at least 2");
  const double nd = static_cast<double>(n);
  return constant * topology.region_radius * std::pow(std::log(nd) / nd, 1.0 / topology.dim);
}

ConnectivityGraph::ConnectivityGraph(std::vector<std::vector<NodeId>> adjacency,
                                     double comm_radius)
    : comm_radius_(comm_radius) {
  offsets_.reserve(adjacency.size() + 1);
  offsets_.push_back(0);
  for (auto& list : adjacency) {
    std::sort(list.begin(), list.end());
    targets_.insert(targets_.end(), list.begin(), list.end());
    offsets_.push_back(targets_.size());
  }
}

bool ConnectivityGraph::has_edge(NodeId u, NodeId v) const {
  const auto list = neighbors(u);
  return std::binary_search(list.begin(), list.end(), v);
}

bool ConnectivityGraph::connected(std::span<const NodeId> members) const {
  if (members.size() <= 1) return true;
  std::vector<char> seen(size(), 0);
  std::vector<NodeId> stack{members.front()};
  seen[static_cast<std::size_t>(members.front())] = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : neighbors(u)) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  return std::all_of(members.begin(), members.end(),
                     [&](NodeId id) { return seen[static_cast<std::size_t>(id)] != 0; });
}

bool ConnectivityGraph::connected() const {
  std::vector<NodeId> all(size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  return connected(all);
}

ConnectivityGraph build_graph(const Topology& topology, double comm_radius) {
  std::vector<NodeId> all(topology.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
  return build_graph(topology, comm_radius, all);
}

ConnectivityGraph build_graph(const Topology& topology, double comm_radius,
                              std::span<const NodeId> members) {
  if (!(comm_radius > 0.0)) throw std::invalid_argument("build_graph: comm_radius must be positive");
  const int dim = topology.dim;
  std::vector<std::vector<NodeId>> adjacency(topology.size());
  if (members.empty()) return ConnectivityGraph(std::move(adjacency), comm_radius);

  // Bucket members into cubic cells no smaller than the radius so that only
  // adjacent cells need to be compared.
  Position lo{0, 0, 0}, hi{0, 0, 0};
  for (int axis = 0; axis < dim; ++axis) {
    lo[axis] = std::numeric_limits<double>::infinity();
    hi[axis] = -lo[axis];
  }
  for (NodeId id : members) {
    const auto& p = topology.position(id);
    for (int axis = 0; axis < dim; ++axis) {
      lo[axis] = std::min(lo[axis], p[axis]);
      hi[axis] = std::max(hi[axis], p[axis]);
    }
  }
  const double max_cells_per_axis =
      std::max(1.0, std::floor(std::pow(static_cast<double>(members.size()), 1.0 / dim)));
  double extent = 0.0;
  for (int axis = 0; axis < dim; ++axis) extent = std::max(extent, hi[axis] - lo[axis]);
  const double cell = std::max(comm_radius, extent / max_cells_per_axis);
  std::array<long, 3> cells_per_axis{1, 1, 1};
  for (int axis = 0; axis < dim; ++axis)
    cells_per_axis[axis] = static_cast<long>(std::floor((hi[axis] - lo[axis]) / cell)) + 1;

  auto cell_coords = [&](const Position& p) {
    std::array<long, 3> c{0, 0, 0};
    for (int axis = 0; axis < dim; ++axis)
      c[axis] = std::min(cells_per_axis[axis] - 1,
                         static_cast<long>(std::floor((p[axis] - lo[axis]) / cell)));
    return c;
  };
  auto linear = [&](const std::array<long, 3>& c) {
    return static_cast<std::size_t>((c[2] * cells_per_axis[1] + c[1]) * cells_per_axis[0] + c[0]);
  };

  const std::size_t total_cells =
      static_cast<std::size_t>(cells_per_axis[0] * cells_per_axis[1] * cells_per_axis[2]);
  std::vector<std::vector<NodeId>> buckets(total_cells);
  for (NodeId id : members) buckets[linear(cell_coords(topology.position(id)))].push_back(id);

  const double r_sq = comm_radius * comm_radius;
  const long dz_max = dim == 3 ? 1 : 0;
  for (NodeId u : members) {
    const auto& pu = topology.position(u);
    const auto c = cell_coords(pu);
    for (long dz = -dz_max; dz <= dz_max; ++dz) {
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const std::array<long, 3> nc{c[0] + dx, c[1] + dy, c[2] + dz};
          bool inside = true;
          for (int axis = 0; axis < 3; ++axis)
            inside = inside && nc[axis] >= 0 && nc[axis] < cells_per_axis[axis];
          if (!inside) continue;
          for (NodeId v : buckets[linear(nc)]) {
            if (v <= u) continue;
            if (squared_distance(pu, topology.position(v), dim) <= r_sq) {
              adjacency[static_cast<std::size_t>(u)].push_back(v);
              adjacency[static_cast<std::size_t>(v)].push_back(u);
            }
          }
        }
      }
    }
  }
  return ConnectivityGraph(std::move(adjacency), comm_radius);
}

std::vector<NodeId> ClusterAssignment::leaders() const {
  std::vector<NodeId> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) out.push_back(c.leader);
  std::sort(out.begin(), out.end());
  return out;
}

ClusterAssignment form_clusters(const Topology& topology, double g) {
  if (!(g >= 0.0 && g <= 1.0)) throw std::invalid_argument("form_clusters: g must lie in [0, 1]");
  const std::size_t n = topology.size();
  ClusterAssignment out;
  out.g = g;
  out.target_count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 - g))));
  out.cluster_of.assign(n, 0);

  if (out.target_count >= n) {
    for (const auto& node : topology.nodes) {
      out.cluster_of[static_cast<std::size_t>(node.id)] = out.clusters.size();
      out.clusters.push_back({node.id, {node.id}});
    }
    return out;
  }

  // Grid whose count of cells meeting the region is closest to the target,
  // the coarser one on a tie.
  std::size_t side = 1;
  while (cells_meeting_ball(side + 1, topology.dim) <= out.target_count) ++side;
  const auto below = cells_meeting_ball(side, topology.dim);
  const auto above = cells_meeting_ball(side + 1, topology.dim);
  if (below < out.target_count && above - out.target_count < out.target_count - below) ++side;

  const int dim = topology.dim;
  const double radius = topology.region_radius;
  const double width = 2.0 * radius / static_cast<double>(side);
  auto axis_cell = [&](double x) {
    const auto c = static_cast<long>(std::floor((x + radius) / width));
    return static_cast<std::size_t>(std::clamp<long>(c, 0, static_cast<long>(side) - 1));
  };

  std::vector<std::vector<NodeId>> cells(
      static_cast<std::size_t>(std::pow(static_cast<double>(side), dim) + 0.5));
  std::vector<std::size_t> cell_of(n);
  for (const auto& node : topology.nodes) {
    std::size_t index = 0;
    for (int axis = dim - 1; axis >= 0; --axis) index = index * side + axis_cell(node.position[axis]);
    cell_of[static_cast<std::size_t>(node.id)] = index;
    cells[index].push_back(node.id);
  }

  for (std::size_t index = 0; index < cells.size(); ++index) {
    auto& members = cells[index];
    if (members.empty()) continue;
    Position centre{0, 0, 0};
    std::size_t rest = index;
    for (int axis = 0; axis < dim; ++axis) {
      centre[axis] = -radius + width * (static_cast<double>(rest % side) + 0.5);
      rest /= side;
    }
    std::sort(members.begin(), members.end());
    NodeId leader = members.front();
    double best = std::numeric_limits<double>::infinity();
    for (NodeId id : members) {
      const double d = squared_distance(topology.position(id), centre, dim);
      if (d < best) {
        best = d;
        leader = id;
      }
    }
    for (NodeId id : members) out.cluster_of[static_cast<std::size_t>(id)] = out.clusters.size();
    out.clusters.push_back({leader, std::move(members)});
  }
  return out;
}

void write_topology_csv(std::ostream& out, const Topology& topology) {
  out << "# n=" << topology.size() << ",dim=" << topology.dim
      << ",regime=" << to_string(topology.regime)
      << ",region_radius=" << format_double(topology.region_radius)
      << ",seed=" << topology.seed << '\n';
  out << (topology.dim == 2 ? "node_id,x,y\n" : "node_id,x,y,z\n");
  for (const auto& node : topology.nodes) {
    out << node.id;
    for (int axis = 0; axis < topology.dim; ++axis) out << ',' << format_double(node.position[axis]);
    out << '\n';
  }
}

}  // namespace wnscale
