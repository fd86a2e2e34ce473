#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wnscale/rng.hpp"
#include "wnscale/topology.hpp"

namespace wnscale {

inline constexpr std::int64_t kNone = -1;

struct PacketRecord {
  NodeId source;
  NodeId destination;
  std::int64_t created;
  NodeId relay = -1;                 // -1: none (queued, or delivered directly)
  std::int64_t pickup = kNone;
  std::int64_t delivered = kNone;
};

/// Nodes doing independent lazy random walks on a torus of cells. Each slot
/// every node stays or moves to one of its four neighbours with equal
/// probability, then sources create packets, then co-located nodes exchange.
/// Within a slot a node sends at most one packet and receives at most one.
class MobilityWorld {
 public:
  /// n nodes on a grid_side x grid_side torus with
  /// grid_side = max(1, round(sqrt(n / density))). Node i sends to
  /// destination(i), a derangement drawn from the seed.
  MobilityWorld(std::size_t n, double density, double packet_rate, std::uint64_t seed);

  /// Explicit torus shape and traffic, used for small exact cases.
  MobilityWorld(std::size_t width, std::size_t height, std::vector<std::size_t> cells,
                std::vector<NodeId> destinations, double packet_rate, std::uint64_t seed);

  void step();

  /// Enqueue a packet at its source as if created in the current slot
  /// (before the exchange phase of the next step()).
  void inject(NodeId source);

  std::size_t size() const { return cell_.size(); }
  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::int64_t now() const { return now_; }
  std::size_t cell(NodeId v) const { return cell_[static_cast<std::size_t>(v)]; }
  NodeId destination(NodeId v) const { return destination_[static_cast<std::size_t>(v)]; }

  const std::vector<PacketRecord>& ledger() const { return ledger_; }
  std::size_t created() const { return ledger_.size(); }
  std::size_t delivered() const { return delivered_; }
  std::size_t in_flight() const { return in_flight_; }
  std::size_t queued_at_sources() const { return queued_; }
  std::size_t max_source_queue() const { return max_queue_; }

  /// Pairs of nodes that shared a cell after the most recent move.
  std::size_t meetings_last_step() const { return meetings_; }

 private:
  void move_all();
  void exchange();
  void deliver(std::size_t packet, NodeId via);

  std::size_t width_, height_;
  std::vector<std::size_t> cell_;
  std::vector<NodeId> destination_;
  double packet_rate_;
  Rng rng_;
  std::int64_t now_ = 0;

  std::vector<PacketRecord> ledger_;
  std::vector<std::vector<std::size_t>> source_queue_;  // FIFO of packet ids, head at front_
  std::vector<std::size_t> queue_front_;
  std::vector<std::vector<std::size_t>> relay_held_;    // packet ids held as relay
  std::size_t delivered_ = 0, in_flight_ = 0, queued_ = 0, max_queue_ = 0;
  std::size_t meetings_ = 0;
};

/// Value-style step for callers that keep worlds immutable.
MobilityWorld step_world(MobilityWorld world);

struct MobilityReport {
  std::size_t n = 0;
  std::size_t slots = 0;
  double rate = 0.0;
  std::uint64_t seed = 0;
  double throughput_per_node = 0.0;  // delivered / slots / n
  double mean_delay = 0.0;
  double p50 = 0.0, p90 = 0.0, p99 = 0.0;
  double delivered_fraction = 0.0;
  std::size_t deliveries = 0;
  std::size_t max_source_queue = 0;
  bool under_sampled = false;  // fewer than 100 deliveries
};

inline constexpr std::size_t kMinDeliveries = 100;

MobilityReport run_mobility_experiment(std::size_t n, std::size_t slots, double packet_rate,
                                       std::uint64_t seed, double density = 1.0);

/// n,slots,rate,seed,throughput_per_node,mean_delay,p50,p90,p99,delivered_fraction
void write_mobility_csv(std::ostream& out, const std::vector<MobilityReport>& reports);

}  // namespace wnscale
