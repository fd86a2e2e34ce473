#include "wnscale/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "wnscale/io.hpp"
#include "wnscale/routing.hpp"

namespace wnscale {

namespace {

std::vector<NodeId> derangement_for(std::size_t n, std::uint64_t seed) {
  if (n < 2) return std::vector<NodeId>(n, -1);
  const auto flows = sample_unicast_pairs(n, seed);
  std::vector<NodeId> out(n);
  for (const auto& f : flows.flows) out[static_cast<std::size_t>(f.source)] = f.destinations.front();
  return out;
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double rank = std::ceil(q * static_cast<double>(sorted.size()) - 1e-9);
  const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(sorted.size()))) - 1;
  return sorted[idx];
}

}  // namespace

MobilityWorld::MobilityWorld(std::size_t n, double density, double packet_rate, std::uint64_t seed)
    : width_(0), height_(0), packet_rate_(packet_rate), rng_(derive_seed(seed, {0})) {
  if (n < 1) throw std::invalid_argument("MobilityWorld: need at least one node");
  if (!(density > 0.0)) throw std::invalid_argument("MobilityWorld: density must be positive");
  if (!(packet_rate >= 0.0 && packet_rate <= 1.0))
    throw std::invalid_argument("MobilityWorld: packet rate must lie in [0, 1]");
  const auto side = std::max<long long>(1, std::llround(std::sqrt(static_cast<double>(n) / density)));
  width_ = height_ = static_cast<std::size_t>(side);
  cell_.resize(n);
  for (auto& c : cell_) c = static_cast<std::size_t>(rng_.below(width_ * height_));
  destination_ = derangement_for(n, derive_seed(seed, {1}));
  source_queue_.resize(n);
  queue_front_.assign(n, 0);
  relay_held_.resize(n);
}

MobilityWorld::MobilityWorld(std::size_t width, std::size_t height, std::vector<std::size_t> cells,
                             std::vector<NodeId> destinations, double packet_rate, std::uint64_t seed)
    : width_(width),
      height_(height),
      cell_(std::move(cells)),
      destination_(std::move(destinations)),
      packet_rate_(packet_rate),
      rng_(derive_seed(seed, {0})) {
  if (width_ < 1 || height_ < 1) throw std::invalid_argument("MobilityWorld: empty torus");
  if (destination_.size() != cell_.size())
    throw std::invalid_argument("MobilityWorld: one destination per node required");
  for (std::size_t c : cell_)
    if (c >= width_ * height_) throw std::invalid_argument("MobilityWorld: cell off the torus");
  for (std::size_t i = 0; i < destination_.size(); ++i)
    if (destination_[i] == static_cast<NodeId>(i))
      throw std::invalid_argument("MobilityWorld: node cannot be its own destination");
  source_queue_.resize(cell_.size());
  queue_front_.assign(cell_.size(), 0);
  relay_held_.resize(cell_.size());
}

void MobilityWorld::inject(NodeId source) {
  const auto s = static_cast<std::size_t>(source);
  if (destination_[s] < 0) return;
  source_queue_[s].push_back(ledger_.size());
  ledger_.push_back({source, destination_[s], now_});
  ++queued_;
  max_queue_ = std::max(max_queue_, source_queue_[s].size() - queue_front_[s]);
}

void MobilityWorld::move_all() {
  for (auto& c : cell_) {
    std::size_t x = c % width_, y = c / width_;
    switch (rng_.below(5)) {
      case 1: x = (x + width_ - 1) % width_; break;
      case 2: x = (x + 1) % width_; break;
      case 3: y = (y + height_ - 1) % height_; break;
      case 4: y = (y + 1) % height_; break;
      default: break;
    }
    c = y * width_ + x;
  }
}

void MobilityWorld::deliver(std::size_t packet, NodeId via) {
  auto& record = ledger_[packet];
  record.delivered = now_;
  ++delivered_;
  if (record.relay == via && via != record.source) {
    auto& held = relay_held_[static_cast<std::size_t>(via)];
    held.erase(std::find(held.begin(), held.end(), packet));
    --in_flight_;
  } else {
    ++queue_front_[static_cast<std::size_t>(via)];
    --queued_;
  }
}

void MobilityWorld::exchange() {
  const std::size_t n = cell_.size();
  std::vector<std::pair<std::size_t, NodeId>> by_cell(n);
  for (std::size_t i = 0; i < n; ++i) by_cell[i] = {cell_[i], static_cast<NodeId>(i)};
  std::sort(by_cell.begin(), by_cell.end());

  std::vector<char> sent(n, 0), received(n, 0);
  meetings_ = 0;
  std::vector<NodeId> members;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    members.clear();
    while (end < n && by_cell[end].first == by_cell[start].first) members.push_back(by_cell[end++].second);
    start = end;
    if (members.size() < 2) continue;
    meetings_ += members.size() * (members.size() - 1) / 2;

    // Deliveries first: oldest packet u holds for v, as source or relay.
    for (NodeId u : members) {
      const auto ui = static_cast<std::size_t>(u);
      for (NodeId v : members) {
        const auto vi = static_cast<std::size_t>(v);
        if (sent[ui]) break;
        if (v == u || received[vi]) continue;
        std::size_t best = ledger_.size();
        if (destination_[ui] == v && queue_front_[ui] < source_queue_[ui].size())
          best = source_queue_[ui][queue_front_[ui]];
        for (std::size_t pkt : relay_held_[ui])
          if (ledger_[pkt].destination == v) best = std::min(best, pkt);
        if (best == ledger_.size()) continue;
        deliver(best, u);
        sent[ui] = received[vi] = 1;
      }
    }

    // Then handoffs of queued source packets to any free co-located relay.
    for (NodeId u : members) {
      const auto ui = static_cast<std::size_t>(u);
      if (sent[ui] || queue_front_[ui] == source_queue_[ui].size()) continue;
      for (NodeId v : members) {
        const auto vi = static_cast<std::size_t>(v);
        if (v == u || v == destination_[ui] || received[vi]) continue;
        const std::size_t pkt = source_queue_[ui][queue_front_[ui]++];
        ledger_[pkt].relay = v;
        ledger_[pkt].pickup = now_;
        relay_held_[vi].push_back(pkt);
        --queued_;
        ++in_flight_;
        sent[ui] = received[vi] = 1;
        break;
      }
    }
  }
}

void MobilityWorld::step() {
  move_all();
  for (std::size_t i = 0; i < cell_.size(); ++i)
    if (destination_[i] >= 0 && rng_.bernoulli(packet_rate_)) inject(static_cast<NodeId>(i));
  exchange();
  ++now_;
}

MobilityWorld step_world(MobilityWorld world) {
  world.step();
  return world;
}

MobilityReport run_mobility_experiment(std::size_t n, std::size_t slots, double packet_rate,
                                       std::uint64_t seed, double density) {
  if (slots < 1) throw std::invalid_argument("run_mobility_experiment: slots must be at least 1");
  MobilityWorld world(n, density, packet_rate, seed);
  for (std::size_t s = 0; s < slots; ++s) world.step();

  MobilityReport report;
  report.n = n;
  report.slots = slots;
  report.rate = packet_rate;
  report.seed = seed;
  std::vector<double> delays;
  for (const auto& rec : world.ledger())
    if (rec.delivered != kNone) delays.push_back(static_cast<double>(rec.delivered - rec.created));
  std::sort(delays.begin(), delays.end());
  report.deliveries = delays.size();
  report.throughput_per_node =
      static_cast<double>(delays.size()) / static_cast<double>(slots) / static_cast<double>(n);
  if (!delays.empty()) {
    double sum = 0.0;
    for (double d : delays) sum += d;
    report.mean_delay = sum / static_cast<double>(delays.size());
  }
  report.p50 = nearest_rank(delays, 0.5);
  report.p90 = nearest_rank(delays, 0.9);
  report.p99 = nearest_rank(delays, 0.99);
  report.delivered_fraction =
      world.created() == 0 ? 0.0
                           : static_cast<double>(delays.size()) / static_cast<double>(world.created());
  report.max_source_queue = world.max_source_queue();
  report.under_sampled = delays.size() < kMinDeliveries;
  return report;
}

void write_mobility_csv(std::ostream& out, const std::vector<MobilityReport>& reports) {
  out << "n,slots,rate,seed,throughput_per_node,mean_delay,p50,p90,p99,delivered_fraction\n";
  for (const auto& r : reports)
    out << r.n << ',' << r.slots << ',' << format_double(r.rate) << ',' << r.seed << ','
        << format_double(r.throughput_per_node) << ',' << format_double(r.mean_delay) << ','
        << format_double(r.p50) << ',' << format_double(r.p90) << ',' << format_double(r.p99) << ','
        << format_double(r.delivered_fraction) << '\n';
}

}  // namespace wnscale
