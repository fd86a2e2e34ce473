#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wnscale/rng.hpp"

namespace wnscale {

/// Independent Bernoulli(p) erasure per slot and per link or receiver.
struct ErasureChannel {
  double p = 0.0;

  explicit ErasureChannel(double erasure_probability);
  bool erased(Rng& rng) const { return rng.bernoulli(p); }
};

/// Coded multicast of a k-packet file to n receivers, with target
/// probability q that every receiver completes.
struct CompletionModel {
  std::size_t k = 1;
  double p = 0.0;
  std::size_t n = 1;
  double q = 0.5;

  void validate() const;
};

struct TransferResult {
  std::size_t slots_used = 0;         // slots the throughput is measured over
  std::size_t packets_delivered = 0;  // packets counted in that window
  double throughput = 0.0;            // packets_delivered / slots_used
  bool complete = true;               // false when a slot budget ran out first
  std::size_t total_slots = 0;        // slots elapsed until the transfer ended
};

/// (1-p)^H.
double e2e_success_probability(std::size_t hops, double p);

/// End-to-end recovery: each slot the head-of-line packet crosses all H hops
/// or is lost and retried by the source. Stops at k deliveries or max_slots.
TransferResult simulate_e2e_transfer(std::size_t hops, double p, std::size_t k,
                                     std::size_t max_slots, std::uint64_t seed);

/// Slots excluded from hop-by-hop measurement: 10 per hop.
std::size_t hop_by_hop_warmup(std::size_t hops);

/// Hop-by-hop recovery: store-and-forward line of H links, each retrying
/// its head packet every slot until it gets through. After the warm-up the
/// result counts deliveries per slot in which the final link had a packet to
/// send, so idle slots from relay starvation do not enter the rate.
TransferResult simulate_hop_by_hop(std::size_t hops, double p, std::size_t k, std::uint64_t seed);

/// log P(Binomial(trials, success) >= k), summed in log space.
double log_binomial_tail(std::size_t trials, double success, std::size_t k);

/// P(every receiver collects k receptions within `slots` slots).
double completion_probability(const CompletionModel& model, std::size_t slots);

/// Smallest T >= k with completion_probability(model, T) >= q, assuming an
/// ideal rateless code (any k receptions decode).
std::size_t min_completion_slots(const CompletionModel& model);

struct CompletionDistribution {
  std::vector<std::size_t> samples;  // sorted ascending

  /// Smallest t with empirical P(completion <= t) >= q.
  std::size_t quantile(double q) const;
  double mean() const;
};

/// Slot-by-slot Monte-Carlo: completion is the slot of the last receiver's
/// k-th reception. Trial t draws from the substream derive_seed(seed, {t}).
CompletionDistribution simulate_coded_multicast(const CompletionModel& model, std::size_t trials,
                                                std::uint64_t seed);

struct BlockSynthesisReport {
  std::size_t transmitters = 0;
  std::size_t total_packets = 0;
  double q = 0.0;

  // Sequential baseline: each block sent alone with target q^(1/J).
  std::vector<std::size_t> sequential_block_slots;
  std::size_t sequential_total = 0;
  double sequential_per_packet = 0.0;

  // Synthesized: transmitter i codes over the running block of all earlier
  // transmitters plus its own; q-quantiles over the Monte-Carlo trials.
  std::size_t synthesized_total = 0;
  double synthesized_per_packet = 0.0;
  double synthesized_mean_total = 0.0;
  std::vector<std::size_t> release_slots;  // transmitter i may stop (i < J)

  // Per receiver q-quantile of full-file delay under synthesis, and of the
  // first block's delay under sequential transmission.
  std::vector<std::size_t> receiver_full_delay;
  std::vector<std::size_t> receiver_first_block_delay;
  std::size_t receivers_with_increased_delay = 0;

  std::size_t trials = 0;
};

/// Compares J transmitters sending their blocks one after another against
/// block synthesis, where each transmitter overhears its predecessors and
/// codes their packets together with its own. Every listener (the n
/// receivers and the later transmitters) hears every slot independently.
BlockSynthesisReport simulate_block_synthesis(const std::vector<std::size_t>& block_sizes, double p,
                                              std::size_t n, double q, std::uint64_t seed,
                                              std::size_t trials = 4000);

/// Rank of the span of nested coded receptions: counts[i] packets coded over
/// the first prefix[i] source packets (prefix ascending, prefix[0] > 0).
std::size_t nested_rank(const std::vector<std::size_t>& prefix,
                        const std::vector<std::size_t>& counts);

struct CompletionRow {
  std::string scenario;
  std::size_t k;
  double p;
  std::size_t n;
  double q;
  std::size_t t_exact;
  std::size_t t_mc_q;
  std::size_t trials;
  std::uint64_t seed;
};

/// scenario,k,p,n,q,T_exact,T_mc_q,trials,seed
void write_completion_csv(std::ostream& out, const std::vector<CompletionRow>& rows);

}  // namespace wnscale
