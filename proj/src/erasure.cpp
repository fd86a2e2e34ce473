#include "wnscale/erasure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "wnscale/io.hpp"

namespace wnscale {

namespace {

void check_probability(double p) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("erasure probability must lie in [0, 1)");
}

double log_sum_exp(const std::vector<double>& terms) {
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  const double peak = *std::max_element(terms.begin(), terms.end());
  if (std::isinf(peak)) return peak;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - peak);
  return peak + std::log(sum);
}

std::size_t quantile_index(std::size_t count, double q) {
  const double rank = std::ceil(q * static_cast<double>(count) - 1e-9);
  return static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(count))) - 1;
}

std::size_t sorted_quantile(std::vector<std::size_t> values, double q) {
  std::sort(values.begin(), values.end());
  return values[quantile_index(values.size(), q)];
}

}  // namespace

ErasureChannel::ErasureChannel(double erasure_probability) : p(erasure_probability) {
  check_probability(p);
}

void CompletionModel::validate() const {
  if (k < 1) throw std::invalid_argument("completion model: k must be at least 1");
  if (n < 1) throw std::invalid_argument("completion model: n must be at least 1");
  check_probability(p);
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("completion model: q must lie in (0, 1)");
}

double e2e_success_probability(std::size_t hops, double p) {
  check_probability(p);
  return std::pow(1.0 - p, static_cast<double>(hops));
}

TransferResult simulate_e2e_transfer(std::size_t hops, double p, std::size_t k,
                                     std::size_t max_slots, std::uint64_t seed) {
  if (hops < 1 || k < 1) throw std::invalid_argument("simulate_e2e_transfer: need H >= 1 and k >= 1");
  const ErasureChannel channel(p);
  Rng rng(seed);
  TransferResult result;
  while (result.packets_delivered < k && result.slots_used < max_slots) {
    ++result.slots_used;
    bool survived = true;
    for (std::size_t h = 0; h < hops && survived; ++h) survived = !channel.erased(rng);
    if (survived) ++result.packets_delivered;
  }
  result.complete = result.packets_delivered == k;
  result.total_slots = result.slots_used;
  result.throughput = result.slots_used == 0
                          ? 0.0
                          : static_cast<double>(result.packets_delivered) /
                                static_cast<double>(result.slots_used);
  return result;
}

std::size_t hop_by_hop_warmup(std::size_t hops) { return 10 * hops; }

TransferResult simulate_hop_by_hop(std::size_t hops, double p, std::size_t k, std::uint64_t seed) {
  if (hops < 1 || k < 1) throw std::invalid_argument("simulate_hop_by_hop: need H >= 1 and k >= 1");
  const ErasureChannel channel(p);
  Rng rng(seed);
  // queue[i]: packets held by node i waiting to cross link i.
  std::vector<std::size_t> queue(hops, 0);
  queue[0] = k;
  const std::size_t warmup = hop_by_hop_warmup(hops);

  std::size_t delivered = 0, slot = 0;
  std::size_t window_busy = 0, window_delivered = 0;
  std::size_t all_busy = 0;
  while (delivered < k) {
    const bool measuring = slot >= warmup;
    // Downstream first, so a packet moves at most one hop per slot.
    for (std::size_t i = hops; i-- > 0;) {
      if (queue[i] == 0) continue;
      const bool last = i + 1 == hops;
      if (last) {
        ++all_busy;
        if (measuring) ++window_busy;
      }
      if (channel.erased(rng)) continue;
      --queue[i];
      if (last) {
        ++delivered;
        if (measuring) ++window_delivered;
      } else {
        ++queue[i + 1];
      }
    }
    ++slot;
  }

  TransferResult result;
  result.total_slots = slot;
  if (window_busy > 0) {
    result.slots_used = window_busy;
    result.packets_delivered = window_delivered;
  } else {
    result.slots_used = all_busy;
    result.packets_delivered = delivered;
  }
  result.throughput =
      static_cast<double>(result.packets_delivered) / static_cast<double>(result.slots_used);
  return result;
}

double log_binomial_tail(std::size_t trials, double success, std::size_t k) {
  if (k == 0) return 0.0;
  if (k > trials) return -std::numeric_limits<double>::infinity();
  if (success >= 1.0) return 0.0;
  if (success <= 0.0) return -std::numeric_limits<double>::infinity();
  const double t = static_cast<double>(trials);
  const double log_s = std::log(success), log_f = std::log1p(-success);
  const double log_t_fact = std::lgamma(t + 1.0);
  auto log_pmf = [&](std::size_t j) {
    const double dj = static_cast<double>(j);
    return log_t_fact - std::lgamma(dj + 1.0) - std::lgamma(t - dj + 1.0) + dj * log_s +
           (t - dj) * log_f;
  };
  std::vector<double> upper, lower;
  for (std::size_t j = k; j <= trials; ++j) upper.push_back(log_pmf(j));
  for (std::size_t j = 0; j < k; ++j) lower.push_back(log_pmf(j));
  const double log_upper = log_sum_exp(upper);
  const double log_lower = log_sum_exp(lower);
  // Take whichever side is smaller directly; the other through log1p.
  if (log_lower < log_upper) return std::log1p(-std::exp(log_lower));
  return log_upper;
}

double completion_probability(const CompletionModel& model, std::size_t slots) {
  model.validate();
  return std::exp(static_cast<double>(model.n) * log_binomial_tail(slots, 1.0 - model.p, model.k));
}

std::size_t min_completion_slots(const CompletionModel& model) {
  model.validate();
  if (model.p == 0.0) return model.k;
  const double log_q = std::log(model.q);
  const double n = static_cast<double>(model.n);
  auto enough = [&](std::size_t slots) {
    return n * log_binomial_tail(slots, 1.0 - model.p, model.k) >= log_q;
  };
  std::size_t lo = model.k, hi = model.k;
  while (!enough(hi)) {
    lo = hi + 1;
    hi *= 2;
  }
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (enough(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

std::size_t CompletionDistribution::quantile(double q) const {
  if (samples.empty()) throw std::logic_error("quantile of an empty distribution");
  return samples[quantile_index(samples.size(), q)];
}

double CompletionDistribution::mean() const {
  if (samples.empty()) return 0.0;
  const double total = std::accumulate(samples.begin(), samples.end(), 0.0,
                                       [](double acc, std::size_t s) { return acc + static_cast<double>(s); });
  return total / static_cast<double>(samples.size());
}

CompletionDistribution simulate_coded_multicast(const CompletionModel& model, std::size_t trials,
                                                std::uint64_t seed) {
  model.validate();
  if (trials < 1) throw std::invalid_argument("simulate_coded_multicast: trials must be at least 1");
  const ErasureChannel channel(model.p);
  CompletionDistribution out;
  out.samples.reserve(trials);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, {trial}));
    std::size_t completion = 0;
    // Receivers are independent, so each one's slot sequence can be drawn
    // in turn; completion is the latest k-th reception.
    for (std::size_t r = 0; r < model.n; ++r) {
      std::size_t slot = 0, received = 0;
      while (received < model.k) {
        ++slot;
        if (!channel.erased(rng)) ++received;
      }
      completion = std::max(completion, slot);
    }
    out.samples.push_back(completion);
  }
  std::sort(out.samples.begin(), out.samples.end());
  return out;
}

std::size_t nested_rank(const std::vector<std::size_t>& prefix,
                        const std::vector<std::size_t>& counts) {
  // dim = min over m of (prefix[m-1] + receptions from phases m and later).
  std::size_t suffix = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  std::size_t best = suffix;
  for (std::size_t m = 0; m < counts.size(); ++m) {
    suffix -= counts[m];
    best = std::min(best, prefix[m] + suffix);
  }
  return best;
}

BlockSynthesisReport simulate_block_synthesis(const std::vector<std::size_t>& block_sizes, double p,
                                              std::size_t n, double q, std::uint64_t seed,
                                              std::size_t trials) {
  const std::size_t J = block_sizes.size();
  if (J < 2) throw std::invalid_argument("simulate_block_synthesis: need at least 2 transmitters");
  if (std::any_of(block_sizes.begin(), block_sizes.end(), [](std::size_t k) { return k < 1; }))
    throw std::invalid_argument("simulate_block_synthesis: every block needs at least one packet");
  if (trials < 1) throw std::invalid_argument("simulate_block_synthesis: trials must be at least 1");
  CompletionModel{1, p, n, q}.validate();
  const ErasureChannel channel(p);

  BlockSynthesisReport report;
  report.transmitters = J;
  report.q = q;
  report.trials = trials;
  std::vector<std::size_t> prefix(J);
  std::partial_sum(block_sizes.begin(), block_sizes.end(), prefix.begin());
  report.total_packets = prefix.back();
  const double total_packets = static_cast<double>(report.total_packets);

  const double block_q = std::pow(q, 1.0 / static_cast<double>(J));
  for (std::size_t k : block_sizes) {
    report.sequential_block_slots.push_back(min_completion_slots({k, p, n, block_q}));
    report.sequential_total += report.sequential_block_slots.back();
  }
  report.sequential_per_packet = static_cast<double>(report.sequential_total) / total_packets;

  // Listener index: 0..n-1 receivers, n + j for transmitter j (j >= 1).
  const std::size_t listeners = n + J;
  std::vector<std::size_t> totals(trials);
  std::vector<std::vector<std::size_t>> releases(J - 1, std::vector<std::size_t>(trials));
  std::vector<std::vector<std::size_t>> full_delay(n, std::vector<std::size_t>(trials));
  std::vector<std::vector<std::size_t>> first_block(n, std::vector<std::size_t>(trials));

  std::vector<std::vector<std::size_t>> counts(listeners, std::vector<std::size_t>(J, 0));
  std::vector<std::size_t> done_at(n);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, {trial, 0}));
    for (auto& c : counts) std::fill(c.begin(), c.end(), 0);
    std::fill(done_at.begin(), done_at.end(), 0);
    std::size_t slot = 0;
    for (std::size_t phase = 0; phase < J; ++phase) {
      const bool last = phase + 1 == J;
      const std::vector<std::size_t> phase_prefix(prefix.begin(), prefix.begin() + static_cast<long>(phase) + 1);
      std::size_t waiting = last ? n : 1;
      while (waiting > 0) {
        ++slot;
        for (std::size_t r = 0; r < n; ++r)
          if (!channel.erased(rng)) ++counts[r][phase];
        for (std::size_t j = phase + 1; j < J; ++j)
          if (!channel.erased(rng)) ++counts[n + j][phase];
        if (!last) {
          std::vector<std::size_t> heard(counts[n + phase + 1].begin(),
                                         counts[n + phase + 1].begin() + static_cast<long>(phase) + 1);
          if (nested_rank(phase_prefix, heard) >= prefix[phase]) waiting = 0;
        } else {
          for (std::size_t r = 0; r < n; ++r) {
            if (done_at[r] != 0) continue;
            if (nested_rank(prefix, counts[r]) >= prefix.back()) {
              done_at[r] = slot;
              --waiting;
            }
          }
        }
      }
      if (!last) releases[phase][trial] = slot;
    }
    totals[trial] = slot;
    for (std::size_t r = 0; r < n; ++r) full_delay[r][trial] = done_at[r];

    // Sequential first block: each receiver's k_1-th reception.
    Rng seq_rng(derive_seed(seed, {trial, 1}));
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t s = 0, got = 0;
      while (got < block_sizes.front()) {
        ++s;
        if (!channel.erased(seq_rng)) ++got;
      }
      first_block[r][trial] = s;
    }
  }

  report.synthesized_total = sorted_quantile(totals, q);
  report.synthesized_per_packet = static_cast<double>(report.synthesized_total) / total_packets;
  report.synthesized_mean_total =
      std::accumulate(totals.begin(), totals.end(), 0.0,
                      [](double acc, std::size_t s) { return acc + static_cast<double>(s); }) /
      static_cast<double>(trials);
  for (auto& r : releases) report.release_slots.push_back(sorted_quantile(r, q));
  for (std::size_t r = 0; r < n; ++r) {
    report.receiver_full_delay.push_back(sorted_quantile(full_delay[r], q));
    report.receiver_first_block_delay.push_back(sorted_quantile(first_block[r], q));
    if (report.receiver_full_delay.back() > report.receiver_first_block_delay.back())
      ++report.receivers_with_increased_delay;
  }
  return report;
}

void write_completion_csv(std::ostream& out, const std::vector<CompletionRow>& rows) {
  out << "scenario,k,p,n,q,T_exact,T_mc_q,trials,seed\n";
  for (const auto& r : rows)
    out << r.scenario << ',' << r.k << ',' << format_double(r.p) << ',' << r.n << ','
        << format_double(r.q) << ',' << r.t_exact << ',' << r.t_mc_q << ',' << r.trials << ','
        << r.seed << '\n';
}

}  // namespace wnscale
