#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

#include "doctest.h"
#include "wnscale/erasure.hpp"

using namespace wnscale;
using doctest::Approx;

namespace {

// Exhaustive oracle: every erasure pattern over T slots and n receivers,
// weighted by its probability.
double enumerate_completion(std::size_t k, double p, std::size_t n, std::size_t T) {
  const std::size_t bits = T * n;
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << bits); ++mask) {
    double weight = 1.0;
    bool all = true;
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t got = 0;
      for (std::size_t t = 0; t < T; ++t) {
        const bool erased = (mask >> (r * T + t)) & 1;
        weight *= erased ? p : 1.0 - p;
        got += !erased;
      }
      all = all && got >= k;
    }
    if (all) total += weight;
  }
  return total;
}

// P(Binomial(T, s) >= k) by direct summation.
double tail_direct(std::size_t T, double s, std::size_t k) {
  double sum = 0.0;
  for (std::size_t j = k; j <= T; ++j)
    sum += std::exp(std::lgamma(T + 1.0) - std::lgamma(j + 1.0) - std::lgamma(T - j + 1.0) +
                    static_cast<double>(j) * std::log(s) + static_cast<double>(T - j) * std::log1p(-s));
  return sum;
}

// Smallest T >= k with tail^n >= q, by linear scan.
std::size_t scan_completion(std::size_t k, double p, std::size_t n, double q) {
  for (std::size_t T = k;; ++T)
    if (std::pow(tail_direct(T, 1.0 - p, k), static_cast<double>(n)) >= q) return T;
}

// Rank over GF(2^31 - 1) of random vectors supported on nested prefixes.
std::size_t random_nested_rank(const std::vector<std::size_t>& prefix, const std::vector<std::size_t>& counts,
                               std::mt19937_64& gen) {
  constexpr std::uint64_t P = 2147483647;
  const std::size_t width = prefix.back();
  std::vector<std::vector<std::uint64_t>> rows;
  for (std::size_t i = 0; i < counts.size(); ++i)
    for (std::size_t c = 0; c < counts[i]; ++c) {
      std::vector<std::uint64_t> row(width, 0);
      for (std::size_t j = 0; j < prefix[i]; ++j) row[j] = gen() % P;
      rows.push_back(row);
    }
  auto power = [&](std::uint64_t b, std::uint64_t e) {
    std::uint64_t r = 1;
    for (b %= P; e; e >>= 1, b = b * b % P)
      if (e & 1) r = r * b % P;
    return r;
  };
  std::size_t rank = 0;
  for (std::size_t col = 0; col < width && rank < rows.size(); ++col) {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][col] == 0) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[pivot], rows[rank]);
    const auto inv = power(rows[rank][col], P - 2);
    for (std::size_t r = rank + 1; r < rows.size(); ++r) {
      const auto factor = rows[r][col] * inv % P;
      for (std::size_t j = col; j < width; ++j) rows[r][j] = (rows[r][j] + (P - factor) * rows[rank][j]) % P;
    }
    ++rank;
  }
  return rank;
}

}  // namespace

TEST_CASE("end-to-end success probability") {
  CHECK(e2e_success_probability(0, 0.3) == 1.0);
  CHECK(e2e_success_probability(10, 0.1) == Approx(0.34868).epsilon(1e-5));
  CHECK(e2e_success_probability(100, 0.1) == Approx(2.656e-5).epsilon(1e-3));
  CHECK_THROWS_AS(e2e_success_probability(3, 1.0), std::invalid_argument);
}

TEST_CASE("end-to-end transfer") {
  const auto lossless = simulate_e2e_transfer(7, 0.0, 50, 1000, 1);
  CHECK(lossless.slots_used == 50);
  CHECK(lossless.packets_delivered == 50);
  CHECK(lossless.throughput == 1.0);
  CHECK(lossless.complete);

  const auto r = simulate_e2e_transfer(10, 0.1, 1000, 100000, 2);
  CHECK(r.complete);
  CHECK(r.packets_delivered == 1000);
  const double P = std::pow(0.9, 10);
  CHECK(std::abs(r.throughput - P) <= 3 * std::sqrt(P * (1 - P) / static_cast<double>(r.slots_used)));

  const auto one = simulate_e2e_transfer(1, 0.1, 20000, 1000000, 3);
  CHECK(std::abs(one.throughput - 0.9) <= 3 * std::sqrt(0.09 / static_cast<double>(one.slots_used)));

  const auto cut = simulate_e2e_transfer(50, 0.1, 100, 200, 4);
  CHECK_FALSE(cut.complete);
  CHECK(cut.slots_used == 200);
  CHECK(cut.packets_delivered < 100);

  CHECK_THROWS_AS(simulate_e2e_transfer(0, 0.1, 1, 1, 1), std::invalid_argument);
}

TEST_CASE("hop-by-hop transfer") {
  const auto lossless = simulate_hop_by_hop(10, 0.0, 1000, 1);
  CHECK(lossless.throughput == 1.0);
  CHECK(hop_by_hop_warmup(10) == 100);

  const auto r = simulate_hop_by_hop(10, 0.1, 10000, 5);
  CHECK(r.total_slots >= 10000);
  CHECK(std::abs(r.throughput - 0.9) <= 3 * std::sqrt(0.09 / static_cast<double>(r.slots_used)));
  CHECK_THROWS_AS(simulate_hop_by_hop(0, 0.1, 10, 1), std::invalid_argument);
}

TEST_CASE("binomial tail matches direct summation") {
  for (std::size_t T : {1, 5, 20, 150})
    for (double s : {0.1, 0.5, 0.9})
      for (std::size_t k = 0; k <= T; k += std::max<std::size_t>(1, T / 7)) {
        const double expect = tail_direct(T, s, k);
        CHECK(std::exp(log_binomial_tail(T, s, k)) == Approx(expect).epsilon(1e-10));
      }
  CHECK(log_binomial_tail(3, 0.5, 4) == -INFINITY);
  CHECK(log_binomial_tail(3, 0.5, 0) == 0.0);
  // Deep tails stay finite in log space.
  CHECK(std::isfinite(log_binomial_tail(5000, 0.1, 4000)));
  CHECK(log_binomial_tail(5000, 0.1, 4000) < -1000);
}

TEST_CASE("completion probability equals exhaustive enumeration") {
  for (std::size_t n = 1; n <= 2; ++n)
    for (std::size_t k = 1; k <= 3; ++k)
      for (std::size_t T = k; T <= 6; ++T)
        for (double p : {0.1, 0.37, 0.8}) {
          const double brute = enumerate_completion(k, p, n, T);
          CHECK(std::abs(completion_probability({k, p, n, 0.5}, T) - brute) <= 1e-12);
        }
}

TEST_CASE("min completion slots") {
  CHECK(min_completion_slots({100, 0.0, 1000, 0.99}) == 100);
  CHECK(min_completion_slots({1, 0.0, 1, 0.5}) == 1);
  const auto t10 = min_completion_slots({100, 0.1, 10, 0.9});
  const auto t1000 = min_completion_slots({100, 0.1, 1000, 0.9});
  CHECK(t10 == scan_completion(100, 0.1, 10, 0.9));
  CHECK(t1000 == scan_completion(100, 0.1, 1000, 0.9));
  CHECK(t1000 >= t10);
  CHECK(t1000 - t10 <= 25);

  for (const CompletionModel m : {CompletionModel{5, 0.3, 3, 0.8}, CompletionModel{40, 0.05, 50, 0.95},
                                  CompletionModel{250, 0.5, 2, 0.1}}) {
    const auto t = min_completion_slots(m);
    CHECK(completion_probability(m, t) >= m.q);
    if (t > m.k) CHECK(completion_probability(m, t - 1) < m.q);
  }

  // Monotone in every argument.
  const CompletionModel base{30, 0.2, 8, 0.7};
  const auto t = min_completion_slots(base);
  CHECK(min_completion_slots({31, 0.2, 8, 0.7}) >= t);
  CHECK(min_completion_slots({30, 0.25, 8, 0.7}) >= t);
  CHECK(min_completion_slots({30, 0.2, 9, 0.7}) >= t);
  CHECK(min_completion_slots({30, 0.2, 8, 0.75}) >= t);

  CHECK_THROWS_AS(min_completion_slots({0, 0.1, 1, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(min_completion_slots({1, 0.1, 0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(min_completion_slots({1, 0.1, 1, 1.0}), std::invalid_argument);
}

TEST_CASE("per-packet completion time falls with file size") {
  double prev = INFINITY;
  for (std::size_t k : {10, 100, 1000}) {
    const double per = static_cast<double>(min_completion_slots({k, 0.1, 10, 0.9})) / static_cast<double>(k);
    CHECK(per < prev);
    prev = per;
  }
}

TEST_CASE("coded multicast Monte-Carlo") {
  const auto trivial = simulate_coded_multicast({7, 0.0, 1, 0.5}, 50, 1);
  for (auto s : trivial.samples) CHECK(s == 7);

  const CompletionModel m{100, 0.1, 10, 0.9};
  const auto mc = simulate_coded_multicast(m, 10000, 17);
  CHECK(std::is_sorted(mc.samples.begin(), mc.samples.end()));
  const double exact = static_cast<double>(min_completion_slots(m));
  CHECK(std::abs(static_cast<double>(mc.quantile(0.9)) - exact) <= 2);

  // Empirical CDF at T tracks the exact completion probability.
  const auto T = static_cast<std::size_t>(exact);
  const double frac = static_cast<double>(std::upper_bound(mc.samples.begin(), mc.samples.end(), T) -
                                          mc.samples.begin()) / 10000.0;
  const double prob = completion_probability(m, T);
  CHECK(std::abs(frac - prob) <= 4 * std::sqrt(prob * (1 - prob) / 10000.0));

  const auto again = simulate_coded_multicast(m, 200, 17);
  const auto same = simulate_coded_multicast(m, 200, 17);
  CHECK(again.samples == same.samples);
}

TEST_CASE("quantile is nearest rank") {
  CompletionDistribution d{{1, 2, 3, 4, 5, 6, 7, 8, 9, 10}};
  CHECK(d.quantile(0.9) == 9);
  CHECK(d.quantile(0.91) == 10);
  CHECK(d.quantile(0.1) == 1);
  CHECK(d.quantile(0.5) == 5);
  CHECK(d.mean() == 5.5);
}

TEST_CASE("nested rank") {
  CHECK(nested_rank({1, 2}, {1, 1}) == 2);
  CHECK(nested_rank({1, 2}, {2, 0}) == 1);
  CHECK(nested_rank({1, 2}, {0, 1}) == 1);
  CHECK(nested_rank({1, 2}, {0, 2}) == 2);
  CHECK(nested_rank({3, 5, 9}, {10, 0, 0}) == 3);
  CHECK(nested_rank({3, 5, 9}, {1, 1, 1}) == 3);

  std::mt19937_64 gen(31337);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::size_t> prefix, counts;
    std::size_t total = 0;
    const auto J = 1 + gen() % 4;
    for (std::size_t i = 0; i < J; ++i) {
      total += 1 + gen() % 4;
      prefix.push_back(total);
      counts.push_back(gen() % 6);
    }
    CHECK(nested_rank(prefix, counts) == random_nested_rank(prefix, counts, gen));
  }
}

TEST_CASE("block synthesis") {
  // Lossless: every slot is heard by every listener.
  const auto lossless = simulate_block_synthesis({1, 1}, 0.0, 3, 0.9, 1, 20);
  CHECK(lossless.sequential_total == 2);
  CHECK(lossless.synthesized_total == 2);
  CHECK(lossless.synthesized_per_packet == 1.0);
  CHECK(lossless.release_slots == std::vector<std::size_t>{1});

  const auto r = simulate_block_synthesis({25, 25, 25, 25}, 0.1, 10, 0.9, 7, 2000);
  const auto block = min_completion_slots({25, 0.1, 10, std::pow(0.9, 0.25)});
  CHECK(r.sequential_block_slots == std::vector<std::size_t>(4, block));
  CHECK(r.sequential_total == 4 * block);
  CHECK(r.sequential_per_packet == Approx(4.0 * static_cast<double>(block) / 100.0));
  CHECK(r.synthesized_per_packet == Approx(static_cast<double>(r.synthesized_total) / 100.0));
  CHECK(r.synthesized_per_packet <= r.sequential_per_packet);
  CHECK(r.receivers_with_increased_delay >= 1);
  CHECK(r.release_slots.size() == 3);
  CHECK(std::is_sorted(r.release_slots.begin(), r.release_slots.end()));
  // A single aggregated block can never beat the file-size lower bound.
  CHECK(r.synthesized_total >= 100);

  CHECK_THROWS_AS(simulate_block_synthesis({5}, 0.1, 2, 0.9, 1), std::invalid_argument);
  CHECK_THROWS_AS(simulate_block_synthesis({5, 0}, 0.1, 2, 0.9, 1), std::invalid_argument);
}

TEST_CASE("completion csv") {
  std::ostringstream out;
  write_completion_csv(out, {{"coded_multicast", 100, 0.1, 10, 0.9, 120, 121, 10000, 1}});
  CHECK(out.str() == "scenario,k,p,n,q,T_exact,T_mc_q,trials,seed\ncoded_multicast,100,0.1,10,0.9,120,121,10000,1\n");
}
