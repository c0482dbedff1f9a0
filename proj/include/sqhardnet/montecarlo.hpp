#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "sqhardnet/distributions.hpp"

namespace sqhardnet {

/// Sample mean with its standard error (sample sd / sqrt(n)).
struct EstimateWithError {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;

  /// |value - target| <= sigmas * stderr + floor. The floor absorbs
  /// deterministic roundoff when the integrand is zero up to rounding.
  bool within(double target, double sigmas, double floor = 0.0) const {
    return std::abs(value - target) <= sigmas * std_error + floor;
  }
};

/// Running mean / second central moment; merge() is Chan's pairwise update.
struct MeanAccumulator {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }

  void merge(const MeanAccumulator& other) {
    if (other.count == 0) return;
    if (count == 0) {
      *this = other;
      return;
    }
    const double n_a = static_cast<double>(count);
    const double n_b = static_cast<double>(other.count);
    const double delta = other.mean - mean;
    const double total = n_a + n_b;
    mean += delta * n_b / total;
    m2 += other.m2 + delta * delta * n_a * n_b / total;
    count += other.count;
  }

  EstimateWithError estimate() const {
    if (count < 2)
      throw std::invalid_argument("an estimate needs at least 2 samples");
    const double n = static_cast<double>(count);
    const double variance = std::max(0.0, m2 / (n - 1.0));
    return {mean, std::sqrt(variance / n), count};
  }
};

/**
 * Monte-Carlo mean of fn(x) over n_samples draws of `dist`.
 *
 * fn is called either as fn(x) or as fn(x, rng) where rng is the chunk's
 * engine (for auxiliary randomness such as p-concept labels). Chunks are
 * reduced in index order so the result is independent of thread count.
 */
template <class Fn>
EstimateWithError mc_mean(const DistributionSpec& dist, std::size_t n_samples,
                          std::uint64_t seed, Fn&& fn) {
  if (n_samples < 2)
    throw std::invalid_argument("Monte-Carlo needs at least 2 samples");
  std::vector<MeanAccumulator> partial(chunk_count(n_samples));
  for_each_chunk(dist, n_samples, seed,
                 [&](std::size_t c, std::size_t, const SampleMatrix& block,
                     Engine& rng) {
                   MeanAccumulator acc;
                   for (Eigen::Index r = 0; r < block.rows(); ++r) {
                     const auto x = row_of(block, r);
                     if constexpr (std::is_invocable_v<Fn&,
                                                       std::span<const double>,
                                                       Engine&>)
                       acc.add(fn(x, rng));
                     else
                       acc.add(fn(x));
                   }
                   partial[c] = acc;
                 });
  MeanAccumulator total;
  for (const auto& p : partial) total.merge(p);
  return total.estimate();
}

/// Frequency estimate with binomial standard error sqrt(p(1-p)/n).
inline EstimateWithError binomial_estimate(std::size_t hits, std::size_t n) {
  if (n < 2) throw std::invalid_argument("an estimate needs at least 2 samples");
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n};
}

}  // namespace sqhardnet
