#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqhardnet/distributions.hpp"
#include "sqhardnet/family.hpp"
#include "sqhardnet/hermite.hpp"
#include "sqhardnet/montecarlo.hpp"

namespace sqhardnet {

using BigInt = boost::multiprecision::cpp_int;

/**
 * Σ over compositions i_1+…+i_k = i with every part odd of the multinomial
 * binom(i; i_1,…,i_k).
 *
 * This counts length-i words over k letters in which every letter occurs an
 * odd number of times, which by inclusion–exclusion on the generating
 * function ((e^t − e^{−t})/2)^k equals
 *   (1/2^k) Σ_{j=0}^{k} (−1)^j binom(k, j) (k − 2j)^i.
 * Zero exactly when i < k or i ≢ k (mod 2).
 */
inline BigInt odd_composition_multinomial_sum(unsigned i, unsigned k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  BigInt total = 0;
  BigInt binom = 1;  // binom(k, j)
  for (unsigned j = 0; j <= k; ++j) {
    const long base = static_cast<long>(k) - 2 * static_cast<long>(j);
    BigInt term = boost::multiprecision::pow(BigInt(base), i);
    term *= binom;
    if (j % 2 == 1)
      total -= term;
    else
      total += term;
    binom = binom * (k - j) / (j + 1);
  }
  return total >> k;
}

/// Hermite-series value of E[g²], truncated at d_max.
struct SeriesMoment {
  double value = 0.0;
  /// True when terms beyond d_max may be nonzero, i.e. value is only a
  /// lower bound (every term is nonnegative).
  bool tail_truncated = false;
};

/**
 * 4^k Σ_{i ≤ d_max} (φ̂_i²/k^i) · odd_composition_multinomial_sum(i, k).
 */
inline SeriesMoment second_moment_g(const FamilySpec& spec,
                                    const HermiteSeries& series, int d_max) {
  if (series.activation_tag != spec.inner.name())
    throw std::invalid_argument("series expands '" + series.activation_tag +
                                "' but the family's inner activation is '" +
                                spec.inner.name() + "'");
  if (d_max > series.max_degree)
    throw std::invalid_argument("d_max exceeds the series' max_degree");
  if (d_max < 0) throw std::invalid_argument("d_max must be >= 0");
  const unsigned k = static_cast<unsigned>(spec.k);
  const double log_k = std::log(static_cast<double>(k));
  double total = 0.0;
  for (int i = 0; i <= d_max; ++i) {
    const double c = series.at(i);
    if (c == 0.0) continue;
    const BigInt count = odd_composition_multinomial_sum(static_cast<unsigned>(i), k);
    if (count == 0) continue;
    const double log_count = std::log(count.convert_to<double>());
    total += c * c * std::exp(log_count - i * log_k);
  }
  SeriesMoment out;
  out.value = std::pow(4.0, static_cast<double>(k)) * total;
  out.tail_truncated = !spec.inner.is_polynomial();
  return out;
}

/// Absolute slack for MC checks of quantities that vanish identically, e.g.
/// ReLU with odd k, where g is zero up to floating-point rounding.
inline constexpr double kRoundoffFloor = 1e-12;

/// Monte-Carlo E_D[f_A(x)·f_B(x)].
inline EstimateWithError mc_inner_product(const FamilySpec& spec,
                                          const ConceptId& a,
                                          const ConceptId& b,
                                          const DistributionSpec& dist,
                                          std::size_t n_samples,
                                          std::uint64_t seed) {
  spec.validate();
  a.validate(spec);
  b.validate(spec);
  if (dist.dim != spec.n)
    throw std::invalid_argument("distribution dim must equal n");
  return mc_mean(dist, n_samples, seed, [&](std::span<const double> x) {
    return eval_f(spec, a, x) * eval_f(spec, b, x);
  });
}

inline std::vector<std::size_t> index_union(const ConceptId& a,
                                            const ConceptId& b) {
  std::vector<std::size_t> out;
  std::size_t i = 0, j = 0;
  while (i < a.indices.size() || j < b.indices.size()) {
    if (j == b.indices.size() ||
        (i < a.indices.size() && a.indices[i] < b.indices[j]))
      out.push_back(a.indices[i++]);
    else if (i == a.indices.size() || b.indices[j] < a.indices[i])
      out.push_back(b.indices[j++]);
    else {
      out.push_back(a.indices[i]);
      ++i;
      ++j;
    }
  }
  return out;
}

inline constexpr std::size_t kMaxSymmetrizedUnion = 26;

/**
 * Sign-symmetrized estimator of ⟨f_A, f_B⟩_D: each sample contributes the
 * average of f_A(x∘z)·f_B(x∘z) over all z ∈ {±1}^{A∪B}. For A ≠ B every
 * per-sample value cancels to roundoff. A single sample is accepted and
 * reported with zero standard error.
 */
inline EstimateWithError symmetrized_inner_product(
    const FamilySpec& spec, const ConceptId& a, const ConceptId& b,
    const DistributionSpec& dist, std::size_t n_samples, std::uint64_t seed) {
  spec.validate();
  a.validate(spec);
  b.validate(spec);
  if (dist.dim != spec.n)
    throw std::invalid_argument("distribution dim must equal n");
  if (n_samples < 1) throw std::invalid_argument("need at least 1 sample");
  const auto coords = index_union(a, b);
  if (coords.size() > kMaxSymmetrizedUnion)
    throw std::invalid_argument("|S u T| = " + std::to_string(coords.size()) +
                                " is too large to enumerate sign patterns");
  const std::uint64_t patterns = std::uint64_t{1} << coords.size();
  std::vector<MeanAccumulator> partial(chunk_count(n_samples));
  for_each_chunk(dist, n_samples, seed,
                 [&](std::size_t c, std::size_t, const SampleMatrix& block,
                     Engine&) {
                   MeanAccumulator acc;
                   std::vector<double> flipped(spec.n);
                   for (Eigen::Index r = 0; r < block.rows(); ++r) {
                     const auto x = row_of(block, r);
                     double sum = 0.0;
                     for (std::uint64_t z = 0; z < patterns; ++z) {
                       std::copy(x.begin(), x.end(), flipped.begin());
                       for (std::size_t t = 0; t < coords.size(); ++t)
                         if ((z >> t) & 1u) flipped[coords[t]] = -flipped[coords[t]];
                       sum += eval_f(spec, a, flipped) * eval_f(spec, b, flipped);
                     }
                     acc.add(sum / static_cast<double>(patterns));
                   }
                   partial[c] = acc;
                 });
  MeanAccumulator total;
  for (const auto& p : partial) total.merge(p);
  if (total.count == 1) return {total.mean, 0.0, 1};
  return total.estimate();
}

/**
 * Plain Monte-Carlo ⟨f_A, f_B⟩_D for many pairs from one shared sample. Each
 * distinct concept is evaluated once per row.
 */
inline std::vector<EstimateWithError> mc_inner_products(
    const FamilySpec& spec, const std::vector<std::pair<ConceptId, ConceptId>>& pairs,
    const DistributionSpec& dist, std::size_t n_samples, std::uint64_t seed) {
  spec.validate();
  if (dist.dim != spec.n)
    throw std::invalid_argument("distribution dim must equal n");
  std::vector<ConceptId> distinct;
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  auto slot_of = [&](const ConceptId& c) {
    c.validate(spec);
    const auto it = std::find(distinct.begin(), distinct.end(), c);
    if (it != distinct.end()) return static_cast<std::size_t>(it - distinct.begin());
    distinct.push_back(c);
    return distinct.size() - 1;
  };
  for (const auto& [a, b] : pairs) {
    const std::size_t ia = slot_of(a);
    slots.emplace_back(ia, slot_of(b));
  }
  std::vector<std::vector<MeanAccumulator>> partial(chunk_count(n_samples));
  for_each_chunk(dist, n_samples, seed,
                 [&](std::size_t c, std::size_t, const SampleMatrix& block, Engine&) {
                   std::vector<MeanAccumulator> acc(pairs.size());
                   std::vector<double> f(distinct.size());
                   for (Eigen::Index r = 0; r < block.rows(); ++r) {
                     const auto x = row_of(block, r);
                     for (std::size_t j = 0; j < distinct.size(); ++j)
                       f[j] = eval_f(spec, distinct[j], x);
                     for (std::size_t p = 0; p < slots.size(); ++p)
                       acc[p].add(f[slots[p].first] * f[slots[p].second]);
                   }
                   partial[c] = std::move(acc);
                 });
  std::vector<EstimateWithError> out;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    MeanAccumulator total;
    for (const auto& chunk : partial) total.merge(chunk[p]);
    out.push_back(total.estimate());
  }
  return out;
}

/// `count` random ordered pairs S ≠ T from the family, drawn uniformly.
inline std::vector<std::pair<ConceptId, ConceptId>> random_distinct_pairs(
    std::size_t n, std::size_t k, std::size_t count, std::uint64_t seed) {
  const auto family = enumerate_family(n, k);
  if (family.size() < 2)
    throw std::invalid_argument("the family has fewer than two members");
  Engine rng = make_engine(derive_seed(seed, "pairs"));
  std::vector<std::pair<ConceptId, ConceptId>> out;
  out.reserve(count);
  while (out.size() < count) {
    const auto a = static_cast<std::size_t>(rng() % family.size());
    const auto b = static_cast<std::size_t>(rng() % family.size());
    if (a != b) out.emplace_back(family[a], family[b]);
  }
  return out;
}

/// 4^k·c_k²·k!/k^k with c_k the closed-form ReLU coefficient (k even).
inline double norm_lower_bound_relu(int k) {
  if (k < 2 || k % 2 != 0)
    throw std::invalid_argument(
        "the ReLU norm bound is only defined for even k >= 2");
  const double c = relu_hermite_coeff(k);
  const double log_value = k * std::log(4.0) + 2.0 * std::log(std::abs(c)) +
                           std::lgamma(k + 1.0) - k * std::log(static_cast<double>(k));
  return std::exp(log_value);
}

/// 2^k e^{−T²/4} √(T² + 1 − T/√(2π)) bounds ‖g − g^T‖ for ReLU.
inline double truncation_norm_bound(int k, double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("T must be positive");
  return std::ldexp(1.0, k) * std::exp(-cap * cap / 4.0) *
         std::sqrt(cap * cap + 1.0 - cap / std::sqrt(2.0 * std::numbers::pi));
}

/// 2^k e^{−T²/2} bounds P[g ≠ g^T] for ReLU.
inline double truncation_prob_bound(int k, double cap) {
  if (!(cap > 0.0)) throw std::invalid_argument("T must be positive");
  return std::ldexp(1.0, k) * std::exp(-cap * cap / 2.0);
}

/// Delta-method conversion of an estimate of E[u²] into one of ‖u‖.
inline EstimateWithError norm_from_square(const EstimateWithError& sq) {
  const double v = std::max(0.0, sq.value);
  const double root = std::sqrt(v);
  return {root, root > 0.0 ? sq.std_error / (2.0 * root) : 0.0, sq.n_samples};
}

/// ReLU family on R^k with S = {1..k}, and its T-truncated twin.
inline std::pair<FamilySpec, FamilySpec> relu_truncation_pair(int k, double cap) {
  FamilySpec full{static_cast<std::size_t>(k), static_cast<std::size_t>(k),
                  ActivationSpec::relu(), ActivationSpec::identity()};
  FamilySpec truncated = full;
  truncated.inner = ActivationSpec::truncated_relu(cap);
  return {full, truncated};
}

/// Monte-Carlo ‖g − g^T‖ under N(0, I_k).
inline EstimateWithError mc_truncation_norm(int k, double cap,
                                            std::size_t n_samples,
                                            std::uint64_t seed) {
  const auto [full, truncated] = relu_truncation_pair(k, cap);
  const ConceptId id = leading_concept(full.k);
  const auto sq = mc_mean(DistributionSpec::gaussian(full.n), n_samples, seed,
                          [&](std::span<const double> x) {
                            const double d = eval_g(full, id, x) -
                                             eval_g(truncated, id, x);
                            return d * d;
                          });
  return norm_from_square(sq);
}

/// Monte-Carlo P[g ≠ g^T] under N(0, I_k).
inline EstimateWithError mc_truncation_disagreement(int k, double cap,
                                                    std::size_t n_samples,
                                                    std::uint64_t seed) {
  const auto [full, truncated] = relu_truncation_pair(k, cap);
  const ConceptId id = leading_concept(full.k);
  const auto freq = mc_mean(DistributionSpec::gaussian(full.n), n_samples, seed,
                            [&](std::span<const double> x) {
                              return eval_g(full, id, x) != eval_g(truncated, id, x)
                                         ? 1.0
                                         : 0.0;
                            });
  return binomial_estimate(
      static_cast<std::size_t>(std::llround(freq.value * n_samples)), n_samples);
}

/// Monte-Carlo E[g²] (the squared norm of the inner network).
inline EstimateWithError mc_second_moment_g(const FamilySpec& spec,
                                            const ConceptId& id,
                                            const DistributionSpec& dist,
                                            std::size_t n_samples,
                                            std::uint64_t seed) {
  return mc_mean(dist, n_samples, seed, [&](std::span<const double> x) {
    const double g = eval_g(spec, id, x);
    return g * g;
  });
}

/// P[|g(x)| ≥ 1] under the standard Gaussian, with binomial standard error.
inline EstimateWithError anticoncentration_estimate(const FamilySpec& spec,
                                                    const ConceptId& id,
                                                    const DistributionSpec& dist,
                                                    std::size_t n_samples,
                                                    std::uint64_t seed) {
  if (dist.kind != DistributionKind::standard_gaussian)
    throw std::invalid_argument("anticoncentration is defined for the Gaussian");
  spec.validate();
  id.validate(spec);
  if (dist.dim != spec.n)
    throw std::invalid_argument("distribution dim must equal n");
  const auto freq = mc_mean(dist, n_samples, seed, [&](std::span<const double> x) {
    return std::abs(eval_g(spec, id, x)) >= 1.0 ? 1.0 : 0.0;
  });
  return binomial_estimate(
      static_cast<std::size_t>(std::llround(freq.value * n_samples)), n_samples);
}

/**
 * Monte-Carlo Gram matrix G[a][b] = E_D[f_a f_b] for the listed concepts,
 * from one shared sample.
 */
inline Eigen::MatrixXd mc_gram(const std::vector<ConceptId>& ids,
                               const FamilySpec& spec,
                               const DistributionSpec& dist,
                               std::size_t n_samples, std::uint64_t seed) {
  spec.validate();
  for (const auto& id : ids) id.validate(spec);
  if (dist.dim != spec.n)
    throw std::invalid_argument("distribution dim must equal n");
  const auto m = static_cast<Eigen::Index>(ids.size());
  std::vector<Eigen::MatrixXd> partial(chunk_count(n_samples));
  for_each_chunk(dist, n_samples, seed,
                 [&](std::size_t c, std::size_t, const SampleMatrix& block,
                     Engine&) {
                   Eigen::MatrixXd values(block.rows(), m);
                   for (Eigen::Index r = 0; r < block.rows(); ++r)
                     for (Eigen::Index j = 0; j < m; ++j)
                       values(r, j) = eval_f(spec, ids[static_cast<std::size_t>(j)],
                                             row_of(block, r));
                   partial[c] = values.transpose() * values;
                 });
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (const auto& p : partial) gram += p;
  return gram / static_cast<double>(n_samples);
}

/// ρ_D(C) = (1/|C|²) Σ_{c,c'} |⟨c, c'⟩_D| over ordered pairs, diagonal included.
inline double average_correlation(const std::vector<ConceptId>& ids,
                                  const FamilySpec& spec,
                                  const DistributionSpec& dist,
                                  std::size_t n_samples, std::uint64_t seed) {
  if (ids.empty()) throw std::invalid_argument("need at least one concept");
  const Eigen::MatrixXd gram = mc_gram(ids, spec, dist, n_samples, seed);
  const double m = static_cast<double>(ids.size());
  return gram.cwiseAbs().sum() / (m * m);
}

/// Class size and correlation parameters of the statistical-dimension bound.
struct SDAParams {
  double class_size = 1.0;
  double beta = 1.0;         // squared-norm bound
  double gamma = 0.0;        // pairwise correlation bound
  double gamma_prime = 0.0;  // slack; the bound holds at threshold γ + γ′
  double tau = 1.0;
  double epsilon = 1.0;
  /// Smallest ‖c‖_D in the class, when known (checked against 3ε in l2 mode).
  std::optional<double> class_min_norm;

  void validate() const {
    if (!(class_size >= 1.0)) throw std::invalid_argument("class size must be >= 1");
    if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
    if (!(beta > gamma)) throw std::invalid_argument("need beta > gamma");
    if (!(gamma_prime > 0.0)) throw std::invalid_argument("gamma' must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  }

  double threshold() const { return gamma + gamma_prime; }
};

/// d = |C|·γ′/(β − γ), a lower bound on sda(C, γ + γ′).
inline double sda_lower_bound(const SDAParams& p) {
  p.validate();
  return p.class_size * p.gamma_prime / (p.beta - p.gamma);
}

enum class QueryMode { l2, weak, real_valued };

inline QueryMode parse_query_mode(const std::string& text) {
  if (text == "l2") return QueryMode::l2;
  if (text == "weak") return QueryMode::weak;
  if (text == "real-valued" || text == "real") return QueryMode::real_valued;
  throw std::invalid_argument("unknown query-bound mode: " + text);
}

/**
 * Minimum number of tolerance-τ queries implied by d = sda_lower_bound(p).
 *
 * l2 and weak give floor(d) − 1 (learning reduces to distinguishing with one
 * extra query); real-valued gives floor(d/2) for inner-product learners.
 * Preconditions: √(γ+γ′) ≤ τ, plus τ ≤ ε² and ‖c‖ ≥ 3ε (l2), τ ≤ ε/2 (weak),
 * or τ = √(γ+γ′) (real-valued).
 */
inline std::int64_t query_count_bound(const SDAParams& p, QueryMode mode) {
  const double d = sda_lower_bound(p);
  const double root = std::sqrt(p.threshold());
  const double slack = 1e-12 * std::max(1.0, p.tau);
  switch (mode) {
    case QueryMode::l2:
      if (root > p.tau + slack)
        throw std::invalid_argument("need sqrt(gamma + gamma') <= tau");
      if (p.tau > p.epsilon * p.epsilon + slack)
        throw std::invalid_argument("l2 mode needs tau <= epsilon^2");
      if (p.class_min_norm && *p.class_min_norm < 3.0 * p.epsilon)
        throw std::invalid_argument("l2 mode needs ||c|| >= 3*epsilon");
      return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(d + 1e-9)) - 1);
    case QueryMode::weak:
      if (root > p.tau + slack)
        throw std::invalid_argument("need sqrt(gamma + gamma') <= tau");
      if (p.tau > p.epsilon / 2.0 + slack)
        throw std::invalid_argument("weak mode needs tau <= epsilon/2");
      return std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(d + 1e-9)) - 1);
    case QueryMode::real_valued:
      if (std::abs(root - p.tau) > 1e-9 * std::max(1.0, p.tau))
        throw std::invalid_argument("real-valued mode needs tau = sqrt(gamma + gamma')");
      return static_cast<std::int64_t>(std::floor(d / 2.0 + 1e-9));
  }
  return 0;
}

}  // namespace sqhardnet
