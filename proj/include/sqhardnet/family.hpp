#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqhardnet/activation.hpp"
#include "sqhardnet/distributions.hpp"
#include "sqhardnet/rng.hpp"

namespace sqhardnet {

inline constexpr std::size_t kMaxMaskSize = 30;

/// Parameters (n, k, φ, ψ) of the orthogonal family; m = 2^k hidden units.
struct FamilySpec {
  std::size_t n = 1;
  std::size_t k = 1;
  ActivationSpec inner = ActivationSpec::relu();
  ActivationSpec outer = ActivationSpec::identity();

  std::size_t hidden_units() const { return std::size_t{1} << k; }

  void validate() const {
    if (k < 1 || k > n) throw std::invalid_argument("need 1 <= k <= n");
    if (k > kMaxMaskSize)
      throw std::invalid_argument("k > 30: sign patterns are not enumerable");
    if (!outer.declared_odd)
      throw std::invalid_argument("outer activation must be odd, got " +
                                  outer.name());
  }
};

/// Index set S as strictly increasing zero-based coordinates.
struct ConceptId {
  std::vector<std::size_t> indices;

  void validate(const FamilySpec& spec) const {
    if (indices.size() != spec.k)
      throw std::invalid_argument("concept must have exactly k indices");
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] >= spec.n)
        throw std::invalid_argument("concept index out of range");
      if (i > 0 && indices[i] <= indices[i - 1])
        throw std::invalid_argument("concept indices must be strictly increasing");
    }
  }

  friend bool operator==(const ConceptId&, const ConceptId&) = default;
  friend auto operator<=>(const ConceptId&, const ConceptId&) = default;

  /// One-based, comma separated, as used on the command line.
  std::string to_string() const {
    std::ostringstream out;
    for (std::size_t i = 0; i < indices.size(); ++i)
      out << (i ? "," : "") << indices[i] + 1;
    return out.str();
  }
};

/// Parses "i1,i2,..." (one-based) into a ConceptId.
inline ConceptId parse_concept(const std::string& text) {
  ConceptId id;
  std::istringstream in(text);
  std::string field;
  while (std::getline(in, field, ',')) {
    std::size_t used = 0;
    long v = 0;
    try {
      v = std::stol(field, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad concept index '" + field + "'");
    }
    if (used != field.size() || v < 1)
      throw std::invalid_argument("bad concept index '" + field + "'");
    id.indices.push_back(static_cast<std::size_t>(v - 1));
  }
  return id;
}

/// χ(w) = Π w_i.
inline int parity(std::span<const int> w) {
  int p = 1;
  for (int v : w) {
    if (v != 1 && v != -1)
      throw std::invalid_argument("parity: entries must be +1 or -1");
    p *= v;
  }
  return p;
}

/**
 * g_S(x) = Σ_{w∈{±1}^k} χ(w)·φ(⟨w, x_S⟩/√k).
 *
 * Sign patterns are the integers 0..2^k−1; bit b set means w_b = −1. The sum
 * runs in that order so the value is bit-reproducible.
 */
inline double eval_g(const FamilySpec& spec, const ConceptId& id,
                     std::span<const double> x) {
  if (x.size() != spec.n)
    throw std::invalid_argument("eval_g: x has length " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(spec.n));
  const std::size_t k = spec.k;
  if (id.indices.size() != k || k > kMaxMaskSize)
    throw std::invalid_argument("eval_g: concept does not have k indices");
  double xs[kMaxMaskSize];
  for (std::size_t b = 0; b < k; ++b) {
    if (id.indices[b] >= x.size())
      throw std::invalid_argument("eval_g: concept index out of range");
    xs[b] = x[id.indices[b]];
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(k));
  std::uint64_t patterns = std::uint64_t{1} << k;
  // Odd φ: the terms for w and −w agree when k is odd and cancel when k is
  // even, so only patterns with w_k = +1 are evaluated.
  const bool odd_inner = spec.inner.declared_odd;
  if (odd_inner) {
    if (k % 2 == 0) return 0.0;
    patterns >>= 1;
  }
  double total = 0.0;
  for (std::uint64_t p = 0; p < patterns; ++p) {
    double dot = 0.0;
    for (std::size_t b = 0; b < k; ++b)
      dot += ((p >> b) & 1u) ? -xs[b] : xs[b];
    const double term = spec.inner(dot * scale);
    total += (std::popcount(p) & 1) ? -term : term;
  }
  return odd_inner ? 2.0 * total : total;
}

/// f_S(x) = ψ(g_S(x)).
inline double eval_f(const FamilySpec& spec, const ConceptId& id,
                     std::span<const double> x) {
  return spec.outer(eval_g(spec, id, x));
}

/// S = {1, ..., k}.
inline ConceptId leading_concept(std::size_t k) {
  ConceptId id;
  for (std::size_t i = 0; i < k; ++i) id.indices.push_back(i);
  return id;
}

/// All binom(n, k) index sets in lexicographic order.
inline std::vector<ConceptId> enumerate_family(std::size_t n, std::size_t k) {
  if (k > n) throw std::invalid_argument("enumerate_family: k > n");
  std::vector<ConceptId> out;
  if (k == 0) return {ConceptId{}};
  std::vector<std::size_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    out.push_back(ConceptId{idx});
    std::size_t pos = k;
    while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

enum class LabelMode { regression, pconcept };

inline LabelMode parse_label_mode(const std::string& text) {
  if (text == "regression") return LabelMode::regression;
  if (text == "pconcept" || text == "p-concept") return LabelMode::pconcept;
  throw std::invalid_argument("unknown label mode: " + text);
}

/// Draws y ∈ {±1} with P[y = 1] = (1 + c)/2 for a conditional mean c ∈ [−1, 1].
inline double draw_pconcept_label(double c, Engine& rng) {
  std::uniform_real_distribution<double> uniform;
  return uniform(rng) < 0.5 * (1.0 + c) ? 1.0 : -1.0;
}

inline void require_pconcept(const FamilySpec& spec) {
  const auto& range = spec.outer.declared_range;
  if (!range || range->first < -1.0 || range->second > 1.0)
    throw std::invalid_argument(
        "p-concept labels need an outer activation with range in [-1, 1], got " +
        spec.outer.name());
}

/**
 * Labels for each row of xs. Regression returns f(x); p-concept draws
 * Bernoulli labels from one stream seeded by `seed`, consumed in row order.
 */
inline std::vector<double> sample_labels(const FamilySpec& spec,
                                         const ConceptId& id,
                                         const SampleMatrix& xs, LabelMode mode,
                                         std::uint64_t seed) {
  spec.validate();
  id.validate(spec);
  if (mode == LabelMode::pconcept) require_pconcept(spec);
  std::vector<double> y(static_cast<std::size_t>(xs.rows()));
  Engine rng = make_engine(derive_seed(seed, "labels"));
  for (Eigen::Index r = 0; r < xs.rows(); ++r) {
    const double f = eval_f(spec, id, row_of(xs, r));
    y[static_cast<std::size_t>(r)] =
        mode == LabelMode::regression ? f : draw_pconcept_label(f, rng);
  }
  return y;
}

}  // namespace sqhardnet
