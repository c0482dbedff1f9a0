#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqhardnet/parallel.hpp"
#include "sqhardnet/rng.hpp"

namespace sqhardnet {

using SampleMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_of(const SampleMatrix& m, Eigen::Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

enum class DistributionKind { standard_gaussian, rademacher, scale_mixture };

struct MixtureComponent {
  double scale = 1.0;
  double weight = 1.0;
};

/**
 * One of the three sign-symmetric input distributions on R^n.
 *
 * The scale mixture draws one scale s per row and returns s * N(0, I_n), so
 * its coordinates are dependent; it is sign-symmetric but not a product
 * measure.
 */
struct DistributionSpec {
  DistributionKind kind = DistributionKind::standard_gaussian;
  std::size_t dim = 1;
  std::vector<MixtureComponent> mixture;

  static DistributionSpec gaussian(std::size_t dim) {
    return {DistributionKind::standard_gaussian, dim, {}};
  }
  static DistributionSpec rademacher(std::size_t dim) {
    return {DistributionKind::rademacher, dim, {}};
  }
  /// Default witness: equal-weight scales 0.5 and 1.5.
  static DistributionSpec scale_mixture(
      std::size_t dim, std::vector<MixtureComponent> components = {
                           {0.5, 0.5}, {1.5, 0.5}}) {
    return {DistributionKind::scale_mixture, dim, std::move(components)};
  }

  void validate() const {
    if (dim < 1) throw std::invalid_argument("distribution dim must be >= 1");
    if (kind != DistributionKind::scale_mixture) return;
    if (mixture.empty())
      throw std::invalid_argument("scale mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : mixture) {
      if (!(c.scale > 0.0))
        throw std::invalid_argument("mixture scale must be positive");
      if (!(c.weight >= 0.0 && c.weight <= 1.0))
        throw std::invalid_argument("mixture weight must lie in [0, 1]");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("mixture weights must sum to 1");
  }

  std::string name() const {
    switch (kind) {
      case DistributionKind::standard_gaussian:
        return "gaussian";
      case DistributionKind::rademacher:
        return "rademacher";
      case DistributionKind::scale_mixture:
        return "mixture";
    }
    return "?";
  }
};

inline DistributionSpec parse_distribution(const std::string& name,
                                           std::size_t dim) {
  if (name == "gaussian" || name == "standard-gaussian")
    return DistributionSpec::gaussian(dim);
  if (name == "rademacher") return DistributionSpec::rademacher(dim);
  if (name == "mixture" || name == "gaussian-scale-mixture")
    return DistributionSpec::scale_mixture(dim);
  throw std::invalid_argument("unknown distribution: " + name);
}

/// Fills `out` (length dim) with one draw.
inline void draw_row(const DistributionSpec& dist, Engine& rng,
                     std::span<double> out) {
  switch (dist.kind) {
    case DistributionKind::standard_gaussian: {
      std::normal_distribution<double> normal;
      for (double& v : out) v = normal(rng);
      return;
    }
    case DistributionKind::rademacher: {
      std::uint64_t bits = 0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (i % 64 == 0) bits = rng();
        out[i] = (bits & 1u) ? -1.0 : 1.0;
        bits >>= 1;
      }
      return;
    }
    case DistributionKind::scale_mixture: {
      std::uniform_real_distribution<double> uniform;
      const double u = uniform(rng);
      double scale = dist.mixture.back().scale;
      double cumulative = 0.0;
      for (const auto& c : dist.mixture) {
        cumulative += c.weight;
        if (u < cumulative) {
          scale = c.scale;
          break;
        }
      }
      std::normal_distribution<double> normal;
      for (double& v : out) v = scale * normal(rng);
      return;
    }
  }
}

/**
 * Visits rows [0, count) chunk by chunk. Chunk c covers rows
 * [c * kChunkRows, ...) and draws them from derive_seed(seed, c); `visit`
 * receives (chunk index, first row, rows as SampleMatrix, chunk engine).
 * The chunk engine is left positioned after the row draws so visitors can
 * take further per-row randomness (labels) from the same stream.
 */
template <class Visit>
void for_each_chunk(const DistributionSpec& dist, std::size_t count,
                    std::uint64_t seed, Visit&& visit) {
  dist.validate();
  parallel_for(chunk_count(count), [&](std::size_t c) {
    const std::size_t first = c * kChunkRows;
    const std::size_t rows = std::min(kChunkRows, count - first);
    Engine rng = make_engine(derive_seed(seed, c));
    SampleMatrix block(static_cast<Eigen::Index>(rows),
                       static_cast<Eigen::Index>(dist.dim));
    for (std::size_t r = 0; r < rows; ++r)
      draw_row(dist, rng,
               {block.data() + r * dist.dim, dist.dim});
    visit(c, first, block, rng);
  });
}

/// count x dim i.i.d. draws; bit-reproducible in (dist, count, seed).
inline SampleMatrix sample(const DistributionSpec& dist, std::size_t count,
                           std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  SampleMatrix out(static_cast<Eigen::Index>(count),
                   static_cast<Eigen::Index>(dist.dim));
  for_each_chunk(dist, count, seed,
                 [&](std::size_t, std::size_t first, const SampleMatrix& block,
                     Engine&) {
                   out.middleRows(static_cast<Eigen::Index>(first),
                                  block.rows()) = block;
                 });
  return out;
}

/// Elementwise product x∘z.
inline std::vector<double> sign_flip(std::span<const double> x,
                                     std::span<const int> z) {
  if (x.size() != z.size())
    throw std::invalid_argument("sign_flip: length mismatch");
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (z[i] != 1 && z[i] != -1)
      throw std::invalid_argument("sign_flip: z must be a sign vector");
    out[i] = x[i] * z[i];
  }
  return out;
}

inline SampleMatrix sign_flip_rows(const SampleMatrix& xs,
                                   std::span<const int> z) {
  if (static_cast<std::size_t>(xs.cols()) != z.size())
    throw std::invalid_argument("sign_flip: length mismatch");
  SampleMatrix out = xs;
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    if (z[j] != 1 && z[j] != -1)
      throw std::invalid_argument("sign_flip: z must be a sign vector");
    if (z[j] < 0) out.col(j) *= -1.0;
  }
  return out;
}

}  // namespace sqhardnet
