#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqhardnet/activation.hpp"
#include "sqhardnet/quadrature.hpp"

namespace sqhardnet {

/// Largest degree accepted by the quadrature expansion.
inline constexpr int kMaxHermiteDegree = 300;

/// Coefficients in the normalized probabilists' basis H̃_i = H_i/√(i!).
struct HermiteSeries {
  std::vector<double> coeffs;
  int max_degree = 0;
  std::string activation_tag;

  double at(int i) const {
    return i >= 0 && i <= max_degree ? coeffs[static_cast<std::size_t>(i)] : 0.0;
  }
};

/**
 * Probabilists' Hermite polynomial H_i(x), or H̃_i(x) when `normalized`.
 *
 * The unnormalized value uses H_{i+1} = x·H_i − i·H_{i−1}. The normalized
 * value runs the orthonormal form H̃_{i+1} = (x·H̃_i − √i·H̃_{i−1})/√(i+1),
 * which never forms i! and so cannot overflow where H̃_i itself is finite.
 */
inline double hermite_eval(int i, double x, bool normalized) {
  if (i < 0) throw std::invalid_argument("Hermite degree must be >= 0");
  if (i == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int j = 1; j < i; ++j) {
    const double next =
        normalized ? (x * cur - std::sqrt(static_cast<double>(j)) * prev) /
                         std::sqrt(static_cast<double>(j + 1))
                   : x * cur - j * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// H̃_0(x) .. H̃_d(x) in one pass.
inline void hermite_normalized_all(int max_degree, double x,
                                   std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(max_degree) + 1);
  out[0] = 1.0;
  if (max_degree >= 1) out[1] = x;
  for (int j = 1; j < max_degree; ++j)
    out[static_cast<std::size_t>(j + 1)] =
        (x * out[static_cast<std::size_t>(j)] -
         std::sqrt(static_cast<double>(j)) * out[static_cast<std::size_t>(j - 1)]) /
        std::sqrt(static_cast<double>(j + 1));
}

/**
 * Closed-form Hermite coefficient c_i of ReLU.
 *
 * c_0 = 1/√(2π), c_1 = 1/2, c_odd = 0 beyond 1, and for even i = 2m
 *   c_{2m} = (H_{2m}(0) + 2m·H_{2m−2}(0)) / √(2π·(2m)!).
 * Using H_{2j}(0) = (−1)^j (2j−1)!! the numerator collapses to
 * (−1)^{m+1} (2m−3)!!, evaluated here in log space.
 */
inline double relu_hermite_coeff(int i) {
  if (i < 0) throw std::invalid_argument("Hermite degree must be >= 0");
  if (i == 0) return 1.0 / std::sqrt(2.0 * std::numbers::pi);
  if (i == 1) return 0.5;
  if (i % 2 == 1) return 0.0;
  const int m = i / 2;
  // (2m-3)!! = (2m-2)! / (2^{m-1} (m-1)!)
  const double log_double_factorial = std::lgamma(2.0 * m - 1.0) -
                                      (m - 1) * std::numbers::ln2 -
                                      std::lgamma(static_cast<double>(m));
  const double log_denominator =
      0.5 * (std::log(2.0 * std::numbers::pi) + std::lgamma(2.0 * m + 1.0));
  const double magnitude = std::exp(log_double_factorial - log_denominator);
  return (m % 2 == 1) ? magnitude : -magnitude;
}

/// Half-width of the integration window needed up to `max_degree`.
inline double hermite_window(int max_degree) {
  return std::sqrt(4.0 * max_degree + 2.0) + 12.0;
}

/**
 * Quadrature rule used to expand `act`: Gauss–Hermite with `nodes` points for
 * smooth activations, composite Gauss–Legendre split at the kinks otherwise.
 */
inline GaussianRule expansion_rule(const ActivationSpec& act, int max_degree,
                                   int nodes) {
  const auto kinks = act.kinks();
  if (kinks.empty()) return gauss_hermite_rule(nodes);
  const double panel = max_degree > 40 ? 0.25 : 0.5;
  return piecewise_gaussian_rule(kinks, hermite_window(max_degree), panel);
}

/// coeffs[i] ≈ E_{x~N(0,1)}[act(x)·H̃_i(x)] for i ≤ max_degree.
inline HermiteSeries hermite_coeffs_quadrature(const ActivationSpec& act,
                                               int max_degree, int nodes = 400) {
  if (max_degree < 0)
    throw std::invalid_argument("max_degree must be >= 0");
  if (max_degree > kMaxHermiteDegree)
    throw std::invalid_argument(
        "max_degree " + std::to_string(max_degree) +
        " exceeds the supported range (sqrt(i!) overflows past degree " +
        std::to_string(kMaxHermiteDegree) + ")");
  if (nodes < 2 * max_degree + 20)
    throw std::invalid_argument("need nodes >= 2*max_degree + 20");

  const GaussianRule rule = expansion_rule(act, max_degree, nodes);
  HermiteSeries series;
  series.max_degree = max_degree;
  series.activation_tag = act.name();
  series.coeffs.assign(static_cast<std::size_t>(max_degree) + 1, 0.0);
  std::vector<double> basis;
  for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
    const double x = rule.nodes[j];
    const double fw = act(x) * rule.weights[j];
    if (fw == 0.0) continue;
    hermite_normalized_all(max_degree, x, basis);
    for (int i = 0; i <= max_degree; ++i)
      series.coeffs[static_cast<std::size_t>(i)] +=
          fw * basis[static_cast<std::size_t>(i)];
  }
  return series;
}

/// Closed-form ReLU series, used where the exact coefficients are wanted.
inline HermiteSeries relu_series(int max_degree) {
  HermiteSeries series;
  series.max_degree = max_degree;
  series.activation_tag = ActivationSpec::relu().name();
  for (int i = 0; i <= max_degree; ++i)
    series.coeffs.push_back(relu_hermite_coeff(i));
  return series;
}

/// Closed form for ReLU, quadrature otherwise.
inline HermiteSeries expansion_series(const ActivationSpec& act, int max_degree) {
  if (act.kind == ActivationKind::relu) return relu_series(max_degree);
  return hermite_coeffs_quadrature(act, max_degree, std::max(400, 2 * max_degree + 20));
}

/// E_{x~N(0,1)}[act(x)^2] with the same rule family as the expansion.
inline double activation_second_moment(const ActivationSpec& act,
                                       int nodes = 400) {
  const GaussianRule rule = expansion_rule(act, 0, nodes);
  return rule.expect([&](double x) {
    const double v = act(x);
    return v * v;
  });
}

}  // namespace sqhardnet
