#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace sqhardnet {

/// Nodes and weights of a rule for E_{x~N(0,1)}[f(x)] ≈ Σ_j w_j f(x_j).
struct GaussianRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <class Fn>
  double expect(Fn&& f) const {
    double total = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j)
      total += weights[j] * f(nodes[j]);
    return total;
  }
};

namespace detail {

// Orthonormal probabilists' Hermite values p_0..p_n at x, divided by e^{log_scale}
// so large |x| cannot overflow. Returns Σ_{i<n} p_i², scaled by e^{-2·log_scale}.
inline double hermite_scaled_sum(int n, double x, double& pn, double& pn_1,
                                 double& log_scale) {
  double prev = 0.0;
  double cur = 1.0;
  double sum = 0.0;
  log_scale = 0.0;
  for (int j = 1; j <= n; ++j) {
    sum += cur * cur;
    const double next = (x * cur - std::sqrt(j - 1.0) * prev) / std::sqrt(static_cast<double>(j));
    prev = cur;
    cur = next;
    if (std::abs(cur) > 1e100) {
      prev *= 1e-100;
      cur *= 1e-100;
      sum *= 1e-200;
      log_scale += 100.0 * std::numbers::ln10;
    }
  }
  pn = cur;
  pn_1 = prev;
  return sum;
}

// Golub–Welsch nodes (eigenvalues of the Jacobi matrix), refined by Newton on
// p_n; weights from the Christoffel function 1/Σ_{i<n} p_i(x)², which keeps
// full relative accuracy for the tiny tail weights.
inline void gauss_hermite_probabilists(int n, std::vector<double>& x,
                                       std::vector<double>& w) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int i = 1; i < n; ++i) sub[i - 1] = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("Gauss-Hermite eigenvalue solve failed");
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    // Symmetrize so the rule is exactly odd/even balanced.
    double z = 0.5 * (solver.eigenvalues()[i] - solver.eigenvalues()[n - 1 - i]);
    double pn = 0.0, pn_1 = 0.0, log_scale = 0.0;
    for (int iter = 0; iter < 3; ++iter) {
      hermite_scaled_sum(n, z, pn, pn_1, log_scale);
      // p_n' = √n · p_{n−1}
      z -= pn / (std::sqrt(static_cast<double>(n)) * pn_1);
    }
    const double sum = hermite_scaled_sum(n, z, pn, pn_1, log_scale);
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = std::exp(-2.0 * log_scale) / sum;
  }
}

inline void gauss_legendre_unit(int n, std::vector<double>& x,
                                std::vector<double>& w) {
  constexpr double kEps = 1e-15;
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z_prev = z;
      z = z_prev - p1 / pp;
      if (std::abs(z - z_prev) <= kEps) break;
    }
    x[static_cast<std::size_t>(i)] = -z;
    x[static_cast<std::size_t>(n - 1 - i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[static_cast<std::size_t>(n - 1 - i)] = w[static_cast<std::size_t>(i)];
  }
}

}  // namespace detail

/// Gauss–Hermite rule for the standard normal, exact for polynomials of degree ≤ 2n−1.
inline GaussianRule gauss_hermite_rule(int nodes) {
  if (nodes < 1) throw std::invalid_argument("Gauss-Hermite needs >= 1 node");
  GaussianRule rule;
  detail::gauss_hermite_probabilists(nodes, rule.nodes, rule.weights);
  return rule;
}

/**
 * Composite Gauss–Legendre rule for the standard normal on [-half_width,
 * half_width], with panel edges at every breakpoint so piecewise-smooth
 * integrands (ReLU-type kinks) are integrated to machine precision.
 */
inline GaussianRule piecewise_gaussian_rule(std::span<const double> breakpoints,
                                            double half_width,
                                            double panel_width = 0.5,
                                            int points_per_panel = 16) {
  std::vector<double> edges;
  for (double e = -half_width; e < half_width; e += panel_width)
    edges.push_back(e);
  edges.push_back(half_width);
  for (double b : breakpoints)
    if (b > -half_width && b < half_width) edges.push_back(b);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](double a, double b) { return b - a < 1e-12; }),
              edges.end());

  std::vector<double> unit_x;
  std::vector<double> unit_w;
  detail::gauss_legendre_unit(points_per_panel, unit_x, unit_w);
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);

  GaussianRule rule;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double mid = 0.5 * (edges[p] + edges[p + 1]);
    const double half = 0.5 * (edges[p + 1] - edges[p]);
    for (std::size_t j = 0; j < unit_x.size(); ++j) {
      const double x = mid + half * unit_x[j];
      rule.nodes.push_back(x);
      rule.weights.push_back(half * unit_w[j] * norm * std::exp(-0.5 * x * x));
    }
  }
  return rule;
}

}  // namespace sqhardnet
