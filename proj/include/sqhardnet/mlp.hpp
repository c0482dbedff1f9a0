#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "sqhardnet/activation.hpp"
#include "sqhardnet/rng.hpp"

namespace sqhardnet {

/// Raised when a training loss exceeds kDivergenceLoss or stops being finite.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kDivergenceLoss = 1e6;

/**
 * One-hidden-layer student h(x) = Σ_i a_i·act(⟨W_i, x⟩ + b_i), no output
 * activation.
 */
template <class Scalar>
struct MLPParams {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix W;  // units x inputs
  Vector a;
  Vector b;
  ActivationSpec activation = ActivationSpec::tanh();

  Eigen::Index units() const { return W.rows(); }
  Eigen::Index inputs() const { return W.cols(); }
  Eigen::Index parameter_count() const { return W.size() + a.size() + b.size(); }

  void validate() const {
    if (a.size() != W.rows() || b.size() != W.rows())
      throw std::invalid_argument("MLP dimensions are inconsistent");
    if (!W.allFinite() || !a.allFinite() || !b.allFinite())
      throw std::invalid_argument("MLP parameters must be finite");
  }

  template <class Other>
  MLPParams<Other> cast() const {
    return {W.template cast<Other>(), a.template cast<Other>(),
            b.template cast<Other>(), activation};
  }

  /// Parameters as one vector: W (column-major), then a, then b.
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(parameter_count()));
    for (Eigen::Index i = 0; i < W.size(); ++i) out.push_back(static_cast<double>(W.data()[i]));
    for (Eigen::Index i = 0; i < a.size(); ++i) out.push_back(static_cast<double>(a[i]));
    for (Eigen::Index i = 0; i < b.size(); ++i) out.push_back(static_cast<double>(b[i]));
    return out;
  }

  void assign(std::span<const double> flat) {
    if (static_cast<Eigen::Index>(flat.size()) != parameter_count())
      throw std::invalid_argument("flat parameter vector has the wrong size");
    std::size_t p = 0;
    for (Eigen::Index i = 0; i < W.size(); ++i) W.data()[i] = static_cast<Scalar>(flat[p++]);
    for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = static_cast<Scalar>(flat[p++]);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = static_cast<Scalar>(flat[p++]);
  }
};

/// Hidden weights ~ N(0, (scale/√n)²), output weights ~ N(0, 1/m), biases 0.
template <class Scalar>
MLPParams<Scalar> init_mlp(Eigen::Index units, Eigen::Index inputs,
                           const ActivationSpec& activation, double init_scale,
                           std::uint64_t seed) {
  if (units < 1 || inputs < 1)
    throw std::invalid_argument("MLP needs at least one unit and one input");
  Engine rng = make_engine(seed);
  std::normal_distribution<double> normal;
  MLPParams<Scalar> p;
  p.activation = activation;
  p.W.resize(units, inputs);
  p.a.resize(units);
  p.b = MLPParams<Scalar>::Vector::Zero(units);
  const double w_sd = init_scale / std::sqrt(static_cast<double>(inputs));
  const double a_sd = 1.0 / std::sqrt(static_cast<double>(units));
  // Row-major fill so the draw order does not depend on Eigen's storage.
  for (Eigen::Index i = 0; i < units; ++i)
    for (Eigen::Index j = 0; j < inputs; ++j)
      p.W(i, j) = static_cast<Scalar>(w_sd * normal(rng));
  for (Eigen::Index i = 0; i < units; ++i)
    p.a[i] = static_cast<Scalar>(a_sd * normal(rng));
  return p;
}

namespace detail {

template <class Derived>
auto activate(const ActivationSpec& act, const Eigen::ArrayBase<Derived>& z) {
  using Scalar = typename Derived::Scalar;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  switch (act.kind) {
    case ActivationKind::tanh:
      return Array(z.tanh());
    case ActivationKind::relu:
      return Array(z.max(Scalar(0)));
    case ActivationKind::truncated_relu:
      return Array(z.max(Scalar(0)).min(static_cast<Scalar>(act.param)));
    case ActivationKind::sigmoid:
      return Array(z.logistic());
    case ActivationKind::identity:
      return Array(z);
    case ActivationKind::sign:
      return Array((z >= Scalar(0)).select(Array::Ones(z.rows(), z.cols()),
                                           -Array::Ones(z.rows(), z.cols())));
    case ActivationKind::constant:
      return Array(Array::Constant(z.rows(), z.cols(), static_cast<Scalar>(act.param)));
  }
  throw std::invalid_argument("unsupported activation");
}

// Derivative expressed through the pre-activation z and activation value v.
template <class DZ, class DV>
auto activate_derivative(const ActivationSpec& act, const Eigen::ArrayBase<DZ>& z,
                         const Eigen::ArrayBase<DV>& v) {
  using Scalar = typename DZ::Scalar;
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  switch (act.kind) {
    case ActivationKind::tanh:
      return Array(Scalar(1) - v.square());
    case ActivationKind::relu:
      return Array((z > Scalar(0)).template cast<Scalar>());
    case ActivationKind::truncated_relu:
      return Array(((z > Scalar(0)) && (z < static_cast<Scalar>(act.param)))
                       .template cast<Scalar>());
    case ActivationKind::sigmoid:
      return Array(v * (Scalar(1) - v));
    case ActivationKind::identity:
      return Array(Array::Ones(z.rows(), z.cols()));
    case ActivationKind::sign:
    case ActivationKind::constant:
      return Array(Array::Zero(z.rows(), z.cols()));
  }
  throw std::invalid_argument("unsupported activation");
}

}  // namespace detail

/// Intermediate values of a batch forward pass (rows = samples).
template <class Scalar>
struct ForwardPass {
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> pre;
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> hidden;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> output;
};

template <class Scalar, class DerivedX>
ForwardPass<Scalar> forward_pass(const MLPParams<Scalar>& p,
                                 const Eigen::MatrixBase<DerivedX>& x) {
  if (x.cols() != p.inputs())
    throw std::invalid_argument("input width does not match the network");
  ForwardPass<Scalar> out;
  out.pre = ((x * p.W.transpose()).rowwise() + p.b.transpose()).array();
  out.hidden = detail::activate(p.activation, out.pre);
  out.output = out.hidden.matrix() * p.a;
  return out;
}

template <class Scalar, class DerivedX>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> forward_batch(
    const MLPParams<Scalar>& p, const Eigen::MatrixBase<DerivedX>& x) {
  return forward_pass(p, x).output;
}

/// Single-input forward pass, accumulated in double.
template <class Scalar>
double forward(const MLPParams<Scalar>& p, std::span<const double> x) {
  if (static_cast<Eigen::Index>(x.size()) != p.inputs())
    throw std::invalid_argument("input width does not match the network");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.units(); ++i) {
    double z = static_cast<double>(p.b[i]);
    for (Eigen::Index j = 0; j < p.inputs(); ++j)
      z += static_cast<double>(p.W(i, j)) * x[static_cast<std::size_t>(j)];
    total += static_cast<double>(p.a[i]) * p.activation(z);
  }
  return total;
}

/**
 * Gradient of the batch mean of (h(x) − y)², shaped like the parameters.
 *   ∂/∂a_i = (2/N) Σ r·act(z_i),  ∂/∂b_i = (2/N) Σ r·a_i·act'(z_i),
 *   ∂/∂W_ij = (2/N) Σ r·a_i·act'(z_i)·x_j,  with r = h − y.
 */
template <class Scalar, class DerivedX, class DerivedY>
MLPParams<Scalar> grad_sq_loss(const MLPParams<Scalar>& p,
                               const Eigen::MatrixBase<DerivedX>& x,
                               const Eigen::MatrixBase<DerivedY>& y) {
  if (x.rows() == 0) throw std::invalid_argument("empty batch");
  if (y.size() != x.rows())
    throw std::invalid_argument("label count does not match batch size");
  const auto pass = forward_pass(p, x);
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> r =
      (pass.output - y) * (Scalar(2) / static_cast<Scalar>(x.rows()));
  const auto slope = detail::activate_derivative(p.activation, pass.pre, pass.hidden);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> back =
      (slope.colwise() * r.array()).rowwise() * p.a.transpose().array();
  MLPParams<Scalar> g;
  g.activation = p.activation;
  g.a = pass.hidden.matrix().transpose() * r;
  g.b = back.colwise().sum().transpose();
  g.W = back.transpose() * x;
  return g;
}

struct EvalStats {
  double sq_loss = 0.0;
  double zero_one = 0.0;  // fraction with sign(h(x)) ≠ y, sign(0) = +1
};

/// Mean squared error and 0/1 error in one pass over row blocks.
template <class Scalar, class DerivedX, class DerivedY>
EvalStats evaluate(const MLPParams<Scalar>& p, const Eigen::MatrixBase<DerivedX>& x,
                   const Eigen::MatrixBase<DerivedY>& y) {
  if (x.rows() == 0) throw std::invalid_argument("empty evaluation set");
  if (y.size() != x.rows())
    throw std::invalid_argument("label count does not match batch size");
  constexpr Eigen::Index kBlock = 256;
  double sq = 0.0;
  std::size_t wrong = 0;
  for (Eigen::Index start = 0; start < x.rows(); start += kBlock) {
    const Eigen::Index len = std::min(kBlock, x.rows() - start);
    const auto h = forward_batch(p, x.middleRows(start, len));
    for (Eigen::Index i = 0; i < len; ++i) {
      const double d = static_cast<double>(h[i]) - static_cast<double>(y[start + i]);
      sq += d * d;
      const Scalar guess = h[i] >= Scalar(0) ? Scalar(1) : Scalar(-1);
      if (guess != y[start + i]) ++wrong;
    }
  }
  const double n = static_cast<double>(x.rows());
  return {sq / n, static_cast<double>(wrong) / n};
}

/// Mean squared error of the network on (x, y).
template <class Scalar, class DerivedX, class DerivedY>
double mean_sq_loss(const MLPParams<Scalar>& p, const Eigen::MatrixBase<DerivedX>& x,
                    const Eigen::MatrixBase<DerivedY>& y) {
  return evaluate(p, x, y).sq_loss;
}

/// Fraction of rows where sign(h(x)) ≠ y, with sign(0) = +1.
template <class Scalar, class DerivedX, class DerivedY>
double zero_one_error(const MLPParams<Scalar>& p, const Eigen::MatrixBase<DerivedX>& x,
                      const Eigen::MatrixBase<DerivedY>& y) {
  return evaluate(p, x, y).zero_one;
}

}  // namespace sqhardnet
