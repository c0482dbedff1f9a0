#include <gtest/gtest.h>

#include "sqhardnet/distributions.hpp"
#include "sqhardnet/mlp.hpp"
#include "sqhardnet/sqgame.hpp"

using namespace sqhardnet;

namespace {

Eigen::MatrixXd gaussian_rows(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  return sample(DistributionSpec::gaussian(static_cast<std::size_t>(cols)),
                static_cast<std::size_t>(rows), seed);
}

// Loop-based forward pass, independent of the Eigen expressions under test.
double naive_output(const MLPParams<double>& p, const Eigen::RowVectorXd& x) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.units(); ++i) {
    double z = p.b[i];
    for (Eigen::Index j = 0; j < p.inputs(); ++j) z += p.W(i, j) * x[j];
    h += p.a[i] * p.activation(z);
  }
  return h;
}

double loss_at(MLPParams<double> p, const std::vector<double>& flat, const Eigen::MatrixXd& x,
               const Eigen::VectorXd& y) {
  p.assign(flat);
  double total = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double d = naive_output(p, x.row(r)) - y[r];
    total += d * d;
  }
  return total / static_cast<double>(x.rows());
}

}  // namespace

TEST(Mlp, InitIsDeterministicAndScaled) {
  const auto p = init_mlp<double>(400, 25, ActivationSpec::tanh(), 2.0, 5);
  const auto q = init_mlp<double>(400, 25, ActivationSpec::tanh(), 2.0, 5);
  EXPECT_EQ(p.flatten(), q.flatten());
  EXPECT_EQ(p.parameter_count(), 400 * 25 + 400 + 400);
  EXPECT_NEAR(p.W.squaredNorm() / p.W.size(), 4.0 / 25.0, 0.01);
  EXPECT_NEAR(p.a.squaredNorm(), 1.0, 0.2);
  EXPECT_TRUE(p.b.isZero());
  // Same draws regardless of scalar type.
  const auto f = init_mlp<float>(400, 25, ActivationSpec::tanh(), 2.0, 5);
  EXPECT_NEAR((f.W.cast<double>() - p.W).cwiseAbs().maxCoeff(), 0.0, 1e-6);
  EXPECT_THROW(init_mlp<double>(0, 3, ActivationSpec::tanh(), 1.0, 1), std::invalid_argument);
}

TEST(Mlp, FlattenAssignRoundTrip) {
  auto p = init_mlp<double>(7, 3, ActivationSpec::relu(), 1.0, 2);
  p.b.setRandom();
  const auto flat = p.flatten();
  MLPParams<double> q = init_mlp<double>(7, 3, ActivationSpec::relu(), 1.0, 99);
  q.assign(flat);
  EXPECT_EQ(q.flatten(), flat);
  // Column-major W: entry (i, j) at j*m + i.
  EXPECT_EQ(flat[2 * 7 + 4], p.W(4, 2));
  EXPECT_EQ(flat[21 + 3], p.a[3]);
  EXPECT_EQ(flat[28 + 6], p.b[6]);
  EXPECT_THROW(q.assign(std::vector<double>(5)), std::invalid_argument);
}

TEST(Mlp, ForwardPathsAgree) {
  for (const auto& act : {ActivationSpec::tanh(), ActivationSpec::relu(), ActivationSpec::sigmoid(),
                          ActivationSpec::truncated_relu(1.0), ActivationSpec::identity()}) {
    auto p = init_mlp<double>(9, 4, act, 1.0, 3);
    p.b.setConstant(0.1);
    const auto x = gaussian_rows(20, 4, 4);
    const auto batch = forward_batch(p, x);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const Eigen::VectorXd row = x.row(r).transpose();
      EXPECT_NEAR(batch[r], naive_output(p, x.row(r)), 1e-12);
      EXPECT_NEAR(forward(p, std::span<const double>(row.data(), 4)), batch[r], 1e-12);
    }
  }
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  for (std::uint64_t trial = 0; trial < 6; ++trial) {
    const ActivationSpec act = trial % 3 == 0   ? ActivationSpec::tanh()
                               : trial % 3 == 1 ? ActivationSpec::sigmoid()
                                                : ActivationSpec::relu();
    auto p = init_mlp<double>(6, 3, act, 1.0, trial);
    p.b = gaussian_rows(6, 1, 50 + trial).col(0) * 0.3;
    const auto x = gaussian_rows(15, 3, 100 + trial);
    const Eigen::VectorXd y = gaussian_rows(15, 1, 200 + trial).col(0);
    const auto g = grad_sq_loss(p, x, y).flatten();
    const auto flat = p.flatten();
    double diff = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < flat.size(); ++j) {
      const double h = 1e-6;
      auto plus = flat, minus = flat;
      plus[j] += h;
      minus[j] -= h;
      const double fd = (loss_at(p, plus, x, y) - loss_at(p, minus, x, y)) / (2.0 * h);
      diff += (fd - g[j]) * (fd - g[j]);
      norm += g[j] * g[j];
    }
    EXPECT_LT(std::sqrt(diff / norm), 1e-6) << act.name();
  }
}

TEST(Mlp, JacobianMatchesFiniteDifferences) {
  auto p = init_mlp<double>(5, 3, ActivationSpec::tanh(), 1.0, 8);
  p.b.setConstant(-0.2);
  const auto x = gaussian_rows(4, 3, 9);
  const auto jac = mlp_output_jacobian(p, x);
  const auto flat = p.flatten();
  for (std::size_t j = 0; j < flat.size(); ++j) {
    auto plus = flat, minus = flat;
    plus[j] += 1e-6;
    minus[j] -= 1e-6;
    MLPParams<double> pp = p, pm = p;
    pp.assign(plus);
    pm.assign(minus);
    const Eigen::VectorXd fd = (forward_batch(pp, x) - forward_batch(pm, x)) / 2e-6;
    for (Eigen::Index r = 0; r < x.rows(); ++r)
      EXPECT_NEAR(jac(r, static_cast<Eigen::Index>(j)), fd[r], 1e-8);
  }
}

TEST(Mlp, JacobianSumsMatchTheExplicitJacobian) {
  auto p = init_mlp<double>(7, 4, ActivationSpec::relu(), 1.0, 3);
  p.b.setConstant(0.1);
  const auto x = gaussian_rows(50, 4, 4);
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(50, -1.0, 2.0);
  const Eigen::VectorXd v = u.array().square();
  const auto jac = mlp_output_jacobian(p, x);
  const auto s = mlp_jacobian_sums(p, x, u, v);
  const Eigen::VectorXd first = jac.transpose() * u;
  const Eigen::VectorXd second = jac.array().square().matrix().transpose() * v;
  ASSERT_EQ(s.weighted.size(), first.size());
  for (Eigen::Index j = 0; j < first.size(); ++j) {
    EXPECT_NEAR(s.weighted[j], first[j], 1e-12 * (1.0 + std::abs(first[j])));
    EXPECT_NEAR(s.squared[j], second[j], 1e-12 * (1.0 + std::abs(second[j])));
  }
}

TEST(Mlp, EvaluateMatchesNaiveLoops) {
  const auto p = init_mlp<double>(11, 4, ActivationSpec::tanh(), 1.0, 1);
  const auto x = gaussian_rows(700, 4, 2);  // spans several evaluation blocks
  Eigen::VectorXd y(700);
  for (Eigen::Index r = 0; r < 700; ++r) y[r] = r % 3 ? 1.0 : -1.0;
  double sq = 0.0;
  int wrong = 0;
  for (Eigen::Index r = 0; r < 700; ++r) {
    const double h = naive_output(p, x.row(r));
    sq += (h - y[r]) * (h - y[r]);
    wrong += (h >= 0 ? 1.0 : -1.0) != y[r];
  }
  const auto stats = evaluate(p, x, y);
  EXPECT_NEAR(stats.sq_loss, sq / 700.0, 1e-12);
  EXPECT_DOUBLE_EQ(stats.zero_one, wrong / 700.0);
  EXPECT_THROW(evaluate(p, x, Eigen::VectorXd(3)), std::invalid_argument);
}

TEST(Mlp, FloatAndDoubleAgree) {
  const auto p = init_mlp<double>(64, 8, ActivationSpec::tanh(), 1.0, 4);
  const auto x = gaussian_rows(50, 8, 5);
  const auto hd = forward_batch(p, x);
  const Eigen::MatrixXf xf = x.cast<float>();
  const auto hf = forward_batch(p.cast<float>(), xf);
  EXPECT_LT((hf.cast<double>() - hd).cwiseAbs().maxCoeff(), 1e-5);
}
