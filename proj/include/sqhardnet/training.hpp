#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqhardnet/distributions.hpp"
#include "sqhardnet/family.hpp"
#include "sqhardnet/mlp.hpp"
#include "sqhardnet/parallel.hpp"
#include "sqhardnet/rng.hpp"

namespace sqhardnet {

enum class TaskMode { regression, classification };

inline TaskMode parse_task_mode(const std::string& text) {
  if (text == "regression") return TaskMode::regression;
  if (text == "classification") return TaskMode::classification;
  throw std::invalid_argument("unknown task mode: " + text);
}

inline const char* task_mode_name(TaskMode m) {
  return m == TaskMode::regression ? "regression" : "classification";
}

struct StudentArch {
  std::size_t units = 640;
  ActivationSpec activation = ActivationSpec::tanh();
};

struct TrainConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 2000;
  /// 0 means full batch.
  std::size_t batch_size = 0;
  double init_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
    if (!(init_scale > 0.0)) throw std::invalid_argument("init scale must be > 0");
  }
};

/// Train/test split; bayes_01 is the test error of sign(E[y|x]) when known.
struct TrainData {
  Eigen::MatrixXd x_train;
  Eigen::VectorXd y_train;
  Eigen::MatrixXd x_test;
  Eigen::VectorXd y_test;
  std::optional<double> bayes_01;
};

struct CurveRow {
  std::size_t epoch = 0;
  double train_sq = 0.0;
  double test_sq = 0.0;
  double train_01 = std::numeric_limits<double>::quiet_NaN();
  double test_01 = std::numeric_limits<double>::quiet_NaN();
  double bayes_01 = std::numeric_limits<double>::quiet_NaN();
};

struct Curves {
  std::vector<CurveRow> rows;  // rows[0] is the initialization
};

template <class Scalar>
struct TrainResult {
  Curves curves;
  MLPParams<Scalar> params;
};

inline Eigen::MatrixXd to_dense(const SampleMatrix& x) { return Eigen::MatrixXd(x); }

/**
 * Inputs (Gaussian unless `input` is given) labeled by f_S: regression
 * targets f_S(x), or p-concept ±1 labels. Train and test draws use the
 * streams derive_seed(seed, "train") and derive_seed(seed, "test").
 */
inline TrainData make_family_data(const FamilySpec& spec, const ConceptId& id,
                                  LabelMode mode, std::size_t n_train,
                                  std::size_t n_test, std::uint64_t seed,
                                  std::optional<DistributionSpec> input = {}) {
  spec.validate();
  id.validate(spec);
  const auto dist = input ? *input : DistributionSpec::gaussian(spec.n);
  if (dist.dim != spec.n) throw std::invalid_argument("distribution dim must equal n");
  TrainData data;
  auto fill = [&](const char* label, std::size_t count, Eigen::MatrixXd& x,
                  Eigen::VectorXd& y) {
    const std::uint64_t s = derive_seed(seed, label);
    const SampleMatrix xs = sample(dist, count, s);
    const auto ys = sample_labels(spec, id, xs, mode, s);
    x = to_dense(xs);
    y = Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  };
  fill("train", n_train, data.x_train, data.y_train);
  fill("test", n_test, data.x_test, data.y_test);
  if (mode == LabelMode::pconcept) {
    std::size_t wrong = 0;
    for (Eigen::Index r = 0; r < data.x_test.rows(); ++r) {
      const Eigen::VectorXd row = data.x_test.row(r).transpose();
      const double c = eval_f(spec, id, std::span<const double>(row.data(), spec.n));
      if ((c >= 0.0 ? 1.0 : -1.0) != data.y_test[r]) ++wrong;
    }
    data.bayes_01 = static_cast<double>(wrong) / static_cast<double>(data.x_test.rows());
  }
  return data;
}

namespace detail {

// Fisher–Yates with an explicit draw rule so the order is portable.
inline void shuffle_indices(std::vector<Eigen::Index>& idx, Engine& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace detail

/**
 * Gradient descent on mean squared loss. Epoch 0 is the initialization;
 * each later epoch is one pass over the training set in batches of
 * cfg.batch_size (full batch when 0), reshuffled every epoch.
 */
template <class Scalar = double>
TrainResult<Scalar> train(const StudentArch& arch, const TrainData& data,
                          const TrainConfig& cfg, TaskMode mode) {
  cfg.validate();
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = data.x_train.cols();
  if (data.x_train.rows() == 0) throw std::invalid_argument("empty training set");
  if (data.x_test.cols() != n || data.y_train.size() != data.x_train.rows() ||
      data.y_test.size() != data.x_test.rows())
    throw std::invalid_argument("train/test shapes are inconsistent");

  const Matrix x_train = data.x_train.cast<Scalar>();
  const Vector y_train = data.y_train.cast<Scalar>();
  const Matrix x_test = data.x_test.cast<Scalar>();
  const Vector y_test = data.y_test.cast<Scalar>();

  TrainResult<Scalar> result;
  auto& p = result.params;
  p = init_mlp<Scalar>(static_cast<Eigen::Index>(arch.units), n, arch.activation,
                       cfg.init_scale, derive_seed(cfg.seed, "init"));

  const bool has_test = x_test.rows() > 0;
  auto record = [&](std::size_t epoch) {
    CurveRow row;
    row.epoch = epoch;
    const EvalStats tr = evaluate(p, x_train, y_train);
    row.train_sq = tr.sq_loss;
    if (!std::isfinite(row.train_sq) || row.train_sq > kDivergenceLoss)
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                            " (train loss " + std::to_string(row.train_sq) + ")");
    std::optional<EvalStats> te;
    if (has_test) {
      te = evaluate(p, x_test, y_test);
      row.test_sq = te->sq_loss;
    } else {
      row.test_sq = std::numeric_limits<double>::quiet_NaN();
    }
    if (mode == TaskMode::classification) {
      row.train_01 = tr.zero_one;
      if (te) row.test_01 = te->zero_one;
      if (data.bayes_01) row.bayes_01 = *data.bayes_01;
    }
    result.curves.rows.push_back(row);
  };
  record(0);

  const Eigen::Index rows = x_train.rows();
  const Eigen::Index batch =
      cfg.batch_size == 0 ? rows
                          : std::min<Eigen::Index>(rows, static_cast<Eigen::Index>(cfg.batch_size));
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  Engine shuffle_rng = make_engine(derive_seed(cfg.seed, "shuffle"));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(rows));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Matrix xb;
  Vector yb;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (batch == rows) {
      const auto g = grad_sq_loss(p, x_train, y_train);
      p.W -= lr * g.W;
      p.a -= lr * g.a;
      p.b -= lr * g.b;
    } else {
      detail::shuffle_indices(order, shuffle_rng);
      for (Eigen::Index start = 0; start < rows; start += batch) {
        const Eigen::Index len = std::min(batch, rows - start);
        xb.resize(len, n);
        yb.resize(len);
        for (Eigen::Index r = 0; r < len; ++r) {
          const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
          xb.row(r) = x_train.row(src);
          yb[r] = y_train[src];
        }
        const auto g = grad_sq_loss(p, xb, yb);
        p.W -= lr * g.W;
        p.a -= lr * g.a;
        p.b -= lr * g.b;
      }
    }
    record(epoch);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Figure reproductions.

enum class Figure { fig1a, fig1b, fig2a, fig2b };

inline Figure parse_figure(const std::string& text) {
  if (text == "fig1a") return Figure::fig1a;
  if (text == "fig1b") return Figure::fig1b;
  if (text == "fig2a") return Figure::fig2a;
  if (text == "fig2b") return Figure::fig2b;
  throw std::invalid_argument("unknown figure: " + text);
}

inline const char* figure_name(Figure f) {
  switch (f) {
    case Figure::fig1a: return "fig1a";
    case Figure::fig1b: return "fig1b";
    case Figure::fig2a: return "fig2a";
    case Figure::fig2b: return "fig2b";
  }
  return "?";
}

/// Pass/fail thresholds for the train/test gap of a reproduction.
struct GapThresholds {
  double max_train_01 = 0.10;
  double min_test_01 = 0.40;
  double min_gap_01 = 0.30;
  double max_train_sq = 0.05;
  double min_test_sq_fraction = 0.5;  // of the initial test loss
};

struct FigureConfig {
  Figure which = Figure::fig1a;
  FamilySpec target;
  LabelMode labels = LabelMode::pconcept;
  TaskMode task = TaskMode::classification;
  StudentArch student;
  TrainConfig train;
  std::size_t n_train = 6000;
  std::size_t n_test = 1000;
  GapThresholds thresholds;
};

/**
 * Figure settings: n = 14, Gaussian inputs, 6000/1000 split. fig1 uses a
 * k = 7 tanh target and 640 tanh students (lr 0.01); fig2 a k = 8 ReLU
 * target and 1280 ReLU students (lr 0.005 classification, 0.002
 * regression). (a) panels are ±1 p-concepts through an outer tanh, (b)
 * panels regress on the inner network directly.
 */
inline FigureConfig figure_config(Figure which) {
  FigureConfig c;
  c.which = which;
  const bool fig1 = which == Figure::fig1a || which == Figure::fig1b;
  const bool classify = which == Figure::fig1a || which == Figure::fig2a;
  c.target.n = 14;
  c.target.k = fig1 ? 7 : 8;
  c.target.inner = fig1 ? ActivationSpec::tanh() : ActivationSpec::relu();
  c.target.outer = classify ? ActivationSpec::tanh() : ActivationSpec::identity();
  c.labels = classify ? LabelMode::pconcept : LabelMode::regression;
  c.task = classify ? TaskMode::classification : TaskMode::regression;
  c.student.units = 5 * c.target.hidden_units();
  c.student.activation = fig1 ? ActivationSpec::tanh() : ActivationSpec::relu();
  c.train.learning_rate = fig1 ? 0.01 : (classify ? 0.005 : 0.002);
  c.train.batch_size = 32;
  // Sized so the minibatch runs reach their train-loss plateau.
  switch (which) {
    case Figure::fig1a: c.train.epochs = 600; break;
    case Figure::fig1b: c.train.epochs = 1500; break;
    case Figure::fig2a: c.train.epochs = 400; break;
    case Figure::fig2b: c.train.epochs = 1200; break;
  }
  return c;
}

struct QuantileRow {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Linear-interpolation quantiles (type 7) after a sort.
inline QuantileRow quartiles(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("quartiles of an empty set");
  std::sort(v.begin(), v.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

struct AggregateRow {
  std::size_t epoch = 0;
  QuantileRow train_sq, test_sq, train_01, test_01, bayes_01;
};

struct FigureResult {
  FigureConfig config;
  std::vector<Curves> trials;
  std::vector<AggregateRow> aggregate;
  // Checks on the final epoch.
  bool train_ok = false;
  bool test_ok = false;
  bool gap_ok = false;
  bool bayes_ok = true;  // classification only
  /// Trials whose train square loss never increases after epoch 10.
  std::size_t monotone_trials = 0;
};

inline std::vector<AggregateRow> aggregate_curves(const std::vector<Curves>& trials) {
  if (trials.empty()) throw std::invalid_argument("no trials to aggregate");
  const std::size_t epochs = trials.front().rows.size();
  std::vector<AggregateRow> out(epochs);
  for (std::size_t e = 0; e < epochs; ++e) {
    std::vector<double> tr_sq, te_sq, tr01, te01, bayes;
    for (const auto& t : trials) {
      const auto& r = t.rows.at(e);
      tr_sq.push_back(r.train_sq);
      te_sq.push_back(r.test_sq);
      tr01.push_back(r.train_01);
      te01.push_back(r.test_01);
      bayes.push_back(r.bayes_01);
    }
    out[e] = {trials.front().rows[e].epoch, quartiles(tr_sq), quartiles(te_sq),
              quartiles(tr01),               quartiles(te01),  quartiles(bayes)};
  }
  return out;
}

/**
 * Runs `trials` independent seeded trainings (data, initialization and
 * batch order all derive from (seed, figure, trial)) and aggregates the
 * per-epoch median and quartiles.
 */
inline FigureResult reproduce_figure(const FigureConfig& config, std::size_t trials,
                                     std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("need at least one trial");
  FigureResult result;
  result.config = config;
  result.trials.resize(trials);
  const ConceptId target = leading_concept(config.target.k);
  parallel_for(trials, [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(seed, figure_name(config.which), t);
    const TrainData data = make_family_data(config.target, target, config.labels,
                                            config.n_train, config.n_test,
                                            derive_seed(trial_seed, "data"));
    TrainConfig cfg = config.train;
    cfg.seed = derive_seed(trial_seed, "train");
    result.trials[t] = train<float>(config.student, data, cfg, config.task).curves;
  });
  result.aggregate = aggregate_curves(result.trials);

  const auto& first = result.aggregate.front();
  const auto& last = result.aggregate.back();
  const auto& th = config.thresholds;
  if (config.task == TaskMode::classification) {
    result.train_ok = last.train_01.median <= th.max_train_01;
    result.test_ok = last.test_01.median >= th.min_test_01;
    result.gap_ok = last.test_01.median - last.train_01.median >= th.min_gap_01;
    result.bayes_ok = last.bayes_01.median < 0.5 && last.bayes_01.median < last.test_01.median;
  } else {
    result.train_ok = last.train_sq.median <= th.max_train_sq;
    result.test_ok = last.test_sq.median >= th.min_test_sq_fraction * first.test_sq.median;
    result.gap_ok = result.train_ok && result.test_ok;
  }
  for (const auto& t : result.trials) {
    bool monotone = true;
    for (std::size_t e = 11; e < t.rows.size(); ++e)
      if (t.rows[e].train_sq > t.rows[e - 1].train_sq) monotone = false;
    if (monotone) ++result.monotone_trials;
  }
  return result;
}

}  // namespace sqhardnet
