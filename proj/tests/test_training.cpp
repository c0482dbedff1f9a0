#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sqhardnet/report.hpp"
#include "sqhardnet/training.hpp"

using namespace sqhardnet;

namespace {

FigureConfig small_config(Figure which) {
  auto c = figure_config(which);
  c.target.n = 6;
  c.target.k = 3;
  c.student.units = 24;
  c.n_train = 300;
  c.n_test = 200;
  c.train.epochs = 15;
  return c;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Training, FigureConfigsHaveTheStatedSettings) {
  const auto a = figure_config(Figure::fig1a);
  EXPECT_EQ(a.target.n, 14u);
  EXPECT_EQ(a.target.k, 7u);
  EXPECT_EQ(a.student.units, 640u);
  EXPECT_EQ(a.n_train, 6000u);
  EXPECT_EQ(a.n_test, 1000u);
  EXPECT_EQ(a.labels, LabelMode::pconcept);
  const auto b = figure_config(Figure::fig2b);
  EXPECT_EQ(b.target.k, 8u);
  EXPECT_EQ(b.student.units, 1280u);
  EXPECT_EQ(b.task, TaskMode::regression);
  EXPECT_DOUBLE_EQ(b.train.learning_rate, 0.002);
  EXPECT_THROW(parse_figure("fig3"), std::invalid_argument);
}

TEST(Training, LossDecreasesAndRunsAreDeterministic) {
  const FamilySpec spec{5, 1, ActivationSpec::relu(), ActivationSpec::identity()};
  const auto data = make_family_data(spec, ConceptId{{2}}, LabelMode::regression, 400, 100, 3);
  StudentArch arch{32, ActivationSpec::tanh()};
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.epochs = 40;
  cfg.batch_size = 16;
  cfg.seed = 8;
  const auto r1 = train<double>(arch, data, cfg, TaskMode::regression);
  const auto r2 = train<double>(arch, data, cfg, TaskMode::regression);
  ASSERT_EQ(r1.curves.rows.size(), 41u);
  EXPECT_LT(r1.curves.rows.back().train_sq, 0.2 * r1.curves.rows.front().train_sq);
  EXPECT_EQ(r1.params.flatten(), r2.params.flatten());
  // Linear target: the test loss follows the train loss down.
  EXPECT_LT(r1.curves.rows.back().test_sq, 0.3 * r1.curves.rows.front().test_sq);
  EXPECT_TRUE(std::isnan(r1.curves.rows.back().train_01));
}

TEST(Training, FullBatchIsPlainGradientDescent) {
  const FamilySpec spec{3, 1, ActivationSpec::relu(), ActivationSpec::identity()};
  const auto data = make_family_data(spec, ConceptId{{0}}, LabelMode::regression, 50, 1, 1);
  StudentArch arch{6, ActivationSpec::tanh()};
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 5;
  cfg.seed = 2;
  const auto r = train<double>(arch, data, cfg, TaskMode::regression);
  auto p = init_mlp<double>(6, 3, arch.activation, cfg.init_scale, derive_seed(cfg.seed, "init"));
  for (int e = 0; e < 5; ++e) {
    const auto g = grad_sq_loss(p, data.x_train, data.y_train).flatten();
    auto flat = p.flatten();
    for (std::size_t j = 0; j < flat.size(); ++j) flat[j] -= 0.1 * g[j];
    p.assign(flat);
  }
  const auto got = r.params.flatten();
  const auto want = p.flatten();
  for (std::size_t j = 0; j < got.size(); ++j) EXPECT_NEAR(got[j], want[j], 1e-12);
}

TEST(Training, QuartilesUseLinearInterpolation) {
  const auto q = quartiles({4.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(q.q1, 1.75);
  EXPECT_DOUBLE_EQ(q.median, 2.5);
  EXPECT_DOUBLE_EQ(q.q3, 3.25);
  EXPECT_DOUBLE_EQ(quartiles({7.0}).median, 7.0);
  EXPECT_THROW(quartiles({}), std::invalid_argument);
}

TEST(Training, ClassificationDataCarriesTheBayesError) {
  const FamilySpec spec{6, 2, ActivationSpec::relu(), ActivationSpec::tanh()};
  const auto data = make_family_data(spec, leading_concept(2), LabelMode::pconcept, 100, 4000, 5);
  ASSERT_TRUE(data.bayes_01.has_value());
  EXPECT_GT(*data.bayes_01, 0.0);
  EXPECT_LT(*data.bayes_01, 0.5);
  for (Eigen::Index r = 0; r < data.y_train.size(); ++r)
    EXPECT_TRUE(data.y_train[r] == 1.0 || data.y_train[r] == -1.0);
}

TEST(Training, SmallReproductionAggregatesAndReports) {
  const auto cfg = small_config(Figure::fig1a);
  const auto a = reproduce_figure(cfg, 3, 4);
  const auto b = reproduce_figure(cfg, 3, 4);
  ASSERT_EQ(a.trials.size(), 3u);
  ASSERT_EQ(a.aggregate.size(), cfg.train.epochs + 1);
  for (std::size_t e = 0; e < a.aggregate.size(); ++e) {
    const auto& row = a.aggregate[e];
    EXPECT_LE(row.train_01.q1, row.train_01.median);
    EXPECT_LE(row.train_01.median, row.train_01.q3);
    EXPECT_EQ(row.train_sq.median, b.aggregate[e].train_sq.median);
  }
  EXPECT_LE(a.monotone_trials, 3u);

  const auto dir = std::filesystem::temp_directory_path() / "sqhardnet_training_report";
  std::filesystem::create_directories(dir);
  const auto csv = (dir / "fig1a.csv").string();
  write_figure_csv(csv, a);
  const auto text = slurp(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "epoch,train01_med,train01_q1,train01_q3,test01_med,test01_q1,test01_q3,bayes01");
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')),
            cfg.train.epochs + 2);
  const auto svg = (dir / "fig1a.svg").string();
  write_svg(svg, figure_plot(a));
  const auto image = slurp(svg);
  EXPECT_NE(image.find("<svg"), std::string::npos);
  EXPECT_NE(image.find("</svg>"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Training, RegressionFiguresReportSquareLoss) {
  const auto r = reproduce_figure(small_config(Figure::fig1b), 2, 1);
  EXPECT_TRUE(std::isnan(r.aggregate.back().train_01.median));
  EXPECT_GT(r.aggregate.front().test_sq.median, 0.0);
  EXPECT_TRUE(r.bayes_ok);
}
