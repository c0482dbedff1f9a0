#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include "sqhardnet/csv.hpp"
#include "sqhardnet/svg.hpp"
#include "sqhardnet/training.hpp"

namespace sqhardnet {

namespace detail {

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

}  // namespace detail

/// epoch,train_sq,test_sq[,train01,test01,bayes01]
inline void write_curves_csv(const std::string& path, const Curves& curves, TaskMode mode) {
  auto out = detail::open_output(path);
  const bool cls = mode == TaskMode::classification;
  out << "epoch,train_sq,test_sq" << (cls ? ",train01,test01,bayes01" : "") << '\n';
  for (const auto& r : curves.rows) {
    out << r.epoch << ',' << format_real(r.train_sq) << ',' << format_real(r.test_sq);
    if (cls)
      out << ',' << format_real(r.train_01) << ',' << format_real(r.test_01) << ','
          << format_real(r.bayes_01);
    out << '\n';
  }
}

/**
 * Per-epoch median and quartiles. Classification:
 * epoch,train01_med,train01_q1,train01_q3,test01_med,test01_q1,test01_q3,bayes01;
 * regression uses the same layout with trainsq/testsq and no Bayes column.
 */
inline void write_figure_csv(const std::string& path, const FigureResult& fig) {
  auto out = detail::open_output(path);
  const bool cls = fig.config.task == TaskMode::classification;
  if (cls)
    out << "epoch,train01_med,train01_q1,train01_q3,test01_med,test01_q1,test01_q3,bayes01\n";
  else
    out << "epoch,trainsq_med,trainsq_q1,trainsq_q3,testsq_med,testsq_q1,testsq_q3\n";
  for (const auto& r : fig.aggregate) {
    const auto& tr = cls ? r.train_01 : r.train_sq;
    const auto& te = cls ? r.test_01 : r.test_sq;
    out << r.epoch << ',' << format_real(tr.median) << ',' << format_real(tr.q1) << ','
        << format_real(tr.q3) << ',' << format_real(te.median) << ',' << format_real(te.q1)
        << ',' << format_real(te.q3);
    if (cls) out << ',' << format_real(r.bayes_01.median);
    out << '\n';
  }
}

/// trial,epoch,train_sq,test_sq,train01,test01,bayes01 for every run.
inline void write_trials_csv(const std::string& path, const FigureResult& fig) {
  auto out = detail::open_output(path);
  out << "trial,epoch,train_sq,test_sq,train01,test01,bayes01\n";
  for (std::size_t t = 0; t < fig.trials.size(); ++t)
    for (const auto& r : fig.trials[t].rows)
      out << t << ',' << r.epoch << ',' << format_real(r.train_sq) << ','
          << format_real(r.test_sq) << ',' << format_real(r.train_01) << ','
          << format_real(r.test_01) << ',' << format_real(r.bayes_01) << '\n';
}

inline PlotSpec figure_plot(const FigureResult& fig) {
  const bool cls = fig.config.task == TaskMode::classification;
  PlotSpec plot;
  plot.title = std::string(figure_name(fig.config.which)) + ": median over " +
               std::to_string(fig.trials.size()) + " trials, IQR shaded";
  plot.y_label = cls ? "0/1 loss" : "square loss";
  BandSeries train{"train", "#1f77b4", {}, {}, {}, false};
  BandSeries test{"test", "#d62728", {}, {}, {}, false};
  BandSeries bayes{"bayes optimal", "#2ca02c", {}, {}, {}, true};
  for (const auto& r : fig.aggregate) {
    plot.x.push_back(static_cast<double>(r.epoch));
    const auto& tr = cls ? r.train_01 : r.train_sq;
    const auto& te = cls ? r.test_01 : r.test_sq;
    train.median.push_back(tr.median);
    train.lower.push_back(tr.q1);
    train.upper.push_back(tr.q3);
    test.median.push_back(te.median);
    test.lower.push_back(te.q1);
    test.upper.push_back(te.q3);
    bayes.median.push_back(r.bayes_01.median);
  }
  plot.series = {train, test};
  if (cls) plot.series.push_back(bayes);
  return plot;
}

}  // namespace sqhardnet
