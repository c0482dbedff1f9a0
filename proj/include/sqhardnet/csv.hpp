#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqhardnet/distributions.hpp"

namespace sqhardnet {

/// 17 significant digits; parses back to the same double.
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

inline double parse_real(const std::string& text) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

/// Labeled or unlabeled sample table: header x1..xn[,y].
struct LabeledSamples {
  SampleMatrix x;
  std::optional<std::vector<double>> y;
};

inline void write_samples_csv(const std::string& path, const SampleMatrix& x,
                              const std::vector<double>* y = nullptr) {
  if (y && y->size() != static_cast<std::size_t>(x.rows()))
    throw std::invalid_argument("label count does not match sample count");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    out << (j ? "," : "") << 'x' << (j + 1);
  if (y) out << ",y";
  out << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      out << (j ? "," : "") << format_real(x(i, j));
    if (y) out << ',' << format_real((*y)[static_cast<std::size_t>(i)]);
    out << '\n';
  }
}

inline LabeledSamples read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  const auto header = split_csv_line(line);
  std::size_t n = 0;
  bool labeled = false;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "x" + std::to_string(j + 1)) {
      ++n;
    } else if (header[j] == "y" && j + 1 == header.size()) {
      labeled = true;
    } else {
      throw std::runtime_error(path + ": unexpected column '" + header[j] +
                               "'");
    }
  }
  if (n == 0) throw std::runtime_error(path + ": no x columns");
  std::vector<double> values;
  std::vector<double> labels;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error(path + ": ragged row " +
                               std::to_string(rows + 2));
    for (std::size_t j = 0; j < n; ++j) values.push_back(parse_real(fields[j]));
    if (labeled) labels.push_back(parse_real(fields[n]));
    ++rows;
  }
  LabeledSamples out;
  out.x = Eigen::Map<SampleMatrix>(values.data(),
                                   static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(n));
  if (labeled) out.y = std::move(labels);
  return out;
}

}  // namespace sqhardnet
