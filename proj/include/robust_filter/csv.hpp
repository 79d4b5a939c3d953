#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace robust_filter {

class ParseError : public InvalidArgument {
 public:
  ParseError(const std::string& what, std::size_t line) : InvalidArgument(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// 17 significant digits: round-trips every double.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Headerless CSV. With `labeled`, the last column is the label (1 = outlier).
inline SampleSet read_csv(std::istream& in, bool labeled = false) {
  std::vector<double> values;
  std::vector<Label> labels;
  std::string line;
  std::size_t lineno = 0;
  Index cols = -1;
  Index rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      std::string field = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      const auto b = field.find_first_not_of(" \t");
      const auto e = field.find_last_not_of(" \t");
      field = b == std::string::npos ? std::string() : field.substr(b, e - b + 1);
      double v = 0.0;
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (!field.empty() && *first == '+') ++first;
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError("line " + std::to_string(lineno) + ": cannot parse field '" + field + "'", lineno);
      row.push_back(v);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (labeled) {
      const double l = row.back();
      row.pop_back();
      if (l != 0.0 && l != 1.0)
        throw ParseError("line " + std::to_string(lineno) + ": label must be 0 or 1", lineno);
      labels.push_back(l == 1.0 ? Label::Outlier : Label::Inlier);
    }
    if (row.empty()) throw ParseError("line " + std::to_string(lineno) + ": no data columns", lineno);
    if (cols < 0) cols = static_cast<Index>(row.size());
    if (static_cast<Index>(row.size()) != cols)
      throw ParseError("line " + std::to_string(lineno) + ": expected " + std::to_string(cols) + " columns, got " +
                           std::to_string(row.size()),
                       lineno);
    values.insert(values.end(), row.begin(), row.end());
    ++rows;
  }
  if (rows == 0) throw ParseError("no data rows", lineno);
  MatrixXd x(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) x(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  if (labeled) return SampleSet(std::move(x), std::move(labels));
  return SampleSet(std::move(x));
}

inline SampleSet read_csv_file(const std::string& path, bool labeled = false) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  return read_csv(in, labeled);
}

inline void write_matrix_csv(std::ostream& out, const MatrixXd& x, const std::vector<Label>* labels = nullptr) {
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      out << format_double(x(i, j));
    }
    if (labels) out << ',' << ((*labels)[static_cast<std::size_t>(i)] == Label::Outlier ? 1 : 0);
    out << '\n';
  }
}

inline void write_csv(std::ostream& out, const SampleSet& s, bool with_labels) {
  write_matrix_csv(out, s.data(), with_labels && s.labeled() ? &s.labels() : nullptr);
}

}  // namespace robust_filter
