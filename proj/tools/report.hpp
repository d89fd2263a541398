#pragma once

// CSV/JSON emission and the curvature CSV reader used by `check normal`.

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "srcurv/young.hpp"

namespace srcurv::report {

using nlohmann::json;

inline json matrix(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json vector(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}

  void row(const std::vector<double>& values) {
    if (values.size() != header_.size()) throw std::logic_error("csv row width does not match the header");
    rows_.push_back(values);
  }

  std::string str() const {
    std::ostringstream out;
    out << std::setprecision(17);
    for (std::size_t i = 0; i < header_.size(); ++i) out << (i ? "," : "") << header_[i];
    out << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
      out << '\n';
    }
    return out.str();
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// Column names R_<ai>_<bj> over all box pairs, row-major in box order.
inline std::vector<std::string> curvature_header(const YoungDiagram& y) {
  std::vector<std::string> h{"t"};
  for (const auto& a : y.boxes())
    for (const auto& b : y.boxes()) h.push_back("R_" + YoungDiagram::box_label(a) + "_" + YoungDiagram::box_label(b));
  return h;
}

inline std::vector<double> curvature_row(double t, const Eigen::MatrixXd& r) {
  std::vector<double> v{t};
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) v.push_back(r(i, j));
  return v;
}

struct TimedMatrix {
  double t = 0.0;
  Eigen::MatrixXd r;
};

inline std::vector<double> split_numbers(const std::string& line, char sep) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) {
    std::size_t used = 0;
    double v = std::stod(cell, &used);
    while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
    if (used != cell.size()) throw std::invalid_argument("not a number: '" + cell + "'");
    out.push_back(v);
  }
  return out;
}

/// Reads either a curvature CSV (header starting with `t`, one flattened
/// matrix per row) or a plain n x n matrix with comma separated rows.
inline std::vector<TimedMatrix> read_curvature(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) {
    if (auto h = l.find('#'); h != std::string::npos) l.erase(h);
    if (l.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (l.back() == '\r') l.pop_back();
    lines.push_back(l);
  }
  if (lines.empty()) throw std::invalid_argument("curvature file is empty");
  std::vector<TimedMatrix> out;
  try {
    if (lines.front().rfind("t,", 0) == 0) {
      for (std::size_t i = 1; i < lines.size(); ++i) {
        auto v = split_numbers(lines[i], ',');
        auto n = static_cast<Eigen::Index>(std::lround(std::sqrt(static_cast<double>(v.size() - 1))));
        if (v.size() < 2 || static_cast<std::size_t>(n * n) + 1 != v.size())
          throw std::invalid_argument("row " + std::to_string(i + 1) + " is not a flattened square matrix");
        out.push_back({v[0], Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(v.data() + 1, n, n)});
      }
    } else {
      const auto n = static_cast<Eigen::Index>(lines.size());
      Eigen::MatrixXd r(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        auto v = split_numbers(lines[static_cast<std::size_t>(i)], ',');
        if (static_cast<Eigen::Index>(v.size()) != n) throw std::invalid_argument("matrix is not square");
        for (Eigen::Index j = 0; j < n; ++j) r(i, j) = v[static_cast<std::size_t>(j)];
      }
      out.push_back({0.0, r});
    }
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("number out of range in curvature file");
  }
  if (out.empty()) throw std::invalid_argument("curvature file has no data rows");
  return out;
}

inline void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open output file " + path);
  f << text;
}

}  // namespace srcurv::report
