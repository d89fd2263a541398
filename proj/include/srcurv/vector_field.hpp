#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "expr.hpp"

namespace srcurv {

/// Local coordinates: an ordered list of distinct variable names.
class Chart {
 public:
  Chart() = default;
  explicit Chart(std::vector<std::string> names) : names_(std::move(names)) {
    std::set<std::string> seen(names_.begin(), names_.end());
    if (seen.size() != names_.size()) throw std::invalid_argument("chart variable names must be unique");
    if (names_.empty()) throw std::invalid_argument("chart dimension must be positive");
  }

  std::size_t dim() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& operator[](std::size_t i) const { return names_[i]; }

  int index_of(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    return it == names_.end() ? -1 : static_cast<int>(it - names_.begin());
  }
  bool contains(const std::string& name) const { return index_of(name) >= 0; }

  bool operator==(const Chart&) const = default;

 private:
  std::vector<std::string> names_;
};

/// Vector field given by its components in the coordinate basis of a chart.
class VectorField {
 public:
  VectorField() = default;
  VectorField(Chart chart, std::vector<Expression> components)
      : chart_(std::move(chart)), comps_(std::move(components)) {
    if (comps_.size() != chart_.dim())
      throw std::invalid_argument("vector field has " + std::to_string(comps_.size()) +
                                  " components, chart dimension is " + std::to_string(chart_.dim()));
  }

  static VectorField zero(const Chart& chart) {
    return VectorField(chart, std::vector<Expression>(chart.dim(), Expression(0.0)));
  }
  /// Coordinate field d/dx_i.
  static VectorField coordinate(const Chart& chart, std::size_t i) {
    std::vector<Expression> c(chart.dim(), Expression(0.0));
    c.at(i) = 1.0;
    return VectorField(chart, std::move(c));
  }

  const Chart& chart() const { return chart_; }
  std::size_t dim() const { return comps_.size(); }
  const Expression& operator[](std::size_t i) const { return comps_[i]; }
  const std::vector<Expression>& components() const { return comps_; }

  /// Directional derivative X(f) = sum_j X^j df/dx_j.
  Expression apply(const Expression& f) const {
    std::vector<Expression> terms;
    for (std::size_t j = 0; j < comps_.size(); ++j) {
      if (comps_[j].is_zero()) continue;
      Expression d = differentiate(f, chart_[j]);
      if (d.is_zero()) continue;
      terms.push_back(comps_[j] * d);
    }
    return sum(std::move(terms));
  }

  Eigen::VectorXd evaluate(std::span<const double> at) const {
    Tape t(comps_, chart_.names());
    Eigen::VectorXd out(dim());
    t.evaluate(at, std::span<double>(out.data(), out.size()));
    return out;
  }

  VectorField operator+(const VectorField& o) const {
    check_same_chart(o);
    std::vector<Expression> c;
    for (std::size_t i = 0; i < dim(); ++i) c.push_back(comps_[i] + o.comps_[i]);
    return VectorField(chart_, std::move(c));
  }
  VectorField operator-(const VectorField& o) const {
    check_same_chart(o);
    std::vector<Expression> c;
    for (std::size_t i = 0; i < dim(); ++i) c.push_back(comps_[i] - o.comps_[i]);
    return VectorField(chart_, std::move(c));
  }
  friend VectorField operator*(const Expression& f, const VectorField& v) {
    std::vector<Expression> c;
    for (const auto& e : v.comps_) c.push_back(f * e);
    return VectorField(v.chart_, std::move(c));
  }

  void check_same_chart(const VectorField& o) const {
    if (!(chart_ == o.chart_)) throw std::invalid_argument("vector fields live on different charts");
  }

 private:
  Chart chart_;
  std::vector<Expression> comps_;
};

/// [X, Y]^j = X(Y^j) - Y(X^j).
inline VectorField lie_bracket(const VectorField& x, const VectorField& y) {
  x.check_same_chart(y);
  std::vector<Expression> c;
  for (std::size_t j = 0; j < x.dim(); ++j) c.push_back(x.apply(y[j]) - y.apply(x[j]));
  return VectorField(x.chart(), std::move(c));
}

/// Compiled evaluator for a list of fields; returns a dim x count matrix.
class FieldBundle {
 public:
  FieldBundle() = default;
  FieldBundle(const Chart& chart, const std::vector<VectorField>& fields) : dim_(chart.dim()) {
    std::vector<Expression> all;
    for (const auto& f : fields) {
      if (!(f.chart() == chart)) throw std::invalid_argument("field bundle: chart mismatch");
      all.insert(all.end(), f.components().begin(), f.components().end());
    }
    count_ = fields.size();
    tape_ = Tape(all, chart.names());
  }

  Eigen::MatrixXd operator()(std::span<const double> at) const {
    Eigen::MatrixXd m(dim_, count_);
    tape_.evaluate(at, std::span<double>(m.data(), m.size()));
    return m;
  }

 private:
  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  Tape tape_;
};

}  // namespace srcurv
