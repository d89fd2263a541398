#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "structure.hpp"
#include "vector_field.hpp"

namespace srcurv {

/// Covector (p) at base point (x). Packed form is (p, x).
struct PhasePoint {
  Eigen::VectorXd x;
  Eigen::VectorXd p;

  static PhasePoint from_packed(const Eigen::VectorXd& z) {
    const auto n = z.size() / 2;
    return {z.tail(n), z.head(n)};
  }
  Eigen::VectorXd packed() const {
    Eigen::VectorXd z(2 * x.size());
    z << p, x;
    return z;
  }
  bool finite() const { return x.allFinite() && p.allFinite(); }
};

/// sigma = sum dp_i ^ dx_i, so sigma(d/dp_i, d/dx_j) = delta_ij and
/// sigma(u, v) = u^T J v with J = [[0, I], [-I, 0]] in (p, x) order.
class SymplecticForm {
 public:
  explicit SymplecticForm(Eigen::Index n) : n_(n), j_(Eigen::MatrixXd::Zero(2 * n, 2 * n)) {
    j_.topRightCorner(n, n).setIdentity();
    j_.bottomLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
  }

  Eigen::Index n() const { return n_; }
  const Eigen::MatrixXd& matrix() const { return j_; }

  double operator()(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const { return u.dot(j_ * v); }

  /// Matrix of pairings sigma(U_i, V_j) for column families U, V.
  Eigen::MatrixXd pairing(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) const {
    return u.transpose() * j_ * v;
  }

 private:
  Eigen::Index n_;
  Eigen::MatrixXd j_;
};

/// H(p, x) = 1/2 sum_i <p, X_i(x)>^2, over the phase chart.
inline Expression hamiltonian(const SRStructure& s) {
  std::vector<Expression> squares;
  for (const auto& field : s.frame) {
    std::vector<Expression> terms;
    for (std::size_t j = 0; j < s.dim(); ++j) {
      if (field[j].is_zero()) continue;
      terms.push_back(var(momentum_name(s.chart[j])) * field[j]);
    }
    squares.push_back(pow(sum(std::move(terms)), 2));
  }
  return Expression(0.5) * sum(std::move(squares));
}

/// Fiber-linear function h_X(p, x) = <p, X(x)>.
inline Expression fiber_linear(const VectorField& x) {
  std::vector<Expression> terms;
  for (std::size_t j = 0; j < x.dim(); ++j) terms.push_back(var(momentum_name(x.chart()[j])) * x[j]);
  return sum(std::move(terms));
}

/// Symplectic gradient of H: pdot = -dH/dx, xdot = dH/dp.
inline VectorField hamiltonian_vector_field(const SRStructure& s, const Expression& h) {
  Chart pc = phase_chart(s.chart);
  std::vector<Expression> c(2 * s.dim());
  for (std::size_t j = 0; j < s.dim(); ++j) {
    c[j] = -differentiate(h, s.chart[j]);
    c[s.dim() + j] = differentiate(h, momentum_name(s.chart[j]));
  }
  return VectorField(pc, std::move(c));
}

inline VectorField hamiltonian_vector_field(const SRStructure& s) {
  return hamiltonian_vector_field(s, hamiltonian(s));
}

/// Generator of the fiber dilations: sum p_i d/dp_i.
inline VectorField euler_field(const SRStructure& s) {
  Chart pc = phase_chart(s.chart);
  std::vector<Expression> c(2 * s.dim(), Expression(0.0));
  for (std::size_t j = 0; j < s.dim(); ++j) c[j] = var(momentum_name(s.chart[j]));
  return VectorField(pc, std::move(c));
}

inline PhasePoint dilation(const PhasePoint& l, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("dilation factor must be positive");
  return {l.x, c * l.p};
}

/// Differential of the dilation P_c acting on packed tangent vectors.
inline Eigen::MatrixXd dilation_differential(Eigen::Index n, double c) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  d.topLeftCorner(n, n) *= c;
  return d;
}

/// Compiled phase-space data of a structure: H, its vector field and the
/// Jacobian of the vector field (all exact, from symbolic derivatives).
class PhaseFlow {
 public:
  explicit PhaseFlow(SRStructure s) : s_(std::move(s)), chart_(phase_chart(s_.chart)) {
    h_ = srcurv::hamiltonian(s_);
    field_ = hamiltonian_vector_field(s_, h_);
    h_tape_ = Tape(std::span<const Expression>(&h_, 1), chart_.names());
    grad_.reserve(chart_.dim());
    for (const auto& v : chart_.names()) grad_.push_back(differentiate(h_, v));
    grad_tape_ = Tape(grad_, chart_.names());
    field_tape_ = Tape(field_.components(), chart_.names());
    std::vector<Expression> jac;  // column-major
    for (const auto& v : chart_.names())
      for (std::size_t i = 0; i < chart_.dim(); ++i) jac.push_back(differentiate(field_[i], v));
    jac_tape_ = Tape(jac, chart_.names());
  }

  const SRStructure& structure() const { return s_; }
  const Chart& chart() const { return chart_; }
  Eigen::Index n() const { return static_cast<Eigen::Index>(s_.dim()); }
  const Expression& hamiltonian_expression() const { return h_; }
  const VectorField& vector_field_expression() const { return field_; }

  double hamiltonian(const Eigen::VectorXd& z) const {
    double out = 0.0;
    h_tape_.evaluate(span(z), std::span<double>(&out, 1));
    return out;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& z) const {
    Eigen::VectorXd g(2 * n());
    grad_tape_.evaluate(span(z), std::span<double>(g.data(), g.size()));
    return g;
  }
  Eigen::VectorXd vector_field(const Eigen::VectorXd& z) const {
    Eigen::VectorXd f(2 * n());
    field_tape_.evaluate(span(z), std::span<double>(f.data(), f.size()));
    return f;
  }
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd j(2 * n(), 2 * n());
    jac_tape_.evaluate(span(z), std::span<double>(j.data(), j.size()));
    return j;
  }

  static std::span<const double> span(const Eigen::VectorXd& z) { return {z.data(), static_cast<std::size_t>(z.size())}; }

 private:
  SRStructure s_;
  Chart chart_;
  Expression h_;
  VectorField field_;
  std::vector<Expression> grad_;
  Tape h_tape_, grad_tape_, field_tape_, jac_tape_;
};

}  // namespace srcurv
