#pragma once

// Levi-Civita data of a Riemannian structure (rank = dim): metric,
// Christoffel symbols, Riemann tensor, all symbolic and compiled, plus the
// parallel-transport rule along the Hamiltonian flow.

#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "flow.hpp"

namespace srcurv {

using ExprMatrix = std::vector<std::vector<Expression>>;

inline Expression symbolic_determinant(const ExprMatrix& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  std::vector<Expression> terms;
  for (std::size_t c = 0; c < n; ++c) {
    if (m[0][c].is_zero()) continue;
    ExprMatrix minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Expression> row;
      for (std::size_t cc = 0; cc < n; ++cc)
        if (cc != c) row.push_back(m[r][cc]);
      minor.push_back(std::move(row));
    }
    Expression t = m[0][c] * symbolic_determinant(minor);
    terms.push_back(c % 2 ? -t : t);
  }
  return sum(std::move(terms));
}

/// Inverse by the adjugate formula; fine for the small charts used here.
inline ExprMatrix symbolic_inverse(const ExprMatrix& m) {
  const std::size_t n = m.size();
  Expression det = symbolic_determinant(m);
  if (det.is_zero()) throw std::invalid_argument("matrix is symbolically singular");
  ExprMatrix inv(n, std::vector<Expression>(n));
  if (n == 1) {
    inv[0][0] = Expression(1.0) / det;
    return inv;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      ExprMatrix minor;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == j) continue;
        std::vector<Expression> row;
        for (std::size_t c = 0; c < n; ++c)
          if (c != i) row.push_back(m[r][c]);
        minor.push_back(std::move(row));
      }
      Expression cof = symbolic_determinant(minor);
      inv[i][j] = ((i + j) % 2 ? -cof : cof) / det;
    }
  return inv;
}

/// Numerical Levi-Civita data at one point. Index conventions:
/// gamma(l, i, j) = Gamma^l_ij, dgamma(l, i, j, m) = d_m Gamma^l_ij,
/// riemann(l, i, j, k) = R^l_ijk with R(d_i, d_j) d_k = R^l_ijk d_l.
struct LeviCivitaValues {
  std::size_t n = 0;
  Eigen::MatrixXd g, cometric;
  std::vector<double> gam, dgam, riem;

  double gamma(std::size_t l, std::size_t i, std::size_t j) const { return gam[(l * n + i) * n + j]; }
  double dgamma(std::size_t l, std::size_t i, std::size_t j, std::size_t m) const {
    return dgam[((l * n + i) * n + j) * n + m];
  }
  double riemann(std::size_t l, std::size_t i, std::size_t j, std::size_t k) const {
    return riem[((l * n + i) * n + j) * n + k];
  }

  /// Gamma(u, v)^l = Gamma^l_ij u^i v^j.
  Eigen::VectorXd contract(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out(l) += gamma(l, i, j) * u(i) * v(j);
    return out;
  }

  /// R(u, v) w.
  Eigen::VectorXd curvature(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Eigen::VectorXd& w) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = 0; k < n; ++k) out(l) += riemann(l, i, j, k) * u(i) * v(j) * w(k);
    return out;
  }
};

class LeviCivita {
 public:
  explicit LeviCivita(const SRStructure& s) : n_(s.dim()) {
    if (!s.is_riemannian()) throw std::invalid_argument("Levi-Civita data needs a Riemannian structure (rank = dim)");
    const std::size_t n = n_;
    const auto& x = s.chart.names();
    // cometric G = sum_a X_a X_a^T, metric g = G^{-1}
    ExprMatrix cog(n, std::vector<Expression>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        std::vector<Expression> t;
        for (const auto& f : s.frame)
          if (!f[i].is_zero() && !f[j].is_zero()) t.push_back(f[i] * f[j]);
        cog[i][j] = sum(std::move(t));
      }
    ExprMatrix g = symbolic_inverse(cog);
    gamma_.assign(n * n * n, Expression(0.0));
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
          std::vector<Expression> t;
          for (std::size_t m = 0; m < n; ++m) {
            if (cog[l][m].is_zero()) continue;
            Expression inner = differentiate(g[m][j], x[i]) + differentiate(g[m][i], x[j]) - differentiate(g[i][j], x[m]);
            if (!inner.is_zero()) t.push_back(cog[l][m] * inner);
          }
          Expression v = Expression(0.5) * sum(std::move(t));
          gamma_[(l * n + i) * n + j] = v;
          gamma_[(l * n + j) * n + i] = v;
        }
    std::vector<Expression> dgam(n * n * n * n), riem(n * n * n * n);
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t m = 0; m < n; ++m) dgam[((l * n + i) * n + j) * n + m] = differentiate(christoffel(l, i, j), x[m]);
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = 0; k < n; ++k) {
            std::vector<Expression> t{differentiate(christoffel(l, j, k), x[i]),
                                      -differentiate(christoffel(l, i, k), x[j])};
            for (std::size_t m = 0; m < n; ++m) {
              t.push_back(christoffel(l, i, m) * christoffel(m, j, k));
              t.push_back(-(christoffel(l, j, m) * christoffel(m, i, k)));
            }
            riem[((l * n + i) * n + j) * n + k] = sum(std::move(t));
          }
    std::vector<Expression> flat;
    for (const auto& row : g) flat.insert(flat.end(), row.begin(), row.end());
    for (const auto& row : cog) flat.insert(flat.end(), row.begin(), row.end());
    flat.insert(flat.end(), gamma_.begin(), gamma_.end());
    flat.insert(flat.end(), dgam.begin(), dgam.end());
    flat.insert(flat.end(), riem.begin(), riem.end());
    tape_ = Tape(flat, x);
    gamma_tape_ = Tape(gamma_, x);
    metric_ = std::move(g);
  }

  std::size_t dim() const { return n_; }
  const Expression& metric(std::size_t i, std::size_t j) const { return metric_[i][j]; }
  const Expression& christoffel(std::size_t l, std::size_t i, std::size_t j) const {
    return gamma_[(l * n_ + i) * n_ + j];
  }

  LeviCivitaValues at(const Eigen::VectorXd& x) const {
    const std::size_t n = n_, n2 = n * n, n3 = n2 * n, n4 = n3 * n;
    std::vector<double> out(2 * n2 + n3 + 2 * n4);
    tape_.evaluate(std::span<const double>(x.data(), n), out);
    LeviCivitaValues v;
    v.n = n;
    v.g = Eigen::Map<Eigen::MatrixXd>(out.data(), n, n).transpose();
    v.cometric = Eigen::Map<Eigen::MatrixXd>(out.data() + n2, n, n).transpose();
    v.gam.assign(out.begin() + 2 * n2, out.begin() + 2 * n2 + n3);
    v.dgam.assign(out.begin() + 2 * n2 + n3, out.begin() + 2 * n2 + n3 + n4);
    v.riem.assign(out.begin() + 2 * n2 + n3 + n4, out.end());
    return v;
  }

  /// Christoffel symbols only (cheap path for transport).
  void christoffel_at(const Eigen::VectorXd& x, std::vector<double>& out) const {
    out.resize(n_ * n_ * n_);
    gamma_tape_.evaluate(std::span<const double>(x.data(), n_), out);
  }

  /// Entries g(R(P_a, v) v, P_b): the curvature operator along velocity v in
  /// the frame P (columns).
  Eigen::MatrixXd curvature_matrix(const Eigen::VectorXd& x, const Eigen::MatrixXd& p, const Eigen::VectorXd& v) const {
    LeviCivitaValues lc = at(x);
    const auto n = p.cols();
    Eigen::MatrixXd rp(p.rows(), n);
    for (Eigen::Index a = 0; a < n; ++a) rp.col(a) = lc.curvature(p.col(a), v, v);
    return p.transpose() * lc.g * rp;
  }

 private:
  std::size_t n_;
  ExprMatrix metric_;
  std::vector<Expression> gamma_;
  Tape tape_, gamma_tape_;
};

/// Parallel transport of an n x n frame (column-major in aux) along the
/// projected flow: P' = -Gamma(xdot, P).
inline Transport parallel_transport(std::shared_ptr<const LeviCivita> lc) {
  const auto n = static_cast<Eigen::Index>(lc->dim());
  Transport t;
  t.dim = n * n;
  t.rhs = [lc, n](const Eigen::VectorXd& z, const Eigen::VectorXd& zdot, const Eigen::VectorXd& aux,
                  Eigen::VectorXd& daux) {
    thread_local std::vector<double> gam;
    lc->christoffel_at(z.tail(n), gam);
    daux.setZero(n * n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index l = 0; l < n; ++l) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          double xi = zdot(n + i);
          if (xi == 0.0) continue;
          for (Eigen::Index k = 0; k < n; ++k) acc += gam[(l * n + i) * n + k] * xi * aux(a * n + k);
        }
        daux(a * n + l) = -acc;
      }
  };
  return t;
}

/// sup_j |xddot + Gamma(xdot, xdot)| on the extremal's nodes, with xddot
/// taken exactly from the Hamiltonian vector field and its Jacobian.
inline double geodesic_equation_residual(const Extremal& e, const LeviCivita& lc) {
  const auto n = e.n();
  double worst = 0.0;
  for (const auto& z : e.states()) {
    Eigen::VectorXd f = e.flow().vector_field(z);
    Eigen::VectorXd acc = (e.flow().jacobian(z) * f).tail(n);
    Eigen::VectorXd v = f.tail(n);
    worst = std::max(worst, (acc + lc.at(z.tail(n)).contract(v, v)).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace srcurv
