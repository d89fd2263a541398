#pragma once

// Analysis downstream of the curvature matrix: normal conditions, canonical
// splitting, Euler field decomposition, homogeneity, and the canonical
// Ehresmann connection with its curvature.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "frames.hpp"

namespace srcurv {

using IndexPair = std::pair<int, int>;

struct NormalTable {
  std::vector<IndexPair> pairs;
  std::vector<IndexPair> tail;  // last 2 n_b pairs, the ones allowed to be nonzero
};

/// Sequence (1,1),(1,2),(2,2),...,(n_b,n_b),(n_b+1,n_b),...,(n_a,n_b).
inline NormalTable normal_table(int na, int nb) {
  if (nb < 1 || na <= nb) throw std::invalid_argument("normal table needs n_a > n_b >= 1");
  NormalTable t;
  int i = 1, j = 1;
  t.pairs.emplace_back(i, j);
  while (j < nb) {
    t.pairs.emplace_back(i, ++j);
    t.pairs.emplace_back(++i, j);
  }
  while (i < na) t.pairs.emplace_back(++i, j);
  t.tail.assign(t.pairs.end() - 2 * nb, t.pairs.end());
  return t;
}

/// Whether R_{ai,bj} may be nonzero under the vanishing conditions.
inline bool normal_entry_allowed(const YoungDiagram& y, Box x, Box z) {
  const int na = y.row_length(x.row), nb = y.row_length(z.row);
  if (na == nb) return std::abs(x.col - z.col) <= 1;
  if (na < nb) std::swap(x, z);
  NormalTable t = normal_table(std::max(na, nb), std::min(na, nb));
  return std::find(t.tail.begin(), t.tail.end(), IndexPair{x.col, z.col}) != t.tail.end();
}

struct NormalViolation {
  Box first, second;
  double magnitude = 0.0;
};

struct NormalConditionReport {
  double tolerance = 0.0;
  std::vector<NormalViolation> symmetry;   // (i)
  std::vector<NormalViolation> skew;       // (ii)
  std::vector<NormalViolation> equal_rows; // (iii.a)
  std::vector<NormalViolation> longer_row; // (iii.b)
  double max_violation = 0.0;
  bool normal = true;
};

inline NormalConditionReport check_normal(const Eigen::MatrixXd& r, const YoungDiagram& y, double tol = 1e-6) {
  const int n = y.n();
  if (r.rows() != n || r.cols() != n)
    throw std::invalid_argument("curvature matrix is " + std::to_string(r.rows()) + "x" + std::to_string(r.cols()) +
                                ", diagram has " + std::to_string(n) + " boxes");
  NormalConditionReport rep;
  rep.tolerance = tol;
  auto note = [&](std::vector<NormalViolation>& list, Box x, Box z, double m) {
    rep.max_violation = std::max(rep.max_violation, m);
    if (m > tol) list.push_back({x, z, m});
  };
  const auto& boxes = y.boxes();
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) note(rep.symmetry, boxes[u], boxes[v], std::abs(r(u, v) - r(v, u)));
  for (int a = 1; a <= y.k(); ++a)
    for (int b = a; b <= y.k(); ++b) {
      if (y.row_length(a) != y.row_length(b)) continue;
      for (int i = 1; i < y.row_length(a); ++i) {
        double m = std::abs(r(y.index(a, i), y.index(b, i + 1)) + r(y.index(b, i), y.index(a, i + 1)));
        note(rep.skew, {a, i}, {b, i + 1}, m);
      }
    }
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (normal_entry_allowed(y, boxes[u], boxes[v])) continue;
      bool equal = y.row_length(boxes[u].row) == y.row_length(boxes[v].row);
      note(equal ? rep.equal_rows : rep.longer_row, boxes[u], boxes[v], std::abs(r(u, v)));
    }
  rep.normal = rep.max_violation <= tol;
  return rep;
}

/// Projections X_ai = pi_* F_ai grouped by superbox, at each sample time.
struct CanonicalSplitting {
  std::vector<Superbox> superboxes;
  std::vector<double> times;
  std::vector<std::vector<Eigen::MatrixXd>> bases;  // [time][superbox], n x |superbox|
  double min_relative_singular_value = 0.0;        // of the concatenated bases, over all times

  bool direct_sum(double tol = 1e-8) const { return min_relative_singular_value > tol; }
};

inline CanonicalSplitting canonical_splitting(const DarbouxFrameField& fr, const std::vector<double>& times) {
  CanonicalSplitting out;
  out.superboxes = fr.young.superboxes();
  out.times = times;
  out.min_relative_singular_value = std::numeric_limits<double>::infinity();
  const auto n = fr.n();
  for (const auto& s : fr.states(times)) {
    Eigen::MatrixXd x = fr.f(s).bottomRows(n);
    std::vector<Eigen::MatrixXd> per;
    for (const auto& sb : out.superboxes) {
      Eigen::MatrixXd m(n, sb.size());
      for (int k = 0; k < sb.size(); ++k) m.col(k) = x.col(sb.boxes[k]);
      per.push_back(std::move(m));
    }
    out.bases.push_back(std::move(per));
    Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues();
    out.min_relative_singular_value = std::min(out.min_relative_singular_value, sv(n - 1) / sv(0));
  }
  return out;
}

struct EulerReport {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> coefficients;  // Euler field in the E basis
  double long_row_coefficients = 0.0;         // max over boxes with n_a > 1
  double coefficient_variation = 0.0;         // max drift of the other coefficients from t = 0
  double euler_bracket = 0.0;                 // |edot + H|
  double hamiltonian_vertical = 0.0;          // E-components of H
  double hamiltonian_in_span = 0.0;           // |H - sum_{n_a = 1} v_ai F_ai|

  double max_violation() const {
    return std::max({long_row_coefficients, coefficient_variation, euler_bracket, hamiltonian_vertical,
                     hamiltonian_in_span});
  }
};

inline EulerReport euler_decomposition_check(const DarbouxFrameField& fr, const std::vector<double>& times) {
  const auto n = fr.n();
  SymplecticForm sigma(n);
  FieldAlong euler = [n](const FlowState& s) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 1);
    m.col(0).head(n) = s.z.head(n);
    return m;
  };
  EulerReport rep;
  rep.times = times;
  for (const auto& s : fr.states(times)) {
    Eigen::MatrixXd e = fr.e(s), f = fr.f(s);
    if (darboux_residual(e, f) > 1e-3) throw std::invalid_argument("frame is not a Darboux frame; cannot expand in it");
    Eigen::VectorXd eu = euler(s).col(0);
    Eigen::VectorXd v = sigma.pairing(eu, f).row(0).transpose();  // eu = sum v_ai E_ai
    Eigen::VectorXd h = fr.flow->vector_field(s.z);
    Eigen::VectorXd span_part = Eigen::VectorXd::Zero(2 * n);
    for (Eigen::Index b = 0; b < n; ++b) {
      if (fr.young.row_length(fr.young.boxes()[b].row) > 1)
        rep.long_row_coefficients = std::max(rep.long_row_coefficients, std::abs(v(b)));
      else
        span_part += v(b) * f.col(b);
    }
    if (!rep.coefficients.empty())
      rep.coefficient_variation = std::max(rep.coefficient_variation, (v - rep.coefficients.front()).cwiseAbs().maxCoeff());
    rep.coefficients.push_back(v);
    Eigen::MatrixXd edot = flow_derivative(*fr.flow, fr.transport.get(), euler, s);
    rep.euler_bracket = std::max(rep.euler_bracket, (edot.col(0) + h).cwiseAbs().maxCoeff());
    rep.hamiltonian_vertical =
        std::max(rep.hamiltonian_vertical, sigma.pairing(h, f).cwiseAbs().maxCoeff());
    rep.hamiltonian_in_span = std::max(rep.hamiltonian_in_span, (h - span_part).cwiseAbs().maxCoeff());
  }
  return rep;
}

/// Thrown where the frame family defining the connection is unavailable.
class ConnectionDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Canonical frame at t = 0 as a function of the initial covector.
using FrameFamily = std::function<DarbouxFrameField(const PhasePoint&)>;

inline constexpr double kEhresmannStep = 1e-3;

/// Horizontal distribution H_lambda = span{F_ai(lambda)} built from a family
/// of canonical frames.
class EhresmannConnection {
 public:
  EhresmannConnection(std::shared_ptr<const PhaseFlow> flow, FrameFamily family, std::string provenance)
      : flow_(std::move(flow)), family_(std::move(family)), provenance_(std::move(provenance)) {}

  static EhresmannConnection riemannian(std::shared_ptr<const PhaseFlow> flow) {
    return {flow, [flow](const PhasePoint& l) { return riemannian_canonical_frame(flow, l); }, "constructed-riemannian"};
  }
  static EhresmannConnection from_frame(std::shared_ptr<const PhaseFlow> flow, const FrameDocument& doc) {
    return {flow, [flow, doc](const PhasePoint& l) { return user_frame(flow, doc, l); }, "user-supplied"};
  }

  const PhaseFlow& flow() const { return *flow_; }
  std::shared_ptr<const PhaseFlow> flow_ptr() const { return flow_; }
  const std::string& provenance() const { return provenance_; }
  Eigen::Index n() const { return flow_->n(); }

  DarbouxFrameField frame(const Eigen::VectorXd& z) const {
    try {
      return family_(PhasePoint::from_packed(z));
    } catch (const std::invalid_argument& err) {
      throw ConnectionDomainError(std::string("no canonical frame at this covector: ") + err.what());
    }
  }

  /// Columns F_ai at z.
  Eigen::MatrixXd horizontal(const Eigen::VectorXd& z) const {
    DarbouxFrameField fr = frame(z);
    Eigen::MatrixXd f = fr.f(fr.start);
    if (!f.allFinite()) throw ConnectionDomainError("frame family is not finite at this covector");
    return f;
  }

  /// Column i is the horizontal lift of d/dx_i.
  Eigen::MatrixXd lift_basis(const Eigen::VectorXd& z) const {
    Eigen::MatrixXd f = horizontal(z);
    Eigen::MatrixXd px = f.bottomRows(n());
    Eigen::FullPivLU<Eigen::MatrixXd> lu(px);
    if (lu.rank() < n()) throw ConnectionDomainError("horizontal space is not transverse to the fibre");
    return f * lu.inverse();
  }

  Eigen::VectorXd lift(const VectorField& x, const Eigen::VectorXd& z) const {
    return lift_basis(z) * x.evaluate(std::span<const double>(z.data() + n(), static_cast<std::size_t>(n())));
  }

 private:
  std::shared_ptr<const PhaseFlow> flow_;
  FrameFamily family_;
  std::string provenance_;
};

/// Lift of d/dx_i for the Levi-Civita connection: parallel covectors satisfy
/// pdot_j = Gamma^k_ij xdot^i p_k.
inline Eigen::MatrixXd levi_civita_lift_basis(const LeviCivita& lc, const Eigen::VectorXd& z) {
  const auto n = static_cast<Eigen::Index>(lc.dim());
  LeviCivitaValues v = lc.at(z.tail(n));
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(2 * n, n);
  l.bottomRows(n).setIdentity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) l(j, i) += v.gamma(k, i, j) * z(k);
  return l;
}

/// Derivative of a phase-space field along direction v (central, one
/// Richardson level).
template <class Field>
Eigen::VectorXd directional_derivative(const Field& field, const Eigen::VectorXd& z, const Eigen::VectorXd& v,
                                       double h) {
  auto central = [&](double s) -> Eigen::VectorXd { return (field(z + s * v) - field(z - s * v)) / (2.0 * s); };
  return (4.0 * central(h / 2) - central(h)) / 3.0;
}

/// R(X, Y) = [lift X, lift Y] - lift [X, Y] at z, a vertical vector.
inline Eigen::VectorXd ehresmann_curvature(const EhresmannConnection& c, const VectorField& x, const VectorField& y,
                                           const Eigen::VectorXd& z, double h = kEhresmannStep) {
  auto ax = [&](const Eigen::VectorXd& w) { return c.lift(x, w); };
  auto ay = [&](const Eigen::VectorXd& w) { return c.lift(y, w); };
  Eigen::VectorXd lx = ax(z), ly = ay(z);
  Eigen::VectorXd bracket = directional_derivative(ay, z, lx, h) - directional_derivative(ax, z, ly, h);
  return bracket - c.lift(lie_bracket(x, y), z);
}

/// dH on a horizontal lift; vanishes because H is horizontal.
inline double hamiltonian_along_lift(const EhresmannConnection& c, const VectorField& x, const Eigen::VectorXd& z) {
  return c.flow().gradient(z).dot(c.lift(x, z));
}

/// For vertical V: |sigma(V, W) - V(h_Y)| with Y = pi_* W taken as a constant field.
inline double vertical_pairing_defect(const PhaseFlow& flow, const Eigen::VectorXd& z, const Eigen::VectorXd& v_p,
                                      const Eigen::VectorXd& w) {
  const auto n = flow.n();
  std::vector<Expression> comps;
  for (Eigen::Index i = 0; i < n; ++i) comps.emplace_back(w(n + i));
  Expression hy = fiber_linear(VectorField(flow.structure().chart, comps));
  std::map<std::string, double> at;
  for (Eigen::Index i = 0; i < 2 * n; ++i) at[flow.chart()[static_cast<std::size_t>(i)]] = z(i);
  double vh = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) vh += v_p(i) * evaluate(differentiate(hy, flow.chart()[static_cast<std::size_t>(i)]), at);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * n);
  v.head(n) = v_p;
  return std::abs(SymplecticForm(n)(v, w) - vh);
}

/// Both sides of R_lambda(X, Y) = sigma(R(T, X), lift Y) with T = pi_* H(lambda)
/// for a covector section lambda(x), evaluated at x0.
struct ConnectionCurvatureSample {
  Eigen::VectorXd x0, covector;
  double canonical = 0.0;   // contraction of the frame's R(0)
  double connection = 0.0;  // sigma(R(T, X), lift Y)
  double verticality = 0.0; // |pi_* R(T, X)|
};

/// Tangent field T(x) = pi_* H(lambda(x)) = sum_a <lambda, X_a> X_a.
inline VectorField tangent_field(const SRStructure& s, const std::vector<Expression>& section) {
  if (section.size() != s.dim()) throw std::invalid_argument("covector section has the wrong number of components");
  std::vector<Expression> comps(s.dim(), Expression(0.0));
  for (const auto& xa : s.frame) {
    std::vector<Expression> pair;
    for (std::size_t j = 0; j < s.dim(); ++j)
      if (!xa[j].is_zero() && !section[j].is_zero()) pair.push_back(section[j] * xa[j]);
    Expression h = sum(std::move(pair));
    for (std::size_t i = 0; i < s.dim(); ++i)
      if (!xa[i].is_zero()) comps[i] = comps[i] + h * xa[i];
  }
  return VectorField(s.chart, comps);
}

inline ConnectionCurvatureSample canonical_curvature_via_connection(const EhresmannConnection& c,
                                                                    const std::vector<Expression>& section,
                                                                    const VectorField& x, const VectorField& y,
                                                                    const Eigen::VectorXd& x0,
                                                                    double h = kEhresmannStep) {
  const auto n = c.n();
  const SRStructure& s = c.flow().structure();
  ConnectionCurvatureSample out;
  out.x0 = x0;
  std::map<std::string, double> at;
  for (Eigen::Index i = 0; i < n; ++i) at[s.chart[static_cast<std::size_t>(i)]] = x0(i);
  out.covector.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.covector(i) = evaluate(section[static_cast<std::size_t>(i)], at);
  Eigen::VectorXd z(2 * n);
  z << out.covector, x0;

  VectorField t = tangent_field(s, section);
  Eigen::VectorXd curv = ehresmann_curvature(c, t, x, z, h);
  out.verticality = curv.tail(n).cwiseAbs().maxCoeff();
  out.connection = SymplecticForm(n)(curv, c.lift(y, z));

  DarbouxFrameField fr = c.frame(z);
  Eigen::MatrixXd r = structural_sample(fr, fr.start).r;
  Eigen::MatrixXd px = fr.f(fr.start).bottomRows(n);
  std::span<const double> xs(x0.data(), static_cast<std::size_t>(n));
  Eigen::VectorXd cx = px.fullPivLu().solve(x.evaluate(xs)), cy = px.fullPivLu().solve(y.evaluate(xs));
  out.canonical = cx.dot(r * cy);
  return out;
}

/// Riemannian oracle g(R(X, T) T, Y) at x0 for T = pi_* H of the covector p.
inline double riemannian_curvature_oracle(const LeviCivita& lc, const Eigen::VectorXd& x0, const Eigen::VectorXd& p,
                                          const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  LeviCivitaValues v = lc.at(x0);
  Eigen::VectorXd t = v.cometric * p;
  return y.dot(v.g * v.curvature(x, t, t));
}

}  // namespace srcurv
