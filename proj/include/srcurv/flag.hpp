#pragma once

// Flag of a geodesic: D^i = span{ L_T^j X : X in D, j <= i-1 } at gamma(t),
// computed from iterated symbolic brackets with an admissible extension T of
// the velocity, plus growth vector and ampleness/equiregularity.

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flow.hpp"
#include "young.hpp"

namespace srcurv {

class IndeterminateRank : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Singular values below kRankTolerance * sigma_max count as zero.
inline constexpr double kRankTolerance = 1e-8;

struct RankDecision {
  int rank = 0;
  Eigen::MatrixXd basis;  // orthonormal columns
  Eigen::VectorXd singular_values;
};

/// Numerical rank with an explicit refusal when a singular value falls in
/// the band [thr/10, 10 thr) around the threshold.
inline RankDecision decide_rank(const Eigen::MatrixXd& m, double rtol = kRankTolerance) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
  RankDecision d;
  d.singular_values = svd.singularValues();
  if (d.singular_values.size() == 0 || d.singular_values(0) == 0.0) {
    d.basis = Eigen::MatrixXd(m.rows(), 0);
    return d;
  }
  const double thr = rtol * d.singular_values(0);
  for (Eigen::Index i = 0; i < d.singular_values.size(); ++i) {
    double s = d.singular_values(i);
    if (s >= 0.1 * thr && s < 10.0 * thr)
      throw IndeterminateRank("indeterminate rank: singular value " + std::to_string(s / d.singular_values(0)) +
                              " (relative) is within a factor 10 of the threshold");
    if (s >= thr) ++d.rank;
  }
  d.basis = svd.matrixU().leftCols(d.rank);
  return d;
}

/// Two admissible extensions of the velocity: `Tube` is constant along a
/// slice transverse to gamma; `Oblique` uses a tilted slice and adds a term
/// vanishing on gamma.
enum class ExtensionKind { Tube, Oblique };

struct FlagResult {
  double t = 0.0;
  std::vector<Eigen::MatrixXd> bases;  // D^1, D^2, ...
  std::vector<int> dims;
  int step = 0;                        // first i with dim D^i = n, 0 if not reached
  double filtration_residual = 0.0;    // max |(I - P_{i+1}) B_i|

  /// Dimensions up to the step (or all computed orders if not ample).
  std::vector<int> growth_vector() const {
    return step ? std::vector<int>(dims.begin(), dims.begin() + step) : dims;
  }
  std::vector<int> increments() const {
    auto g = growth_vector();
    std::vector<int> d;
    for (std::size_t i = 0; i < g.size(); ++i) d.push_back(g[i] - (i ? g[i - 1] : 0));
    return d;
  }
};

/// Symbolic machinery for flags of one structure up to a fixed order. The
/// extension T is a template in x whose coefficients are extra parameters, so
/// brackets are differentiated and compiled once and evaluated per sample.
class FlagEngine {
 public:
  FlagEngine(std::shared_ptr<const PhaseFlow> flow, int max_order)
      : flow_(std::move(flow)), order_(max_order) {
    if (max_order < 1) throw std::invalid_argument("flag order must be at least 1");
    const SRStructure& s = flow_->structure();
    const std::size_t n = s.dim(), k = s.rank();
    const int K = order_;

    // Time derivatives of h_i = <p, X_i> and x_j along the Hamiltonian flow.
    VectorField hv = flow_->vector_field_expression();
    std::vector<Expression> jets;
    for (std::size_t i = 0; i < k; ++i) {
      Expression f = fiber_linear(s.frame[i]);
      for (int d = 0; d <= K; ++d) {
        jets.push_back(f);
        f = hv.apply(f);
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      Expression f = var(s.chart[j]);
      for (int d = 0; d <= K; ++d) {
        jets.push_back(f);
        f = hv.apply(f);
      }
    }
    jet_tape_ = Tape(jets, flow_->chart().names());

    // Template of T = sum_i u_i(x) X_i.
    std::vector<std::string> vars = s.chart.names();
    auto param = [&](const std::string& name) {
      vars.push_back("$" + name);
      return var("$" + name);
    };
    std::vector<Expression> ell_terms, nu_terms;
    std::vector<Expression> q, w;
    for (std::size_t j = 0; j < n; ++j) q.push_back(param("q" + std::to_string(j)));
    for (std::size_t j = 0; j < n; ++j) w.push_back(param("w" + std::to_string(j)));
    for (std::size_t j = 0; j < n; ++j) ell_terms.push_back(w[j] * (var(s.chart[j]) - q[j]));
    Expression ell = sum(ell_terms);
    std::vector<Expression> s_terms;
    for (int d = 1; d <= K; ++d) s_terms.push_back(param("b" + std::to_string(d)) * pow(ell, d));
    Expression sx = sum(s_terms);
    // nu(x) = <m, x - Gamma(s(x))>, Gamma the Taylor polynomial of gamma
    std::vector<std::vector<Expression>> g(n);
    for (std::size_t j = 0; j < n; ++j) {
      g[j].push_back(var(s.chart[j]) - q[j]);
      for (int d = 1; d <= K; ++d)
        g[j].push_back(-(param("g" + std::to_string(j) + "_" + std::to_string(d)) * pow(sx, d)));
    }
    for (std::size_t j = 0; j < n; ++j) nu_terms.push_back(param("m" + std::to_string(j)) * sum(g[j]));
    Expression nu = sum(nu_terms);
    std::vector<Expression> t_comps(n, Expression(0.0));
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<Expression> u;
      for (int d = 0; d <= K; ++d) u.push_back(param("c" + std::to_string(i) + "_" + std::to_string(d)) * pow(sx, d));
      u.push_back(param("beta" + std::to_string(i)) * nu);
      Expression ui = sum(u);
      for (std::size_t j = 0; j < n; ++j)
        if (!s.frame[i][j].is_zero()) t_comps[j] = t_comps[j] + ui * s.frame[i][j];
    }

    // Brackets ad_T^j X_b live on the base chart; parameters are constants for
    // differentiation, which only runs over chart variables.
    VectorField t_field(s.chart, t_comps);
    std::vector<Expression> cols;
    for (std::size_t b = 0; b < k; ++b) {
      VectorField f = s.frame[b];
      for (int j = 0; j < order_; ++j) {
        if (j > 0) f = lie_bracket(t_field, f);
        cols.insert(cols.end(), f.components().begin(), f.components().end());
      }
    }
    bracket_tape_ = Tape(cols, vars);
    t_tape_ = Tape(t_comps, vars);
  }

  int max_order() const { return order_; }
  const PhaseFlow& flow() const { return *flow_; }

  /// Flag at the phase point z (time label t).
  FlagResult at(const Eigen::VectorXd& z, double t, ExtensionKind kind = ExtensionKind::Tube) const {
    const SRStructure& s = flow_->structure();
    const auto n = static_cast<Eigen::Index>(s.dim()), k = static_cast<Eigen::Index>(s.rank());
    std::vector<double> in = inputs(z, kind);
    Eigen::MatrixXd all(n, k * order_);
    bracket_tape_.evaluate(in, std::span<double>(all.data(), all.size()));

    FlagResult r;
    r.t = t;
    for (int i = 1; i <= order_; ++i) {
      Eigen::MatrixXd m(n, k * i);
      for (Eigen::Index b = 0; b < k; ++b)
        for (int j = 0; j < i; ++j) m.col(b * i + j) = all.col(b * order_ + j);
      RankDecision d = decide_rank(m);
      if (!r.bases.empty()) {
        const auto& prev = r.bases.back();
        Eigen::MatrixXd res = prev - d.basis * (d.basis.transpose() * prev);
        if (res.size()) r.filtration_residual = std::max(r.filtration_residual, res.cwiseAbs().maxCoeff());
      }
      r.bases.push_back(d.basis);
      r.dims.push_back(d.rank);
      if (d.rank == n && r.step == 0) r.step = i;
    }
    return r;
  }

  /// Value of the extension T at x, for checking that it extends the velocity.
  Eigen::VectorXd extension_at(const Eigen::VectorXd& z, const Eigen::VectorXd& x, ExtensionKind kind) const {
    std::vector<double> in = inputs(z, kind);
    for (Eigen::Index j = 0; j < x.size(); ++j) in[j] = x(j);
    Eigen::VectorXd out(x.size());
    t_tape_.evaluate(in, std::span<double>(out.data(), out.size()));
    return out;
  }

 private:
  std::vector<double> inputs(const Eigen::VectorXd& z, ExtensionKind kind) const {
    const SRStructure& s = flow_->structure();
    const std::size_t n = s.dim(), k = s.rank();
    const int K = order_;
    std::vector<double> jets(jet_tape_.num_outputs());
    jet_tape_.evaluate(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())), jets);
    auto hjet = [&](std::size_t i, int d) { return jets[i * (K + 1) + d]; };
    auto xjet = [&](std::size_t j, int d) { return jets[(k + j) * (K + 1) + d]; };

    Eigen::VectorXd v(n);
    for (std::size_t j = 0; j < n; ++j) v(j) = xjet(j, 1);
    if (v.norm() == 0.0) throw std::invalid_argument("flag needs a nonzero velocity");
    Eigen::VectorXd w = v / v.squaredNorm();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
    std::vector<double> beta(k, 0.0);
    if (kind == ExtensionKind::Oblique) {
      // tilt the slice by a vector orthogonal to the velocity
      Eigen::VectorXd tilt = Eigen::VectorXd::LinSpaced(n, 0.7, -0.4);
      tilt -= v * (v.dot(tilt) / v.squaredNorm());
      w += 0.8 * tilt / std::max(v.norm(), 1e-300);
      for (std::size_t j = 0; j < n; ++j) m(j) = std::cos(1.0 + 2.0 * j);
      for (std::size_t i = 0; i < k; ++i) beta[i] = 0.5 + 0.3 * i;
    }

    // a_d = <w, gamma^(d)> / d!, then reversion tau = sum b_d ell^d
    std::vector<double> fact(K + 1, 1.0);
    for (int d = 1; d <= K; ++d) fact[d] = fact[d - 1] * d;
    std::vector<double> a(K + 1, 0.0);
    for (int d = 1; d <= K; ++d) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += w(j) * xjet(j, d);
      a[d] = acc / fact[d];
    }
    std::vector<double> b = series_reversion(a);

    std::vector<double> in;
    for (std::size_t j = 0; j < n; ++j) in.push_back(xjet(j, 0));  // x, overwritten by callers if needed
    for (std::size_t j = 0; j < n; ++j) in.push_back(xjet(j, 0));  // q
    for (std::size_t j = 0; j < n; ++j) in.push_back(w(j));
    for (int d = 1; d <= K; ++d) in.push_back(b[d]);
    for (std::size_t j = 0; j < n; ++j)
      for (int d = 1; d <= K; ++d) in.push_back(xjet(j, d) / fact[d]);
    for (std::size_t j = 0; j < n; ++j) in.push_back(m(j));
    for (std::size_t i = 0; i < k; ++i) {
      for (int d = 0; d <= K; ++d) in.push_back(hjet(i, d) / fact[d]);
      in.push_back(beta[i]);
    }
    return in;
  }

  /// Coefficients b with sum_d b_d (sum_j a_j tau^j)^d = tau + O(tau^{K+1}).
  static std::vector<double> series_reversion(const std::vector<double>& a) {
    const int K = static_cast<int>(a.size()) - 1;
    if (a[1] == 0.0) throw std::invalid_argument("slice is tangent to the geodesic");
    auto mul = [K](const std::vector<double>& x, const std::vector<double>& y) {
      std::vector<double> z(K + 1, 0.0);
      for (int i = 0; i <= K; ++i)
        for (int j = 0; i + j <= K; ++j) z[i + j] += x[i] * y[j];
      return z;
    };
    std::vector<std::vector<double>> powers(K + 1);
    powers[1] = a;
    powers[1][0] = 0.0;
    for (int d = 2; d <= K; ++d) powers[d] = mul(powers[d - 1], powers[1]);
    std::vector<double> b(K + 1, 0.0);
    b[1] = 1.0 / a[1];
    for (int d = 2; d <= K; ++d) {
      double acc = 0.0;
      for (int e = 1; e < d; ++e) acc += b[e] * powers[e][d];
      b[d] = -acc / powers[d][d];
    }
    return b;
  }

  std::shared_ptr<const PhaseFlow> flow_;
  int order_;
  Tape jet_tape_, bracket_tape_, t_tape_;
};

/// Flag at time t of an integrated extremal.
inline FlagResult geodesic_flag(const Extremal& e, double t, int max_order,
                                ExtensionKind kind = ExtensionKind::Tube) {
  FlagEngine engine(e.flow_ptr(), max_order);
  return engine.at(e.state_at(t).z, t, kind);
}

/// `count` Chebyshev points of [0, T].
inline std::vector<double> chebyshev_times(double horizon, int count = 17) {
  std::vector<double> t;
  for (int k = 0; k < count; ++k)
    t.push_back(0.5 * horizon * (1.0 - std::cos(std::numbers::pi * (k + 0.5) / count)));
  return t;
}

struct GeodesicClass {
  bool ample = false;
  bool equiregular = false;
  std::vector<int> growth_vector;  // at the first sample
  std::vector<FlagResult> samples;
};

/// Equiregularity is certified on the sample set only.
inline GeodesicClass classify_geodesic(const Extremal& e, const std::vector<double>& times, int max_order,
                                       ExtensionKind kind = ExtensionKind::Tube) {
  if (times.empty()) throw std::invalid_argument("classification needs at least one sample time");
  FlagEngine engine(e.flow_ptr(), max_order);
  GeodesicClass c;
  c.ample = true;
  c.equiregular = true;
  for (double t : times) {
    c.samples.push_back(engine.at(e.state_at(t).z, t, kind));
    const FlagResult& f = c.samples.back();
    if (f.step == 0) c.ample = false;
    if (f.growth_vector() != c.samples.front().growth_vector()) c.equiregular = false;
  }
  c.growth_vector = c.samples.front().growth_vector();
  return c;
}

/// Young diagram of an ample, equiregular geodesic.
inline YoungDiagram young_diagram(const GeodesicClass& c) {
  if (!c.ample) throw std::invalid_argument("geodesic is not ample: its flag does not reach the tangent space");
  if (!c.equiregular) throw std::invalid_argument("geodesic is not equiregular on the sample set");
  return YoungDiagram::from_growth_vector(c.growth_vector);
}

/// Largest principal-angle sine between two subspaces of equal dimension.
inline double subspace_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) return 1.0;
  if (a.cols() == 0) return 0.0;
  return (a - b * (b.transpose() * a)).norm();
}

}  // namespace srcurv
