#pragma once

// Darboux frames along extremals: construction (Riemannian canonical frame,
// user-supplied symbolic frames, rescaling), extraction of C1, C2, R from the
// frame dynamics, Jacobi fields and conjugate times.

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flow.hpp"
#include "parser.hpp"
#include "riemannian.hpp"
#include "young.hpp"

namespace srcurv {

/// Frame {E_ai, F_ai} along the extremal through `start`, columns in box
/// order. E and F are fields along the flow, so their flow derivatives can be
/// taken at any state.
struct DarbouxFrameField {
  std::shared_ptr<const PhaseFlow> flow;
  std::shared_ptr<const Transport> transport;  // null if the frame needs no extra state
  YoungDiagram young;
  FieldAlong e;
  FieldAlong f;
  FlowState start;
  std::string provenance;  // constructed-riemannian | user-supplied | rescaled | coordinate

  Eigen::Index n() const { return flow->n(); }

  /// Flow states at nondecreasing times >= 0.
  std::vector<FlowState> states(const std::vector<double>& times) const {
    std::vector<FlowState> out;
    FlowState cur = start;
    for (double t : times) {
      if (t < cur.t) throw std::invalid_argument("frame sample times must be nondecreasing and >= 0");
      if (t > cur.t) cur = advance(*flow, transport.get(), cur, t, kHopTolerance, false).state;
      out.push_back(cur);
    }
    return out;
  }
  FlowState state_at(double t) const { return states({t}).front(); }

  Eigen::MatrixXd e_dot(const FlowState& s) const { return flow_derivative(*flow, transport.get(), e, s); }
  Eigen::MatrixXd f_dot(const FlowState& s) const { return flow_derivative(*flow, transport.get(), f, s); }
};

/// Columns of the parallel frame stored in the transported state.
inline Eigen::MatrixXd parallel_frame(const FlowState& s, Eigen::Index n) {
  return Eigen::Map<const Eigen::MatrixXd>(s.aux.data(), n, n);
}

/// Initial orthonormal frame adapted to the velocity: P_1 = v/|v|_g, the rest
/// from g-Gram-Schmidt of the structure frame.
inline Eigen::MatrixXd adapted_frame(const Eigen::MatrixXd& g, const Eigen::MatrixXd& structure_frame,
                                     const Eigen::VectorXd& v) {
  const auto n = g.rows();
  auto ip = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(g * b); };
  double vn = std::sqrt(ip(v, v));
  if (!(vn > 0.0)) throw std::invalid_argument("canonical frame needs a nonzero velocity");
  Eigen::MatrixXd p(n, n);
  p.col(0) = v / vn;
  std::vector<Eigen::VectorXd> pool;
  for (Eigen::Index a = 0; a < structure_frame.cols(); ++a) pool.push_back(structure_frame.col(a));
  for (Eigen::Index c = 1; c < n; ++c) {
    // pick the candidate with the largest component orthogonal to what we have
    double best = -1.0;
    Eigen::VectorXd chosen;
    std::size_t at = 0;
    for (std::size_t q = 0; q < pool.size(); ++q) {
      Eigen::VectorXd r = pool[q];
      for (Eigen::Index j = 0; j < c; ++j) r -= ip(p.col(j), r) * p.col(j);
      double nr = std::sqrt(ip(r, r));
      if (nr > best) {
        best = nr;
        chosen = r / nr;
        at = q;
      }
    }
    if (!(best > 1e-10)) throw std::invalid_argument("structure frame is degenerate at the initial point");
    p.col(c) = chosen;
    pool.erase(pool.begin() + static_cast<long>(at));
  }
  return p;
}

/// Canonical frame of a Riemannian extremal: E_i = d/dh_i with
/// h_i = <p, P_i> for the parallel frame P (so E_i = (g P_i, 0)), and
/// F_i = -Edot_i. A constant orthogonal `rotation` acts on the initial frame.
inline DarbouxFrameField riemannian_canonical_frame(std::shared_ptr<const PhaseFlow> flow, const PhasePoint& l0,
                                                    const std::optional<Eigen::MatrixXd>& rotation = std::nullopt) {
  const SRStructure& s = flow->structure();
  if (!s.is_riemannian()) throw std::invalid_argument("canonical frame construction needs a Riemannian structure");
  const auto n = flow->n();
  auto lc = std::make_shared<const LeviCivita>(s);
  Eigen::VectorXd z0 = l0.packed();
  Eigen::VectorXd v = flow->vector_field(z0).tail(n);
  Eigen::MatrixXd g = lc->at(l0.x).g;
  Eigen::MatrixXd p0 = adapted_frame(g, s.frame_matrix(std::span<const double>(l0.x.data(), n)), v);
  if (rotation) {
    const Eigen::MatrixXd& o = *rotation;
    if (o.rows() != n || o.cols() != n || (o.transpose() * o - Eigen::MatrixXd::Identity(n, n)).norm() > 1e-10)
      throw std::invalid_argument("rotation must be an orthogonal n x n matrix");
    p0 = p0 * o;
  }

  DarbouxFrameField fr;
  fr.flow = flow;
  fr.transport = std::make_shared<const Transport>(parallel_transport(lc));
  fr.young = YoungDiagram::from_rows(std::vector<int>(static_cast<std::size_t>(n), 1));
  fr.start = FlowState{0.0, z0, Eigen::Map<const Eigen::VectorXd>(p0.data(), n * n)};
  fr.provenance = "constructed-riemannian";
  fr.e = [lc, n](const FlowState& st) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, n);
    out.topRows(n) = lc->at(st.z.tail(n)).g * parallel_frame(st, n);
    return out;
  };
  auto transport = fr.transport;
  auto efield = fr.e;
  fr.f = [flow, transport, efield](const FlowState& st) -> Eigen::MatrixXd {
    return -flow_derivative(*flow, transport.get(), efield, st);
  };
  return fr;
}

inline DarbouxFrameField riemannian_canonical_frame(const Extremal& e,
                                                    const std::optional<Eigen::MatrixXd>& rotation = std::nullopt) {
  return riemannian_canonical_frame(e.flow_ptr(), e.initial(), rotation);
}

/// Frame given symbolically in the phase chart, e.g. read from a frame file.
inline DarbouxFrameField user_frame(std::shared_ptr<const PhaseFlow> flow, const FrameDocument& doc,
                                    const PhasePoint& l0) {
  YoungDiagram y = YoungDiagram::from_rows(doc.rows);
  if (y.n() != flow->n()) throw std::invalid_argument("frame diagram does not match the structure dimension");
  const Chart& pc = flow->chart();
  std::vector<VectorField> es, fs;
  for (const auto& b : y.boxes()) {
    es.emplace_back(pc, doc.e.at({b.row, b.col}));
    fs.emplace_back(pc, doc.f.at({b.row, b.col}));
  }
  auto eb = std::make_shared<FieldBundle>(pc, es);
  auto fb = std::make_shared<FieldBundle>(pc, fs);
  DarbouxFrameField fr;
  fr.flow = flow;
  fr.young = y;
  fr.start = FlowState{0.0, l0.packed(), {}};
  fr.provenance = "user-supplied";
  fr.e = [eb](const FlowState& s) { return (*eb)(std::span<const double>(s.z.data(), s.z.size())); };
  fr.f = [fb](const FlowState& s) { return (*fb)(std::span<const double>(s.z.data(), s.z.size())); };
  return fr;
}

inline DarbouxFrameField user_frame(std::shared_ptr<const PhaseFlow> flow, std::string_view text, const PhasePoint& l0) {
  return user_frame(flow, parse_frame_document(text, flow->chart()), l0);
}

/// E_i = d/dp_i, F_i = d/dx_i.
inline DarbouxFrameField coordinate_frame(std::shared_ptr<const PhaseFlow> flow, const PhasePoint& l0) {
  const auto n = flow->n();
  DarbouxFrameField fr;
  fr.flow = flow;
  fr.young = YoungDiagram::from_rows(std::vector<int>(static_cast<std::size_t>(n), 1));
  fr.start = FlowState{0.0, l0.packed(), {}};
  fr.provenance = "coordinate";
  fr.e = [n](const FlowState&) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, n);
    m.topRows(n).setIdentity();
    return m;
  };
  fr.f = [n](const FlowState&) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, n);
    m.bottomRows(n).setIdentity();
    return m;
  };
  return fr;
}

/// Frame along e^{tH}(c lambda):
///   E^c_ai(t) = c^{-i} dP_c E_ai(ct),  F^c_ai(t) = c^{i-1} dP_c F_ai(ct).
inline DarbouxFrameField rescale_frame(const DarbouxFrameField& fr, double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("rescaling factor must be positive");
  const auto n = fr.n();
  Eigen::VectorXd e_scale(n), f_scale(n);
  for (Eigen::Index b = 0; b < n; ++b) {
    int i = fr.young.boxes()[b].col;
    e_scale(b) = std::pow(c, -i);
    f_scale(b) = std::pow(c, i - 1);
  }
  Eigen::MatrixXd dp = dilation_differential(n, c);
  // state of the original frame at time ct corresponding to the new state at t
  auto back = [c, n](const FlowState& s) {
    FlowState o = s;
    o.t = c * s.t;
    o.z.head(n) /= c;
    return o;
  };
  DarbouxFrameField out = fr;
  out.start = fr.start;
  out.start.z.head(n) *= c;
  out.provenance = "rescaled";
  auto e0 = fr.e, f0 = fr.f;
  out.e = [=](const FlowState& s) -> Eigen::MatrixXd { return dp * e0(back(s)) * e_scale.asDiagonal(); };
  out.f = [=](const FlowState& s) -> Eigen::MatrixXd { return dp * f0(back(s)) * f_scale.asDiagonal(); };
  return out;
}

/// Matrices of the frame dynamics at one time:
///   C2 = sigma(Edot, E), C1^T = sigma(Edot, F), R = sigma(Fdot, F),
///   and sigma(Fdot, E) as a second reading of C1.
struct StructuralSample {
  double t = 0.0;
  Eigen::MatrixXd c1, c2, r, r_raw;
  Eigen::MatrixXd e, f, e_dot, f_dot;
  double c1_consistency = 0.0;  // |sigma(Fdot, E) - sigma(Edot, F)^T|
  double c2_energy = 0.0;       // |C2 - 2H(E, E)|
  double c2_min_eigenvalue = 0.0;
  double r_asymmetry = 0.0;
  double darboux = 0.0;   // max of |sigma(E,E)|, |sigma(F,F)|, |sigma(E,F) - I|
  double vertical = 0.0;  // max |pi_* E|
};

inline double darboux_residual(const Eigen::MatrixXd& e, const Eigen::MatrixXd& f) {
  SymplecticForm sigma(e.rows() / 2);
  const auto n = e.cols();
  double d = sigma.pairing(e, e).cwiseAbs().maxCoeff();
  d = std::max(d, sigma.pairing(f, f).cwiseAbs().maxCoeff());
  d = std::max(d, (sigma.pairing(e, f) - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff());
  return d;
}

inline StructuralSample structural_sample(const DarbouxFrameField& fr, const FlowState& s) {
  const auto n = fr.n();
  SymplecticForm sigma(n);
  StructuralSample o;
  o.t = s.t;
  o.e = fr.e(s);
  o.f = fr.f(s);
  o.e_dot = fr.e_dot(s);
  o.f_dot = fr.f_dot(s);
  o.c2 = sigma.pairing(o.e_dot, o.e);
  o.c1 = sigma.pairing(o.e_dot, o.f).transpose();
  o.r_raw = sigma.pairing(o.f_dot, o.f);
  o.r = 0.5 * (o.r_raw + o.r_raw.transpose());
  o.r_asymmetry = (o.r_raw - o.r_raw.transpose()).cwiseAbs().maxCoeff();
  o.c1_consistency = (sigma.pairing(o.f_dot, o.e) - o.c1).cwiseAbs().maxCoeff();
  Eigen::MatrixXd frame = fr.flow->structure().frame_matrix(std::span<const double>(s.z.data() + n, n));
  Eigen::MatrixXd ep = o.e.topRows(n).transpose() * frame;  // <E_ai, X_c>
  o.c2_energy = (o.c2 - ep * ep.transpose()).cwiseAbs().maxCoeff();
  Eigen::MatrixXd c2s = 0.5 * (o.c2 + o.c2.transpose());
  o.c2_min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(c2s).eigenvalues().minCoeff();
  o.darboux = darboux_residual(o.e, o.f);
  o.vertical = o.e.bottomRows(n).cwiseAbs().maxCoeff();
  return o;
}

struct StructuralMatrices {
  std::vector<StructuralSample> samples;
  double max_darboux = 0.0;
  double max_vertical = 0.0;
  double max_c1_consistency = 0.0;
  double max_c2_energy = 0.0;
  double max_r_asymmetry = 0.0;
  double min_c2_eigenvalue = 0.0;
};

inline StructuralMatrices extract_structural_matrices(const DarbouxFrameField& fr, const std::vector<double>& times) {
  StructuralMatrices m;
  m.min_c2_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& s : fr.states(times)) {
    m.samples.push_back(structural_sample(fr, s));
    const auto& o = m.samples.back();
    m.max_darboux = std::max(m.max_darboux, o.darboux);
    m.max_vertical = std::max(m.max_vertical, o.vertical);
    m.max_c1_consistency = std::max(m.max_c1_consistency, o.c1_consistency);
    m.max_c2_energy = std::max(m.max_c2_energy, o.c2_energy);
    m.max_r_asymmetry = std::max(m.max_r_asymmetry, o.r_asymmetry);
    m.min_c2_eigenvalue = std::min(m.min_c2_eigenvalue, o.c2_min_eigenvalue);
  }
  return m;
}

/// Residuals of the normal-form frame equations
///   Edot_a1 = -F_a1,  Edot_ai = E_a(i-1),
///   Fdot_ai = sum R_ai,bj E_bj - F_a(i+1),  Fdot_an_a = sum R_an_a,bj E_bj,
/// with R the extracted (symmetrised) curvature.
struct StructuralReport {
  StructuralMatrices matrices;
  double e_first = 0.0;
  double e_shift = 0.0;
  double f_shift = 0.0;
  double f_last = 0.0;
  double c_deviation = 0.0;  // max |C1 - C1(Y)|, |C2 - C2(Y)|
  double max_residual() const { return std::max({e_first, e_shift, f_shift, f_last}); }
  bool constant_c(double tol) const { return c_deviation <= tol; }
  std::vector<double> times() const {
    std::vector<double> t;
    for (const auto& s : matrices.samples) t.push_back(s.t);
    return t;
  }
};

inline StructuralReport verify_structural_equations(const DarbouxFrameField& fr, const std::vector<double>& times) {
  StructuralReport rep;
  rep.matrices = extract_structural_matrices(fr, times);
  const YoungDiagram& y = fr.young;
  CMatrices ref = build_C_matrices(y);
  for (const auto& s : rep.matrices.samples) {
    rep.c_deviation = std::max({rep.c_deviation, (s.c1 - ref.c1).cwiseAbs().maxCoeff(),
                                (s.c2 - ref.c2).cwiseAbs().maxCoeff()});
    Eigen::MatrixXd re = s.e * s.r.transpose();  // column ai = sum_bj R_ai,bj E_bj
    for (int a = 1; a <= y.k(); ++a)
      for (int i = 1; i <= y.row_length(a); ++i) {
        int ai = y.index(a, i);
        if (i == 1)
          rep.e_first = std::max(rep.e_first, (s.e_dot.col(ai) + s.f.col(ai)).cwiseAbs().maxCoeff());
        else
          rep.e_shift = std::max(rep.e_shift, (s.e_dot.col(ai) - s.e.col(y.index(a, i - 1))).cwiseAbs().maxCoeff());
        if (i < y.row_length(a))
          rep.f_shift = std::max(
              rep.f_shift, (s.f_dot.col(ai) - re.col(ai) + s.f.col(y.index(a, i + 1))).cwiseAbs().maxCoeff());
        else
          rep.f_last = std::max(rep.f_last, (s.f_dot.col(ai) - re.col(ai)).cwiseAbs().maxCoeff());
      }
  }
  return rep;
}

/// J(t) = Phi(t) v0 on the extremal's nodes.
struct JacobiField {
  Eigen::VectorXd v0;
  std::vector<double> times;
  std::vector<Eigen::VectorXd> values;
};

inline JacobiField jacobi_field(const Extremal& e, const Eigen::VectorXd& v0) {
  if (v0.size() != 2 * e.n()) throw std::invalid_argument("Jacobi field initial vector has wrong size");
  JacobiField j{v0, e.times(), {}};
  for (const auto& phi : e.propagators()) j.values.push_back(phi * v0);
  return j;
}

/// Frame coordinates of a tangent vector: J = sum p_i E_i + x_i F_i, so
/// x = sigma(E, J) and p = -sigma(F, J). Packed as (p, x).
inline Eigen::VectorXd frame_coordinates(const Eigen::MatrixXd& e, const Eigen::MatrixXd& f, const Eigen::VectorXd& j) {
  SymplecticForm sigma(e.rows() / 2);
  const auto n = e.cols();
  Eigen::VectorXd out(2 * n);
  out.head(n) = -sigma.pairing(f, j);
  out.tail(n) = sigma.pairing(e, j);
  return out;
}

/// Times in (0, T] where det of the x-rows/p-columns block of Phi changes sign
/// (Jacobi fields with vertical initial data), refined by bisection.
/// Zeros of even multiplicity are not detected.
inline std::vector<double> conjugate_time_scan(const Extremal& e, int samples = 400, double tol = 1e-8) {
  const auto n = e.n();
  auto det_at = [&](double t) { return e.propagator_at(t).bottomLeftCorner(n, n).determinant(); };
  std::vector<double> out;
  const double T = e.horizon();
  const double t_min = std::min(1e-3, T / samples);
  double ta = t_min, da = det_at(ta);
  for (int k = 1; k <= samples; ++k) {
    double tb = t_min + (T - t_min) * k / samples;
    double db = det_at(tb);
    if (db == 0.0) {
      out.push_back(tb);
    } else if (da != 0.0 && (da < 0.0) != (db < 0.0)) {
      double lo = ta, hi = tb, dlo = da;
      while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi), dm = det_at(mid);
        if (dm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((dm < 0.0) == (dlo < 0.0)) {
          lo = mid;
          dlo = dm;
        } else {
          hi = mid;
        }
      }
      out.push_back(0.5 * (lo + hi));
    }
    ta = tb;
    da = db;
  }
  return out;
}

/// Riemannian cross-check of the symplectic Jacobi field against the
/// classical second-order Jacobi equation
///   J'' + 2 Gamma(J', xdot) + (d_l Gamma)(xdot, xdot) J^l = 0,
/// integrated together with the geodesic equation, and of the normal form
/// x'' + R x = 0 in the parallel frame.
struct ClassicalJacobiReport {
  double projection_mismatch = 0.0;  // sup |J_classical - pi_* Phi v0|
  double normal_form = 0.0;          // sup |x'' + R x| at the sample times
};

inline ClassicalJacobiReport classical_jacobi_check(const Extremal& e, const DarbouxFrameField& canonical,
                                                    const Eigen::VectorXd& v0, int normal_samples = 12) {
  const SRStructure& s = e.flow().structure();
  if (!s.is_riemannian()) throw std::invalid_argument("classical Jacobi check needs a Riemannian structure");
  const auto n = e.n();
  LeviCivita lc(s);
  ClassicalJacobiReport rep;

  // state (x, xdot, J, Jdot)
  Eigen::VectorXd z0 = e.initial().packed();
  Eigen::VectorXd f0 = e.flow().vector_field(z0);
  OdeState y(4 * n);
  Eigen::Map<Eigen::VectorXd> ym(y.data(), 4 * n);
  ym.segment(0, n) = z0.tail(n);
  ym.segment(n, n) = f0.tail(n);
  ym.segment(2 * n, n) = v0.tail(n);
  ym.segment(3 * n, n) = (e.flow().jacobian(z0) * v0).tail(n);
  auto rhs = [&](const OdeState& st, OdeState& d, double) {
    Eigen::Map<const Eigen::VectorXd> x(st.data(), n), v(st.data() + n, n), j(st.data() + 2 * n, n),
        jd(st.data() + 3 * n, n);
    Eigen::Map<Eigen::VectorXd> dx(d.data(), n), dv(d.data() + n, n), dj(d.data() + 2 * n, n), djd(d.data() + 3 * n, n);
    LeviCivitaValues g = lc.at(x);
    dx = v;
    dv = -g.contract(v, v);
    dj = jd;
    Eigen::VectorXd acc = -2.0 * g.contract(jd, v);
    for (Eigen::Index k = 0; k < n; ++k)
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index jj = 0; jj < n; ++jj)
          for (Eigen::Index l = 0; l < n; ++l) acc(k) -= g.dgamma(k, i, jj, l) * j(l) * v(i) * v(jj);
    djd = acc;
  };
  const auto& times = e.times();
  for (std::size_t k = 1; k < times.size(); ++k) {
    integrate_adaptive(rhs, y, times[k - 1], times[k], {1e-13, 1e-13}, [](double, const OdeState&) {});
    Eigen::VectorXd proj = (e.propagators()[k] * v0).tail(n);
    rep.projection_mismatch = std::max(rep.projection_mismatch, (ym.segment(2 * n, n) - proj).cwiseAbs().maxCoeff());
  }

  // x(t) = parallel-frame components of pi_* J, second difference with one
  // Richardson level against -R x
  const double h = 1e-2;
  auto comps = [&](const FlowState& st, const Eigen::VectorXd& jv) {
    Eigen::MatrixXd p = parallel_frame(st, n);
    return Eigen::VectorXd(p.transpose() * lc.at(st.z.tail(n)).g * jv.tail(n));
  };
  std::vector<double> ts;
  for (int k = 0; k < normal_samples; ++k) ts.push_back(h + (e.horizon() - 2 * h) * (k + 0.5) / normal_samples);
  auto states = canonical.states(ts);
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const FlowState& st = states[k];
    Eigen::VectorXd jt = e.propagator_at(ts[k]) * v0;
    auto shifted = [&](double dt) {
      Hop hop = advance(e.flow(), canonical.transport.get(), st, st.t + dt, kHopTolerance, true);
      return comps(hop.state, hop.propagator * jt);
    };
    Eigen::VectorXd x0 = comps(st, jt);
    Eigen::VectorXd d1 = (shifted(h) - 2 * x0 + shifted(-h)) / (h * h);
    Eigen::VectorXd d2 = (shifted(h / 2) - 2 * x0 + shifted(-h / 2)) / (h * h / 4);
    Eigen::VectorXd xdd = (4 * d2 - d1) / 3;
    Eigen::MatrixXd r = structural_sample(canonical, st).r;
    rep.normal_form = std::max(rep.normal_form, (xdd + r * x0).cwiseAbs().maxCoeff());
  }
  return rep;
}

/// Curvature oracle for a Riemannian canonical frame: g(R(P_a, v) v, P_b)
/// with v the velocity and P the parallel frame of the state.
inline Eigen::MatrixXd curvature_oracle(const DarbouxFrameField& fr, const LeviCivita& lc, const FlowState& s) {
  const auto n = fr.n();
  Eigen::VectorXd v = fr.flow->vector_field(s.z).tail(n);
  return lc.curvature_matrix(s.z.tail(n), parallel_frame(s, n), v);
}

}  // namespace srcurv
