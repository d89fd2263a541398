#pragma once

// Hamiltonian and variational flows along extremals, the flow Lie derivative
// of fields along an extremal, and fiber-homogeneity of the flow.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hamiltonian.hpp"
#include "integrator.hpp"

namespace srcurv {

/// Extra data transported along the flow together with the phase point, e.g.
/// a parallel frame. The rule must be geometric: it may depend on the phase
/// point and its velocity, not on time.
struct Transport {
  Eigen::Index dim = 0;
  std::function<void(const Eigen::VectorXd& z, const Eigen::VectorXd& zdot, const Eigen::VectorXd& aux,
                      Eigen::VectorXd& daux)>
      rhs;
};

/// Phase point (p, x) at time t plus any transported data.
struct FlowState {
  double t = 0.0;
  Eigen::VectorXd z;
  Eigen::VectorXd aux;
};

struct Hop {
  FlowState state;
  Eigen::MatrixXd propagator;  // d(flow from the start state), empty if not requested
};

/// Tolerance for the short hops used in flow derivatives.
inline constexpr Tolerance kHopTolerance{1e-14, 1e-13};

/// Flows `from` to time `t_target`, optionally with the linearised flow.
inline Hop advance(const PhaseFlow& flow, const Transport* transport, const FlowState& from, double t_target,
                   Tolerance tol, bool with_propagator) {
  const Eigen::Index m = 2 * flow.n();
  const Eigen::Index naux = transport ? transport->dim : 0;
  if (from.z.size() != m) throw std::invalid_argument("advance: phase point has wrong size");
  if (transport && from.aux.size() != naux) throw std::invalid_argument("advance: transported state has wrong size");
  const Eigen::Index nphi = with_propagator ? m * m : 0;

  OdeState y(m + nphi + naux);
  Eigen::Map<Eigen::VectorXd>(y.data(), m) = from.z;
  if (with_propagator) Eigen::Map<Eigen::MatrixXd>(y.data() + m, m, m).setIdentity();
  if (naux) Eigen::Map<Eigen::VectorXd>(y.data() + m + nphi, naux) = from.aux;

  Eigen::VectorXd z(m), zdot(m), aux(naux), daux(naux);
  auto rhs = [&](const OdeState& x, OdeState& dx, double) {
    z = Eigen::Map<const Eigen::VectorXd>(x.data(), m);
    zdot = flow.vector_field(z);
    Eigen::Map<Eigen::VectorXd>(dx.data(), m) = zdot;
    if (with_propagator) {
      Eigen::Map<const Eigen::MatrixXd> phi(x.data() + m, m, m);
      Eigen::Map<Eigen::MatrixXd>(dx.data() + m, m, m) = flow.jacobian(z) * phi;
    }
    if (naux) {
      aux = Eigen::Map<const Eigen::VectorXd>(x.data() + m + nphi, naux);
      transport->rhs(z, zdot, aux, daux);
      Eigen::Map<Eigen::VectorXd>(dx.data() + m + nphi, naux) = daux;
    }
  };
  integrate_adaptive(rhs, y, from.t, t_target, tol, [](double, const OdeState&) {});

  Hop out;
  out.state.t = t_target;
  out.state.z = Eigen::Map<const Eigen::VectorXd>(y.data(), m);
  if (naux) out.state.aux = Eigen::Map<const Eigen::VectorXd>(y.data() + m + nphi, naux);
  if (with_propagator) out.propagator = Eigen::Map<const Eigen::MatrixXd>(y.data() + m, m, m);
  return out;
}

/// Integrated extremal lambda(t) = e^{tH}(lambda0) with its variational flow.
class Extremal {
 public:
  Extremal() = default;

  const PhaseFlow& flow() const { return *flow_; }
  std::shared_ptr<const PhaseFlow> flow_ptr() const { return flow_; }
  const PhasePoint& initial() const { return initial_; }
  double horizon() const { return horizon_; }
  Tolerance tolerance() const { return tol_; }
  Eigen::Index n() const { return flow_->n(); }

  const std::vector<double>& times() const { return t_; }
  const std::vector<Eigen::VectorXd>& states() const { return z_; }
  const std::vector<Eigen::MatrixXd>& propagators() const { return phi_; }

  /// Accurate state at any t in [0, T]: re-flows from the nearest node.
  FlowState state_at(double t) const { return FlowState{t, hop_from_nearest(t).state.z, {}}; }

  /// Phi(t) = d e^{tH} at lambda0.
  Eigen::MatrixXd propagator_at(double t) const {
    auto j = nearest(t);
    auto h = advance(*flow_, nullptr, FlowState{t_[j], z_[j], {}}, t, kHopTolerance, true);
    return h.propagator * phi_[j];
  }

  /// Cubic Hermite dense output of lambda(t) on the accepted grid.
  Eigen::VectorXd interpolate(double t) const {
    if (t <= t_.front()) return z_.front();
    if (t >= t_.back()) return z_.back();
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    std::size_t j = static_cast<std::size_t>(it - t_.begin()) - 1;
    double h = t_[j + 1] - t_[j];
    double s = (t - t_[j]) / h;
    Eigen::VectorXd f0 = flow_->vector_field(z_[j]), f1 = flow_->vector_field(z_[j + 1]);
    double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
    double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
    return h00 * z_[j] + h10 * h * f0 + h01 * z_[j + 1] + h11 * h * f1;
  }

  double max_hamiltonian_drift() const {
    double h0 = flow_->hamiltonian(z_.front()), d = 0.0;
    for (const auto& z : z_) d = std::max(d, std::abs(flow_->hamiltonian(z) - h0));
    return d;
  }

  /// max_j || Phi_j^T J Phi_j - J ||_inf
  double max_symplectic_defect() const {
    SymplecticForm sigma(n());
    double d = 0.0;
    for (const auto& p : phi_) d = std::max(d, (sigma.pairing(p, p) - sigma.matrix()).cwiseAbs().maxCoeff());
    return d;
  }

 private:
  friend Extremal integrate_extremal(std::shared_ptr<const PhaseFlow>, const PhasePoint&, double, Tolerance,
                                     std::span<const double>);

  std::size_t nearest(double t) const {
    if (t < t_.front() - 1e-12 || t > t_.back() + 1e-12)
      throw std::out_of_range("time outside the integrated interval");
    auto it = std::lower_bound(t_.begin(), t_.end(), t);
    if (it == t_.end()) return t_.size() - 1;
    std::size_t j = static_cast<std::size_t>(it - t_.begin());
    if (j > 0 && std::abs(t_[j - 1] - t) < std::abs(t_[j] - t)) --j;
    return j;
  }
  Hop hop_from_nearest(double t) const {
    auto j = nearest(t);
    if (t_[j] == t) return Hop{FlowState{t, z_[j], {}}, {}};
    return advance(*flow_, nullptr, FlowState{t_[j], z_[j], {}}, t, kHopTolerance, false);
  }

  std::shared_ptr<const PhaseFlow> flow_;
  PhasePoint initial_;
  double horizon_ = 0.0;
  Tolerance tol_;
  std::vector<double> t_;
  std::vector<Eigen::VectorXd> z_;
  std::vector<Eigen::MatrixXd> phi_;
};

/// Integrates trajectory and variational flow on [0, T]. Every accepted step
/// becomes a node; `output_times` are added as nodes as well.
inline Extremal integrate_extremal(std::shared_ptr<const PhaseFlow> flow, const PhasePoint& l0, double horizon,
                                   Tolerance tol = {}, std::span<const double> output_times = {}) {
  if (!(horizon > 0.0)) throw std::invalid_argument("time horizon must be positive");
  if (!(tol.abs > 0.0) || !(tol.rel > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!l0.finite()) throw std::invalid_argument("initial covector is not finite");
  if (l0.x.size() != flow->n() || l0.p.size() != flow->n()) throw std::invalid_argument("initial covector has wrong dimension");

  Extremal e;
  e.flow_ = flow;
  e.initial_ = l0;
  e.horizon_ = horizon;
  e.tol_ = tol;
  const Eigen::Index m = 2 * flow->n();

  std::vector<double> stops(output_times.begin(), output_times.end());
  stops.push_back(horizon);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  stops.erase(std::remove_if(stops.begin(), stops.end(), [&](double s) { return s <= 0.0 || s > horizon; }),
              stops.end());

  OdeState y(m + m * m);
  Eigen::Map<Eigen::VectorXd>(y.data(), m) = l0.packed();
  Eigen::Map<Eigen::MatrixXd>(y.data() + m, m, m).setIdentity();
  auto record = [&](double t, const OdeState& s) {
    e.t_.push_back(t);
    e.z_.push_back(Eigen::Map<const Eigen::VectorXd>(s.data(), m));
    e.phi_.push_back(Eigen::Map<const Eigen::MatrixXd>(s.data() + m, m, m));
  };
  record(0.0, y);
  Eigen::VectorXd z(m);
  auto rhs = [&](const OdeState& x, OdeState& dx, double) {
    z = Eigen::Map<const Eigen::VectorXd>(x.data(), m);
    Eigen::Map<Eigen::VectorXd>(dx.data(), m) = flow->vector_field(z);
    Eigen::Map<const Eigen::MatrixXd> phi(x.data() + m, m, m);
    Eigen::Map<Eigen::MatrixXd>(dx.data() + m, m, m) = flow->jacobian(z) * phi;
  };
  double t = 0.0;
  for (double stop : stops) {
    integrate_adaptive(rhs, y, t, stop, tol, record);
    t = stop;
  }
  return e;
}

inline Extremal integrate_extremal(const SRStructure& s, const PhasePoint& l0, double horizon, Tolerance tol = {},
                                   std::span<const double> output_times = {}) {
  return integrate_extremal(std::make_shared<const PhaseFlow>(s), l0, horizon, tol, output_times);
}

/// A vector field (or a family of them, one per column) along the flow,
/// evaluated from the current flow state.
using FieldAlong = std::function<Eigen::MatrixXd(const FlowState&)>;

/// Default step for flow derivatives. Hops are integrated to near machine
/// precision, so the step is independent of the trajectory grid.
inline constexpr double kFlowDerivativeStep = 1e-3;

/// Lie derivative along the Hamiltonian flow,
///   Vdot(t) = d/de|_{e=0} (e^{-eH})_* V(t + e),
/// realised as a central difference of the pulled-back field with one level
/// of Richardson extrapolation (steps eps and eps/2).
inline Eigen::MatrixXd flow_derivative(const PhaseFlow& flow, const Transport* transport, const FieldAlong& field,
                                       const FlowState& at, double eps = kFlowDerivativeStep) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("flow derivative step must be positive");
  auto pulled = [&](double s) {
    Hop h = advance(flow, transport, at, at.t + s, kHopTolerance, true);
    Eigen::MatrixXd v = field(h.state);
    return Eigen::MatrixXd(h.propagator.partialPivLu().solve(v));
  };
  Eigen::MatrixXd d1 = (pulled(eps) - pulled(-eps)) / (2.0 * eps);
  Eigen::MatrixXd d2 = (pulled(eps / 2) - pulled(-eps / 2)) / eps;
  Eigen::MatrixXd d = (4.0 * d2 - d1) / 3.0;
  if (!d.allFinite()) throw std::runtime_error("flow derivative is not finite");
  return d;
}

/// Flow derivative of a field sampled on an extremal's nodes.
inline std::vector<Eigen::MatrixXd> lie_derivative_along_flow(const Extremal& e, const FieldAlong& field,
                                                              double eps = kFlowDerivativeStep) {
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t j = 0; j < e.times().size(); ++j)
    out.push_back(flow_derivative(e.flow(), nullptr, field, FlowState{e.times()[j], e.states()[j], {}}, eps));
  return out;
}

/// Restriction of a symbolic phase-space field to the flow.
inline FieldAlong restrict_field(const VectorField& w) {
  auto bundle = std::make_shared<FieldBundle>(w.chart(), std::vector<VectorField>{w});
  return [bundle](const FlowState& s) {
    return (*bundle)(std::span<const double>(s.z.data(), static_cast<std::size_t>(s.z.size())));
  };
}

struct FlowHomogeneityReport {
  double c = 1.0;
  double horizon = 0.0;
  double residual = 0.0;  // max over samples of |e^{tH}(c l) - c e^{ctH}(l)|_inf
  std::vector<double> times;
};

/// Compares e^{tH}(c lambda0) with c e^{ctH}(lambda0) on a uniform grid of
/// `samples` times in [0, T]; both sides are integrated independently.
inline FlowHomogeneityReport check_flow_homogeneity(const PhaseFlow& flow, const PhasePoint& l0, double c,
                                                    double horizon, int samples = 41, Tolerance tol = {1e-12, 1e-12}) {
  if (!(c > 0.0)) throw std::invalid_argument("homogeneity factor must be positive");
  if (l0.p.norm() == 0.0) throw std::invalid_argument("homogeneity check needs a nonzero covector");
  FlowHomogeneityReport r;
  r.c = c;
  r.horizon = horizon;
  FlowState lhs{0.0, dilation(l0, c).packed(), {}};
  FlowState rhs{0.0, l0.packed(), {}};
  const auto n = flow.n();
  for (int k = 0; k <= samples; ++k) {
    double t = horizon * k / samples;
    if (k > 0) {
      lhs = advance(flow, nullptr, lhs, t, tol, false).state;
      rhs = advance(flow, nullptr, rhs, c * t, tol, false).state;
    }
    Eigen::VectorXd scaled = rhs.z;
    scaled.head(n) *= c;
    r.residual = std::max(r.residual, (lhs.z - scaled).cwiseAbs().maxCoeff());
    r.times.push_back(t);
  }
  return r;
}

}  // namespace srcurv
