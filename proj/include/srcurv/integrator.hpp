#pragma once

// Adaptive Dormand-Prince 5(4) driver on top of Boost.Odeint. The stepping
// loop is ours so that output times are hit exactly and failures surface as
// typed errors instead of odeint's step-count exception.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

namespace srcurv {

struct Tolerance {
  double abs = 1e-10;
  double rel = 1e-10;
};

class IntegrationError : public std::runtime_error {
 public:
  enum class Kind { StepUnderflow, NonFinite };
  IntegrationError(Kind k, double t, const std::string& what)
      : std::runtime_error(what + " at t = " + std::to_string(t)), kind_(k), t_(t) {}
  Kind kind() const { return kind_; }
  double time() const { return t_; }

 private:
  Kind kind_;
  double t_;
};

using OdeState = std::vector<double>;

/// Integrates y' = rhs(y, t) from t0 to t1 (either direction). `observe(t, y)`
/// is called after every accepted step, including the final one at t1.
template <class Rhs, class Observer>
void integrate_adaptive(Rhs&& rhs, OdeState& y, double t0, double t1, Tolerance tol, Observer&& observe,
                        double first_step = 0.0) {
  namespace odeint = boost::numeric::odeint;
  if (t1 == t0) return;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  const double span = std::abs(t1 - t0);
  double dt = first_step != 0.0 ? dir * std::abs(first_step) : dir * std::min(span, 1e-2);
  auto stepper = odeint::make_controlled(tol.abs, tol.rel, odeint::runge_kutta_dopri5<OdeState>());
  auto system = [&](const OdeState& x, OdeState& dxdt, double t) { rhs(x, dxdt, t); };
  double t = t0;
  const double min_step = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t1));
  while (dir * (t1 - t) > 0.0) {
    bool last = false;
    if (dir * (t + dt - t1) >= 0.0) {
      dt = t1 - t;
      last = true;
    }
    auto res = stepper.try_step(system, y, t, dt);
    if (res == odeint::fail) {
      if (std::abs(dt) < min_step) throw IntegrationError(IntegrationError::Kind::StepUnderflow, t, "step size underflow");
      continue;
    }
    for (double v : y)
      if (!std::isfinite(v)) throw IntegrationError(IntegrationError::Kind::NonFinite, t, "non-finite state");
    if (last) t = t1;  // pin the endpoint exactly
    observe(t, y);
  }
}

}  // namespace srcurv
