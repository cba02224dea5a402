#pragma once

// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4), FSAL) over Eigen matrix
// states. The controller is the classic I-controller with safety 0.9 and step
// ratio clamped to [0.2, 5]; error is the max elementwise ratio against
// atol + rtol * |y|.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "fluxgate/util.hpp"

namespace fluxgate {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h_init = 1e-3;   // ns
  double h_min = 1e-12;
  double h_max = 1e9;
  long max_steps = 400000000;
};

template <class State>
class DormandPrince {
 public:
  explicit DormandPrince(const OdeOptions& opt) : opt_(opt), h_(opt.h_init) {}

  // Integrate in place from t to t_end, calling observe(t, y) after each
  // accepted step. Step size persists across calls, so chaining segments does
  // not restart the controller.
  template <class Rhs, class Obs>
  void integrate(Rhs&& rhs, State& y, double t, double t_end, Obs&& observe) {
    if (t_end <= t) return;
    ensure_sized(y);
    rhs(t, y, k1_);
    long steps = 0;
    while (t < t_end) {
      if (++steps > opt_.max_steps) {
        throw ConvergenceError("ODE step budget exhausted at t = " + std::to_string(t));
      }
      const bool last = h_ >= t_end - t;
      const double h = last ? t_end - t : h_;
      single_step_with_k1(rhs, t, y, h, ynew_, yerr_);
      const double err = error_ratio(y, ynew_, yerr_);
      if (err <= 1.0) {
        t = last ? t_end : t + h;
        y.swap(ynew_);
        k1_.swap(k7_);  // FSAL: derivative at the new point is already known
        observe(t, y);
        const double grow = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        h_ = std::clamp(h * std::clamp(grow, 0.2, 5.0), opt_.h_min, opt_.h_max);
      } else {
        // rejected: y and k1 still belong to time t, only shrink the step
        if (h <= opt_.h_min * (1.0 + 1e-12)) {
          throw ConvergenceError("ODE step size underflow at t = " + std::to_string(t));
        }
        h_ = std::max(h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9), opt_.h_min);
      }
    }
  }

  template <class Rhs>
  void integrate(Rhs&& rhs, State& y, double t, double t_end) {
    integrate(rhs, y, t, t_end, [](double, const State&) {});
  }

  // One fixed step of the raw method (5th-order result + embedded error), for
  // order-verification tests.
  template <class Rhs>
  void single_step(Rhs&& rhs, double t, const State& y, double h, State& ynew, State& yerr) {
    ensure_sized(y);
    rhs(t, y, k1_);
    single_step_with_k1(rhs, t, y, h, ynew, yerr);
  }

  double current_step() const { return h_; }

 private:
  // Dormand-Prince 5(4) tableau.
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640,
                          e5 = -2187.0 / 6784 + 92097.0 / 339200, e6 = 11.0 / 84 - 187.0 / 2100,
                          e7 = -1.0 / 40;

  void ensure_sized(const State& y) {
    if (k1_.rows() == y.rows() && k1_.cols() == y.cols()) return;
    for (State* s : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ynew_, &yerr_, &ytmp_}) {
      s->resizeLike(y);
    }
  }

  template <class Rhs>
  void single_step_with_k1(Rhs&& rhs, double t, const State& y, double h, State& ynew,
                           State& yerr) {
    ytmp_ = y + (h * a21) * k1_;
    rhs(t + c2 * h, ytmp_, k2_);
    ytmp_ = y + h * (a31 * k1_ + a32 * k2_);
    rhs(t + c3 * h, ytmp_, k3_);
    ytmp_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
    rhs(t + c4 * h, ytmp_, k4_);
    ytmp_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
    rhs(t + c5 * h, ytmp_, k5_);
    ytmp_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
    rhs(t + h, ytmp_, k6_);
    ynew = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
    rhs(t + h, ynew, k7_);
    yerr = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
  }

  double error_ratio(const State& y, const State& ynew, const State& yerr) const {
    const auto scale = opt_.atol + opt_.rtol * y.cwiseAbs().cwiseMax(ynew.cwiseAbs()).array();
    return (yerr.cwiseAbs().array() / scale).maxCoeff();
  }

  OdeOptions opt_;
  double h_;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_, ynew_, yerr_, ytmp_;
};

}  // namespace fluxgate
