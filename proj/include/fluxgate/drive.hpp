#pragma once

// Charge drive H_d(t) = 2 f(t) cos(omega_d t + gamma_d) (eta_A n_A + eta_B n_B).
// f(t) is an angular amplitude (rad/ns). The dimensionless strength lambda is
// qubit A's single-photon Rabi amplitude over the qubit-qubit detuning,
// lambda = Omega_A0 / Delta_AB with Omega_A0 = 2 f eta_A n01_A.

#include <cmath>

#include "fluxgate/coupled.hpp"
#include "fluxgate/util.hpp"

namespace fluxgate {

enum class PulseShape {
  flat_with_rise,  // truncated-Gaussian rise over t_rise, then constant
  gaussian_full,   // symmetric offset Gaussian over [0, t_gate], zero at both ends
};

enum class AmplitudeConvention {
  peak,          // f_target is the envelope maximum
  time_average,  // f_target is the envelope mean over [0, t_gate]
};

namespace detail {

// Both shapes are offset Gaussians pinned to zero at their start: a width of
// half the rise keeps exactly exp(-2) to subtract.
inline double rise_section(double t, double t_peak, double sigma) {
  const double g = std::exp(-0.5 * (t - t_peak) * (t - t_peak) / (sigma * sigma));
  const double g0 = std::exp(-2.0);
  return (g - g0) / (1.0 - g0);
}

}  // namespace detail

// Normalized envelope in [0, 1]; zero outside [0, t_gate].
inline double envelope_unit(PulseShape shape, double t, double t_gate_ns, double t_rise_ns) {
  if (t < 0.0 || t > t_gate_ns) return 0.0;
  switch (shape) {
    case PulseShape::flat_with_rise:
      if (t >= t_rise_ns) return 1.0;
      return detail::rise_section(t, t_rise_ns, 0.5 * t_rise_ns);
    case PulseShape::gaussian_full:
      return detail::rise_section(t, 0.5 * t_gate_ns, 0.25 * t_gate_ns);
  }
  return 0.0;
}

inline double envelope_mean(PulseShape shape, double t_gate_ns, double t_rise_ns) {
  // Simpson on a smooth integrand; 1<<12 panels is far below rounding error here.
  const int n = 1 << 12;
  const double h = t_gate_ns / n;
  double acc = envelope_unit(shape, 0.0, t_gate_ns, t_rise_ns) +
               envelope_unit(shape, t_gate_ns, t_gate_ns, t_rise_ns);
  for (int i = 1; i < n; ++i) {
    acc += envelope_unit(shape, i * h, t_gate_ns, t_rise_ns) * (i % 2 ? 4.0 : 2.0);
  }
  return acc * h / (3.0 * t_gate_ns);
}

struct Pulse {
  PulseShape shape = PulseShape::flat_with_rise;
  double omega_d_ghz = 0.0;  // cyclic drive frequency
  double gamma_d = 0.0;      // drive phase, radians
  double t_gate_ns = 0.0;
  double t_rise_ns = 0.0;
  double f_peak = 0.0;       // resolved envelope maximum, rad/ns

  double omega_d_angular() const { return to_angular(omega_d_ghz); }
  double f(double t) const { return f_peak * envelope_unit(shape, t, t_gate_ns, t_rise_ns); }
  // Full scalar drive coefficient multiplying the charge operator.
  double coefficient(double t) const {
    return 2.0 * f(t) * std::cos(omega_d_angular() * t + gamma_d);
  }
};

inline Pulse make_pulse(PulseShape shape, AmplitudeConvention conv, double f_target_radns,
                        double omega_d_ghz, double gamma_d, double t_gate_ns,
                        double t_rise_ns = 0.0) {
  if (t_gate_ns <= 0) throw ConfigError("pulse needs a positive duration");
  if (shape == PulseShape::flat_with_rise && t_rise_ns <= 0) {
    throw ConfigError("flat_with_rise needs a positive t_rise");
  }
  Pulse p;
  p.shape = shape;
  p.omega_d_ghz = omega_d_ghz;
  p.gamma_d = gamma_d;
  p.t_gate_ns = t_gate_ns;
  p.t_rise_ns = t_rise_ns;
  p.f_peak = conv == AmplitudeConvention::peak
                 ? f_target_radns
                 : f_target_radns / envelope_mean(shape, t_gate_ns, t_rise_ns);
  return p;
}

// Bare qubit-qubit detuning Delta_AB = omega01_A - omega01_B (angular).
inline double detuning_ab_angular(const CoupledSystem& sys) {
  return to_angular(sys.qubit_a.transition_ghz(0, 1) - sys.qubit_b.transition_ghz(0, 1));
}

inline double lambda_to_f(const CoupledSystem& sys, double lambda) {
  const double w = sys.params.eta_a * std::abs(sys.qubit_a.n_elems(0, 1));
  if (w <= 0) throw ConfigError("lambda is undefined with no drive weight on qubit A");
  return lambda * std::abs(detuning_ab_angular(sys)) / (2.0 * w);
}

inline double f_to_lambda(const CoupledSystem& sys, double f_radns) {
  const double w = sys.params.eta_a * std::abs(sys.qubit_a.n_elems(0, 1));
  if (w <= 0) throw ConfigError("lambda is undefined with no drive weight on qubit A");
  return 2.0 * f_radns * w / std::abs(detuning_ab_angular(sys));
}

// Spectator strength on qubit A's 1-2 transition: its Rabi amplitude over
// twice its detuning from the drive reference omega_bar.
inline double lambda_12(const CoupledSystem& sys, double f_radns) {
  const double omega_12 = to_angular(sys.qubit_a.transition_ghz(1, 2));
  const double omega_bar = to_angular(sys.omega_bar_ghz());
  const double rabi_12 = 2.0 * f_radns * sys.params.eta_a * std::abs(sys.qubit_a.n_elems(1, 2));
  return rabi_12 / (2.0 * std::abs(omega_12 - omega_bar));
}

}  // namespace fluxgate
