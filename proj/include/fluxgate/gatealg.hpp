#pragma once

// Pure algebra on 4x4 gates from the two-photon family
//
//   U(theta, zeta) = [ cos(theta/2)      0           0       -i sin(theta/2) ]
//                    [      0       e^{i zeta/2}     0             0         ]
//                    [      0            0      e^{i zeta/2}       0         ]
//                    [ -i sin(theta/2)   0           0        cos(theta/2)   ]
//
// theta mixes |00> and |11>, zeta is the controlled-phase angle picked up by
// the single-excitation states.  Alongside the family itself: Makhlin local
// invariants via the Bell-basis construction, entangling power via operator
// entanglement of the realigned matrix, and the exact decomposition of any
// family member into two half-mixing gates plus Z rotations.

#include <cmath>

#include <Eigen/Dense>

#include "fluxgate/util.hpp"

namespace fluxgate {

struct GateFamilyParams {
  double theta = 0.0;
  double zeta = 0.0;
};

inline Eigen::Matrix4cd build_family(const GateFamilyParams& p) {
  const double theta = wrap_angle(p.theta), zeta = wrap_angle(p.zeta);
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  const cplx phase = std::polar(1.0, 0.5 * zeta);
  Eigen::Matrix4cd u = Eigen::Matrix4cd::Zero();
  u(0, 0) = u(3, 3) = c;
  u(0, 3) = u(3, 0) = -iu * s;
  u(1, 1) = u(2, 2) = phase;
  return u;
}

namespace detail {

inline void require_unitary(const Eigen::Matrix4cd& u, double tol = 1e-8) {
  if (((u.adjoint() * u) - Eigen::Matrix4cd::Identity()).cwiseAbs().maxCoeff() > tol) {
    throw Error("matrix is not unitary within tolerance");
  }
}

// Transformation into the Bell basis used by the invariant construction.
inline const Eigen::Matrix4cd& bell_q() {
  static const Eigen::Matrix4cd q = [] {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    const double r = 1.0 / std::sqrt(2.0);
    m(0, 0) = r;
    m(0, 3) = iu * r;
    m(1, 1) = iu * r;
    m(1, 2) = r;
    m(2, 1) = iu * r;
    m(2, 2) = -r;
    m(3, 0) = r;
    m(3, 3) = -iu * r;
    return m;
  }();
  return q;
}

// Realignment (U^R)_{ij,kl} = U_{ik,jl} with row pair (i,j) flattened as 2i+j.
inline Eigen::Matrix4cd realign(const Eigen::Matrix4cd& u) {
  Eigen::Matrix4cd r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) r(2 * i + j, 2 * k + l) = u(2 * i + k, 2 * j + l);
  return r;
}

// Operator entanglement (linear entropy) of a 4x4 operator.
inline double operator_entanglement(const Eigen::Matrix4cd& u) {
  const Eigen::Matrix4cd r = realign(u);
  const Eigen::Matrix4cd g = r * r.adjoint();
  return 1.0 - (g * g).trace().real() / 16.0;
}

inline const Eigen::Matrix4cd& swap_gate() {
  static const Eigen::Matrix4cd s = [] {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = m(3, 3) = 1.0;
    m(1, 2) = m(2, 1) = 1.0;
    return m;
  }();
  return s;
}

}  // namespace detail

struct LocalInvariants {
  cplx g1;
  double g2 = 0.0;
};

// Makhlin invariants of the local equivalence class: equal invariants mean
// the gates differ only by single-qubit rotations.
inline LocalInvariants local_invariants(const Eigen::Matrix4cd& u) {
  detail::require_unitary(u);
  const Eigen::Matrix4cd& q = detail::bell_q();
  const Eigen::Matrix4cd ub = q.adjoint() * u * q;
  const Eigen::Matrix4cd m = ub.transpose() * ub;
  const cplx tr = m.trace();
  const cplx tr2 = (m * m).trace();
  const cplx det = u.determinant();
  LocalInvariants inv;
  inv.g1 = tr * tr / (16.0 * det);
  inv.g2 = ((tr * tr - tr2) / (4.0 * det)).real();
  return inv;
}

// Average entanglement generated over product inputs; 0 for anything locally
// equivalent to identity or SWAP, 2/9 at the iSWAP class.
inline double entangling_power(const Eigen::Matrix4cd& u) {
  detail::require_unitary(u);
  const Eigen::Matrix4cd& s12 = detail::swap_gate();
  return 4.0 / 9.0 *
         (detail::operator_entanglement(u) + detail::operator_entanglement(u * s12) -
          detail::operator_entanglement(s12));
}

// Z rotation by the same angle on both qubits: diag(e^{-i nu}, 1, 1, e^{i nu}).
inline Eigen::Matrix4cd u_z(double nu) {
  Eigen::Matrix4cd d = Eigen::Matrix4cd::Identity();
  d(0, 0) = std::polar(1.0, -nu);
  d(3, 3) = std::polar(1.0, nu);
  return d;
}

// Half-mixing family member with extra phases e^{+-i gamma} on the 00-11
// corner elements; physically a microwave-phase offset of gamma/2.
inline Eigen::Matrix4cd u_prime(double zeta, double gamma) {
  return u_z(0.5 * gamma) * build_family({0.5 * pi, zeta}) * u_z(-0.5 * gamma);
}

// Exact decomposition of U(theta, zeta) into two half-mixing gates at zeta/2
// with opposite corner-phase offsets, sandwiched by Z rotations.
struct ThetaDecomposition {
  double z_outer = 0.0;      // angle of the U_Z factor on each side
  double half_zeta = 0.0;    // controlled-phase angle of each pi/2 gate
  double gamma_first = 0.0;  // corner-phase offset of the first pi/2 gate
  double gamma_second = 0.0;
  // The gamma offsets need no physical Z rotations: shifting the microwave
  // drive phase by gamma/2 produces the same corner phases.
  double drive_phase_first() const { return 0.5 * gamma_first; }
  double drive_phase_second() const { return 0.5 * gamma_second; }
};

inline ThetaDecomposition decompose_theta(double theta, double zeta) {
  ThetaDecomposition d;
  d.z_outer = -0.25 * theta;
  d.half_zeta = 0.5 * zeta;
  d.gamma_first = 0.5 * theta - 0.5 * pi;
  d.gamma_second = -0.5 * theta + 0.5 * pi;
  return d;
}

inline Eigen::Matrix4cd compose(const ThetaDecomposition& d) {
  return u_z(d.z_outer) * u_prime(d.half_zeta, d.gamma_first) *
         u_prime(d.half_zeta, d.gamma_second) * u_z(d.z_outer);
}

// Global-phase-insensitive equality: |tr(a^dag b)| = 4 exactly when a and b
// agree up to a phase.
inline double phase_distance(const Eigen::Matrix4cd& a, const Eigen::Matrix4cd& b) {
  return 4.0 - std::abs((a.adjoint() * b).trace());
}

}  // namespace fluxgate
