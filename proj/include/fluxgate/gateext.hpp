#pragma once

// From a simulated propagator to a characterized gate: project onto the
// computational subspace, strip single-qubit Z phases, read off the
// controlled-phase angle zeta, and split the infidelity into a population
// error budget (wrong computational state, leakage, mixing-angle error).

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "fluxgate/coupled.hpp"
#include "fluxgate/evolve.hpp"
#include "fluxgate/gatealg.hpp"
#include "fluxgate/util.hpp"

namespace fluxgate {

namespace detail {

// Flat dressed-basis indices of |00>, |01>, |10>, |11> in gate order.
inline std::array<int, 4> computational_indices(const CoupledSystem& sys) {
  return {sys.idx(0, 0), sys.idx(0, 1), sys.idx(1, 0), sys.idx(1, 1)};
}

// Ideal transition probabilities of the half-mixing gate: the 00/11 corner
// block carries 1/2 everywhere, the single-excitation states stay put.
inline double ideal_population(int row, int col) {
  const bool corner_row = (row == 0 || row == 3), corner_col = (col == 0 || col == 3);
  if (corner_row && corner_col) return 0.5;
  if (row == col) return 1.0;
  return 0.0;
}

}  // namespace detail

// Project a propagator block onto the computational subspace, rows and
// columns ordered (00, 01, 10, 11).  Accepts either a full square propagator
// or a dim x 4 block whose columns are already the computational inputs in
// that order.
inline Eigen::Matrix4cd extract_gate(const Eigen::MatrixXcd& u, const CoupledSystem& sys) {
  const std::array<int, 4> map = detail::computational_indices(sys);
  if (u.rows() != sys.dim()) throw ConfigError("propagator does not match system dimension");
  Eigen::Matrix4cd g;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (u.cols() == sys.dim()) {
        g(i, j) = u(map[i], map[j]);
      } else if (u.cols() == 4) {
        g(i, j) = u(map[i], j);
      } else {
        throw ConfigError("propagator block must have dim or 4 columns");
      }
    }
  }
  return g;
}

inline Eigen::Matrix4cd extract_gate(const Propagator& prop, const CoupledSystem& sys) {
  return extract_gate(prop.u, sys);
}

struct PhaseFix {
  Eigen::Matrix4cd u_fixed;
  double zeta = 0.0;  // in [0, 2pi)
  double beta = 0.0;  // residual corner phase, O(epsilon), in (-pi, pi]
  bool corner_anchored = false;  // true when the 00/11 diagonals vanished and
                                 // the corners were anchored at phase -pi/2
  // The applied dressing, u_fixed = row_phases.asDiagonal() * u_sim *
  // col_phases.asDiagonal(); needed to carry the same Z rotations over to
  // other representations of the gate (e.g. the process matrix).
  Eigen::Vector4cd row_phases = Eigen::Vector4cd::Ones();
  Eigen::Vector4cd col_phases = Eigen::Vector4cd::Ones();
};

// Strip the Z (x) Z pre/post rotation freedom and the global phase.  The five
// gauge angles are solved in closed form: the 00 and 11 diagonal phases are
// zeroed, the single-excitation diagonals land on zeta/2 automatically (their
// combination zeta = phi_01 + phi_10 - phi_00 - phi_11 is gauge invariant),
// and the leftover one-parameter freedom is spent symmetrizing the two corner
// phases, whose common deviation from -pi/2 is reported as beta/2.
inline PhaseFix fix_phases(const Eigen::Matrix4cd& u_sim) {
  const double mid_min = std::min(std::abs(u_sim(1, 1)), std::abs(u_sim(2, 2)));
  if (mid_min < 1e-6) {
    throw Error("cannot fix phases: a single-excitation diagonal element vanishes");
  }
  const double phi01 = std::arg(u_sim(1, 1)), phi10 = std::arg(u_sim(2, 2));
  const double diag_min = std::min(std::abs(u_sim(0, 0)), std::abs(u_sim(3, 3)));
  const double corner_max = std::max(std::abs(u_sim(0, 3)), std::abs(u_sim(3, 0)));

  PhaseFix fix;
  double g = 0.0;      // global phase added to every element
  double asum = 0.0;   // a1 + a2: qubit-A angle, pre plus post
  double bsum = 0.0;   // b1 + b2
  double adiff = 0.0;  // a1 - a2: only visible on the corner elements
  double bdiff = 0.0;

  if (diag_min > 1e-6) {
    const double phi00 = std::arg(u_sim(0, 0)), phi11 = std::arg(u_sim(3, 3));
    g = -0.5 * (phi00 + phi11);
    asum = 0.5 * (phi00 - phi11 + phi01 - phi10);
    bsum = 0.5 * (phi00 - phi11 - phi01 + phi10);
    fix.zeta = wrap_angle(phi01 + phi10 - phi00 - phi11);
    if (corner_max > 1e-6) {
      const double c03 = std::arg(u_sim(0, 3)), c30 = std::arg(u_sim(3, 0));
      adiff = bdiff = 0.5 * (c03 - c30);  // their sum must absorb the full difference
      fix.beta = std::remainder(c03 + c30 + 2.0 * g + pi, two_pi);
    }
  } else if (corner_max > 1e-6) {
    // Mixing angle near pi: the 00/11 diagonals carry no usable phase, so
    // anchor both corners at -pi/2 instead and absorb beta.
    fix.corner_anchored = true;
    const double c03 = std::arg(u_sim(0, 3)), c30 = std::arg(u_sim(3, 0));
    g = -0.5 * (pi + c03 + c30);
    adiff = bdiff = 0.5 * (c03 - c30);
    asum = 0.5 * (phi01 - phi10);
    bsum = -asum;
    fix.zeta = wrap_angle(phi01 + phi10 - c03 - c30 - pi);
  } else {
    throw Error("cannot fix phases: both 00/11 diagonals and corners vanish");
  }

  const double a1 = 0.5 * (asum + adiff), a2 = 0.5 * (asum - adiff);
  const double b1 = 0.5 * (bsum + bdiff), b2 = 0.5 * (bsum - bdiff);
  Eigen::Vector4cd row, col;
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) {
      row(2 * k + l) = std::polar(1.0, (k - 0.5) * a1 + (l - 0.5) * b1 + g);
      col(2 * k + l) = std::polar(1.0, (k - 0.5) * a2 + (l - 0.5) * b2);
    }
  }
  fix.u_fixed = row.asDiagonal() * u_sim * col.asDiagonal();
  // The diagonal combination defining zeta is only known modulo 2pi, and
  // halving it to place the single-excitation phases can pick the opposite
  // branch.  Opposite-sign pi Z rotations on the two qubits flip exactly
  // those two phases, leaving the 00/11 block untouched.
  if (std::abs(std::remainder(std::arg(fix.u_fixed(1, 1)) - 0.5 * fix.zeta, two_pi)) >
      0.5 * pi) {
    const Eigen::Vector4cd flip(1.0, iu, -iu, 1.0);
    row = row.cwiseProduct(flip);
    col = col.cwiseProduct(flip);
    fix.u_fixed = flip.asDiagonal() * fix.u_fixed * flip.asDiagonal();
  }
  // The corner pair suffers the same ambiguity, as its common phase is also a
  // halved sum of wrapped angles.  A pi Z rotation on one qubit applied
  // before the gate and undone after it flips exactly the two corners.
  if (std::abs(fix.u_fixed(0, 3)) > 1e-6 &&
      std::abs(std::remainder(std::arg(fix.u_fixed(0, 3)) + 0.5 * pi - 0.5 * fix.beta,
                              two_pi)) > 0.5 * pi) {
    const Eigen::Vector4cd rflip(-iu, -iu, iu, iu), cflip(iu, iu, -iu, -iu);
    row = row.cwiseProduct(rflip);
    col = col.cwiseProduct(cflip);
    fix.u_fixed = rflip.asDiagonal() * fix.u_fixed * cflip.asDiagonal();
  }
  fix.row_phases = row;
  fix.col_phases = col;
  return fix;
}

// Mixing angle from the population split of the 00/11 block; folded into
// [0, pi] since populations cannot tell theta from 2pi - theta.
inline double extracted_theta(const Eigen::Matrix4cd& u_sim) {
  const double corner = std::sqrt(0.5 * (std::norm(u_sim(0, 3)) + std::norm(u_sim(3, 0))));
  const double diag = std::sqrt(0.5 * (std::norm(u_sim(0, 0)) + std::norm(u_sim(3, 3))));
  return 2.0 * std::atan2(corner, diag);
}

// Average gate fidelity of a (generally nonunitary) projected operator
// against the half-mixing gate at the given controlled phase:
// F = [Tr(u^dag u) + |Tr(u^dag target)|^2] / 20.
inline double coherent_fidelity(const Eigen::Matrix4cd& u_fixed, double target_zeta) {
  const Eigen::Matrix4cd target = build_family({0.5 * pi, target_zeta});
  const double norm2 = u_fixed.squaredNorm();
  const double overlap = std::abs((u_fixed.adjoint() * target).trace());
  return (norm2 + overlap * overlap) / 20.0;
}

struct ErrorBudget {
  double e_comp = 0.0;   // population leaked to the wrong computational state
  double p_leak = 0.0;   // population leaked out of the computational subspace
  double e_theta = 0.0;  // quadratic error in the 00/11 mixing angle
  // Population-error table: epsilons(j, i) is the deviation of the i -> j
  // transition probability from its ideal value (0, 1/2, or 1).  Columns are
  // the four computational inputs (00, 01, 10, 11); rows cover either just
  // those four states or, when built from a full propagator block, every
  // dressed state, so leakage destinations are resolved individually.
  Eigen::MatrixXd epsilons;
};

namespace detail {

inline ErrorBudget budget_from_table(const Eigen::MatrixXd& populations) {
  ErrorBudget b;
  const Eigen::Index nrow = populations.rows();
  b.epsilons.resize(nrow, 4);
  for (Eigen::Index j = 0; j < nrow; ++j) {
    for (int i = 0; i < 4; ++i) {
      const double ideal = j < 4 ? ideal_population(static_cast<int>(j), i) : 0.0;
      b.epsilons(j, i) =
          ideal > 0.0 ? ideal - populations(j, i) : populations(j, i);
    }
  }
  const auto eps = [&b](int j, int i) { return b.epsilons(j, i); };
  b.e_comp = (eps(1, 0) + eps(2, 0) + eps(1, 3) + eps(2, 3) + eps(0, 1) + eps(3, 1) +
              eps(2, 1) + eps(0, 2) + eps(3, 2) + eps(1, 2)) /
             5.0;
  b.p_leak = 1.0 - 0.25 * populations.topRows(4).sum();
  const double d0 = eps(0, 0) - eps(3, 0), d1 = eps(0, 3) - eps(3, 3);
  b.e_theta = (d0 * d0 + d1 * d1) / 20.0;
  return b;
}

}  // namespace detail

inline ErrorBudget error_budget(const Eigen::Matrix4cd& u_sim) {
  return detail::budget_from_table(u_sim.cwiseAbs2());
}

// Budget with the full leakage table: rows run over every dressed state, in
// flat index order, so the unitarity sum rules can be checked directly.
inline ErrorBudget error_budget(const Eigen::MatrixXcd& u, const CoupledSystem& sys) {
  const std::array<int, 4> map = detail::computational_indices(sys);
  if (u.rows() != sys.dim()) throw ConfigError("propagator does not match system dimension");
  Eigen::MatrixXd populations(sys.dim(), 4);
  for (int i = 0; i < 4; ++i) {
    const Eigen::Index col = u.cols() == 4 ? i : map[i];
    populations.col(i) = u.col(col).cwiseAbs2();
  }
  // Reorder rows so the computational states come first, in gate order.
  Eigen::MatrixXd ordered(sys.dim(), 4);
  Eigen::Index next = 4;
  std::array<bool, 4> placed{};
  for (int flat = 0; flat < sys.dim(); ++flat) {
    int slot = -1;
    for (int i = 0; i < 4; ++i) {
      if (map[i] == flat) slot = i;
    }
    ordered.row(slot >= 0 ? slot : next++) = populations.row(flat);
    if (slot >= 0) placed[slot] = true;
  }
  for (bool p : placed) {
    if (!p) throw ConfigError("computational states missing from system");
  }
  return detail::budget_from_table(ordered);
}

// Concurrence of the output state for input |00>, using only the
// computational-subspace component (leakage shows up as loss of norm).
inline double concurrence_00(const Eigen::Matrix4cd& u_sim) {
  const Eigen::Vector4cd psi = u_sim.col(0);
  return std::abs(2.0 * (psi(1) * psi(2) - psi(0) * psi(3)));
}

struct GateReport {
  Eigen::Matrix4cd u_sim;
  Eigen::Matrix4cd u_fixed;
  double zeta = 0.0;
  double theta_eff = 0.0;
  double beta = 0.0;
  bool corner_anchored = false;
  double fidelity = 0.0;
  double e_comp = 0.0;
  double p_leak = 0.0;
  double e_theta = 0.0;
  double concurrence = 0.0;
  Eigen::MatrixXd epsilons;
};

// Full characterization of a simulated propagator.  The fidelity target is
// the half-mixing gate at the zeta this very propagator realized; the
// controlled phase is a free parameter of the scheme, so each simulation is
// scored against its own best member of the family.
inline GateReport analyze_gate(const Eigen::MatrixXcd& u, const CoupledSystem& sys) {
  GateReport r;
  r.u_sim = extract_gate(u, sys);
  const PhaseFix fix = fix_phases(r.u_sim);
  r.u_fixed = fix.u_fixed;
  r.zeta = fix.zeta;
  r.beta = fix.beta;
  r.corner_anchored = fix.corner_anchored;
  r.theta_eff = extracted_theta(r.u_sim);
  r.fidelity = coherent_fidelity(r.u_fixed, r.zeta);
  const ErrorBudget budget = error_budget(u, sys);
  r.e_comp = budget.e_comp;
  r.p_leak = budget.p_leak;
  r.e_theta = budget.e_theta;
  r.epsilons = budget.epsilons;
  r.concurrence = concurrence_00(r.u_sim);
  return r;
}

inline GateReport analyze_gate(const Propagator& prop, const CoupledSystem& sys) {
  return analyze_gate(prop.u, sys);
}

}  // namespace fluxgate
