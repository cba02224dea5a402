#pragma once

// Single fluxonium: H = 4 E_C n^2 + E_L phi^2 / 2 - E_J cos(phi - phi_ext),
// diagonalized in the harmonic-oscillator basis of the linear part (plasma
// frequency sqrt(8 E_C E_L)). All circuit energies are cyclic (E/h, GHz);
// phi_ext is in radians, with phi_ext = pi the flux sweet spot.

#include <Eigen/Dense>

#include "fluxgate/util.hpp"

namespace fluxgate {

struct CircuitParams {
  double e_c_ghz = 1.0;
  double e_l_ghz = 1.0;
  double e_j_ghz = 1.0;
  double phi_ext = pi;
};

struct FluxoniumSpectrum {
  CircuitParams params;
  int basis_size = 0;              // oscillator states used for the solve
  Eigen::VectorXd energies_ghz;    // lowest n_keep eigenenergies, ascending
  Eigen::MatrixXcd n_elems;        // <k| n |l>, Hermitian, purely imaginary
  Eigen::MatrixXd phi_elems;       // <k| phi |l>, real symmetric

  int n_keep() const { return static_cast<int>(energies_ghz.size()); }
  // Cyclic transition frequency E_l - E_k in GHz (positive for l above k).
  double transition_ghz(int k, int l) const { return energies_ghz(l) - energies_ghz(k); }
};

namespace detail {

// phi = phi_zpf (a + a^dag) in the oscillator basis: real symmetric tridiagonal.
inline Eigen::MatrixXd phi_op(int n, double phi_zpf) {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    phi(i, i + 1) = phi(i + 1, i) = phi_zpf * std::sqrt(double(i + 1));
  }
  return phi;
}

// n = i n_zpf (a^dag - a): the real antisymmetric factor (a^dag - a).
inline Eigen::MatrixXd n_op_imag_part(int n) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    const double s = std::sqrt(double(i + 1));
    m(i + 1, i) = s;
    m(i, i + 1) = -s;
  }
  return m;
}

struct EigenSolveResult {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;  // columns, phase-fixed
};

// Dense solve in an oscillator basis of the given size. Everything is real
// symmetric here (time-reversal: H is real in the phi representation), so the
// eigenvectors come out real; the sign is fixed by making the largest-magnitude
// component positive.
inline EigenSolveResult solve_in_basis(const CircuitParams& p, int basis_size, int n_keep) {
  const double phi_zpf = std::pow(2.0 * p.e_c_ghz / p.e_l_ghz, 0.25);
  const double omega_osc = std::sqrt(8.0 * p.e_c_ghz * p.e_l_ghz);

  Eigen::MatrixXd phi = phi_op(basis_size, phi_zpf);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> phi_eig(phi);
  if (phi_eig.info() != Eigen::Success) throw Error("phase-operator eigensolve failed");

  // cos(phi - phi_ext) as an exact function of the Hermitian operator phi.
  Eigen::VectorXd cos_d = (phi_eig.eigenvalues().array() - p.phi_ext).cos();
  Eigen::MatrixXd cos_m =
      phi_eig.eigenvectors() * cos_d.asDiagonal() * phi_eig.eigenvectors().transpose();

  Eigen::MatrixXd h = -p.e_j_ghz * cos_m;
  for (int i = 0; i < basis_size; ++i) h(i, i) += omega_osc * (i + 0.5);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw Error("fluxonium eigensolve failed");

  EigenSolveResult r;
  r.energies = eig.eigenvalues().head(n_keep);
  r.vectors = eig.eigenvectors().leftCols(n_keep);
  for (int k = 0; k < n_keep; ++k) {
    int imax = 0;
    r.vectors.col(k).cwiseAbs().maxCoeff(&imax);
    if (r.vectors(imax, k) < 0) r.vectors.col(k) = -r.vectors.col(k);
  }
  return r;
}

}  // namespace detail

// Diagonalize and keep the lowest n_keep levels. The solve is repeated at twice
// the basis size and must reproduce the kept energies to 1 kHz; a truncation
// that fails this check is an error, not a warning.
inline FluxoniumSpectrum diagonalize(const CircuitParams& p, int basis_size = 120,
                                     int n_keep = 5) {
  if (basis_size < 2 * n_keep) throw TruncationError("basis_size too small for n_keep");
  if (p.e_c_ghz <= 0 || p.e_l_ghz <= 0 || p.e_j_ghz < 0) {
    throw ConfigError("circuit energies must be positive (E_J may be zero)");
  }

  detail::EigenSolveResult a = detail::solve_in_basis(p, basis_size, n_keep);
  detail::EigenSolveResult b = detail::solve_in_basis(p, 2 * basis_size, n_keep);
  const double drift = (a.energies - b.energies).cwiseAbs().maxCoeff();
  if (drift > 1e-6) {
    throw TruncationError("fluxonium basis_size=" + std::to_string(basis_size) +
                          " not converged: doubling moves energies by " +
                          std::to_string(drift * 1e6) + " kHz");
  }

  const double phi_zpf = std::pow(2.0 * p.e_c_ghz / p.e_l_ghz, 0.25);
  const double n_zpf = 0.5 / phi_zpf;

  FluxoniumSpectrum s;
  s.params = p;
  s.basis_size = basis_size;
  s.energies_ghz = a.energies;
  Eigen::MatrixXd phi = detail::phi_op(basis_size, phi_zpf);
  Eigen::MatrixXd n_im = n_zpf * detail::n_op_imag_part(basis_size);
  s.phi_elems = a.vectors.transpose() * phi * a.vectors;
  s.n_elems = iu * (a.vectors.transpose() * n_im * a.vectors);
  return s;
}

// Relative error of the identity |n_01| = omega_01 |phi_01| / (8 E_C), an exact
// operator relation that truncation error would break.
inline double charge_phase_consistency(const FluxoniumSpectrum& s) {
  const double lhs = std::abs(s.n_elems(0, 1));
  const double rhs =
      s.transition_ghz(0, 1) * std::abs(s.phi_elems(0, 1)) / (8.0 * s.params.e_c_ghz);
  return std::abs(lhs - rhs) / std::abs(rhs);
}

}  // namespace fluxgate
