#pragma once

// Process tomography of the computational-subspace channel.  The dissipative
// propagator, restricted to density matrices on the four computational
// states, is converted to the 16x16 chi matrix in the two-qubit Pauli basis;
// gate fidelity then follows from the overlap with the ideal gate's chi plus
// the trace deficit caused by leakage:
//
//   F = [4 Tr(chi_real^dag chi_ideal) + Tr(chi_real)] / 5.

#include <array>
#include <string>

#include <Eigen/Dense>

#include "fluxgate/coupled.hpp"
#include "fluxgate/evolve.hpp"
#include "fluxgate/gateext.hpp"
#include "fluxgate/util.hpp"

namespace fluxgate {

using Superop4 = Eigen::Matrix<cplx, 16, 16>;

// Two-qubit Pauli basis in the fixed order II, IX, IY, IZ, XI, ..., ZZ
// (qubit A major); all chi matrices are expressed in this order.
inline const std::array<Eigen::Matrix4cd, 16>& pauli_basis() {
  static const std::array<Eigen::Matrix4cd, 16> basis = [] {
    std::array<Eigen::Matrix2cd, 4> p;
    p[0] = Eigen::Matrix2cd::Identity();
    p[1] << 0.0, 1.0, 1.0, 0.0;
    p[2] << 0.0, -iu, iu, 0.0;
    p[3] << 1.0, 0.0, 0.0, -1.0;
    std::array<Eigen::Matrix4cd, 16> b;
    for (int a = 0; a < 4; ++a) {
      for (int c = 0; c < 4; ++c) {
        Eigen::Matrix4cd m;
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) m.block<2, 2>(2 * i, 2 * j) = p[a](i, j) * p[c];
        b[4 * a + c] = m;
      }
    }
    return b;
  }();
  return basis;
}

inline std::string pauli_label(int m) {
  static const char* names = "IXYZ";
  return std::string(1, names[(m / 4) % 4]) + names[m % 4];
}

struct ChiMatrix {
  Eigen::Matrix<cplx, 16, 16> matrix;

  double trace() const { return matrix.trace().real(); }
  double hermiticity_defect() const { return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<cplx, 16, 16>> es(matrix,
                                                                  Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
};

// Chi representation of a channel given as a superoperator on column-major
// vectorized 4x4 density matrices: decompose s = sum_mn chi_mn conj(P_n) (x)
// P_m against the orthogonal operator basis.
inline ChiMatrix channel_to_chi(const Superop4& s) {
  const auto& basis = pauli_basis();
  ChiMatrix chi;
  for (int m = 0; m < 16; ++m) {
    for (int n = 0; n < 16; ++n) {
      Superop4 mn;
      const Eigen::Matrix4cd pn_conj = basis[n].conjugate();
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) mn.block<4, 4>(4 * i, 4 * j) = pn_conj(i, j) * basis[m];
      chi.matrix(m, n) = mn.conjugate().cwiseProduct(s).sum() / 16.0;
    }
  }
  return chi;
}

// Rank-1 chi of a unitary (or near-unitary projected) gate.
inline ChiMatrix chi_from_unitary(const Eigen::Matrix4cd& v) {
  const auto& basis = pauli_basis();
  Eigen::Matrix<cplx, 16, 1> c;
  for (int m = 0; m < 16; ++m) c(m) = (basis[m] * v).trace() / 4.0;
  ChiMatrix chi;
  chi.matrix = c * c.adjoint();
  return chi;
}

// Restrict a dissipative propagator to the computational density-matrix
// space, with rows and columns in gate order (00, 01, 10, 11).  The
// propagator must have been computed either for all input levels or for
// exactly the computational ones in gate order.
inline Superop4 project_superop(const LindbladPropagator& lp, const CoupledSystem& sys) {
  const std::array<int, 4> map = detail::computational_indices(sys);
  const int dim = lp.out_dim();
  if (dim != sys.dim()) throw ConfigError("superoperator does not match system dimension");

  const int nin = static_cast<int>(lp.input_levels.size());
  std::array<int, 4> in_col{};
  if (nin == dim) {
    for (int p = 0; p < 4; ++p) in_col[p] = map[p];
  } else if (nin == 4) {
    for (int p = 0; p < 4; ++p) {
      if (lp.input_levels[p] != map[p]) {
        throw ConfigError("superoperator input levels are not the computational states");
      }
      in_col[p] = p;
    }
  } else {
    throw ConfigError("superoperator input space must be full or computational");
  }

  Superop4 s;
  for (int gi = 0; gi < 4; ++gi)
    for (int gj = 0; gj < 4; ++gj)
      for (int p = 0; p < 4; ++p)
        for (int q = 0; q < 4; ++q)
          s(gi + 4 * gj, p + 4 * q) = lp.s(map[gi] + dim * map[gj], in_col[p] + nin * in_col[q]);
  return s;
}

// Ideal gate in the raw simulation frame: the half-mixing target at the
// extracted zeta, dressed by the inverse of the Z rotations that phase-fixing
// applied, so it lives in the same gauge as the unprojected channel.
inline Eigen::Matrix4cd ideal_in_sim_frame(const PhaseFix& fix) {
  return fix.row_phases.conjugate().asDiagonal() * build_family({0.5 * pi, fix.zeta}) *
         fix.col_phases.conjugate().asDiagonal();
}

// Process-matrix overlap Tr(chi_real^dag chi_ideal).
inline double chi_overlap(const ChiMatrix& chi_real, const ChiMatrix& chi_ideal) {
  return (chi_real.matrix.adjoint() * chi_ideal.matrix).trace().real();
}

// Average gate fidelity of the channel against the ideal unitary; reduces to
// the coherent formula when the channel is a closed-system projection.
inline double process_fidelity(const ChiMatrix& chi_real, const ChiMatrix& chi_ideal) {
  return (4.0 * chi_overlap(chi_real, chi_ideal) + chi_real.trace()) / 5.0;
}

}  // namespace fluxgate
