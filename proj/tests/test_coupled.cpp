#include "fluxgate/coupled.hpp"

#include <gtest/gtest.h>

using namespace fluxgate;

namespace {

const FluxoniumSpectrum& spec_a() {
  static FluxoniumSpectrum s = diagonalize({1.0, 1.5, 3.8, pi});
  return s;
}
const FluxoniumSpectrum& spec_b() {
  static FluxoniumSpectrum s = diagonalize({1.0, 0.9, 3.0, pi});
  return s;
}

// Bare fluxonium levels at the sweet spot alternate parity with level index,
// so a product state |kl> has total parity (k + l) mod 2.
int total_parity(const CoupledSystem& sys, int bare_index) {
  return (bare_index / sys.levels_b() + bare_index % sys.levels_b()) % 2;
}

}  // namespace

TEST(Coupled, ZeroCouplingIsExactProduct) {
  CoupledSystem sys = build_coupled(spec_a(), spec_b(), {0.0, 1.0, 1.0});
  for (int k = 0; k < 5; ++k)
    for (int l = 0; l < 5; ++l) {
      EXPECT_NEAR(sys.energy_ghz(k, l),
                  spec_a().energies_ghz(k) + spec_b().energies_ghz(l), 1e-10);
    }
  EXPECT_LT((sys.vectors - Eigen::MatrixXcd::Identity(25, 25)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_GT(sys.ancestor_overlap.minCoeff(), 1.0 - 1e-12);
}

TEST(Coupled, StaticZZInReportedBand) {
  CoupledSystem sys = build_coupled(spec_a(), spec_b(), {0.2, 1.0, 1.0});
  const double zz_mhz = std::abs(sys.static_zz_ghz()) * 1e3;
  EXPECT_GT(zz_mhz, 0.3);
  EXPECT_LT(zz_mhz, 1.0);
}

TEST(Coupled, TwoPhotonReferenceNearBareMean) {
  CoupledSystem sys = build_coupled(spec_a(), spec_b(), {0.3, 1.0, 1.0});
  const double bare_mean = 0.5 * (spec_a().transition_ghz(0, 1) + spec_b().transition_ghz(0, 1));
  EXPECT_NEAR(sys.omega_bar_ghz(), bare_mean, 5e-3);
}

// The coupling n_A x n_B flips both single-qubit parities, so it preserves the
// total parity: dressed states mix only bare states of one parity class, and
// the dressed charge operators connect only opposite classes.
TEST(Coupled, ParityBlockStructure) {
  CoupledSystem sys = build_coupled(spec_a(), spec_b(), {0.3, 1.0, 1.0});
  for (int d = 0; d < 25; ++d)
    for (int b = 0; b < 25; ++b) {
      if (total_parity(sys, b) != total_parity(sys, d)) {
        EXPECT_LT(std::abs(sys.vectors(b, d)), 1e-10);
      }
    }
  Eigen::MatrixXcd drive = sys.drive_op();
  for (int d1 = 0; d1 < 25; ++d1)
    for (int d2 = 0; d2 < 25; ++d2) {
      if (total_parity(sys, d1) == total_parity(sys, d2)) {
        EXPECT_LT(std::abs(drive(d1, d2)), 1e-10);
      }
    }
}

// High-lying pairs may hybridize strongly near accidental degeneracies, but the
// computational states must stay close to bare, and every label must keep
// majority ancestor weight at the couplings studied here.
TEST(Coupled, AncestorOverlapsDominant) {
  for (double j : {0.1, 0.2, 0.3}) {
    CoupledSystem sys = build_coupled(spec_a(), spec_b(), {j, 1.0, 1.0});
    EXPECT_GT(sys.ancestor_overlap.minCoeff(), 0.5) << "J_C = " << j;
    for (int k : {0, 1})
      for (int l : {0, 1}) {
        EXPECT_GT(sys.ancestor_overlap(sys.idx(k, l)), 0.95) << "J_C = " << j;
      }
  }
}

// Second-order perturbation theory in J_C is an independent oracle for the
// dressed ground-state shift at small coupling.
TEST(Coupled, SmallCouplingShiftMatchesPerturbation) {
  const double j = 0.005;
  CoupledSystem sys = build_coupled(spec_a(), spec_b(), {j, 1.0, 1.0});
  Eigen::MatrixXd na_im = spec_a().n_elems.imag();
  Eigen::MatrixXd nb_im = spec_b().n_elems.imag();
  Eigen::MatrixXd v = -j * Eigen::kroneckerProduct(na_im, nb_im);
  double shift_pt = 0.0;
  for (int k = 0; k < 5; ++k)
    for (int l = 0; l < 5; ++l) {
      if (k == 0 && l == 0) continue;
      const double e_bare = spec_a().energies_ghz(k) + spec_b().energies_ghz(l);
      const double e_00 = spec_a().energies_ghz(0) + spec_b().energies_ghz(0);
      const double vkl = v(k * 5 + l, 0);
      shift_pt += vkl * vkl / (e_00 - e_bare);
    }
  const double e_00_bare = spec_a().energies_ghz(0) + spec_b().energies_ghz(0);
  const double shift_exact = sys.energy_ghz(0, 0) - e_00_bare;
  EXPECT_NEAR(shift_exact, shift_pt, 0.05 * std::abs(shift_pt));
}

TEST(Coupled, DressedChargeOperatorsHermitian) {
  CoupledSystem sys = build_coupled(spec_a(), spec_b(), {0.3, 1.0, 1.0});
  EXPECT_LT((sys.n_a_dressed - sys.n_a_dressed.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((sys.n_b_dressed - sys.n_b_dressed.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Coupled, Deterministic) {
  CoupledSystem s1 = build_coupled(spec_a(), spec_b(), {0.2, 1.0, 1.0});
  CoupledSystem s2 = build_coupled(spec_a(), spec_b(), {0.2, 1.0, 1.0});
  EXPECT_EQ((s1.energies_ghz - s2.energies_ghz).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((s1.vectors - s2.vectors).cwiseAbs().maxCoeff(), 0.0);
}
