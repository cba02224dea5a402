#include "fluxgate/circuit.hpp"

#include <gtest/gtest.h>

using namespace fluxgate;

namespace {

CircuitParams qubit_a() { return {1.0, 1.5, 3.8, pi}; }
CircuitParams qubit_b() { return {1.0, 0.9, 3.0, pi}; }

}  // namespace

// E_J = 0 leaves a pure oscillator: spacing sqrt(8 E_C E_L) and closed-form
// zero-point matrix elements. With E_C = 1, E_L = 2 the numbers are exact:
// spacing 4, |n_01| = (E_L / 32 E_C)^(1/4) = 0.5, phi_01 = (2 E_C / E_L)^(1/4) = 1.
TEST(Circuit, HarmonicLimit) {
  CircuitParams p{1.0, 2.0, 0.0, pi};
  FluxoniumSpectrum s = diagonalize(p, 120, 5);
  for (int k = 0; k + 1 < 5; ++k) {
    EXPECT_NEAR(s.transition_ghz(k, k + 1), 4.0, 1e-9);
  }
  EXPECT_NEAR(std::abs(s.n_elems(0, 1)), 0.5, 1e-9);
  EXPECT_NEAR(std::abs(s.phi_elems(0, 1)), 1.0, 1e-9);
  EXPECT_NEAR(std::abs(s.n_elems(0, 2)), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(s.n_elems(1, 2)), 0.5 * std::sqrt(2.0), 1e-9);
}

TEST(Circuit, ReferenceQubitASpectrum) {
  FluxoniumSpectrum s = diagonalize(qubit_a());
  EXPECT_NEAR(s.transition_ghz(0, 1), 1.152, 2e-3);
  EXPECT_NEAR(s.transition_ghz(1, 2), 3.280, 2e-3);
  EXPECT_NEAR(s.transition_ghz(2, 3), 3.253, 2e-3);
  EXPECT_NEAR(std::abs(s.n_elems(0, 1)), 0.249, 2e-3);
  EXPECT_NEAR(std::abs(s.n_elems(1, 2)), 0.608, 2e-3);
  EXPECT_NEAR(std::abs(s.n_elems(0, 3)), 0.260, 2e-3);
}

TEST(Circuit, ReferenceQubitBSpectrum) {
  FluxoniumSpectrum s = diagonalize(qubit_b());
  EXPECT_NEAR(s.transition_ghz(0, 1), 0.849, 2e-3);
  EXPECT_NEAR(s.transition_ghz(1, 2), 2.929, 2e-3);
  EXPECT_NEAR(s.transition_ghz(2, 3), 2.683, 2e-3);
  EXPECT_NEAR(std::abs(s.n_elems(0, 1)), 0.207, 2e-3);
  EXPECT_NEAR(std::abs(s.n_elems(1, 2)), 0.567, 2e-3);
  EXPECT_NEAR(std::abs(s.n_elems(0, 3)), 0.277, 2e-3);
}

// At the sweet spot the eigenstates have definite parity and the (odd) charge
// operator cannot connect same-parity pairs.
TEST(Circuit, SweetSpotSelectionRules) {
  for (const CircuitParams& p : {qubit_a(), qubit_b()}) {
    FluxoniumSpectrum s = diagonalize(p);
    EXPECT_LT(std::abs(s.n_elems(0, 2)), 1e-10);
    EXPECT_LT(std::abs(s.n_elems(1, 3)), 1e-10);
  }
}

TEST(Circuit, ChargePhaseIdentity) {
  EXPECT_LT(charge_phase_consistency(diagonalize(qubit_a())), 1e-6);
  EXPECT_LT(charge_phase_consistency(diagonalize(qubit_b())), 1e-6);
}

TEST(Circuit, BasicStructure) {
  FluxoniumSpectrum s = diagonalize(qubit_a());
  ASSERT_EQ(s.n_keep(), 5);
  for (int k = 0; k + 1 < 5; ++k) EXPECT_LT(s.energies_ghz(k), s.energies_ghz(k + 1));
  // n is Hermitian with vanishing diagonal (real eigenfunctions carry no current)
  for (int k = 0; k < 5; ++k) {
    EXPECT_LT(std::abs(s.n_elems(k, k)), 1e-12);
    for (int l = 0; l < 5; ++l) {
      EXPECT_LT(std::abs(s.n_elems(k, l) - std::conj(s.n_elems(l, k))), 1e-12);
      EXPECT_LT(std::abs(s.n_elems(k, l).real()), 1e-12);
    }
  }
  EXPECT_LT((s.phi_elems - s.phi_elems.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Circuit, Deterministic) {
  FluxoniumSpectrum s1 = diagonalize(qubit_b());
  FluxoniumSpectrum s2 = diagonalize(qubit_b());
  EXPECT_EQ((s1.energies_ghz - s2.energies_ghz).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((s1.n_elems - s2.n_elems).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Circuit, UnconvergedBasisThrows) {
  EXPECT_THROW(diagonalize(qubit_a(), 12, 5), TruncationError);
  EXPECT_THROW(diagonalize(qubit_a(), 6, 5), TruncationError);
}

TEST(Circuit, BadParametersThrow) {
  EXPECT_THROW(diagonalize({0.0, 1.0, 1.0, pi}), ConfigError);
  EXPECT_THROW(diagonalize({1.0, -1.0, 1.0, pi}), ConfigError);
}
