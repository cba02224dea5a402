#pragma once

// Capacitively coupled pair: H = H_A x 1 + 1 x H_B + J_C n_A x n_B in the
// product of the kept single-qubit eigenbases. Dressed eigenstates are labeled
// |~kl> by maximum overlap with their bare ancestor |kl>, stored in label order
// (index k * n_b + l), with phases fixed so the ancestor amplitude is real and
// positive.

#include <Eigen/Dense>
#include <iostream>
#include <unsupported/Eigen/KroneckerProduct>

#include "fluxgate/circuit.hpp"
#include "fluxgate/util.hpp"

namespace fluxgate {

struct CoupledParams {
  double j_c_ghz = 0.2;
  double eta_a = 1.0;  // relative drive weight on qubit A's charge operator
  double eta_b = 1.0;
};

class CoupledSystem {
 public:
  FluxoniumSpectrum qubit_a, qubit_b;
  CoupledParams params;
  Eigen::VectorXd energies_ghz;   // dressed energies in label order
  Eigen::MatrixXcd vectors;       // column idx(k,l) = dressed |~kl> in bare basis
  Eigen::VectorXd ancestor_overlap;  // |<kl|~kl>|^2 per dressed state
  Eigen::MatrixXcd n_a_dressed;   // <~k'l'| n_A x 1 |~kl>
  Eigen::MatrixXcd n_b_dressed;

  int levels_a() const { return qubit_a.n_keep(); }
  int levels_b() const { return qubit_b.n_keep(); }
  int dim() const { return levels_a() * levels_b(); }
  int idx(int k, int l) const { return k * levels_b() + l; }

  double energy_ghz(int k, int l) const { return energies_ghz(idx(k, l)); }
  // Cyclic frequency of the dressed |~kl> -> |~k'l'> transition.
  double transition_ghz(int k, int l, int kp, int lp) const {
    return energy_ghz(kp, lp) - energy_ghz(k, l);
  }
  // Half the 00 -> 11 dressed splitting: the two-photon resonance reference.
  double omega_bar_ghz() const { return 0.5 * transition_ghz(0, 0, 1, 1); }
  // Static ZZ shift E_00 + E_11 - E_01 - E_10 (GHz); the idle entangling rate.
  double static_zz_ghz() const {
    return energy_ghz(0, 0) + energy_ghz(1, 1) - energy_ghz(0, 1) - energy_ghz(1, 0);
  }
  // eta-weighted charge operator the drive couples to, in the dressed basis.
  Eigen::MatrixXcd drive_op() const {
    return params.eta_a * n_a_dressed + params.eta_b * n_b_dressed;
  }
};

inline CoupledSystem build_coupled(const FluxoniumSpectrum& qa, const FluxoniumSpectrum& qb,
                                   const CoupledParams& cp) {
  const int na = qa.n_keep(), nb = qb.n_keep(), dim = na * nb;

  // Both single-qubit charge operators are purely imaginary (i * real
  // antisymmetric), so J_C n_A x n_B and the whole coupled Hamiltonian are real
  // symmetric; solve in real arithmetic.
  Eigen::MatrixXd na_im = qa.n_elems.imag();  // n_A = i * na_im
  Eigen::MatrixXd nb_im = qb.n_elems.imag();
  Eigen::MatrixXd h = -cp.j_c_ghz * Eigen::kroneckerProduct(na_im, nb_im);
  for (int k = 0; k < na; ++k)
    for (int l = 0; l < nb; ++l) h(k * nb + l, k * nb + l) += qa.energies_ghz(k) + qb.energies_ghz(l);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  if (eig.info() != Eigen::Success) throw Error("coupled eigensolve failed");

  // Global greedy assignment on descending ancestor weight |<bare|dressed>|^2.
  struct Cand {
    double w;
    int state, bare;
  };
  std::vector<Cand> cands;
  cands.reserve(dim * dim);
  for (int d = 0; d < dim; ++d)
    for (int b = 0; b < dim; ++b) {
      double a = eig.eigenvectors()(b, d);
      cands.push_back({a * a, d, b});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& x, const Cand& y) {
    if (x.w != y.w) return x.w > y.w;
    if (x.state != y.state) return x.state < y.state;
    return x.bare < y.bare;
  });
  std::vector<int> state_of_bare(dim, -1), bare_of_state(dim, -1);
  int assigned = 0;
  for (const Cand& c : cands) {
    if (assigned == dim) break;
    if (state_of_bare[c.bare] >= 0 || bare_of_state[c.state] >= 0) continue;
    state_of_bare[c.bare] = c.state;
    bare_of_state[c.state] = c.bare;
    ++assigned;
  }
  if (assigned != dim) throw Error("dressed-state labeling is not a bijection");

  CoupledSystem sys;
  sys.qubit_a = qa;
  sys.qubit_b = qb;
  sys.params = cp;
  sys.energies_ghz.resize(dim);
  sys.vectors.resize(dim, dim);
  sys.ancestor_overlap.resize(dim);
  for (int b = 0; b < dim; ++b) {
    const int d = state_of_bare[b];
    Eigen::VectorXd v = eig.eigenvectors().col(d);
    const double amp = v(b);
    sys.ancestor_overlap(b) = amp * amp;
    if (sys.ancestor_overlap(b) < 0.5) {
      std::cerr << "fluxgate: warning: dressed state " << b
                << " keeps only ancestor weight " << sys.ancestor_overlap(b) << "\n";
    }
    if (amp < 0) v = -v;  // real-positive overlap with the bare ancestor
    sys.energies_ghz(b) = eig.eigenvalues()(d);
    sys.vectors.col(b) = v.cast<cplx>();
  }

  Eigen::MatrixXcd n_a_full =
      Eigen::kroneckerProduct(qa.n_elems, Eigen::MatrixXcd::Identity(nb, nb)).eval();
  Eigen::MatrixXcd n_b_full =
      Eigen::kroneckerProduct(Eigen::MatrixXcd::Identity(na, na), qb.n_elems).eval();
  sys.n_a_dressed = sys.vectors.adjoint() * n_a_full * sys.vectors;
  sys.n_b_dressed = sys.vectors.adjoint() * n_b_full * sys.vectors;
  return sys;
}

}  // namespace fluxgate
