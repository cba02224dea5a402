#pragma once

// Time evolution of the driven pair in the dressed eigenbasis. The physics is
// lab-frame with every counter-rotating term kept; internally the integrator
// works on W(t) = exp(+i K omega_d t) U(t) with integer K_j = round(E_j /
// omega_d) per level. That substitution is exact (it is undone analytically at
// readout) and lowers the fastest integrand frequency from the full energy
// span to about twice the drive frequency.
//
// H(t) = diag(E) + 2 f(t) cos(omega_d t + gamma_d) * N, with E in rad/ns and N
// the eta-weighted dressed charge operator.
//
// Dissipation follows the standard Lindblad form with per-transition
// relaxation and dephasing operators built on dressed (default) or bare
// labels:
//   L1_01   = sqrt(1/T1_01)    sum_k |0k><1k|
//   Lphi_01 = sqrt(2/Tphi_01)  sum_k |0k><0k|
//   L1_12   = sqrt(1/T1_12)    sum_k |1k><2k|
//   Lphi_12 = sqrt(2/Tphi_12)  sum_k |2k><2k|
// (mirrored on the second qubit), with the sum over all retained levels k.

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "fluxgate/coupled.hpp"
#include "fluxgate/drive.hpp"
#include "fluxgate/ode.hpp"
#include "fluxgate/util.hpp"

namespace fluxgate {

struct EvolveOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  bool harmonic_frame = true;  // disable to integrate in the plain frame (slow; cross-checks)
  long max_steps = 400000000;

  OdeOptions ode() const {
    OdeOptions o;
    o.rtol = rtol;
    o.atol = atol;
    o.max_steps = max_steps;
    return o;
  }
  // Conservation thresholds scale with the requested tolerance but never relax
  // the library-wide floor of 1e-8 at default settings.
  double defect_budget() const { return std::max(1e-8, 200.0 * rtol); }
};

struct DrivenSystem {
  Eigen::VectorXd energies_radns;  // diagonal of the static Hamiltonian
  Eigen::MatrixXcd coupling;       // Hermitian operator the scalar drive multiplies

  int dim() const { return static_cast<int>(energies_radns.size()); }
};

inline DrivenSystem driven_system(const CoupledSystem& sys) {
  return {two_pi * sys.energies_ghz, sys.drive_op()};
}

namespace detail {

// Integer multiples of omega_d assigned per level; K = 0 reduces to the plain frame.
struct HarmonicFrame {
  Eigen::VectorXd k_omega;    // K_j * omega_d, rad/ns
  Eigen::VectorXd residual;   // E_j - K_j omega_d

  static HarmonicFrame make(const Eigen::VectorXd& energies, double omega_d, bool enabled) {
    HarmonicFrame f;
    const int n = static_cast<int>(energies.size());
    f.k_omega.setZero(n);
    f.residual = energies;
    if (enabled && omega_d > 0) {
      for (int j = 0; j < n; ++j) {
        f.k_omega(j) = std::round(energies(j) / omega_d) * omega_d;
        f.residual(j) = energies(j) - f.k_omega(j);
      }
    }
    return f;
  }

  void phases(double t, Eigen::VectorXcd& u) const {
    const int n = static_cast<int>(k_omega.size());
    u.resize(n);
    for (int j = 0; j < n; ++j) u(j) = std::polar(1.0, k_omega(j) * t);
  }

  // Undo the substitution on a state/propagator block at time t.
  void unwind_state(double t, Eigen::MatrixXcd& w) const {
    Eigen::VectorXcd u;
    phases(t, u);
    w = u.conjugate().asDiagonal() * w;
  }
  // Undo it on a density matrix at time t.
  void unwind_density(double t, Eigen::MatrixXcd& rho) const {
    Eigen::VectorXcd u;
    phases(t, u);
    rho = u.conjugate().asDiagonal() * rho * u.asDiagonal();
  }
};

class SchrodingerRhs {
 public:
  SchrodingerRhs(const DrivenSystem& ds, const Pulse& pulse, const HarmonicFrame& frame)
      : coupling_(ds.coupling), pulse_(pulse), frame_(frame) {
    minus_i_res_ = (-iu) * frame.residual.cast<cplx>();
  }

  void operator()(double t, const Eigen::MatrixXcd& w, Eigen::MatrixXcd& dw) {
    const double c = pulse_.coefficient(t);
    if (c != 0.0) {
      frame_.phases(t, u_);
      scaled_ = u_.conjugate().asDiagonal() * w;
      dw.noalias() = coupling_ * scaled_;
      front_ = cplx(0.0, -c) * u_;
      dw.array().colwise() *= front_.array();
      dw += minus_i_res_.asDiagonal() * w;
    } else {
      dw = minus_i_res_.asDiagonal() * w;
    }
  }

 private:
  const Eigen::MatrixXcd& coupling_;
  const Pulse& pulse_;
  const HarmonicFrame& frame_;
  Eigen::VectorXcd minus_i_res_, u_, front_;
  Eigen::MatrixXcd scaled_;
};

}  // namespace detail

struct Propagator {
  Eigen::MatrixXcd u;  // dim x ncols block of the lab-frame propagator
  double t_ns = 0.0;
  double unitarity_defect = 0.0;  // max |(U^dag U - init^dag init)_ij|
};

// Propagate the given initial block (default: the full identity) through the
// pulse window [0, t_gate].
inline Propagator evolve_unitary(const DrivenSystem& ds, const Pulse& pulse,
                                 const EvolveOptions& opt = {},
                                 std::optional<Eigen::MatrixXcd> init = std::nullopt) {
  const int dim = ds.dim();
  Eigen::MatrixXcd w = init ? *init : Eigen::MatrixXcd::Identity(dim, dim);
  if (w.rows() != dim) throw ConfigError("initial block has wrong dimension");
  const Eigen::MatrixXcd gram0 = w.adjoint() * w;

  detail::HarmonicFrame frame =
      detail::HarmonicFrame::make(ds.energies_radns, pulse.omega_d_angular(), opt.harmonic_frame);
  detail::SchrodingerRhs rhs(ds, pulse, frame);
  DormandPrince<Eigen::MatrixXcd> dp(opt.ode());
  dp.integrate(rhs, w, 0.0, pulse.t_gate_ns);
  frame.unwind_state(pulse.t_gate_ns, w);

  Propagator p;
  p.u = std::move(w);
  p.t_ns = pulse.t_gate_ns;
  p.unitarity_defect = (p.u.adjoint() * p.u - gram0).cwiseAbs().maxCoeff();
  if (p.unitarity_defect > opt.defect_budget()) {
    throw ConvergenceError("propagator lost unitarity: defect " +
                           std::to_string(p.unitarity_defect));
  }
  return p;
}

inline Propagator evolve_unitary(const CoupledSystem& sys, const Pulse& pulse,
                                 const EvolveOptions& opt = {},
                                 std::optional<Eigen::MatrixXcd> init = std::nullopt) {
  return evolve_unitary(driven_system(sys), pulse, opt, std::move(init));
}

struct Trace {
  Eigen::VectorXd t_ns;
  Eigen::MatrixXd pops;  // row per sample, column per dressed level

  int samples() const { return static_cast<int>(t_ns.size()); }
};

// Populations |<k|psi(t)>|^2 on a uniform grid, starting from a dressed basis
// state. Population readout is insensitive to the frame substitution.
inline Trace population_trace(const DrivenSystem& ds, const Pulse& pulse, int init_index,
                              double t_final_ns, int samples, const EvolveOptions& opt = {}) {
  if (samples < 2) throw ConfigError("a trace needs at least two samples");
  const int dim = ds.dim();
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(dim, 1);
  w(init_index, 0) = 1.0;

  detail::HarmonicFrame frame =
      detail::HarmonicFrame::make(ds.energies_radns, pulse.omega_d_angular(), opt.harmonic_frame);
  detail::SchrodingerRhs rhs(ds, pulse, frame);
  DormandPrince<Eigen::MatrixXcd> dp(opt.ode());

  Trace tr;
  tr.t_ns.resize(samples);
  tr.pops.resize(samples, dim);
  tr.t_ns(0) = 0.0;
  tr.pops.row(0) = w.cwiseAbs2().transpose();
  for (int i = 1; i < samples; ++i) {
    const double t0 = t_final_ns * (i - 1) / (samples - 1);
    const double t1 = t_final_ns * i / (samples - 1);
    dp.integrate(rhs, w, t0, t1);
    tr.t_ns(i) = t1;
    tr.pops.row(i) = w.cwiseAbs2().transpose();
  }
  return tr;
}

inline Trace population_trace(const CoupledSystem& sys, const Pulse& pulse, int init_index,
                              double t_final_ns, int samples, const EvolveOptions& opt = {}) {
  return population_trace(driven_system(sys), pulse, init_index, t_final_ns, samples, opt);
}

// ---- dissipative evolution ----

inline constexpr double inf_lifetime = std::numeric_limits<double>::infinity();

struct Lifetimes {
  double t1_01_us = inf_lifetime;
  double tphi_01_us = inf_lifetime;
  double t1_12_us = inf_lifetime;
  double tphi_12_us = inf_lifetime;

  // The usual T2 = T1 operating point: pure dephasing at twice the relaxation time.
  static Lifetimes t2_equals_t1(double t1_01_us, double t1_12_us = inf_lifetime) {
    return {t1_01_us, 2.0 * t1_01_us, t1_12_us, 2.0 * t1_12_us};
  }
};

enum class CollapseBasis { dressed, bare };

namespace detail {

inline void append_ladder(std::vector<Eigen::MatrixXcd>& ops, int dim, double time_us,
                          double strength_num, const std::vector<std::pair<int, int>>& entries) {
  if (!(time_us > 0)) throw ConfigError("lifetimes must be positive");
  if (std::isinf(time_us)) return;
  const double rate_per_ns = strength_num / (time_us * 1000.0);
  Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(dim, dim);
  for (auto [r, c] : entries) l(r, c) = std::sqrt(rate_per_ns);
  ops.push_back(std::move(l));
}

}  // namespace detail

// The eight per-transition operators described in the header comment. In the
// bare variant the ladder structure is written in bare labels and rotated into
// the dressed basis.
inline std::vector<Eigen::MatrixXcd> relaxation_ops(const CoupledSystem& sys,
                                                    const Lifetimes& qubit_a,
                                                    const Lifetimes& qubit_b,
                                                    CollapseBasis basis = CollapseBasis::dressed) {
  const int na = sys.levels_a(), nb = sys.levels_b(), dim = sys.dim();
  std::vector<Eigen::MatrixXcd> ops;

  auto ladder_a = [&](int to, int from) {
    std::vector<std::pair<int, int>> e;
    for (int k = 0; k < nb; ++k) e.push_back({sys.idx(to, k), sys.idx(from, k)});
    return e;
  };
  auto ladder_b = [&](int to, int from) {
    std::vector<std::pair<int, int>> e;
    for (int k = 0; k < na; ++k) e.push_back({sys.idx(k, to), sys.idx(k, from)});
    return e;
  };

  if (na < 3 || nb < 3) throw ConfigError("relaxation model needs at least three levels per qubit");
  detail::append_ladder(ops, dim, qubit_a.t1_01_us, 1.0, ladder_a(0, 1));
  detail::append_ladder(ops, dim, qubit_a.tphi_01_us, 2.0, ladder_a(0, 0));
  detail::append_ladder(ops, dim, qubit_a.t1_12_us, 1.0, ladder_a(1, 2));
  detail::append_ladder(ops, dim, qubit_a.tphi_12_us, 2.0, ladder_a(2, 2));
  detail::append_ladder(ops, dim, qubit_b.t1_01_us, 1.0, ladder_b(0, 1));
  detail::append_ladder(ops, dim, qubit_b.tphi_01_us, 2.0, ladder_b(0, 0));
  detail::append_ladder(ops, dim, qubit_b.t1_12_us, 1.0, ladder_b(1, 2));
  detail::append_ladder(ops, dim, qubit_b.tphi_12_us, 2.0, ladder_b(2, 2));

  if (basis == CollapseBasis::bare) {
    // identical ladder structure, expressed on bare product states
    for (Eigen::MatrixXcd& l : ops) l = sys.vectors.adjoint() * l * sys.vectors;
  }
  return ops;
}

namespace detail {

class LindbladRhs {
 public:
  LindbladRhs(const DrivenSystem& ds, const Pulse& pulse, const HarmonicFrame& frame,
              const std::vector<Eigen::MatrixXcd>& collapse)
      : coupling_(ds.coupling), pulse_(pulse), frame_(frame) {
    const int dim = ds.dim();
    res_cplx_ = frame.residual.cast<cplx>();
    minus_i_res_ = (-iu) * res_cplx_;

    m_accum_ = Eigen::MatrixXcd::Zero(dim, dim);
    for (const Eigen::MatrixXcd& l : collapse) {
      Sparse s;
      for (int c = 0; c < dim; ++c)
        for (int r = 0; r < dim; ++r) {
          if (std::abs(l(r, c)) > 0.0) {
            s.rows.push_back(r);
            s.cols.push_back(c);
            s.vals.push_back(l(r, c));
            s.dphase.push_back(frame.k_omega(r) - frame.k_omega(c));
          }
        }
      // the sparse jump path pays nnz^2 per evaluation; beyond ~dim entries the
      // dense conjugation is cheaper
      if (static_cast<int>(s.vals.size()) <= 2 * dim) {
        sparse_.push_back(std::move(s));
      } else {
        dense_.push_back(l);
      }
      m_accum_ += 0.5 * (l.adjoint() * l);
    }
    m_offdiag_zero_ = true;
    for (int c = 0; c < dim && m_offdiag_zero_; ++c)
      for (int r = 0; r < dim; ++r) {
        if (r != c && std::abs(m_accum_(r, c)) > 1e-15) {
          m_offdiag_zero_ = false;
          break;
        }
      }
    m_diag_ = m_accum_.diagonal().real();
  }

  void operator()(double t, const Eigen::MatrixXcd& rho, Eigen::MatrixXcd& drho) {
    const double c = pulse_.coefficient(t);
    frame_.phases(t, u_);

    // -i (H rho - rho H), H = diag(res) + c * u D u^dag
    if (c != 0.0) {
      scaled_ = u_.conjugate().asDiagonal() * rho;
      hrho_.noalias() = coupling_ * scaled_;
      hrho_.array().colwise() *= (c * u_).array();
      scaled_ = rho * u_.asDiagonal();
      rhoh_.noalias() = scaled_ * coupling_;
      rhoh_.array().rowwise() *= (c * u_.conjugate()).transpose().array();
      hrho_ += res_cplx_.asDiagonal() * rho;
      rhoh_ += rho * res_cplx_.asDiagonal();
      drho = (-iu) * (hrho_ - rhoh_);
    } else {
      drho = minus_i_res_.asDiagonal() * rho;
      drho -= rho * minus_i_res_.asDiagonal();  // yields -i (res_r - res_c) rho_rc
    }

    // jump terms sum_m L rho L^dag, frame phases applied per entry
    for (const Sparse& s : sparse_) {
      const int n = static_cast<int>(s.vals.size());
      phased_.resize(n);
      for (int a = 0; a < n; ++a) phased_[a] = s.vals[a] * std::polar(1.0, s.dphase[a] * t);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          drho(s.rows[a], s.rows[b]) += phased_[a] * std::conj(phased_[b]) * rho(s.cols[a], s.cols[b]);
        }
    }
    for (const Eigen::MatrixXcd& l : dense_) {
      ltilde_ = u_.asDiagonal() * l * u_.conjugate().asDiagonal();
      scaled_.noalias() = ltilde_ * rho;
      drho.noalias() += scaled_ * ltilde_.adjoint();
    }

    // anticommutator -(M rho + rho M), M = (1/2) sum L^dag L
    if (m_offdiag_zero_) {
      for (int cc = 0; cc < rho.cols(); ++cc)
        for (int rr = 0; rr < rho.rows(); ++rr) {
          drho(rr, cc) -= (m_diag_(rr) + m_diag_(cc)) * rho(rr, cc);
        }
    } else {
      mtilde_ = u_.asDiagonal() * m_accum_ * u_.conjugate().asDiagonal();
      scaled_.noalias() = mtilde_ * rho;
      drho -= scaled_;
      scaled_.noalias() = rho * mtilde_;
      drho -= scaled_;
    }
  }

 private:
  struct Sparse {
    std::vector<int> rows, cols;
    std::vector<cplx> vals;
    std::vector<double> dphase;  // (K_row - K_col) * omega_d
  };

  const Eigen::MatrixXcd& coupling_;
  const Pulse& pulse_;
  const HarmonicFrame& frame_;
  Eigen::VectorXcd minus_i_res_, res_cplx_, u_;
  std::vector<cplx> phased_;
  std::vector<Sparse> sparse_;
  std::vector<Eigen::MatrixXcd> dense_;
  Eigen::MatrixXcd m_accum_, mtilde_, scaled_, hrho_, rhoh_, ltilde_;
  Eigen::VectorXd m_diag_;
  bool m_offdiag_zero_ = false;
};

}  // namespace detail

struct LindbladPropagator {
  // vec(rho_out) = s * vec(rho_in) with column-major vec over the full dressed
  // space; the input space may be restricted to a subset of dressed levels.
  Eigen::MatrixXcd s;
  std::vector<int> input_levels;
  double t_ns = 0.0;
  double trace_defect = 0.0;

  int out_dim() const { return static_cast<int>(std::lround(std::sqrt(double(s.rows())))); }
};

// Propagate the density-matrix basis spanned by input_levels (all levels by
// default: the full superoperator) through the pulse window. Hermiticity of
// the channel halves the work: only i <= j columns are integrated.
inline LindbladPropagator evolve_lindblad(const DrivenSystem& ds, const Pulse& pulse,
                                          const std::vector<Eigen::MatrixXcd>& collapse,
                                          const EvolveOptions& opt = {},
                                          std::optional<std::vector<int>> input_levels =
                                              std::nullopt) {
  const int dim = ds.dim();
  std::vector<int> levels;
  if (input_levels) {
    levels = *input_levels;
  } else {
    levels.resize(dim);
    for (int i = 0; i < dim; ++i) levels[i] = i;
  }
  const int nin = static_cast<int>(levels.size());

  detail::HarmonicFrame frame =
      detail::HarmonicFrame::make(ds.energies_radns, pulse.omega_d_angular(), opt.harmonic_frame);
  detail::LindbladRhs rhs(ds, pulse, frame, collapse);

  LindbladPropagator lp;
  lp.s.resize(dim * dim, nin * nin);
  lp.input_levels = levels;
  lp.t_ns = pulse.t_gate_ns;

  Eigen::MatrixXcd rho(dim, dim), out(dim, dim);
  for (int j = 0; j < nin; ++j) {
    for (int i = 0; i <= j; ++i) {
      rho.setZero();
      rho(levels[i], levels[j]) = 1.0;
      DormandPrince<Eigen::MatrixXcd> dp(opt.ode());
      dp.integrate(rhs, rho, 0.0, pulse.t_gate_ns);
      frame.unwind_density(pulse.t_gate_ns, rho);

      const double want_trace = (i == j) ? 1.0 : 0.0;
      lp.trace_defect = std::max(lp.trace_defect, std::abs(rho.trace().real() - want_trace));
      lp.trace_defect = std::max(lp.trace_defect, std::abs(rho.trace().imag()));

      lp.s.col(i + nin * j) = rho.reshaped();
      if (i != j) {
        out = rho.adjoint();  // evolution commutes with the adjoint
        lp.s.col(j + nin * i) = out.reshaped();
      }
    }
  }
  if (lp.trace_defect > opt.defect_budget()) {
    throw ConvergenceError("dissipative propagator lost trace: defect " +
                           std::to_string(lp.trace_defect));
  }
  return lp;
}

inline LindbladPropagator evolve_lindblad(const CoupledSystem& sys, const Pulse& pulse,
                                          const std::vector<Eigen::MatrixXcd>& collapse,
                                          const EvolveOptions& opt = {},
                                          std::optional<std::vector<int>> input_levels =
                                              std::nullopt) {
  return evolve_lindblad(driven_system(sys), pulse, collapse, opt, std::move(input_levels));
}

}  // namespace fluxgate
