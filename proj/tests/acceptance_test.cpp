// Acceptance gate for the whole pipeline, run against the production-size
// reference pair (both qubits at the flux sweet spot, 120 oscillator states,
// five levels kept per qubit).  Each numbered check covers one top-level
// deliverable at its stated tolerance and prints exactly one verdict line;
// the process exits nonzero when any check fails, so ctest reports the gate
// honestly.  Checks run in numeric order because a few chain together: the
// detuned-drive check is an offset relative to the resonant drive point, and
// the dissipative thresholds reuse the duration sweep's 93 ns calibration.
//
// Budget for a full run on one core is under an hour; the calibration and
// master-equation checks dominate.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluxgate/circuit.hpp"
#include "fluxgate/coupled.hpp"
#include "fluxgate/drive.hpp"
#include "fluxgate/evolve.hpp"
#include "fluxgate/gatealg.hpp"
#include "fluxgate/gateext.hpp"
#include "fluxgate/optimize.hpp"
#include "fluxgate/perturb.hpp"
#include "fluxgate/tomo.hpp"

using namespace fluxgate;

namespace {

CircuitParams qubit_a_params() { return {1.0, 1.5, 3.8, pi}; }
CircuitParams qubit_b_params() { return {1.0, 0.9, 3.0, pi}; }

CoupledSystem reference_system(double j_c_ghz) {
  return build_coupled(diagonalize(qubit_a_params(), 120, 5),
                       diagonalize(qubit_b_params(), 120, 5), {j_c_ghz, 1.0, 1.0});
}

std::string strf(const char* format, ...) {
  va_list args;
  va_start(args, format);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int number, const char* name, const std::function<Verdict()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = strf("exception: %s", e.what());
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] %2d %-22s %s  [%.1f s]\n", v.pass ? "PASS" : "FAIL", number, name,
              v.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

// Closed forms for the family invariants and entangling power, written out
// independently of the Bell-basis route inside the library.
cplx g1_closed(double theta, double zeta) {
  const cplx b = std::polar(1.0, zeta) + std::cos(theta);
  return std::polar(1.0, -zeta) * b * b / 4.0;
}

double g2_closed(double theta, double zeta) { return 2.0 * std::cos(theta) + std::cos(zeta); }

double power_closed(double theta, double zeta) {
  return (5.0 - 4.0 * std::cos(zeta) * std::cos(theta) - std::cos(2.0 * theta)) / 36.0;
}

Eigen::Matrix2cd random_su2(std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  cplx a{n(gen), n(gen)}, b{n(gen), n(gen)};
  const double norm = std::sqrt(std::norm(a) + std::norm(b));
  a /= norm;
  b /= norm;
  Eigen::Matrix2cd k;
  k << a, b, -std::conj(b), std::conj(a);
  return k;
}

Eigen::Matrix4cd random_local_pair(std::mt19937_64& gen) {
  Eigen::Matrix4cd k = Eigen::Matrix4cd::Zero();
  const Eigen::Matrix2cd ka = random_su2(gen), kb = random_su2(gen);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) k.block<2, 2>(2 * i, 2 * j) = ka(i, j) * kb;
  return k;
}

}  // namespace

int main() {
  std::printf("acceptance gate: driven two-photon entangling gate, full reference system\n");
  std::fflush(stdout);

  const CoupledSystem sys100 = reference_system(0.1);
  const CoupledSystem sys200 = reference_system(0.2);
  const CoupledSystem sys300 = reference_system(0.3);

  // Results shared between checks.
  std::optional<TwoPhotonResonance> resonant;      // resonant drive point at J = 300 MHz
  std::optional<CalibrationResult> cal50, cal93;   // calibrated gates at J = 200 MHz

  // 1. Single-qubit spectra against the reference design values: the first
  // three transition frequencies to 2 MHz and the relevant charge matrix
  // elements to 0.002 for both parameter sets.
  run(1, "spectrum-reference", [&]() -> Verdict {
    struct Row {
      CircuitParams params;
      double omega[3];  // 0-1, 1-2, 2-3 transitions, GHz
      double n_abs[3];  // |n_01|, |n_12|, |n_03|
    };
    const Row rows[] = {
        {qubit_a_params(), {1.152, 3.280, 3.253}, {0.249, 0.608, 0.260}},
        {qubit_b_params(), {0.849, 2.929, 2.683}, {0.207, 0.567, 0.277}},
    };
    double worst_omega = 0.0, worst_n = 0.0;
    for (const Row& row : rows) {
      const FluxoniumSpectrum s = diagonalize(row.params, 120, 5);
      const double om[3] = {s.transition_ghz(0, 1), s.transition_ghz(1, 2),
                            s.transition_ghz(2, 3)};
      const double nn[3] = {std::abs(s.n_elems(0, 1)), std::abs(s.n_elems(1, 2)),
                            std::abs(s.n_elems(0, 3))};
      for (int k = 0; k < 3; ++k) {
        worst_omega = std::max(worst_omega, std::abs(om[k] - row.omega[k]));
        worst_n = std::max(worst_n, std::abs(nn[k] - row.n_abs[k]));
      }
    }
    Verdict v;
    v.pass = worst_omega <= 2e-3 && worst_n <= 2e-3;
    v.detail = strf("max |dfreq| %.2f MHz (tol 2), max |dn| %.4f (tol 0.002)", worst_omega * 1e3,
                    worst_n);
    return v;
  });

  // 2. Resonant two-photon drive at J_C = 300 MHz, lambda = 0.5, flat pulse
  // with a 25 ns rise: the contrast-optimal drive frequency must oscillate at
  // 6.8 MHz within 10% with peak 11-population 0.80 within 0.05.
  run(2, "resonant-rabi", [&]() -> Verdict {
    resonant = find_two_photon_resonance(sys300, 0.5);
    Verdict v;
    v.pass = std::abs(resonant->rabi_mhz - 6.8) <= 0.68 &&
             std::abs(resonant->contrast - 0.80) <= 0.05;
    v.detail = strf("rabi %.2f MHz (6.8 +- 0.68), contrast %.3f (0.80 +- 0.05) at %.4f GHz",
                    resonant->rabi_mhz, resonant->contrast, resonant->omega_d_ghz);
    return v;
  });

  // 3. Detuning the same drive until the contrast drops to 50% must take an
  // offset of 4.5 MHz within 1 MHz, and the oscillation period there must be
  // 103 ns within 10%.  The resonance sits a few MHz below the bare
  // half-splitting, and the reference detuned trace steps back up toward it,
  // so the bisection walks the upper side of the optimum.
  run(3, "detuned-rabi", [&]() -> Verdict {
    if (!resonant) return {false, "skipped: no resonant drive point"};
    const double f = lambda_to_f(sys300, 0.5);
    auto fit_at = [&](double offset_mhz) {
      return measure_two_photon_rabi(sys300, f, resonant->omega_d_ghz + offset_mhz * 1e-3, 25.0,
                                     350.0, 1e-7, 449);
    };
    double lo = 0.0, hi = 8.0;
    if (fit_at(hi).contrast >= 0.5) return {false, "contrast never fell to 50% within 8 MHz"};
    double offset = 0.0;
    RabiFit fit;
    for (int iter = 0; iter < 8; ++iter) {
      offset = 0.5 * (lo + hi);
      fit = fit_at(offset);
      (fit.contrast > 0.5 ? lo : hi) = offset;
    }
    const double period_ns = 1e3 / fit.freq_mhz;
    Verdict v;
    v.pass = std::abs(offset - 4.5) <= 1.0 && std::abs(period_ns - 103.0) <= 10.3;
    v.detail = strf("50%% contrast at +%.2f MHz (4.5 +- 1.0), period %.1f ns (103 +- 10.3)",
                    offset, period_ns);
    return v;
  });

  // 4. Second-order rate formula against the numerically extracted oscillation
  // frequency, six points spanning both couplings: agreement within 15% at
  // lambda <= 0.2.  Every point is measured the same way as check 2, with the
  // resonance search handling the much narrower low-amplitude lines.
  run(4, "perturbative-rate", [&]() -> Verdict {
    const double lambdas[] = {0.05, 0.1, 0.2};
    Verdict v;
    v.pass = true;
    std::string parts;
    double worst = 0.0;
    for (const CoupledSystem* sys : {&sys100, &sys300}) {
      parts += strf(" J=%.0fMHz:", sys->params.j_c_ghz * 1e3);
      for (double lambda : lambdas) {
        const double closed = estimate(*sys, lambda).omega_tilde_full_mhz;
        const double numeric = find_two_photon_resonance(*sys, lambda).rabi_mhz;
        const double rel = std::abs(closed - numeric) / numeric;
        worst = std::max(worst, rel);
        if (rel > 0.15) v.pass = false;
        parts += strf(" %.1f%%", rel * 100.0);
      }
    }
    v.detail = strf("|closed-numeric|/numeric at lambda {0.05,0.1,0.2}:%s (tol 15%%, worst %.1f%%)",
                    parts.c_str(), worst * 100.0);
    return v;
  });

  // 5. Full calibration of the 50 ns gate at J_C = 200 MHz: coherent
  // infidelity at most 2e-3, controlled phase within 0.1 pi of 1.02 pi, and
  // leakage below 2e-4 at the optimum.
  run(5, "gate-calibration", [&]() -> Verdict {
    cal50 = calibrate(sys200, 50.0);
    const double infid = 1.0 - cal50->fidelity;
    Verdict v;
    v.pass = infid <= 2e-3 && std::abs(cal50->zeta - 1.02 * pi) <= 0.1 * pi &&
             cal50->report.p_leak < 2e-4;
    v.detail = strf("1-F %.2e (tol 2e-3), zeta %.3f pi (1.02 +- 0.1), leak %.1e (tol 2e-4), %d evals",
                    infid, cal50->zeta / pi, cal50->report.p_leak, cal50->evaluations);
    return v;
  });

  // 6. Duration sweep at the same coupling: some gate under 100 ns must reach
  // coherent infidelity below 1e-4.  Every point is calibrated from scratch
  // (the optimum hops basins as the duration grows) and the 93 ns point feeds
  // the dissipative thresholds below.
  run(6, "duration-sweep", [&]() -> Verdict {
    const std::vector<double> grid = {60.0, 70.0, 80.0, 93.0};
    const auto table = sweep_t_gate(sys200, grid, CalibrateOptions{});
    double best_infid = 1.0, best_t = 0.0;
    int failed = 0;
    for (const TGateSweepPoint& point : table) {
      if (point.failed) {
        ++failed;
        continue;
      }
      if (point.t_gate_ns == 93.0) cal93 = point.result;
      const double infid = 1.0 - point.result.fidelity;
      if (infid < best_infid) {
        best_infid = infid;
        best_t = point.t_gate_ns;
      }
    }
    Verdict v;
    v.pass = best_infid < 1e-4;
    v.detail = strf("best coherent 1-F %.1e at %.0f ns (tol 1e-4 under 100 ns, %d of %zu failed)",
                    best_infid, best_t, failed, table.size());
    return v;
  });

  // 7. Static ZZ shift of the undriven spectrum at J_C = 200 MHz: slightly
  // below 1 MHz, i.e. inside (0.3, 1.0) MHz.
  run(7, "static-zz", [&]() -> Verdict {
    const double zz_mhz = std::abs(sys200.static_zz_ghz()) * 1e3;
    Verdict v;
    v.pass = zz_mhz > 0.3 && zz_mhz < 1.0;
    v.detail = strf("|E00+E11-E01-E10| = %.3f MHz (window 0.3 .. 1.0)", zz_mhz);
    return v;
  });

  // 8. Gate-algebra property suite: invariants and entangling power of the
  // family match their closed forms to 1e-10 on a 16x16 angle grid, both are
  // untouched by 100 random single-qubit dressings, and the two-pulse
  // decomposition reproduces the family to 1e-10.
  run(8, "gate-algebra", [&]() -> Verdict {
    double worst_grid = 0.0, worst_decomp = 0.0, worst_dress = 0.0;
    for (int i = 0; i < 16; ++i) {
      for (int j = 0; j < 16; ++j) {
        const double theta = two_pi * i / 16.0, zeta = two_pi * j / 16.0;
        const Eigen::Matrix4cd u = build_family({theta, zeta});
        const LocalInvariants inv = local_invariants(u);
        worst_grid = std::max({worst_grid, std::abs(inv.g1 - g1_closed(theta, zeta)),
                               std::abs(inv.g2 - g2_closed(theta, zeta)),
                               std::abs(entangling_power(u) - power_closed(theta, zeta))});
        worst_decomp = std::max(worst_decomp,
                                phase_distance(u, compose(decompose_theta(theta, zeta))));
      }
    }
    std::mt19937_64 gen(0x616c6765);  // fixed seed, the gate must not flake
    std::uniform_real_distribution<double> angle(0.0, two_pi);
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::Matrix4cd u = build_family({angle(gen), angle(gen)});
      const Eigen::Matrix4cd dressed = random_local_pair(gen) * u * random_local_pair(gen);
      const LocalInvariants a = local_invariants(u), b = local_invariants(dressed);
      worst_dress = std::max({worst_dress, std::abs(a.g1 - b.g1), std::abs(a.g2 - b.g2),
                              std::abs(entangling_power(u) - entangling_power(dressed))});
    }
    Verdict v;
    v.pass = worst_grid <= 1e-10 && worst_decomp <= 1e-10 && worst_dress <= 1e-9;
    v.detail = strf("closed forms %.1e (tol 1e-10), decomposition %.1e (tol 1e-10), "
                    "dressing drift %.1e (tol 1e-9)",
                    worst_grid, worst_decomp, worst_dress);
    return v;
  });

  // 9. Master-equation thresholds at the 93 ns optimum: relaxation on the
  // qubit transition at T1 = 100 us (T2 = T1, both qubits) keeps the total
  // infidelity under 1e-3, and relaxation on the 1-2 transition at 20 us adds
  // less than 1e-4 of incoherent error on top of the coherent floor.
  run(9, "dissipative-thresholds", [&]() -> Verdict {
    if (!cal93) cal93 = calibrate(sys200, 93.0);  // sweep failed; calibrate from scratch
    const Pulse pulse =
        make_pulse(PulseShape::gaussian_full, AmplitudeConvention::time_average,
                   lambda_to_f(sys200, cal93->lambda), cal93->omega_d_ghz, 0.0, 93.0);
    const PhaseFix fix = fix_phases(cal93->report.u_sim);
    const Lifetimes lower = Lifetimes::t2_equals_t1(100.0);
    const Lifetimes upper = Lifetimes::t2_equals_t1(inf_lifetime, 20.0);
    const double total_01 = 1.0 - dissipative_fidelity(sys200, pulse, lower, lower, fix);
    const double added_12 = cal93->fidelity - dissipative_fidelity(sys200, pulse, upper, upper, fix);
    Verdict v;
    v.pass = total_01 < 1e-3 && added_12 < 1e-4;
    v.detail = strf("T1(0-1)=100us: 1-F %.2e (tol 1e-3); T1(1-2)=20us adds %.2e (tol 1e-4); "
                    "coherent floor %.2e",
                    total_01, added_12, 1.0 - cal93->fidelity);
    return v;
  });

  // 10. Metric consistency on a closed-system run: the process-matrix
  // fidelity from the tomography pipeline must equal the coherent overlap
  // fidelity to 1e-5.  An uncalibrated mid-grade pulse keeps this check
  // independent of the optimizer; the identity holds for any closed channel.
  run(10, "metric-consistency", [&]() -> Verdict {
    const Pulse pulse =
        make_pulse(PulseShape::gaussian_full, AmplitudeConvention::time_average,
                   lambda_to_f(sys200, 0.4), sys200.omega_bar_ghz() - 4e-3, 0.0, 50.0);
    const auto inputs = detail::computational_input_levels(sys200);
    Eigen::MatrixXcd init = Eigen::MatrixXcd::Zero(sys200.dim(), 4);
    for (int k = 0; k < 4; ++k) init(inputs[k], k) = 1.0;
    EvolveOptions opt;
    opt.rtol = 1e-9;
    opt.atol = 1e-12;
    const Propagator prop = evolve_unitary(sys200, pulse, opt, init);
    const PhaseFix fix = fix_phases(extract_gate(prop, sys200));
    const double f_coherent = coherent_fidelity(fix.u_fixed, fix.zeta);
    const double f_chi = dissipative_fidelity(sys200, pulse, Lifetimes{}, Lifetimes{}, fix);
    Verdict v;
    v.pass = std::abs(f_chi - f_coherent) <= 1e-5;
    v.detail = strf("|F_chi - F_coherent| = %.1e at F = %.4f (tol 1e-5)",
                    std::abs(f_chi - f_coherent), f_coherent);
    return v;
  });

  if (failures == 0) {
    std::printf("acceptance gate: all 10 checks passed\n");
  } else {
    std::printf("acceptance gate: %d of 10 checks failed\n", failures);
  }
  return failures == 0 ? 0 : 1;
}
