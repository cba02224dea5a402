// Command-line front end: loads a flat key = value config, runs one of the
// simulation experiments, and writes a CSV or JSON artifact with a provenance
// header that re-parses to the exact configuration used.
//
// Exit codes: 0 success, 1 numerical failure inside a simulation module,
// 2 config or usage error.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fluxgate/circuit.hpp"
#include "fluxgate/config.hpp"
#include "fluxgate/coupled.hpp"
#include "fluxgate/drive.hpp"
#include "fluxgate/evolve.hpp"
#include "fluxgate/gatealg.hpp"
#include "fluxgate/gateext.hpp"
#include "fluxgate/optimize.hpp"
#include "fluxgate/perturb.hpp"
#include "fluxgate/tomo.hpp"

namespace {

using namespace fluxgate;
using nlohmann::json;

json provenance_json(const RunConfig& cfg) {
  return json{{"version", code_version},
              {"experiment", experiment_name(cfg.experiment)},
              {"numbers", "shortest round-trip decimal"},
              {"config", echo_config(cfg)}};
}

// Drive frequency a config asks for: explicit value, or the two-photon
// reference (optionally contrast-optimized), plus the offset key.
double resolve_omega_d(const RunConfig& cfg, const CoupledSystem& sys) {
  double base;
  if (cfg.omega_d_ghz) {
    base = *cfg.omega_d_ghz;
  } else if (cfg.omega_d_mode == OmegaMode::contrast_optimal) {
    ResonanceOptions ropt;
    ropt.span_mhz = cfg.scan_span_mhz;
    ropt.step_mhz = 2.0 * cfg.scan_span_mhz / (cfg.scan_points - 1);
    ropt.t_rise_ns = cfg.t_rise_ns;
    base = find_two_photon_resonance(sys, *cfg.lambda, ropt).omega_d_ghz;
  } else {
    base = sys.omega_bar_ghz();
  }
  return base + cfg.omega_d_offset_mhz * 1e-3;
}

// Oscillation horizon for Rabi measurements: a few predicted periods.
double resolve_horizon(const RunConfig& cfg, const CoupledSystem& sys) {
  if (cfg.horizon_ns) return *cfg.horizon_ns;
  const PerturbativeEstimates est = estimate(sys, *cfg.lambda);
  const double width_ghz = std::max(est.omega_tilde_full_mhz, 1e-2) * 1e-3;
  return 2.5 / width_ghz;
}

std::string run_spectrum(const RunConfig& cfg) {
  std::string out = textio::provenance_header(cfg);

  if (cfg.sweep_axis == SweepAxis::j_c) {
    out += "j_c_ghz,omega_bar_ghz,static_zz_mhz\n";
    const FluxoniumSpectrum qa = diagonalize(cfg.a.circuit(), cfg.n_fock, cfg.n_keep);
    const FluxoniumSpectrum qb = diagonalize(cfg.b.circuit(), cfg.n_fock, cfg.n_keep);
    for (double j : cfg.sweep_grid()) {
      const CoupledSystem sys = build_coupled(qa, qb, {j, cfg.eta_a, cfg.eta_b});
      out += textio::csv_row({j, sys.omega_bar_ghz(), sys.static_zz_ghz() * 1e3});
    }
    return out;
  }

  out += "subsystem,quantity,value\n";
  const auto qubit_rows = [&](const char* name, const FluxoniumSpectrum& q) {
    std::string rows;
    const auto row = [&](const std::string& quantity, double v) {
      rows += std::string(name) + "," + quantity + "," +
              textio::format_fixed(v, textio::csv_places) + "\n";
    };
    if (q.n_keep() > 1) row("omega_01_ghz", q.transition_ghz(0, 1));
    if (q.n_keep() > 2) row("omega_12_ghz", q.transition_ghz(1, 2));
    if (q.n_keep() > 3) row("omega_23_ghz", q.transition_ghz(2, 3));
    if (q.n_keep() > 1) row("n_01_abs", std::abs(q.n_elems(0, 1)));
    if (q.n_keep() > 2) row("n_12_abs", std::abs(q.n_elems(1, 2)));
    if (q.n_keep() > 3) row("n_03_abs", std::abs(q.n_elems(0, 3)));
    return rows;
  };
  const FluxoniumSpectrum qa = diagonalize(cfg.a.circuit(), cfg.n_fock, cfg.n_keep);
  const FluxoniumSpectrum qb = diagonalize(cfg.b.circuit(), cfg.n_fock, cfg.n_keep);
  out += qubit_rows("a", qa);
  out += qubit_rows("b", qb);

  const CoupledSystem sys = build_coupled(qa, qb, {*cfg.j_c_ghz, cfg.eta_a, cfg.eta_b});
  out += "coupled,omega_bar_ghz," +
         textio::format_fixed(sys.omega_bar_ghz(), textio::csv_places) + "\n";
  out += "coupled,static_zz_mhz," +
         textio::format_fixed(sys.static_zz_ghz() * 1e3, textio::csv_places) + "\n";
  return out;
}

std::string run_rabi_sweep(const RunConfig& cfg) {
  if (!(cfg.t_rise_ns > 0)) {
    throw ConfigError("config key 't_rise_ns': rabi-sweep drives flat pulses, needs a rise");
  }
  const CoupledSystem sys = cfg.build_system();
  const double f = lambda_to_f(sys, *cfg.lambda);
  const double center = cfg.scan_center_ghz ? *cfg.scan_center_ghz : sys.omega_bar_ghz();
  const double span = cfg.scan_span_mhz * 1e-3;
  const double horizon = resolve_horizon(cfg, sys);

  std::string out = textio::provenance_header(
      cfg, {"horizon_ns: " + textio::format_double(horizon)});
  out += "omega_d_ghz,rabi_mhz,contrast,period_ns,resolved\n";
  for (int i = 0; i < cfg.scan_points; ++i) {
    const double omega = center - span + 2.0 * span * i / (cfg.scan_points - 1);
    double rabi = 0.0, contrast = 0.0, period = 0.0, ok = 0.0;
    try {
      const RabiFit fit = measure_two_photon_rabi(sys, f, omega, cfg.t_rise_ns, horizon);
      rabi = fit.freq_mhz;
      contrast = fit.contrast;
      period = fit.freq_mhz > 0 ? 1e3 / fit.freq_mhz : 0.0;
      ok = 1.0;
    } catch (const Error&) {
      // off-resonance points with no resolvable oscillation stay flagged 0
    }
    out += textio::csv_row({omega, rabi, contrast, period, ok});
  }
  return out;
}

std::string run_time_trace(const RunConfig& cfg) {
  const CoupledSystem sys = cfg.build_system();
  const double omega_d = resolve_omega_d(cfg, sys);
  const Pulse pulse = make_pulse(cfg.shape, cfg.convention, lambda_to_f(sys, *cfg.lambda),
                                 omega_d, cfg.gamma_d_rad, cfg.t_max_ns, cfg.t_rise_ns);
  const Trace tr = population_trace(sys, pulse, sys.idx(0, 0), cfg.t_max_ns, cfg.trace_samples);

  std::string out = textio::provenance_header(
      cfg, {"omega_d_ghz: " + textio::format_double(omega_d)});
  out += "t_ns,p00,p01,p10,p11,p_leak\n";
  const int i00 = sys.idx(0, 0), i01 = sys.idx(0, 1), i10 = sys.idx(1, 0), i11 = sys.idx(1, 1);
  for (int i = 0; i < tr.samples(); ++i) {
    const double p00 = tr.pops(i, i00), p01 = tr.pops(i, i01);
    const double p10 = tr.pops(i, i10), p11 = tr.pops(i, i11);
    out += textio::csv_row({tr.t_ns(i), p00, p01, p10, p11, 1.0 - p00 - p01 - p10 - p11});
  }
  return out;
}

json report_json(const GateReport& r) {
  return json{{"fidelity", r.fidelity},
              {"infidelity", 1.0 - r.fidelity},
              {"zeta_over_pi", r.zeta / pi},
              {"theta_eff_over_pi", r.theta_eff / pi},
              {"beta", r.beta},
              {"e_comp", r.e_comp},
              {"p_leak", r.p_leak},
              {"e_theta", r.e_theta},
              {"one_minus_c00", 1.0 - r.concurrence}};
}

json calibration_json(const CalibrationResult& res) {
  json j = report_json(res.report);
  j["omega_d_ghz"] = res.omega_d_ghz;
  j["lambda"] = res.lambda;
  j["evaluations"] = res.evaluations;
  j["budget_exhausted"] = res.budget_exhausted;
  return j;
}

std::string run_gate_optimize(const RunConfig& cfg) {
  const CalibrateOptions opt = cfg.calibrate_options();

  if (cfg.sweep_axis == SweepAxis::j_c) {
    // Recalibrate at fixed duration for each coupling strength.  Each point
    // pays the full search; see sweep_t_gate for why chained warm starts are
    // not safe across sweeps.
    const FluxoniumSpectrum qa = diagonalize(cfg.a.circuit(), cfg.n_fock, cfg.n_keep);
    const FluxoniumSpectrum qb = diagonalize(cfg.b.circuit(), cfg.n_fock, cfg.n_keep);
    std::string out = textio::provenance_header(cfg);
    out += "j_c_ghz,omega_d_ghz,lambda,infidelity,zeta_over_pi,e_comp,p_leak,e_theta,ok\n";
    for (double j : cfg.sweep_grid()) {
      try {
        const CoupledSystem at_j = build_coupled(qa, qb, {j, cfg.eta_a, cfg.eta_b});
        const CalibrationResult r = calibrate(at_j, *cfg.t_gate_ns, opt);
        out += textio::csv_row({j, r.omega_d_ghz, r.lambda, 1.0 - r.fidelity, r.zeta / pi,
                                r.report.e_comp, r.report.p_leak, r.report.e_theta, 1});
      } catch (const Error&) {
        out += textio::csv_row({j, 0, 0, 0, 0, 0, 0, 0, 0});
      }
    }
    return out;
  }

  const CoupledSystem sys = cfg.build_system();
  if (cfg.sweep_axis == SweepAxis::t_gate) {
    const auto table = sweep_t_gate(sys, cfg.sweep_grid(), opt);
    if (cfg.format == OutputFormat::csv) {
      std::string out = textio::provenance_header(cfg);
      out += "t_gate_ns,omega_d_ghz,lambda,infidelity,zeta_over_pi,e_comp,p_leak,e_theta,ok\n";
      for (const auto& p : table) {
        if (p.failed) {
          out += textio::csv_row({p.t_gate_ns, 0, 0, 0, 0, 0, 0, 0, 0});
        } else {
          const auto& r = p.result;
          out += textio::csv_row({p.t_gate_ns, r.omega_d_ghz, r.lambda, 1.0 - r.fidelity,
                                  r.zeta / pi, r.report.e_comp, r.report.p_leak,
                                  r.report.e_theta, 1});
        }
      }
      return out;
    }
    json points = json::array();
    for (const auto& p : table) {
      json entry{{"t_gate_ns", p.t_gate_ns}, {"failed", p.failed}};
      if (p.failed) {
        entry["message"] = p.message;
      } else {
        entry["result"] = calibration_json(p.result);
      }
      points.push_back(std::move(entry));
    }
    return json{{"provenance", provenance_json(cfg)}, {"sweep", points}}.dump(2) + "\n";
  }

  const CalibrationResult res = calibrate(sys, *cfg.t_gate_ns, opt);
  return json{{"provenance", provenance_json(cfg)}, {"result", calibration_json(res)}}.dump(2) +
         "\n";
}

// The drive point an error-budget or lindblad-sweep run works at: either
// calibrated on the spot or fixed by the config.
struct DrivePointChoice {
  double omega_d_ghz = 0.0;
  double lambda = 0.0;
};

DrivePointChoice resolve_drive_point(const RunConfig& cfg, const CoupledSystem& sys) {
  if (cfg.calibrate_pulse) {
    const CalibrationResult res = calibrate(sys, *cfg.t_gate_ns, cfg.calibrate_options());
    return {res.omega_d_ghz, res.lambda};
  }
  return {resolve_omega_d(cfg, sys), *cfg.lambda};
}

std::string run_error_budget(const RunConfig& cfg) {
  const CoupledSystem sys = cfg.build_system();
  const DrivePointChoice at = resolve_drive_point(cfg, sys);
  CalibrateOptions opt = cfg.calibrate_options();

  // The frequency axis is swept as an offset in MHz from the two-photon
  // reference, so a checked-in config stays meaningful without knowing the
  // absolute resonance.
  std::vector<DrivePoint> table;
  if (cfg.sweep_axis == SweepAxis::omega_d) {
    std::vector<double> grid_ghz;
    for (double v : cfg.sweep_grid()) grid_ghz.push_back(sys.omega_bar_ghz() + v * 1e-3);
    table = sweep_omega_d(sys, *cfg.t_gate_ns, at.lambda, grid_ghz, opt);
  } else if (cfg.sweep_axis == SweepAxis::lambda) {
    table = sweep_lambda(sys, *cfg.t_gate_ns, at.omega_d_ghz, cfg.sweep_grid(), opt);
  } else {
    table = sweep_omega_d(sys, *cfg.t_gate_ns, at.lambda, {at.omega_d_ghz}, opt);
  }

  const bool over_lambda = cfg.sweep_axis == SweepAxis::lambda;
  std::string out = textio::provenance_header(
      cfg, {"omega_d_ghz: " + textio::format_double(at.omega_d_ghz),
            "lambda: " + textio::format_double(at.lambda)});
  out += std::string(over_lambda ? "lambda" : "omega_offset_mhz") +
         ",one_minus_f,e_comp,p_leak,e_theta,one_minus_c00,ok\n";
  for (const auto& p : table) {
    const double param =
        over_lambda ? p.lambda : (p.omega_d_ghz - sys.omega_bar_ghz()) * 1e3;
    if (p.failed) {
      out += textio::csv_row({param, 0, 0, 0, 0, 0, 0});
    } else {
      out += textio::csv_row({param, 1.0 - p.report.fidelity, p.report.e_comp, p.report.p_leak,
                              p.report.e_theta, 1.0 - p.report.concurrence, 1});
    }
  }
  return out;
}

std::string run_lindblad_sweep(const RunConfig& cfg) {
  const CoupledSystem sys = cfg.build_system();
  const DrivePointChoice at = resolve_drive_point(cfg, sys);
  const CalibrateOptions copt = cfg.calibrate_options();

  const Pulse pulse = make_pulse(cfg.shape, cfg.convention, lambda_to_f(sys, at.lambda),
                                 at.omega_d_ghz, cfg.gamma_d_rad, *cfg.t_gate_ns, cfg.t_rise_ns);
  EvolveOptions uopt;
  uopt.rtol = copt.refine_rtol;
  const PhaseFix fix = fix_phases(extract_gate(evolve_unitary(sys, pulse, uopt), sys));
  const double f_coherent = coherent_fidelity(fix.u_fixed, fix.zeta);

  const LifetimeAxis axis =
      cfg.sweep_axis == SweepAxis::t1_01 ? LifetimeAxis::t01 : LifetimeAxis::t12;
  const auto table = sweep_lifetime(sys, pulse, fix, axis, cfg.sweep_grid());

  std::string out = textio::provenance_header(
      cfg, {"omega_d_ghz: " + textio::format_double(at.omega_d_ghz),
            "lambda: " + textio::format_double(at.lambda),
            "coherent_infidelity: " + textio::format_double(1.0 - f_coherent)});
  out += "t_us,one_minus_f,incoherent_error,ok\n";
  for (const auto& p : table) {
    if (p.failed) {
      out += textio::csv_row({p.t_us, 0, 0, 0});
    } else {
      out += textio::csv_row({p.t_us, 1.0 - p.fidelity, f_coherent - p.fidelity, 1});
    }
  }
  return out;
}

std::string run_invariants(const RunConfig& cfg) {
  const Eigen::Matrix4cd u = load_matrix4(cfg.matrix_file);
  const LocalInvariants inv = local_invariants(u);
  const double power = entangling_power(u);
  return json{{"provenance", provenance_json(cfg)},
              {"G1", {inv.g1.real(), inv.g1.imag()}},
              {"G2", inv.g2},
              {"P", power}}
             .dump(2) +
         "\n";
}

std::string run_experiment(const RunConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::spectrum: return run_spectrum(cfg);
    case Experiment::rabi_sweep: return run_rabi_sweep(cfg);
    case Experiment::time_trace: return run_time_trace(cfg);
    case Experiment::gate_optimize: return run_gate_optimize(cfg);
    case Experiment::error_budget: return run_error_budget(cfg);
    case Experiment::lindblad_sweep: return run_lindblad_sweep(cfg);
    case Experiment::invariants: return run_invariants(cfg);
  }
  throw ConfigError("unreachable experiment");
}

void write_artifact(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file '" + path + "'");
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-fluxonium entangling-gate simulation toolkit"};
  app.require_subcommand(1);

  struct SubSpec {
    Experiment experiment;
    CLI::App* sub = nullptr;
  };
  std::vector<SubSpec> subs;
  std::string config_path, output_override, matrix_override;
  double t_gate_override = 0.0, jc_mhz_override = 0.0;

  for (Experiment e : {Experiment::spectrum, Experiment::rabi_sweep, Experiment::time_trace,
                       Experiment::gate_optimize, Experiment::error_budget,
                       Experiment::lindblad_sweep, Experiment::invariants}) {
    CLI::App* sub = app.add_subcommand(experiment_name(e), "");
    sub->add_option("--config", config_path, "key = value config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--output", output_override, "artifact path (default from config/stdout)");
    if (e == Experiment::gate_optimize) {
      sub->add_option("--t-gate-ns", t_gate_override, "override gate duration");
      sub->add_option("--jc-mhz", jc_mhz_override, "override coupling strength in MHz");
    }
    if (e == Experiment::invariants) {
      sub->add_option("--matrix", matrix_override, "4x4 gate matrix file")
          ->check(CLI::ExistingFile);
    }
    subs.push_back({e, sub});
  }

  try {
    app.parse(argc, argv);

    Experiment chosen = Experiment::spectrum;
    CLI::App* active = nullptr;
    for (const auto& s : subs) {
      if (s.sub->parsed()) {
        chosen = s.experiment;
        active = s.sub;
      }
    }

    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = load_run_config(config_path);
    } else if (chosen != Experiment::invariants) {
      throw ConfigError("--config is required");
    }
    cfg.experiment = chosen;
    if (active->count("--output")) cfg.output = output_override;
    if (chosen == Experiment::gate_optimize) {
      if (active->count("--t-gate-ns")) cfg.t_gate_ns = t_gate_override;
      if (active->count("--jc-mhz")) cfg.j_c_ghz = jc_mhz_override * 1e-3;
    }
    if (chosen == Experiment::invariants) {
      if (active->count("--matrix")) cfg.matrix_file = matrix_override;
      cfg.format = OutputFormat::json;
    }
    validate_config(cfg);

    write_artifact(cfg.output, run_experiment(cfg));
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
