#pragma once

// Flat key = value run configuration for the command-line tool: parsing with
// field-level diagnostics, a canonical echo that re-parses to an identical
// config (the provenance header of every artifact), fixed-precision text
// output helpers, and the small gate-matrix file reader.
//
// Schema notes. Keys outside the chosen experiment's needs are validated but
// otherwise ignored, so one config can drive several experiments.  Optional
// keys that were never set are omitted from the echo.  Values must not
// contain '#', which always starts a comment.

#include <cctype>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "fluxgate/circuit.hpp"
#include "fluxgate/coupled.hpp"
#include "fluxgate/drive.hpp"
#include "fluxgate/evolve.hpp"
#include "fluxgate/optimize.hpp"
#include "fluxgate/util.hpp"

namespace fluxgate {

inline constexpr const char* code_version = "0.1.0";

enum class Experiment {
  spectrum,
  rabi_sweep,
  time_trace,
  gate_optimize,
  error_budget,
  lindblad_sweep,
  invariants,
};

inline const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::spectrum: return "spectrum";
    case Experiment::rabi_sweep: return "rabi-sweep";
    case Experiment::time_trace: return "time-trace";
    case Experiment::gate_optimize: return "gate-optimize";
    case Experiment::error_budget: return "error-budget";
    case Experiment::lindblad_sweep: return "lindblad-sweep";
    case Experiment::invariants: return "invariants";
  }
  return "?";
}

inline Experiment parse_experiment(const std::string& word) {
  for (Experiment e : {Experiment::spectrum, Experiment::rabi_sweep, Experiment::time_trace,
                       Experiment::gate_optimize, Experiment::error_budget,
                       Experiment::lindblad_sweep, Experiment::invariants}) {
    if (word == experiment_name(e)) return e;
  }
  throw ConfigError("config key 'experiment': unknown experiment '" + word +
                    "' (choices: spectrum, rabi-sweep, time-trace, gate-optimize, "
                    "error-budget, lindblad-sweep, invariants)");
}

enum class OutputFormat { csv, json };

enum class OmegaMode { fixed, contrast_optimal };

enum class SweepAxis { none, omega_d, lambda, t_gate, j_c, t1_01, t1_12 };

inline const char* sweep_axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::omega_d: return "omega_d";
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::t_gate: return "t_gate";
    case SweepAxis::j_c: return "j_c";
    case SweepAxis::t1_01: return "t1_01";
    case SweepAxis::t1_12: return "t1_12";
  }
  return "?";
}

struct QubitConfig {
  std::optional<double> e_c_ghz, e_l_ghz, e_j_ghz;
  double phi_ext_over_pi = 1.0;

  bool operator==(const QubitConfig&) const = default;

  bool complete() const { return e_c_ghz && e_l_ghz && e_j_ghz; }
  CircuitParams circuit() const { return {*e_c_ghz, *e_l_ghz, *e_j_ghz, phi_ext_over_pi * pi}; }
};

struct RunConfig {
  Experiment experiment = Experiment::spectrum;
  OutputFormat format = OutputFormat::csv;
  std::string output;  // artifact path; empty writes to stdout

  QubitConfig a, b;
  std::optional<double> j_c_ghz;
  double eta_a = 1.0, eta_b = 1.0;
  int n_fock = 120, n_keep = 5;

  PulseShape shape = PulseShape::gaussian_full;
  AmplitudeConvention convention = AmplitudeConvention::time_average;
  std::optional<double> lambda;
  std::optional<double> omega_d_ghz;
  double omega_d_offset_mhz = 0.0;
  OmegaMode omega_d_mode = OmegaMode::fixed;
  double gamma_d_rad = 0.0;
  std::optional<double> t_gate_ns;
  double t_rise_ns = 0.0;

  double t1_01_us = inf_lifetime, tphi_01_us = inf_lifetime;
  double t1_12_us = inf_lifetime, tphi_12_us = inf_lifetime;

  // rabi-sweep / time-trace sampling
  std::optional<double> scan_center_ghz;
  double scan_span_mhz = 20.0;
  int scan_points = 41;
  std::optional<double> horizon_ns;
  double t_max_ns = 300.0;
  int trace_samples = 301;

  // calibration search (gate-optimize and calibrate = true experiments)
  double search_span_mhz = 15.0, search_step_mhz = 0.5;
  double lambda_min = 0.1, lambda_max = 0.9, lambda_step = 0.02;
  int max_evaluations = 4000;
  double coarse_rtol = 1e-6, refine_rtol = 1e-9;
  bool calibrate_pulse = false;

  SweepAxis sweep_axis = SweepAxis::none;
  double sweep_min = 0.0, sweep_max = 0.0;
  int sweep_points = 0;
  bool sweep_log = false;

  std::string matrix_file;

  bool operator==(const RunConfig&) const = default;

  CoupledSystem build_system() const {
    return build_coupled(diagonalize(a.circuit(), n_fock, n_keep),
                         diagonalize(b.circuit(), n_fock, n_keep),
                         {*j_c_ghz, eta_a, eta_b});
  }

  Lifetimes lifetimes() const { return {t1_01_us, tphi_01_us, t1_12_us, tphi_12_us}; }

  CalibrateOptions calibrate_options() const {
    CalibrateOptions opt;
    opt.omega_span_mhz = search_span_mhz;
    opt.omega_step_mhz = search_step_mhz;
    opt.lambda_min = lambda_min;
    opt.lambda_max = lambda_max;
    opt.lambda_step = lambda_step;
    opt.coarse_rtol = coarse_rtol;
    opt.refine_rtol = refine_rtol;
    opt.max_evaluations = max_evaluations;
    opt.shape = shape;
    opt.convention = convention;
    opt.t_rise_ns = t_rise_ns;
    return opt;
  }

  std::vector<double> sweep_grid() const {
    std::vector<double> grid(sweep_points);
    for (int i = 0; i < sweep_points; ++i) {
      const double s = sweep_points == 1 ? 0.0 : double(i) / (sweep_points - 1);
      grid[i] = sweep_log ? sweep_min * std::pow(sweep_max / sweep_min, s)
                          : sweep_min + (sweep_max - sweep_min) * s;
    }
    return grid;
  }
};

namespace textio {

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double x) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

// Fixed-point form for tabular artifacts; negative zero is normalized so the
// output is a pure function of the rounded value.
inline std::string format_fixed(double x, int places) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(places);
  os << x;
  std::string s = os.str();
  if (s.find_first_of("123456789") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

inline double parse_double_or_throw(const std::string& key, const std::string& value) {
  std::string v = value;
  if (!v.empty() && v[0] == '+') v.erase(0, 1);
  double x = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a number");
  }
  return x;
}

inline int parse_int_or_throw(const std::string& key, const std::string& value) {
  int x = 0;
  const auto r = std::from_chars(value.data(), value.data() + value.size(), x);
  if (r.ec != std::errc() || r.ptr != value.data() + value.size()) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not an integer");
  }
  return x;
}

}  // namespace textio

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Raw key = value lines with comments stripped; duplicate keys are rejected
// so a config cannot silently contradict itself.
inline std::vector<std::pair<std::string, std::string>> split_key_values(
    const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value', got '" +
                        line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
    }
    for (char c : key) {
      if (!(std::islower(static_cast<unsigned char>(c)) ||
            std::isdigit(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) {
        throw ConfigError("config key '" + key + "': invalid character '" + std::string(1, c) +
                          "'");
      }
    }
    for (const auto& [k, v] : kv) {
      if (k == key) throw ConfigError("config key '" + key + "': given more than once");
    }
    kv.emplace_back(key, value);
  }
  return kv;
}

// Typed view over the raw pairs: every consumed key is marked, and anything
// left over at the end is an unknown-key error (typo protection).
class KeyReader {
 public:
  explicit KeyReader(std::vector<std::pair<std::string, std::string>> kv) : kv_(std::move(kv)) {
    used_.assign(kv_.size(), false);
  }

  std::optional<std::string> word(const std::string& key) {
    for (size_t i = 0; i < kv_.size(); ++i) {
      if (kv_[i].first == key) {
        used_[i] = true;
        return kv_[i].second;
      }
    }
    return std::nullopt;
  }

  void number(const std::string& key, double& out) {
    if (auto v = word(key)) out = textio::parse_double_or_throw(key, *v);
  }
  void number(const std::string& key, std::optional<double>& out) {
    if (auto v = word(key)) out = textio::parse_double_or_throw(key, *v);
  }
  void integer(const std::string& key, int& out) {
    if (auto v = word(key)) out = textio::parse_int_or_throw(key, *v);
  }
  void flag(const std::string& key, bool& out) {
    if (auto v = word(key)) {
      if (*v == "true") {
        out = true;
      } else if (*v == "false") {
        out = false;
      } else {
        throw ConfigError("config key '" + key + "': expected true or false, got '" + *v + "'");
      }
    }
  }

  void finish() const {
    for (size_t i = 0; i < kv_.size(); ++i) {
      if (!used_[i]) throw ConfigError("config key '" + kv_[i].first + "': unknown key");
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> kv_;
  std::vector<bool> used_;
};

inline void read_qubit(KeyReader& r, const std::string& prefix, QubitConfig& q) {
  r.number(prefix + ".e_c_ghz", q.e_c_ghz);
  r.number(prefix + ".e_l_ghz", q.e_l_ghz);
  r.number(prefix + ".e_j_ghz", q.e_j_ghz);
  r.number(prefix + ".phi_ext_over_pi", q.phi_ext_over_pi);
}

inline void require_positive(const std::string& key, double x) {
  if (!(x > 0.0)) {
    throw ConfigError("config key '" + key + "': must be positive, got " +
                      textio::format_double(x));
  }
}

inline void require_qubit(const std::string& prefix, const QubitConfig& q) {
  if (!q.complete()) {
    throw ConfigError("config: qubit '" + prefix + "' needs " + prefix + ".e_c_ghz, " + prefix +
                      ".e_l_ghz and " + prefix + ".e_j_ghz");
  }
  require_positive(prefix + ".e_c_ghz", *q.e_c_ghz);
  require_positive(prefix + ".e_l_ghz", *q.e_l_ghz);
  require_positive(prefix + ".e_j_ghz", *q.e_j_ghz);
}

inline void validate(const RunConfig& c) {
  if (c.n_fock < 20 || c.n_fock > 2000) {
    throw ConfigError("config key 'n_fock': expected 20..2000");
  }
  if (c.n_keep < 2 || c.n_keep > 12 || c.n_keep > c.n_fock) {
    throw ConfigError("config key 'n_keep': expected 2..12 and at most n_fock");
  }
  if (c.lambda) require_positive("lambda", *c.lambda);
  if (c.t_gate_ns) require_positive("t_gate_ns", *c.t_gate_ns);
  if (c.t_rise_ns < 0) throw ConfigError("config key 't_rise_ns': must be nonnegative");
  if (c.shape == PulseShape::flat_with_rise && !(c.t_rise_ns > 0)) {
    throw ConfigError("config key 't_rise_ns': flat_with_rise needs a positive rise time");
  }
  require_positive("t1_01_us", c.t1_01_us);
  require_positive("tphi_01_us", c.tphi_01_us);
  require_positive("t1_12_us", c.t1_12_us);
  require_positive("tphi_12_us", c.tphi_12_us);
  if (c.scan_points < 3) throw ConfigError("config key 'scan_points': expected at least 3");
  if (c.trace_samples < 8) throw ConfigError("config key 'trace_samples': expected at least 8");
  require_positive("scan_span_mhz", c.scan_span_mhz);
  require_positive("t_max_ns", c.t_max_ns);
  require_positive("search_span_mhz", c.search_span_mhz);
  require_positive("search_step_mhz", c.search_step_mhz);
  require_positive("lambda_step", c.lambda_step);
  if (!(c.lambda_min > 0 && c.lambda_max >= c.lambda_min)) {
    throw ConfigError("config keys 'lambda_min'/'lambda_max': need 0 < min <= max");
  }
  if (c.max_evaluations < 1) throw ConfigError("config key 'max_evaluations': must be positive");
  require_positive("coarse_rtol", c.coarse_rtol);
  require_positive("refine_rtol", c.refine_rtol);
  if (c.omega_d_ghz && c.omega_d_mode == OmegaMode::contrast_optimal) {
    throw ConfigError(
        "config key 'omega_d_ghz': fixed frequency conflicts with "
        "omega_d_mode = contrast-optimal");
  }

  if (c.sweep_axis != SweepAxis::none) {
    if (c.sweep_points < 2) {
      throw ConfigError("config key 'sweep_points': a sweep needs at least 2 points");
    }
    if (!(c.sweep_max > c.sweep_min)) {
      throw ConfigError("config keys 'sweep_min'/'sweep_max': need min < max");
    }
    if (c.sweep_log && !(c.sweep_min > 0)) {
      throw ConfigError("config key 'sweep_log': logarithmic grids need sweep_min > 0");
    }
  }

  const bool needs_system = c.experiment != Experiment::invariants;
  if (needs_system) {
    require_qubit("a", c.a);
    require_qubit("b", c.b);
    if (!c.j_c_ghz) throw ConfigError("config key 'j_c_ghz': required");
    if (*c.j_c_ghz < 0) throw ConfigError("config key 'j_c_ghz': must be nonnegative");
  }

  const auto require_lambda = [&] {
    if (!c.lambda) throw ConfigError("config key 'lambda': required for this experiment");
  };
  const auto require_t_gate = [&] {
    if (!c.t_gate_ns) throw ConfigError("config key 't_gate_ns': required for this experiment");
  };
  // With calibrate = true the search chooses the drive point; otherwise the
  // config must fix the amplitude (an absent omega_d_ghz means the two-photon
  // reference frequency plus omega_d_offset_mhz).
  const auto require_drive_point = [&] {
    if (c.calibrate_pulse) {
      if (c.lambda || c.omega_d_ghz) {
        throw ConfigError(
            "config key 'calibrate': remove 'lambda'/'omega_d_ghz', the calibration "
            "chooses them");
      }
    } else {
      require_lambda();
    }
  };

  switch (c.experiment) {
    case Experiment::spectrum:
      if (c.sweep_axis != SweepAxis::none && c.sweep_axis != SweepAxis::j_c) {
        throw ConfigError("config key 'sweep_axis': spectrum only sweeps j_c");
      }
      break;
    case Experiment::rabi_sweep:
      require_lambda();
      break;
    case Experiment::time_trace:
      require_lambda();
      break;
    case Experiment::gate_optimize:
      if (c.sweep_axis == SweepAxis::none || c.sweep_axis == SweepAxis::j_c) {
        require_t_gate();
      } else if (c.sweep_axis != SweepAxis::t_gate) {
        throw ConfigError("config key 'sweep_axis': gate-optimize sweeps t_gate or j_c");
      }
      break;
    case Experiment::error_budget:
      require_t_gate();
      require_drive_point();
      if (c.sweep_axis != SweepAxis::none && c.sweep_axis != SweepAxis::omega_d &&
          c.sweep_axis != SweepAxis::lambda) {
        throw ConfigError("config key 'sweep_axis': error-budget sweeps omega_d or lambda");
      }
      break;
    case Experiment::lindblad_sweep:
      require_t_gate();
      require_drive_point();
      if (c.sweep_axis != SweepAxis::t1_01 && c.sweep_axis != SweepAxis::t1_12) {
        throw ConfigError("config key 'sweep_axis': lindblad-sweep needs t1_01 or t1_12");
      }
      break;
    case Experiment::invariants:
      if (c.matrix_file.empty()) throw ConfigError("config key 'matrix_file': required");
      break;
  }
}

}  // namespace detail

// Re-check all invariants after programmatic edits (e.g. command-line
// overrides of a parsed file).
inline void validate_config(const RunConfig& c) { detail::validate(c); }

inline RunConfig parse_run_config(const std::string& text) {
  detail::KeyReader r(detail::split_key_values(text));
  RunConfig c;

  if (auto v = r.word("experiment")) c.experiment = parse_experiment(*v);
  if (auto v = r.word("format")) {
    if (*v == "csv") {
      c.format = OutputFormat::csv;
    } else if (*v == "json") {
      c.format = OutputFormat::json;
    } else {
      throw ConfigError("config key 'format': expected csv or json, got '" + *v + "'");
    }
  } else {
    c.format = (c.experiment == Experiment::gate_optimize ||
                c.experiment == Experiment::invariants)
                   ? OutputFormat::json
                   : OutputFormat::csv;
  }
  if (auto v = r.word("output")) c.output = *v;

  detail::read_qubit(r, "a", c.a);
  detail::read_qubit(r, "b", c.b);
  r.number("j_c_ghz", c.j_c_ghz);
  r.number("eta_a", c.eta_a);
  r.number("eta_b", c.eta_b);
  r.integer("n_fock", c.n_fock);
  r.integer("n_keep", c.n_keep);

  bool shape_given = false;
  if (auto v = r.word("shape")) {
    shape_given = true;
    if (*v == "flat_with_rise") {
      c.shape = PulseShape::flat_with_rise;
    } else if (*v == "gaussian_full") {
      c.shape = PulseShape::gaussian_full;
    } else {
      throw ConfigError("config key 'shape': expected flat_with_rise or gaussian_full, got '" +
                        *v + "'");
    }
  }
  if (auto v = r.word("amplitude_convention")) {
    if (*v == "peak") {
      c.convention = AmplitudeConvention::peak;
    } else if (*v == "time_average") {
      c.convention = AmplitudeConvention::time_average;
    } else {
      throw ConfigError(
          "config key 'amplitude_convention': expected peak or time_average, got '" + *v + "'");
    }
  } else if (shape_given) {
    // Convention follows the shape's conventional reading: flat pulses quote
    // their plateau, shaped gate pulses quote the pulse-averaged amplitude.
    c.convention = c.shape == PulseShape::flat_with_rise ? AmplitudeConvention::peak
                                                         : AmplitudeConvention::time_average;
  }
  r.number("lambda", c.lambda);
  r.number("omega_d_ghz", c.omega_d_ghz);
  r.number("omega_d_offset_mhz", c.omega_d_offset_mhz);
  if (auto v = r.word("omega_d_mode")) {
    if (*v == "fixed") {
      c.omega_d_mode = OmegaMode::fixed;
    } else if (*v == "contrast-optimal") {
      c.omega_d_mode = OmegaMode::contrast_optimal;
    } else {
      throw ConfigError("config key 'omega_d_mode': expected fixed or contrast-optimal, got '" +
                        *v + "'");
    }
  }
  r.number("gamma_d_rad", c.gamma_d_rad);
  r.number("t_gate_ns", c.t_gate_ns);
  r.number("t_rise_ns", c.t_rise_ns);

  r.number("t1_01_us", c.t1_01_us);
  r.number("tphi_01_us", c.tphi_01_us);
  r.number("t1_12_us", c.t1_12_us);
  r.number("tphi_12_us", c.tphi_12_us);

  r.number("scan_center_ghz", c.scan_center_ghz);
  r.number("scan_span_mhz", c.scan_span_mhz);
  r.integer("scan_points", c.scan_points);
  r.number("horizon_ns", c.horizon_ns);
  r.number("t_max_ns", c.t_max_ns);
  r.integer("trace_samples", c.trace_samples);

  r.number("search_span_mhz", c.search_span_mhz);
  r.number("search_step_mhz", c.search_step_mhz);
  r.number("lambda_min", c.lambda_min);
  r.number("lambda_max", c.lambda_max);
  r.number("lambda_step", c.lambda_step);
  r.integer("max_evaluations", c.max_evaluations);
  r.number("coarse_rtol", c.coarse_rtol);
  r.number("refine_rtol", c.refine_rtol);
  r.flag("calibrate", c.calibrate_pulse);

  if (auto v = r.word("sweep_axis")) {
    bool found = false;
    for (SweepAxis a : {SweepAxis::omega_d, SweepAxis::lambda, SweepAxis::t_gate, SweepAxis::j_c,
                        SweepAxis::t1_01, SweepAxis::t1_12}) {
      if (*v == sweep_axis_name(a)) {
        c.sweep_axis = a;
        found = true;
        break;
      }
    }
    if (!found) {
      throw ConfigError("config key 'sweep_axis': unknown axis '" + *v +
                        "' (choices: omega_d, lambda, t_gate, j_c, t1_01, t1_12)");
    }
  }
  r.number("sweep_min", c.sweep_min);
  r.number("sweep_max", c.sweep_max);
  r.integer("sweep_points", c.sweep_points);
  r.flag("sweep_log", c.sweep_log);

  if (auto v = r.word("matrix_file")) c.matrix_file = *v;

  r.finish();
  detail::validate(c);
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

// Canonical text form: explicit key for every field that differs from unset,
// shortest round-trip numbers, fixed ordering.  parse_run_config(echo(c))
// compares equal to c member by member.
inline std::string echo_config(const RunConfig& c) {
  std::ostringstream out;
  const auto num = [&](const char* key, double v) {
    out << key << " = " << textio::format_double(v) << "\n";
  };
  const auto opt = [&](const char* key, const std::optional<double>& v) {
    if (v) num(key, *v);
  };

  out << "experiment = " << experiment_name(c.experiment) << "\n";
  out << "format = " << (c.format == OutputFormat::csv ? "csv" : "json") << "\n";
  if (!c.output.empty()) out << "output = " << c.output << "\n";

  const auto qubit = [&](const std::string& p, const QubitConfig& q) {
    if (q.e_c_ghz) num((p + ".e_c_ghz").c_str(), *q.e_c_ghz);
    if (q.e_l_ghz) num((p + ".e_l_ghz").c_str(), *q.e_l_ghz);
    if (q.e_j_ghz) num((p + ".e_j_ghz").c_str(), *q.e_j_ghz);
    num((p + ".phi_ext_over_pi").c_str(), q.phi_ext_over_pi);
  };
  qubit("a", c.a);
  qubit("b", c.b);
  opt("j_c_ghz", c.j_c_ghz);
  num("eta_a", c.eta_a);
  num("eta_b", c.eta_b);
  out << "n_fock = " << c.n_fock << "\n";
  out << "n_keep = " << c.n_keep << "\n";

  out << "shape = "
      << (c.shape == PulseShape::flat_with_rise ? "flat_with_rise" : "gaussian_full") << "\n";
  out << "amplitude_convention = "
      << (c.convention == AmplitudeConvention::peak ? "peak" : "time_average") << "\n";
  opt("lambda", c.lambda);
  opt("omega_d_ghz", c.omega_d_ghz);
  num("omega_d_offset_mhz", c.omega_d_offset_mhz);
  out << "omega_d_mode = "
      << (c.omega_d_mode == OmegaMode::fixed ? "fixed" : "contrast-optimal") << "\n";
  num("gamma_d_rad", c.gamma_d_rad);
  opt("t_gate_ns", c.t_gate_ns);
  num("t_rise_ns", c.t_rise_ns);

  num("t1_01_us", c.t1_01_us);
  num("tphi_01_us", c.tphi_01_us);
  num("t1_12_us", c.t1_12_us);
  num("tphi_12_us", c.tphi_12_us);

  opt("scan_center_ghz", c.scan_center_ghz);
  num("scan_span_mhz", c.scan_span_mhz);
  out << "scan_points = " << c.scan_points << "\n";
  opt("horizon_ns", c.horizon_ns);
  num("t_max_ns", c.t_max_ns);
  out << "trace_samples = " << c.trace_samples << "\n";

  num("search_span_mhz", c.search_span_mhz);
  num("search_step_mhz", c.search_step_mhz);
  num("lambda_min", c.lambda_min);
  num("lambda_max", c.lambda_max);
  num("lambda_step", c.lambda_step);
  out << "max_evaluations = " << c.max_evaluations << "\n";
  num("coarse_rtol", c.coarse_rtol);
  num("refine_rtol", c.refine_rtol);
  out << "calibrate = " << (c.calibrate_pulse ? "true" : "false") << "\n";

  if (c.sweep_axis != SweepAxis::none) {
    out << "sweep_axis = " << sweep_axis_name(c.sweep_axis) << "\n";
    num("sweep_min", c.sweep_min);
    num("sweep_max", c.sweep_max);
    out << "sweep_points = " << c.sweep_points << "\n";
    out << "sweep_log = " << (c.sweep_log ? "true" : "false") << "\n";
  }
  if (!c.matrix_file.empty()) out << "matrix_file = " << c.matrix_file << "\n";
  return out.str();
}

namespace textio {

inline constexpr int csv_places = 9;

// Comment header carried by every artifact: tool version, experiment, the
// number formatting contract, and the full config between markers.
inline std::string provenance_header(const RunConfig& c,
                                     const std::vector<std::string>& extra = {}) {
  std::ostringstream out;
  out << "# fluxgate " << code_version << "\n";
  out << "# experiment: " << experiment_name(c.experiment) << "\n";
  out << "# numbers: fixed, " << csv_places << " decimal places\n";
  for (const auto& line : extra) out << "# " << line << "\n";
  out << "# config-begin\n";
  std::istringstream echo(echo_config(c));
  std::string line;
  while (std::getline(echo, line)) out << "# " << line << "\n";
  out << "# config-end\n";
  return out.str();
}

// Inverse of provenance_header's config block: the echoed text, ready for
// parse_run_config.  Works on whole CSV artifacts or bare headers.
inline std::string extract_config_echo(const std::string& artifact) {
  std::istringstream in(artifact);
  std::string line, echo;
  bool inside = false;
  while (std::getline(in, line)) {
    if (line == "# config-begin") {
      inside = true;
    } else if (line == "# config-end") {
      return echo;
    } else if (inside) {
      if (line.rfind("# ", 0) != 0) {
        throw ConfigError("malformed provenance block: expected '# ' prefix inside config echo");
      }
      echo += line.substr(2) + "\n";
    }
  }
  throw ConfigError("no provenance config block found in artifact");
}

// One CSV data row at the declared fixed precision.
inline std::string csv_row(const std::vector<double>& values) {
  std::string row;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) row += ',';
    row += format_fixed(values[i], csv_places);
  }
  row += '\n';
  return row;
}

}  // namespace textio

// 4x4 complex gate matrix from text: 16 entries in row-major order, each in
// the standard complex form `(re,im)` or a bare real; '#' comments allowed.
inline Eigen::Matrix4cd read_matrix4(std::istream& in) {
  std::string text, line;
  while (std::getline(in, line)) {
    if (const size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    text += line + "\n";
  }
  std::istringstream nums(text);
  Eigen::Matrix4cd m;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      cplx z;
      if (!(nums >> z)) {
        throw ConfigError("matrix file: expected 16 complex entries like (re,im), failed at row " +
                          std::to_string(i) + " column " + std::to_string(j));
      }
      m(i, j) = z;
    }
  }
  cplx extra;
  if (nums >> extra) throw ConfigError("matrix file: more than 16 entries");
  return m;
}

inline Eigen::Matrix4cd load_matrix4(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file '" + path + "'");
  return read_matrix4(in);
}

}  // namespace fluxgate
