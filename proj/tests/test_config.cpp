#include "fluxgate/config.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fluxgate/gatealg.hpp"

using namespace fluxgate;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = testing::TempDir() + name;
  std::ofstream out(path);
  out << text;
  return path;
}

const char* kQubits =
    "a.e_c_ghz = 1.0\n"
    "a.e_l_ghz = 1.5\n"
    "a.e_j_ghz = 3.8\n"
    "b.e_c_ghz = 1.0\n"
    "b.e_l_ghz = 0.9\n"
    "b.e_j_ghz = 3.0\n"
    "j_c_ghz = 0.2\n";

const std::string kSpectrumConfig =
    "# minimal two-qubit setup\nexperiment = spectrum\n" + std::string(kQubits);

}  // namespace

TEST(Config, MinimalSpectrumDefaults) {
  const RunConfig c = parse_run_config(kSpectrumConfig);
  EXPECT_EQ(c.experiment, Experiment::spectrum);
  EXPECT_EQ(c.format, OutputFormat::csv);
  EXPECT_EQ(c.n_fock, 120);
  EXPECT_EQ(c.n_keep, 5);
  EXPECT_EQ(c.a.phi_ext_over_pi, 1.0);
  EXPECT_EQ(c.shape, PulseShape::gaussian_full);
  EXPECT_EQ(c.convention, AmplitudeConvention::time_average);
  EXPECT_TRUE(std::isinf(c.t1_01_us));
  EXPECT_FALSE(c.lambda.has_value());
  ASSERT_TRUE(c.j_c_ghz.has_value());
  EXPECT_EQ(*c.j_c_ghz, 0.2);
}

// The shape key alone flips the amplitude convention to the one that shape
// is conventionally quoted in; an explicit key still wins.
TEST(Config, ConventionFollowsShapeUnlessExplicit) {
  const std::string base(kSpectrumConfig);
  const RunConfig flat = parse_run_config(base + "shape = flat_with_rise\nt_rise_ns = 25\n");
  EXPECT_EQ(flat.convention, AmplitudeConvention::peak);
  const RunConfig forced = parse_run_config(base + "shape = flat_with_rise\nt_rise_ns = 25\n" +
                                            "amplitude_convention = time_average\n");
  EXPECT_EQ(forced.convention, AmplitudeConvention::time_average);
}

TEST(Config, EchoRoundTripsToIdenticalConfig) {
  const std::string rich =
      "experiment = lindblad-sweep\n"
      "output = artifacts/fig5c.csv\n"
      "a.e_c_ghz = 1.0\n"
      "a.e_l_ghz = 1.5\n"
      "a.e_j_ghz = 3.8\n"
      "a.phi_ext_over_pi = 0.98\n"
      "b.e_c_ghz = 1.0\n"
      "b.e_l_ghz = 0.9\n"
      "b.e_j_ghz = 3.0\n"
      "j_c_ghz = 0.3\n"
      "eta_a = 0.7\n"
      "eta_b = -0.33333333333333331\n"
      "n_keep = 4\n"
      "t_gate_ns = 93\n"
      "calibrate = true\n"
      "refine_rtol = 1e-09\n"
      "sweep_axis = t1_01\n"
      "sweep_min = 1\n"
      "sweep_max = 1000\n"
      "sweep_points = 13\n"
      "sweep_log = true\n";
  const RunConfig c1 = parse_run_config(rich);
  const std::string echo = echo_config(c1);
  const RunConfig c2 = parse_run_config(echo);
  EXPECT_TRUE(c1 == c2);
  EXPECT_EQ(echo, echo_config(c2));
}

TEST(Config, ProvenanceHeaderCarriesTheConfig) {
  const RunConfig c = parse_run_config(kSpectrumConfig);
  const std::string header = textio::provenance_header(c, {"rtol: 1e-10"});
  EXPECT_NE(header.find("# fluxgate "), std::string::npos);
  EXPECT_NE(header.find("# rtol: 1e-10"), std::string::npos);

  // A full artifact (header plus data rows) round-trips the config.
  const std::string artifact = header + "x,y\n1.0,2.0\n";
  const RunConfig back = parse_run_config(textio::extract_config_echo(artifact));
  EXPECT_TRUE(c == back);
}

TEST(Config, FieldLevelErrors) {
  const std::string base(kSpectrumConfig);
  const auto expect_throw = [](const std::string& text, const std::string& fragment) {
    try {
      parse_run_config(text);
      FAIL() << "expected ConfigError mentioning '" << fragment << "'";
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos)
          << "actual message: " << e.what();
    }
  };

  expect_throw(base + "no_such_key = 1\n", "no_such_key");
  expect_throw(base + "j_c_ghz = 0.3\n", "more than once");
  expect_throw(base + "eta_a = fast\n", "not a number");
  expect_throw("experiment = warp\n", "unknown experiment");
  expect_throw("experiment = spectrum\na.e_c_ghz = 1\n", "qubit 'a' needs");
  expect_throw(base + "shape = flat_with_rise\n", "t_rise_ns");
  expect_throw(base + "omega_d_ghz = 4.6\nomega_d_mode = contrast-optimal\n",
               "omega_d_ghz");
  expect_throw(base + "experiment = lindblad-sweep\n", "more than once");
  expect_throw("experiment = lindblad-sweep\n" + std::string(kQubits) +
                   "t_gate_ns = 93\nlambda = 0.5\n",
               "sweep_axis");
  expect_throw(base + "sweep_axis = lambda\nsweep_min = 2\nsweep_max = 1\nsweep_points = 5\n",
               "sweep_min");
  expect_throw(base + "t1_01_us = -1\n", "t1_01_us");
  expect_throw(base + "n_keep = 1\n", "n_keep");
  expect_throw("experiment = invariants\n", "matrix_file");
}

TEST(Config, SweepGrids) {
  RunConfig c = parse_run_config(std::string(kSpectrumConfig) +
                                 "sweep_axis = j_c\nsweep_min = 0.1\nsweep_max = 0.3\n"
                                 "sweep_points = 5\n");
  const std::vector<double> lin = c.sweep_grid();
  ASSERT_EQ(lin.size(), 5u);
  EXPECT_DOUBLE_EQ(lin.front(), 0.1);
  EXPECT_DOUBLE_EQ(lin.back(), 0.3);
  EXPECT_NEAR(lin[2], 0.2, 1e-15);

  c.sweep_log = true;
  c.sweep_min = 1.0;
  c.sweep_max = 100.0;
  c.sweep_points = 3;
  const std::vector<double> log = c.sweep_grid();
  ASSERT_EQ(log.size(), 3u);
  EXPECT_NEAR(log[1], 10.0, 1e-12);
  EXPECT_DOUBLE_EQ(log.back(), 100.0);
}

TEST(Config, FixedFormatting) {
  EXPECT_EQ(textio::format_fixed(1.2344567891, 9), "1.234456789");
  EXPECT_EQ(textio::format_fixed(-1e-15, 9), "0.000000000");  // no negative zero
  EXPECT_EQ(textio::format_fixed(-0.5, 3), "-0.500");
  EXPECT_EQ(textio::csv_row({1.0, -2.5}), "1.000000000,-2.500000000\n");
}

TEST(Config, ShortestFormRoundTripsBitExactly) {
  for (double x : {0.2, 1.0 / 3.0, 1e-9, 6.938571e9, -0.0, 123456.789,
                   std::numeric_limits<double>::infinity()}) {
    const std::string s = textio::format_double(x);
    const double back = textio::parse_double_or_throw("k", s);
    EXPECT_EQ(std::signbit(back), std::signbit(x)) << s;
    EXPECT_TRUE(back == x || (std::isinf(back) && std::isinf(x))) << s;
  }
}

TEST(Config, MatrixFileRoundTrip) {
  const std::string path = write_temp(
      "bswap.mat",
      "# full swap of 00 and 11 up to the -i phase\n"
      "(0,0) 0 0 (0,-1)\n"
      "0 1 0 0\n"
      "0 0 1 0\n"
      "(0,-1) 0 0 (0,0)\n");
  const Eigen::Matrix4cd m = load_matrix4(path);
  const Eigen::Matrix4cd want = build_family({pi, 0.0});
  EXPECT_LT((m - want).cwiseAbs().maxCoeff(), 1e-15);

  const std::string missing = write_temp("short.mat", "1 2 3\n");
  EXPECT_THROW(load_matrix4(missing), ConfigError);
  const std::string extra = write_temp("long.mat",
                                       "1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n42\n");
  EXPECT_THROW(load_matrix4(extra), ConfigError);
  EXPECT_THROW(load_matrix4(testing::TempDir() + "does_not_exist.mat"), ConfigError);
}

TEST(Config, BuildSystemAndOptionMapping) {
  const RunConfig c = parse_run_config(std::string(kSpectrumConfig) +
                                       "n_keep = 3\nsearch_span_mhz = 7\nlambda_min = 0.2\n"
                                       "max_evaluations = 99\nt_rise_ns = 12\n");
  const CoupledSystem sys = c.build_system();
  EXPECT_EQ(sys.dim(), 9);
  EXPECT_GT(sys.omega_bar_ghz(), 0.0);

  const CalibrateOptions opt = c.calibrate_options();
  EXPECT_EQ(opt.omega_span_mhz, 7.0);
  EXPECT_EQ(opt.lambda_min, 0.2);
  EXPECT_EQ(opt.max_evaluations, 99);
  EXPECT_EQ(opt.shape, PulseShape::gaussian_full);
  EXPECT_EQ(opt.t_rise_ns, 12.0);

  const Lifetimes l = c.lifetimes();
  EXPECT_TRUE(std::isinf(l.t1_01_us));
}
