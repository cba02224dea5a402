#pragma once

// Shared conventions for the whole library:
//  - energies and frequencies are cyclic (E/h) in GHz unless a name says otherwise,
//  - angular frequencies are rad/ns (= 2*pi * GHz), time is ns,
//  - "dim" is the truncated Hilbert-space dimension currently in play.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxgate {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
using cplx = std::complex<double>;
inline constexpr cplx iu{0.0, 1.0};

// GHz (cyclic) <-> rad/ns (angular).
inline double to_angular(double f_ghz) { return two_pi * f_ghz; }
inline double to_cyclic(double w_radns) { return w_radns / two_pi; }

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a requested basis truncation fails its convergence check.
class TruncationError : public Error {
 public:
  using Error::Error;
};

// Raised when an iterative numerical procedure fails to meet its target.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Raised on malformed run configuration or input files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v[i] = lo + step * i;
  v.back() = hi;
  return v;
}

// Wrap an angle into [0, 2*pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a, two_pi);
  if (w < 0) w += two_pi;
  // fmod can return exactly two_pi after the correction when a is a tiny negative number
  if (w >= two_pi) w -= two_pi;
  return w;
}

}  // namespace fluxgate
