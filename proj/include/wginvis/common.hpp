#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace wginvis {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr cplx iu{0.0, 1.0};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// 17 significant digits: round-trips any double exactly.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt17(cplx v) {
  return fmt17(v.real()) + (v.imag() < 0 ? "-" : "+") + fmt17(std::abs(v.imag())) + "i";
}

// Deterministic generator (splitmix64): identical streams on every platform,
// unlike std::uniform_real_distribution.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int uniform_int(int a, int b) {  // inclusive
    return a + int(next() % std::uint64_t(b - a + 1));
  }
};

// Gauss-Legendre nodes/weights on [0,1].
inline void gauss_rule(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(pi * (i + 0.75) / (n + 0.5));
    double p0 = 0, p1 = 0;
    for (int it = 0; it < 64; ++it) {
      p0 = 1.0;
      p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
      }
      double dp = n * (t * p0 - p1) / (t * t - 1.0);
      double dt = p0 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    p0 = 1.0;
    p1 = 0.0;
    for (int j = 0; j < n; ++j) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2 * j + 1) * t * p1 - j * p2) / (j + 1);
    }
    double dp = n * (t * p0 - p1) / (t * t - 1.0);
    x[i] = 0.5 * (1.0 - t);
    x[n - 1 - i] = 0.5 * (1.0 + t);
    w[i] = w[n - 1 - i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

// Quadratic Lagrange shapes on a segment, nodes at t = 0, 1/2, 1.
inline std::array<double, 3> seg_shapes(double t) {
  return {(2 * t - 1) * (t - 1), 4 * t * (1 - t), t * (2 * t - 1)};
}

inline std::array<double, 3> seg_shape_derivs(double t) {
  return {4 * t - 3, 4 - 8 * t, 4 * t - 1};
}

}  // namespace wginvis
