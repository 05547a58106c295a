#include <catch2/catch_amalgamated.hpp>

#include "wginvis/asymptotics.hpp"

using namespace wginvis;
using Catch::Approx;

TEST_CASE("quarter-wave heights silence the closed-form model", "[asymptotics]") {
  double k = 0.8 * pi;
  std::vector<Chimney> ch = {{-3.0 * pi / (4.0 * k), pi / k, 0.3},
                             {0.0, pi / k, 0.3},
                             {3.0 * pi / (4.0 * k), pi / k, 0.3}};
  FirstOrderPrediction p = first_order(k, ch);
  REQUIRE(std::abs(p.s1_minus) < 1e-13);
  REQUIRE(std::abs(p.s1_plus) < 1e-13);
  for (cplx a : p.tip_amplitudes) REQUIRE(std::abs(a) < 1e-13);
}

TEST_CASE("single chimney with unit tangent", "[asymptotics]") {
  double k = 0.8 * pi;
  double h = 1.5625;  // k*h = 5 pi / 4, tangent exactly 1
  FirstOrderPrediction p = first_order(k, {{0.0, h, 0.1}});
  REQUIRE(p.s1_minus.real() == Approx(0.0).margin(1e-12));
  REQUIRE(p.s1_minus.imag() == Approx(0.5).epsilon(1e-12));
  REQUIRE(p.s1_plus.real() == Approx(0.0).margin(1e-12));
  REQUIRE(p.s1_plus.imag() == Approx(0.5).epsilon(1e-12));
}

TEST_CASE("resonant heights are rejected loudly", "[asymptotics]") {
  double k = 0.8 * pi;
  double quarter = 0.5 * pi / k;
  REQUIRE_THROWS_AS(first_order(k, {{0.0, quarter, 0.1}}), ConfigError);
  REQUIRE_THROWS_AS(first_order(k, {{0.0, 3.0 * quarter + 1e-4, 0.1}}), ConfigError);
  REQUIRE_THROWS_AS(chimney_profile(k, quarter, cplx(1, 0), 1.1), ConfigError);
}

TEST_CASE("standing profile honors its boundary data", "[asymptotics]") {
  double k = 0.8 * pi;
  cplx bv(0.7, -0.2);

  REQUIRE(chimney_profile(k, 1.1, bv, 1.0) == bv);
  // half-wave column flips the sign at the tip
  cplx tip = chimney_profile(k, pi / k, bv, 1.0 + pi / k);
  REQUIRE(std::abs(tip + bv) < 1e-12);

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    double h;
    do
      h = rng.uniform(0.3, 2.2);
    while (resonance_distance(k, h) < 0.05 * (0.5 * pi / k));
    double scale = std::abs(chimney_profile(k, h, bv, 1.0 + 0.5 * h)) + std::abs(bv);

    // closed tip: centered difference of the closed form vanishes
    double d = 1e-6;
    cplx fd = (chimney_profile(k, h, bv, 1.0 + h + d) - chimney_profile(k, h, bv, 1.0 + h - d)) /
              (2.0 * d);
    REQUIRE(std::abs(fd) < 1e-4 * k * scale);

    // the profile solves the 1D Helmholtz equation along the column
    int n = 8000;
    double dy = h / n, worst = 0, amp = 0;
    for (int i = 1; i < n; ++i) {
      double y = 1.0 + i * dy;
      cplx vm = chimney_profile(k, h, bv, y - dy);
      cplx v0 = chimney_profile(k, h, bv, y);
      cplx vp = chimney_profile(k, h, bv, y + dy);
      worst = std::max(worst, std::abs((vp - 2.0 * v0 + vm) / (dy * dy) + k * k * v0));
      amp = std::max(amp, std::abs(v0));
    }
    REQUIRE(worst <= 1e-6 * k * k * std::max(amp, 1.0));
  }
}

TEST_CASE("translating the layout spins only the backward term", "[asymptotics]") {
  double k = 0.7 * pi;
  std::vector<Chimney> ch = {{-0.5, 0.9, 0.2}, {0.3, 1.4, 0.2}};
  double shift = 0.37;
  std::vector<Chimney> moved = ch;
  for (auto& c : moved) c.x_center += shift;

  FirstOrderPrediction a = first_order(k, ch);
  FirstOrderPrediction b = first_order(k, moved);
  cplx phase = std::exp(2.0 * iu * k * shift);
  REQUIRE(std::abs(b.s1_minus - phase * a.s1_minus) < 1e-12 * (1.0 + std::abs(a.s1_minus)));
  REQUIRE(std::abs(b.s1_plus - a.s1_plus) < 1e-14);
}

TEST_CASE("forward first-order term is purely imaginary", "[asymptotics]") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    double k = rng.uniform(0.3 * pi, 0.9 * pi);
    double quarter = 0.5 * pi / k;
    std::vector<Chimney> ch;
    double tan_sum = 0;
    int n_ch = rng.uniform_int(1, 3);
    for (int m = 0; m < n_ch; ++m) {
      double h;
      do
        h = rng.uniform(0.3, 2.0);
      while (resonance_distance(k, h) < 0.05 * quarter);
      ch.push_back({rng.uniform(-2.0, 2.0), h, 0.1});
      tan_sum += std::tan(k * h);
    }
    FirstOrderPrediction p = first_order(k, ch);
    REQUIRE(p.s1_plus.real() == 0.0);
    cplx is_plus = iu * p.s1_plus;
    REQUIRE(is_plus.imag() == 0.0);
    REQUIRE(is_plus.real() == Approx(-0.5 * tan_sum).margin(1e-12 * (1.0 + std::abs(tan_sum))));
  }
}

TEST_CASE("slope fit recovers a synthetic power law exactly", "[asymptotics]") {
  WaveguideSpec tmpl;
  tmpl.k = 0.8 * pi;
  tmpl.chimneys = {{0.0, pi / tmpl.k, 0.3}};
  tmpl.trunc_half_length = 5.0;

  auto synthetic = [](const WaveguideSpec& s) {
    double e = s.chimneys[0].width;
    cplx v = std::pow(e, 1.5) * std::exp(iu * 0.3);
    return std::make_pair(v, 2.0 * v);
  };
  // shuffled widths: the fit must pick the smallest four on its own
  ScalingProbe probe =
      residual_scaling_probe(tmpl, {0.1, 0.4, 0.05, 0.2, 0.3}, 4, synthetic);
  REQUIRE(probe.slope_minus == Approx(1.5).margin(1e-9));
  REQUIRE(probe.slope_plus == Approx(1.5).margin(1e-9));
  REQUIRE(probe.eps.size() == 5);
}

TEST_CASE("prediction tracks the solver for a gently detuned layout", "[asymptotics]") {
  double k = 0.8 * pi;
  WaveguideSpec s;
  s.k = k;
  double tau = 0.01;
  s.chimneys = {{-3.0 * pi / (4.0 * k), pi / k + tau, 0.0},
                {0.0, pi / k, 0.0},
                {3.0 * pi / (4.0 * k), pi / k, 0.0}};
  s.trunc_half_length = 5.0;
  s.dtn_terms = 12;
  s.mesh_target_h = 0.08;

  double prev_err = -1.0;
  for (double eps : {0.2, 0.1}) {
    for (auto& c : s.chimneys) c.width = eps;
    auto [pm, pp] = predicted_coefficients(s);
    ScatteringResult r = extract_by_overlap(solve_scattering(s));
    double err = std::max(std::abs(r.s_minus - pm), std::abs(r.s_plus - pp));
    double budget = std::pow(eps, 1.5) * (1.0 + std::abs(std::log(eps)));
    REQUIRE(err <= budget);
    if (prev_err >= 0.0) REQUIRE(err <= 0.75 * prev_err);
    prev_err = err;
  }
}
