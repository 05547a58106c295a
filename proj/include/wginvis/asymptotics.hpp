#pragma once

#include <functional>

#include "wginvis/scattering.hpp"

namespace wginvis {

// Leading-order far-field model for thin chimneys: each chimney acts as a
// point source at its mouth with strength set by tan(k * height), so the
// first-order piston amplitudes are width-independent and the forward one is
// purely imaginary.  That last fact is the structural obstruction: no
// arrangement can cancel the forward amplitude at this order alone, which is
// why the designer drives the measured coefficients rather than the model.
struct FirstOrderPrediction {
  cplx s1_minus{}, s1_plus{};
  std::vector<cplx> tip_amplitudes;  // source strength per chimney
};

inline FirstOrderPrediction first_order(double k, const std::vector<Chimney>& chimneys) {
  FirstOrderPrediction p;
  cplx accm = 0, accp = 0;
  for (const auto& c : chimneys) {
    if (resonance_distance(k, c.height) < 1e-3 * (0.5 * pi / k))
      throw ConfigError("chimney height " + fmt17(c.height) +
                        " sits in the resonance guard band; tan(k h) is meaningless there");
    double tn = std::tan(k * c.height);
    accm += std::exp(2.0 * iu * k * c.x_center) * tn;
    accp += tn;
    p.tip_amplitudes.push_back(-(k / pi) * tn * piston_wave(k, c.x_center, +1));
  }
  p.s1_minus = 0.5 * iu * accm;
  p.s1_plus = 0.5 * iu * accp;
  return p;
}

// Width-scaled prediction for a concrete spec.
inline std::pair<cplx, cplx> predicted_coefficients(const WaveguideSpec& spec) {
  auto p = first_order(spec.k, spec.chimneys);
  double eps = spec.chimneys.empty() ? 0.0 : spec.chimneys[0].width;
  return {eps * p.s1_minus, eps * p.s1_plus};
}

// One-dimensional standing profile inside a chimney at leading order; it
// takes the prescribed value at the mouth and is wall-closed at the tip.
// Heights approaching an odd quarter-wavelength multiple blow it up.
inline cplx chimney_profile(double k, double height, cplx boundary_value, double y) {
  if (resonance_distance(k, height) < 1e-3 * (0.5 * pi / k))
    throw ConfigError("chimney height " + fmt17(height) + " sits in the resonance guard band");
  double t = y - 1.0;
  return boundary_value * (std::cos(k * t) + std::tan(k * height) * std::sin(k * t));
}

// Mouth value taken from the incident piston wave at the chimney abscissa.
inline cplx chimney_profile(double k, const Chimney& c, double y) {
  return chimney_profile(k, c.height, piston_wave(k, c.x_center, +1), y);
}

struct ScalingProbe {
  std::vector<double> eps;
  std::vector<cplx> s_minus, s_plus;
  double slope_minus = 0, slope_plus = 0;  // d log|s| / d log eps, smallest widths
};

namespace detail {
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = int(x.size());
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}
}  // namespace detail

// Residual of the first-order model at the quarter-wave tuning where its own
// contribution cancels: heights are pinned to pi/k, so the measured
// amplitudes are pure remainder and their decay rate in the width is the
// quantity of interest.  The slope is fitted on the `fit_points` smallest
// widths.
inline ScalingProbe residual_scaling_probe(
    const WaveguideSpec& tmpl, const std::vector<double>& eps_list, int fit_points = 4,
    const std::function<std::pair<cplx, cplx>(const WaveguideSpec&)>& measure = {}) {
  ScalingProbe probe;
  auto meas = measure ? measure : [](const WaveguideSpec& s) {
    auto out = solve_scattering(s);
    auto r = extract_by_overlap(out);
    return std::make_pair(r.s_minus, r.s_plus);
  };
  for (double e : eps_list) {
    WaveguideSpec s = tmpl;
    for (auto& c : s.chimneys) {
      c.width = e;
      c.height = pi / s.k;
    }
    auto [sm, sp] = meas(s);
    probe.eps.push_back(e);
    probe.s_minus.push_back(sm);
    probe.s_plus.push_back(sp);
  }
  std::vector<size_t> idx(probe.eps.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return probe.eps[a] < probe.eps[b]; });
  int use = std::min<int>(fit_points, int(idx.size()));
  std::vector<double> lx, lm, lp;
  for (int i = 0; i < use; ++i) {
    size_t j = idx[i];
    lx.push_back(std::log(probe.eps[j]));
    lm.push_back(std::log(std::abs(probe.s_minus[j])));
    lp.push_back(std::log(std::abs(probe.s_plus[j])));
  }
  probe.slope_minus = detail::fit_slope(lx, lm);
  probe.slope_plus = detail::fit_slope(lx, lp);
  return probe;
}

}  // namespace wginvis
