#pragma once

#include <functional>
#include <ostream>

#include "wginvis/asymptotics.hpp"

namespace wginvis {

// Three chimneys give exactly the degrees of freedom needed to cancel the
// three real conditions Re s-, Im s-, Im s+ (the fourth, Re s+, then follows
// from energy conservation up to the trivial branch s+ = -2).
struct DesignConfig {
  double k = 0.8 * pi;
  double eps = 0.3;
  std::array<double, 3> positions{};  // zero-initialized: filled by defaults below
  double stop_tol = 1e-9;
  int max_iter = 50;
  std::array<double, 3> t_init{0, 0, 0};  // tan(k * tau) per chimney
  double det_guard = 1e-6;
  WaveguideSpec solve_template;  // carries L, retained modes, mesh targets

  static std::array<double, 3> default_positions(double k) {
    return {-3.0 * pi / (4.0 * k), 0.0, 3.0 * pi / (4.0 * k)};
  }
};

// Rows: cos(2 k x_m), sin(2 k x_m), 1.  Invertibility is exactly the
// solvability of the three cancellation conditions at leading order.
inline Eigen::Matrix3d build_matrix(double k, const std::array<double, 3>& x,
                                    double det_guard = 1e-6) {
  Eigen::Matrix3d M;
  for (int m = 0; m < 3; ++m) {
    M(0, m) = std::cos(2.0 * k * x[m]);
    M(1, m) = std::sin(2.0 * k * x[m]);
    M(2, m) = 1.0;
  }
  if (std::abs(M.determinant()) <= det_guard)
    throw ConfigError("chimney placement matrix nearly singular, |det| = " +
                      fmt17(std::abs(M.determinant())));
  return M;
}

struct DesignIterate {
  int iter = 0;
  std::array<double, 3> t{}, h{};
  cplx s_minus{}, s_plus{};
  double step_norm = 0;
};

struct DesignState {
  std::vector<DesignIterate> history;
  std::array<double, 3> t_final{}, tau_final{}, h_final{};
  cplx s_minus_final{}, s_plus_final{};
  bool converged = false;
  int iterations = 0;  // updates that actually moved the heights
  WaveguideSpec final_spec;
};

inline WaveguideSpec design_spec(const DesignConfig& cfg, const std::array<double, 3>& t) {
  WaveguideSpec s = cfg.solve_template;
  s.k = cfg.k;
  s.chimneys.clear();
  for (int m = 0; m < 3; ++m) {
    double tau = std::atan(t[m]) / cfg.k;
    s.chimneys.push_back({cfg.positions[m], pi / cfg.k + tau, cfg.eps});
  }
  return s;
}

using MeasureFn = std::function<std::pair<cplx, cplx>(const WaveguideSpec&)>;

inline std::pair<cplx, cplx> fem_measure(const WaveguideSpec& spec) {
  auto out = solve_scattering(spec);
  auto r = extract_by_overlap(out);
  return {r.s_minus, r.s_plus};
}

// First-order surrogate: the exact zero of this model is t = 0, and the
// update below is exact Newton for it, so it lands there in one step.
inline MeasureFn surrogate_measure(const DesignConfig& cfg) {
  return [cfg](const WaveguideSpec& spec) { return predicted_coefficients(spec); };
}

// One fixed-point update from measured amplitudes.
inline std::array<double, 3> fixed_point_step(const Eigen::Matrix3d& Minv, double eps,
                                              cplx s_minus, cplx s_plus) {
  cplx ism = iu * s_minus, isp = iu * s_plus;
  Eigen::Vector3d r(ism.real(), ism.imag(), isp.real());
  Eigen::Vector3d d = (2.0 / eps) * (Minv * r);
  return {d(0), d(1), d(2)};
}

inline DesignState run_design(const DesignConfig& cfg, const MeasureFn& measure = fem_measure) {
  Eigen::Matrix3d M = build_matrix(cfg.k, cfg.positions, cfg.det_guard);
  Eigen::Matrix3d Minv = M.inverse();
  double quarter = 0.5 * pi / cfg.k;

  DesignState st;
  std::array<double, 3> t = cfg.t_init;
  for (int j = 0; j < cfg.max_iter; ++j) {
    WaveguideSpec spec = design_spec(cfg, t);
    for (const auto& c : spec.chimneys)
      if (resonance_distance(cfg.k, c.height) < 1e-3 * quarter)
        throw NonConvergence("design drifted into the resonance guard band at height " +
                             fmt17(c.height));
    auto [sm, sp] = measure(spec);
    auto d = fixed_point_step(Minv, cfg.eps, sm, sp);
    double step = std::abs(d[0]) + std::abs(d[1]) + std::abs(d[2]);

    DesignIterate it;
    it.iter = j;
    it.t = t;
    for (int m = 0; m < 3; ++m) it.h[m] = spec.chimneys[m].height;
    it.s_minus = sm;
    it.s_plus = sp;
    it.step_norm = step;
    st.history.push_back(it);

    if (step <= cfg.stop_tol) {
      st.converged = true;
      st.iterations = j;
      st.t_final = t;
      st.s_minus_final = sm;
      st.s_plus_final = sp;
      st.final_spec = spec;
      for (int m = 0; m < 3; ++m) {
        st.tau_final[m] = std::atan(t[m]) / cfg.k;
        st.h_final[m] = spec.chimneys[m].height;
      }
      return st;
    }
    for (int m = 0; m < 3; ++m) t[m] += d[m];
  }
  st.converged = false;
  st.iterations = cfg.max_iter;
  st.t_final = t;
  if (!st.history.empty()) {
    st.s_minus_final = st.history.back().s_minus;
    st.s_plus_final = st.history.back().s_plus;
  }
  st.final_spec = design_spec(cfg, t);
  for (int m = 0; m < 3; ++m) {
    st.tau_final[m] = std::atan(t[m]) / cfg.k;
    st.h_final[m] = st.final_spec.chimneys[m].height;
  }
  return st;
}

inline void write_design_csv(const DesignState& st, const std::vector<std::string>& header,
                             std::ostream& os) {
  for (const auto& h : header) os << "# " << h << "\n";
  os << "iter,t1,t2,t3,h1,h2,h3,Re_s_minus,Im_s_minus,Re_s_plus,Im_s_plus,"
        "ln_abs_s_minus,ln_abs_s_plus,step_norm\n";
  for (const auto& it : st.history) {
    os << it.iter;
    for (double v : it.t) os << "," << fmt17(v);
    for (double v : it.h) os << "," << fmt17(v);
    os << "," << fmt17(it.s_minus.real()) << "," << fmt17(it.s_minus.imag());
    os << "," << fmt17(it.s_plus.real()) << "," << fmt17(it.s_plus.imag());
    os << "," << fmt17(std::log(std::abs(it.s_minus)));
    os << "," << fmt17(std::log(std::abs(it.s_plus)));
    os << "," << fmt17(it.step_norm) << "\n";
  }
}

}  // namespace wginvis
