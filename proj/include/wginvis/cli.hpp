#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wginvis/asymptotics.hpp"
#include "wginvis/designer.hpp"
#include "wginvis/obstruction.hpp"
#include "wginvis/oracle_fd.hpp"
#include "wginvis/scattering.hpp"
#include "wginvis/solver.hpp"

namespace wginvis {

struct ObstructionOptions {
  bool explicit_interval = false;
  double x_minus = 0, x_plus = 0;
  double tol = 1e-10;
  int max_iter = 200;
};

struct SweepOptions {
  std::string mode = "design";  // or "scaling"
  std::vector<double> eps_values{0.3, 0.2, 0.1};
  int max_iter = 15;
  int fit_points = 4;
};

struct OracleOptions {
  double delta = 0.025;
  double snap_tol = -1.0;  // negative: one grid cell
};

struct RunConfig {
  std::string command;
  WaveguideSpec spec;
  DesignConfig design;
  ObstructionOptions obstruction;
  SweepOptions sweep;
  OracleOptions oracle;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int threads = 1;
  nlohmann::json resolved;  // echoed into every output file
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const char* where,
                           std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok)
      throw ConfigError(std::string("unknown key '") + it.key() + "' in " + where);
  }
}

inline double get_num(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string(key) + " must be a number");
  return j.at(key).get<double>();
}

inline int get_int(const nlohmann::json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
  return j.at(key).get<int>();
}

inline std::vector<double> get_vec(const nlohmann::json& j, const char* key) {
  std::vector<double> v;
  if (!j.contains(key)) return v;
  if (!j.at(key).is_array()) throw ConfigError(std::string(key) + " must be an array");
  for (const auto& e : j.at(key)) {
    if (!e.is_number()) throw ConfigError(std::string(key) + " must hold numbers");
    v.push_back(e.get<double>());
  }
  return v;
}

inline std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

// Batched fan-out: launches at most `threads` tasks at a time and collects in
// input order, so the emitted files never depend on scheduling.
template <typename R, typename F>
std::vector<R> parallel_map(int threads, int n, F&& f) {
  std::vector<R> out(n);
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) out[i] = f(i);
    return out;
  }
  int at = 0;
  while (at < n) {
    int batch = std::min(threads, n - at);
    std::vector<std::future<R>> fut;
    for (int b = 0; b < batch; ++b)
      fut.push_back(std::async(std::launch::async, [&f, i = at + b] { return f(i); }));
    for (int b = 0; b < batch; ++b) out[at + b] = fut[b].get();
    at += batch;
  }
  return out;
}

}  // namespace detail

inline WaveguideSpec parse_spec(const nlohmann::json& j) {
  detail::reject_unknown(j, "spec",
                         {"k", "eps", "chimney_x", "chimney_h", "trunc_half_length", "dtn_terms",
                          "mesh_target_h", "mesh_target_h_y", "min_cells_across",
                          "corner_levels"});
  WaveguideSpec s;
  s.k = detail::get_num(j, "k", s.k);
  s.trunc_half_length = detail::get_num(j, "trunc_half_length", s.trunc_half_length);
  s.dtn_terms = detail::get_int(j, "dtn_terms", s.dtn_terms);
  s.mesh_target_h = detail::get_num(j, "mesh_target_h", s.mesh_target_h);
  s.mesh_target_h_y = detail::get_num(j, "mesh_target_h_y", s.mesh_target_h_y);
  s.min_cells_across = detail::get_int(j, "min_cells_across", s.min_cells_across);
  s.corner_levels = detail::get_int(j, "corner_levels", s.corner_levels);
  auto xs = detail::get_vec(j, "chimney_x");
  auto hs = detail::get_vec(j, "chimney_h");
  if (xs.size() != hs.size())
    throw ConfigError("chimney_x and chimney_h must have the same length");
  double eps = detail::get_num(j, "eps", 0.3);
  if (!xs.empty() && !(eps > 0.0)) throw ConfigError("eps must be positive");
  for (size_t m = 0; m < xs.size(); ++m) s.chimneys.push_back({xs[m], hs[m], eps});
  return s;
}

inline nlohmann::json spec_to_json(const WaveguideSpec& s) {
  nlohmann::json j;
  j["k"] = s.k;
  j["trunc_half_length"] = s.trunc_half_length;
  j["dtn_terms"] = s.dtn_terms;
  j["mesh_target_h"] = s.mesh_target_h;
  j["mesh_target_h_y"] = s.mesh_target_h_y;
  j["min_cells_across"] = s.min_cells_across;
  j["corner_levels"] = s.corner_levels;
  std::vector<double> xs, hs;
  for (const auto& c : s.chimneys) {
    xs.push_back(c.x_center);
    hs.push_back(c.height);
  }
  j["chimney_x"] = xs;
  j["chimney_h"] = hs;
  j["eps"] = s.chimneys.empty() ? 0.0 : s.chimneys.front().width;
  return j;
}

inline RunConfig parse_run_config(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  detail::reject_unknown(doc, "config",
                         {"command", "spec", "design", "obstruction", "sweep", "oracle", "seed"});
  RunConfig cfg;
  if (!doc.contains("command") || !doc.at("command").is_string())
    throw ConfigError("config needs a 'command' string");
  cfg.command = doc.at("command").get<std::string>();
  const char* known[] = {"solve", "design", "predict", "obstruction", "sweep", "oracle-compare"};
  bool ok = false;
  for (const char* c : known)
    if (cfg.command == c) ok = true;
  if (!ok) throw ConfigError("unknown command '" + cfg.command + "'");

  cfg.spec = parse_spec(doc.contains("spec") ? doc.at("spec") : nlohmann::json::object());

  {
    nlohmann::json j = doc.contains("design") ? doc.at("design") : nlohmann::json::object();
    detail::reject_unknown(j, "design",
                           {"eps", "positions", "stop_tol", "max_iter", "t_init", "det_guard"});
    cfg.design.k = cfg.spec.k;
    cfg.design.eps = detail::get_num(j, "eps", cfg.design.eps);
    cfg.design.positions = DesignConfig::default_positions(cfg.spec.k);
    auto pos = detail::get_vec(j, "positions");
    if (!pos.empty()) {
      if (pos.size() != 3) throw ConfigError("design.positions must hold three abscissae");
      std::copy(pos.begin(), pos.end(), cfg.design.positions.begin());
    }
    cfg.design.stop_tol = detail::get_num(j, "stop_tol", cfg.design.stop_tol);
    cfg.design.max_iter = detail::get_int(j, "max_iter", cfg.design.max_iter);
    auto ti = detail::get_vec(j, "t_init");
    if (!ti.empty()) {
      if (ti.size() != 3) throw ConfigError("design.t_init must hold three values");
      std::copy(ti.begin(), ti.end(), cfg.design.t_init.begin());
    }
    cfg.design.det_guard = detail::get_num(j, "det_guard", cfg.design.det_guard);
    cfg.design.solve_template = cfg.spec;
    cfg.design.solve_template.chimneys.clear();
    if (!(cfg.design.stop_tol > 0.0)) throw ConfigError("design.stop_tol must be positive");
    if (cfg.design.max_iter < 1) throw ConfigError("design.max_iter must be at least 1");
  }

  {
    nlohmann::json j =
        doc.contains("obstruction") ? doc.at("obstruction") : nlohmann::json::object();
    detail::reject_unknown(j, "obstruction", {"x_minus", "x_plus", "tol", "max_iter"});
    if (j.contains("x_minus") != j.contains("x_plus"))
      throw ConfigError("obstruction.x_minus and x_plus come as a pair");
    if (j.contains("x_minus")) {
      cfg.obstruction.explicit_interval = true;
      cfg.obstruction.x_minus = detail::get_num(j, "x_minus", 0.0);
      cfg.obstruction.x_plus = detail::get_num(j, "x_plus", 0.0);
    }
    cfg.obstruction.tol = detail::get_num(j, "tol", cfg.obstruction.tol);
    cfg.obstruction.max_iter = detail::get_int(j, "max_iter", cfg.obstruction.max_iter);
    if (!(cfg.obstruction.tol > 0.0)) throw ConfigError("obstruction.tol must be positive");
  }

  {
    nlohmann::json j = doc.contains("sweep") ? doc.at("sweep") : nlohmann::json::object();
    detail::reject_unknown(j, "sweep", {"mode", "eps_values", "max_iter", "fit_points"});
    if (j.contains("mode")) {
      if (!j.at("mode").is_string()) throw ConfigError("sweep.mode must be a string");
      cfg.sweep.mode = j.at("mode").get<std::string>();
    }
    if (cfg.sweep.mode != "design" && cfg.sweep.mode != "scaling")
      throw ConfigError("sweep.mode must be 'design' or 'scaling'");
    auto ev = detail::get_vec(j, "eps_values");
    if (!ev.empty()) cfg.sweep.eps_values = ev;
    for (double e : cfg.sweep.eps_values)
      if (!(e > 0.0)) throw ConfigError("sweep.eps_values must be positive");
    cfg.sweep.max_iter = detail::get_int(j, "max_iter", cfg.sweep.max_iter);
    cfg.sweep.fit_points = detail::get_int(j, "fit_points", cfg.sweep.fit_points);
  }

  {
    nlohmann::json j = doc.contains("oracle") ? doc.at("oracle") : nlohmann::json::object();
    detail::reject_unknown(j, "oracle", {"delta", "snap_tol"});
    cfg.oracle.delta = detail::get_num(j, "delta", cfg.oracle.delta);
    cfg.oracle.snap_tol = detail::get_num(j, "snap_tol", cfg.oracle.snap_tol);
    if (!(cfg.oracle.delta > 0.0)) throw ConfigError("oracle.delta must be positive");
  }

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_integer() || doc.at("seed").get<std::int64_t>() < 0)
      throw ConfigError("seed must be a nonnegative integer");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
  }

  nlohmann::json r;
  r["command"] = cfg.command;
  r["spec"] = spec_to_json(cfg.spec);
  r["design"] = {{"eps", cfg.design.eps},
                 {"positions", cfg.design.positions},
                 {"stop_tol", cfg.design.stop_tol},
                 {"max_iter", cfg.design.max_iter},
                 {"t_init", cfg.design.t_init},
                 {"det_guard", cfg.design.det_guard}};
  r["obstruction"] = {{"tol", cfg.obstruction.tol}, {"max_iter", cfg.obstruction.max_iter}};
  if (cfg.obstruction.explicit_interval) {
    r["obstruction"]["x_minus"] = cfg.obstruction.x_minus;
    r["obstruction"]["x_plus"] = cfg.obstruction.x_plus;
  }
  r["sweep"] = {{"mode", cfg.sweep.mode},
                {"eps_values", cfg.sweep.eps_values},
                {"max_iter", cfg.sweep.max_iter},
                {"fit_points", cfg.sweep.fit_points}};
  r["oracle"] = {{"delta", cfg.oracle.delta}, {"snap_tol", cfg.oracle.snap_tol}};
  r["seed"] = cfg.seed;
  cfg.resolved = std::move(r);
  return cfg;
}

// Dotted-path override, value parsed as JSON when possible, else kept verbatim.
inline void apply_override(nlohmann::json& doc, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like path.to.key=value, got '" + kv + "'");
  std::string path = kv.substr(0, eq), rhs = kv.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(rhs, nullptr, false);
  if (value.is_discarded()) value = rhs;

  nlohmann::json* p = &doc;
  size_t at = 0;
  while (true) {
    size_t dot = path.find('.', at);
    std::string tok = path.substr(at, dot == std::string::npos ? dot : dot - at);
    if (tok.empty()) throw ConfigError("override path has an empty segment: '" + path + "'");
    if (dot == std::string::npos) {
      (*p)[tok] = value;
      return;
    }
    if (!p->contains(tok)) (*p)[tok] = nlohmann::json::object();
    p = &(*p)[tok];
    if (!p->is_object()) throw ConfigError("override path crosses a non-object at '" + tok + "'");
    at = dot + 1;
  }
}

namespace detail {

struct Artifact {
  std::ofstream os;
  Artifact(const RunConfig& cfg, const std::string& name) {
    std::filesystem::create_directories(cfg.out_dir);
    auto path = std::filesystem::path(cfg.out_dir) / name;
    os.open(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << "# wginvis " << cfg.command << "\n";
    os << "# config " << cfg.resolved.dump() << "\n";
  }
};

inline void write_coefficient_record(std::ostream& os, const WaveguideSpec& spec,
                                     const ScatteringResult& r) {
  auto kv = [&](const std::string& key, double v) { os << key << " = " << fmt17(v) << "\n"; };
  kv("k", spec.k);
  kv("eps", spec.chimneys.empty() ? 0.0 : spec.chimneys.front().width);
  for (size_t m = 0; m < spec.chimneys.size(); ++m) {
    kv("x_" + std::to_string(m + 1), spec.chimneys[m].x_center);
    kv("h_" + std::to_string(m + 1), spec.chimneys[m].height);
  }
  kv("Re_s_minus", r.s_minus.real());
  kv("Im_s_minus", r.s_minus.imag());
  kv("Re_s_plus", r.s_plus.real());
  kv("Im_s_plus", r.s_plus.imag());
  kv("Re_R", r.reflection.real());
  kv("Im_R", r.reflection.imag());
  kv("Re_T", r.transmission.real());
  kv("Im_T", r.transmission.imag());
  kv("energy_defect", r.energy_defect);
  kv("optical_defect", r.optical_defect);
  kv("energy_integral_defect", r.energy_integral_defect);
}

inline void export_solution(const RunConfig& cfg, const SolveOutput& out,
                            const ScatteringResult& r) {
  {
    Artifact a(cfg, "field.csv");
    write_field(out.mesh, out.total, a.os);
  }
  {
    Artifact a(cfg, "mesh.txt");
    write_mesh(out.mesh, a.os);
  }
  {
    Artifact a(cfg, "coefficients.txt");
    write_coefficient_record(a.os, out.spec, r);
  }
}

inline void run_solve(const RunConfig& cfg) {
  SolveOutput out = solve_scattering(cfg.spec);
  ScatteringResult r = extract_by_overlap(out);
  export_solution(cfg, out, r);
}

inline void run_predict(const RunConfig& cfg) {
  FirstOrderPrediction p = first_order(cfg.spec.k, cfg.spec.chimneys);
  {
    Artifact a(cfg, "predict.csv");
    a.os << "m,x,h,tan_kh,Re_s1_minus,Im_s1_minus,Re_s1_plus,Im_s1_plus,Re_tip,Im_tip\n";
    for (size_t m = 0; m < cfg.spec.chimneys.size(); ++m) {
      const Chimney& c = cfg.spec.chimneys[m];
      double t = std::tan(cfg.spec.k * c.height);
      cplx one_minus = 0.5 * iu * std::exp(2.0 * iu * cfg.spec.k * c.x_center) * t;
      cplx one_plus = 0.5 * iu * t;
      a.os << (m + 1) << "," << fmt17(c.x_center) << "," << fmt17(c.height) << "," << fmt17(t)
           << "," << fmt17(one_minus.real()) << "," << fmt17(one_minus.imag()) << ","
           << fmt17(one_plus.real()) << "," << fmt17(one_plus.imag()) << ","
           << fmt17(p.tip_amplitudes[m].real()) << "," << fmt17(p.tip_amplitudes[m].imag())
           << "\n";
    }
  }
  auto [pm, pp] = predicted_coefficients(cfg.spec);
  Artifact a(cfg, "predict_summary.txt");
  auto kv = [&](const char* key, double v) { a.os << key << " = " << fmt17(v) << "\n"; };
  kv("k", cfg.spec.k);
  kv("eps", cfg.spec.chimneys.empty() ? 0.0 : cfg.spec.chimneys.front().width);
  kv("Re_s1_minus", p.s1_minus.real());
  kv("Im_s1_minus", p.s1_minus.imag());
  kv("Re_s1_plus", p.s1_plus.real());
  kv("Im_s1_plus", p.s1_plus.imag());
  kv("Re_predicted_s_minus", pm.real());
  kv("Im_predicted_s_minus", pm.imag());
  kv("Re_predicted_s_plus", pp.real());
  kv("Im_predicted_s_plus", pp.imag());
}

inline void run_design_cmd(const RunConfig& cfg) {
  DesignState st = run_design(cfg.design);
  {
    Artifact a(cfg, "design_convergence.csv");
    write_design_csv(st, {}, a.os);
  }
  {
    Artifact a(cfg, "final_spec.json");
    a.os << spec_to_json(st.final_spec).dump(2) << "\n";
  }
  SolveOutput out = solve_scattering(st.final_spec);
  ScatteringResult r = extract_by_overlap(out);
  export_solution(cfg, out, r);
  if (!st.converged)
    throw NonConvergence("design stopped at step norm " +
                         fmt17(st.history.empty() ? 0.0 : st.history.back().step_norm) +
                         " after " + std::to_string(st.iterations) + " iterations");
}

inline void run_obstruction(const RunConfig& cfg) {
  ObstructionResult r =
      cfg.obstruction.explicit_interval
          ? obstruction_bound(cfg.spec, cfg.obstruction.x_minus, cfg.obstruction.x_plus,
                              cfg.obstruction.tol, cfg.obstruction.max_iter)
          : obstruction_bound(cfg.spec, cfg.obstruction.tol, cfg.obstruction.max_iter);
  Artifact a(cfg, "obstruction.txt");
  auto kv = [&](const char* key, double v) { a.os << key << " = " << fmt17(v) << "\n"; };
  kv("mu1", r.mu1);
  kv("lambda1", r.lambda1);
  kv("k_star_bound", r.k_star_bound);
  kv("minmax_upper", r.minmax_upper);
  kv("x_minus", r.x_minus);
  kv("x_plus", r.x_plus);
  a.os << "n_dofs = " << r.n_dofs << "\n";
  kv("residual", r.residual);
  a.os << "iterations = " << r.iterations << "\n";
}

inline void run_sweep(const RunConfig& cfg) {
  int n = int(cfg.sweep.eps_values.size());
  if (cfg.sweep.mode == "design") {
    auto states = parallel_map<DesignState>(cfg.threads, n, [&](int i) {
      DesignConfig d = cfg.design;
      d.eps = cfg.sweep.eps_values[i];
      d.max_iter = cfg.sweep.max_iter;
      return run_design(d);
    });
    {
      Artifact a(cfg, "sweep_design.csv");
      a.os << "eps,iter,ln_abs_s_minus,ln_abs_s_plus,step_norm\n";
      for (int i = 0; i < n; ++i)
        for (const auto& it : states[i].history)
          a.os << fmt17(cfg.sweep.eps_values[i]) << "," << it.iter << ","
               << fmt17(std::log(std::abs(it.s_minus))) << ","
               << fmt17(std::log(std::abs(it.s_plus))) << "," << fmt17(it.step_norm) << "\n";
    }
    Artifact a(cfg, "sweep_summary.csv");
    a.os << "eps,converged,iterations,abs_s_minus,abs_s_plus,tau1,tau2,tau3,max_abs_tau\n";
    for (int i = 0; i < n; ++i) {
      const DesignState& st = states[i];
      double mt = 0;
      for (double t : st.tau_final) mt = std::max(mt, std::abs(t));
      a.os << fmt17(cfg.sweep.eps_values[i]) << "," << (st.converged ? 1 : 0) << ","
           << st.iterations << "," << fmt17(std::abs(st.s_minus_final)) << ","
           << fmt17(std::abs(st.s_plus_final));
      for (double t : st.tau_final) a.os << "," << fmt17(t);
      a.os << "," << fmt17(mt) << "\n";
    }
    return;
  }

  // scaling: heights pinned to the half-wave value, widths swept
  WaveguideSpec tmpl = cfg.spec;
  if (tmpl.chimneys.empty())
    for (double x : cfg.design.positions) tmpl.chimneys.push_back({x, pi / tmpl.k, 0.1});
  auto pairs = parallel_map<std::pair<cplx, cplx>>(cfg.threads, n, [&](int i) {
    WaveguideSpec s = tmpl;
    for (auto& c : s.chimneys) {
      c.width = cfg.sweep.eps_values[i];
      c.height = pi / s.k;
    }
    auto r = extract_by_overlap(solve_scattering(s));
    return std::make_pair(r.s_minus, r.s_plus);
  });
  ScalingProbe probe;
  probe.eps = cfg.sweep.eps_values;
  for (auto& [sm, sp] : pairs) {
    probe.s_minus.push_back(sm);
    probe.s_plus.push_back(sp);
  }
  auto measure = [&](const WaveguideSpec& s) {
    for (int i = 0; i < n; ++i)
      if (s.chimneys.front().width == probe.eps[i])
        return std::make_pair(probe.s_minus[i], probe.s_plus[i]);
    throw SolverError("scaling sweep lost a width");
  };
  probe = residual_scaling_probe(tmpl, cfg.sweep.eps_values, cfg.sweep.fit_points, measure);
  {
    Artifact a(cfg, "sweep_scaling.csv");
    a.os << "eps,Re_s_minus,Im_s_minus,Re_s_plus,Im_s_plus,abs_s_minus,abs_s_plus\n";
    for (int i = 0; i < n; ++i)
      a.os << fmt17(probe.eps[i]) << "," << fmt17(probe.s_minus[i].real()) << ","
           << fmt17(probe.s_minus[i].imag()) << "," << fmt17(probe.s_plus[i].real()) << ","
           << fmt17(probe.s_plus[i].imag()) << "," << fmt17(std::abs(probe.s_minus[i])) << ","
           << fmt17(std::abs(probe.s_plus[i])) << "\n";
  }
  Artifact a(cfg, "sweep_summary.txt");
  a.os << "slope_minus = " << fmt17(probe.slope_minus) << "\n";
  a.os << "slope_plus = " << fmt17(probe.slope_plus) << "\n";
}

inline void run_oracle_compare(const RunConfig& cfg) {
  FDGrid g = make_fd_grid(cfg.spec, cfg.oracle.delta, cfg.oracle.snap_tol);
  WaveguideSpec base = g.snapped;  // both solvers see identical geometry

  auto fd1 = fd_solve(base, cfg.oracle.delta);
  auto fd2 = fd_solve(base, cfg.oracle.delta / 2.0);
  WaveguideSpec fe = base;
  auto fem1 = extract_by_overlap(solve_scattering(fe));
  fe.mesh_target_h = base.mesh_target_h / 2.0;
  auto fem2 = extract_by_overlap(solve_scattering(fe));

  auto rich = [](cplx coarse, cplx fine, double factor) {
    return fine + (fine - coarse) / factor;
  };
  cplx fdm = rich(fd1.s_minus, fd2.s_minus, 3.0), fdp = rich(fd1.s_plus, fd2.s_plus, 3.0);
  cplx fem_m = rich(fem1.s_minus, fem2.s_minus, 15.0),
       fem_p = rich(fem1.s_plus, fem2.s_plus, 15.0);

  {
    Artifact a(cfg, "oracle_compare.csv");
    a.os << "route,resolution,Re_s_minus,Im_s_minus,Re_s_plus,Im_s_plus\n";
    auto row = [&](const char* route, double res, cplx sm, cplx sp) {
      a.os << route << "," << fmt17(res) << "," << fmt17(sm.real()) << "," << fmt17(sm.imag())
           << "," << fmt17(sp.real()) << "," << fmt17(sp.imag()) << "\n";
    };
    row("fd", cfg.oracle.delta, fd1.s_minus, fd1.s_plus);
    row("fd", cfg.oracle.delta / 2.0, fd2.s_minus, fd2.s_plus);
    row("fd_richardson", 0.0, fdm, fdp);
    row("fem", base.mesh_target_h, fem1.s_minus, fem1.s_plus);
    row("fem", base.mesh_target_h / 2.0, fem2.s_minus, fem2.s_plus);
    row("fem_richardson", 0.0, fem_m, fem_p);
  }
  Artifact a(cfg, "oracle_summary.txt");
  auto kv = [&](const char* key, double v) { a.os << key << " = " << fmt17(v) << "\n"; };
  kv("max_snap", g.max_snap);
  kv("abs_diff_s_minus", std::abs(fdm - fem_m));
  kv("abs_diff_s_plus", std::abs(fdp - fem_p));
  kv("error_bar_minus",
     std::abs(fd2.s_minus - fd1.s_minus) / 3.0 + std::abs(fem2.s_minus - fem1.s_minus) / 15.0);
  kv("error_bar_plus",
     std::abs(fd2.s_plus - fd1.s_plus) / 3.0 + std::abs(fem2.s_plus - fem1.s_plus) / 15.0);
}

}  // namespace detail

inline void run(const RunConfig& cfg) {
  if (cfg.command == "solve")
    detail::run_solve(cfg);
  else if (cfg.command == "predict")
    detail::run_predict(cfg);
  else if (cfg.command == "design")
    detail::run_design_cmd(cfg);
  else if (cfg.command == "obstruction")
    detail::run_obstruction(cfg);
  else if (cfg.command == "sweep")
    detail::run_sweep(cfg);
  else if (cfg.command == "oracle-compare")
    detail::run_oracle_compare(cfg);
  else
    throw ConfigError("unknown command '" + cfg.command + "'");
}

inline int run_cli(int argc, const char* const* argv) {
  CLI::App app{"thin-chimney waveguide toolkit"};
  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  int threads = 1;
  app.add_option("--config", config_path, "configuration file (JSON)")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--override", overrides, "dotted-path override key=value (repeatable)");
  app.add_option("--threads", threads, "sweep fan-out width");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& ov : overrides) apply_override(doc, ov);
    RunConfig cfg = parse_run_config(doc);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    cfg.threads = std::max(1, threads);
    run(cfg);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << detail::one_line(e.what()) << "\n";
    return 2;
  } catch (const NonConvergence& e) {
    std::cerr << "error: nonconvergence: " << detail::one_line(e.what()) << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: solver: " << detail::one_line(e.what()) << "\n";
    return 3;
  }
}

}  // namespace wginvis
