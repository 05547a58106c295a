#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <vector>

#include "wginvis/geometry.hpp"
#include "wginvis/modal.hpp"
#include "wginvis/scattering.hpp"

namespace wginvis {

// Independent finite-difference discretization of the same scattering
// problem, kept deliberately plain: uniform spacing, conservative control
// volumes, trapezoid modal projection at the ends.  It shares no mesh, no
// quadrature, and no assembly code with the finite element stack, which is
// what makes the cross-check meaningful.

struct FDGrid {
  double delta = 0;  // uniform spacing, 1/M
  int M = 0;         // cells across the unit strip height
  int nxc = 0;       // cell columns between the truncation lines
  WaveguideSpec snapped;  // geometry actually discretized
  double max_snap = 0;    // largest coordinate adjustment applied

  struct ChimCells {
    int j0 = 0, j1 = 0;  // footprint cell-column span [j0, j1)
    int rows = 0;        // cell rows above the strip
  };
  std::vector<ChimCells> chims;

  std::vector<int> col_start;  // node id of (column j, row 0)
  std::vector<int> col_rows;   // node rows in column j (M + 1 + extra)
  int n_nodes = 0;

  double x_of(int j) const { return -snapped.trunc_half_length + delta * j; }
  double y_of(int i) const { return delta * i; }
  int node(int j, int i) const { return col_start[j] + i; }
};

inline FDGrid make_fd_grid(const WaveguideSpec& spec, double delta, double snap_tol = -1.0) {
  auto bad = validate_spec(spec);
  if (!bad.empty()) {
    std::string msg = "invalid spec:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
  if (!(delta > 0.0) || !(delta <= 0.5)) throw ConfigError("grid spacing must lie in (0, 0.5]");

  FDGrid g;
  g.M = std::max(2, int(std::lround(1.0 / delta)));
  g.delta = 1.0 / g.M;
  if (snap_tol < 0) snap_tol = g.delta;
  if (spec.dtn_terms > g.M)
    throw ConfigError("modal truncation exceeds the transverse grid resolution");

  double snap = 0.0;
  auto snap_len = [&](double v, int min_cells) {
    int c = std::max(min_cells, int(std::lround(v / g.delta)));
    snap = std::max(snap, std::abs(c * g.delta - v));
    return c;
  };

  g.snapped = spec;
  int half_cols = snap_len(spec.trunc_half_length, 2);
  g.snapped.trunc_half_length = half_cols * g.delta;
  g.nxc = 2 * half_cols;

  for (size_t m = 0; m < spec.chimneys.size(); ++m) {
    const Chimney& c = spec.chimneys[m];
    FDGrid::ChimCells cc;
    int wc = snap_len(c.width, 3);  // at least 4 nodes across the width
    cc.rows = snap_len(c.height, 1);
    double left_target = c.x_center - 0.5 * wc * g.delta + g.snapped.trunc_half_length;
    cc.j0 = int(std::lround(left_target / g.delta));
    cc.j1 = cc.j0 + wc;
    snap = std::max(snap, std::abs(cc.j0 * g.delta - left_target));
    if (cc.j0 < 1 || cc.j1 > g.nxc - 1)
      throw ConfigError("snapped chimney footprint leaves the truncated strip");
    g.chims.push_back(cc);
    g.snapped.chimneys[m].width = wc * g.delta;
    g.snapped.chimneys[m].height = cc.rows * g.delta;
    g.snapped.chimneys[m].x_center = g.x_of(cc.j0) + 0.5 * wc * g.delta;
  }
  g.max_snap = snap;
  if (snap > snap_tol)
    throw ConfigError("grid snapping moved the geometry by " + fmt17(snap) +
                      ", beyond the tolerance " + fmt17(snap_tol));

  bad = validate_spec(g.snapped);
  if (!bad.empty()) {
    std::string msg = "snapped spec became invalid:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }

  g.col_start.resize(g.nxc + 1);
  g.col_rows.resize(g.nxc + 1);
  for (int j = 0; j <= g.nxc; ++j) {
    int extra = 0;
    for (const auto& cc : g.chims)
      if (j >= cc.j0 && j <= cc.j1) extra = std::max(extra, cc.rows);
    g.col_start[j] = g.n_nodes;
    g.col_rows[j] = g.M + 1 + extra;
    g.n_nodes += g.col_rows[j];
  }
  return g;
}

struct FDSystem {
  FDGrid grid;
  Eigen::SparseMatrix<cplx> A;
  Eigen::VectorXcd rhs;
};

// Control-volume form: every occupied cell hands half a conductance to each
// of its four edges and a quarter area to each corner.  On straight walls
// this reproduces the mirrored-ghost stencil; at re-entrant corners it yields
// the conservative fractional volume.
inline FDSystem assemble_fd(const FDGrid& g) {
  const double d = g.delta;
  const double k = g.snapped.k;
  std::vector<Eigen::Triplet<cplx>> trips;

  auto edge = [&](int a, int b) {
    trips.emplace_back(a, a, 0.5);
    trips.emplace_back(b, b, 0.5);
    trips.emplace_back(a, b, -0.5);
    trips.emplace_back(b, a, -0.5);
  };
  auto corner = [&](int n) { trips.emplace_back(n, n, cplx(-k * k * d * d / 4.0, 0.0)); };
  auto cell = [&](int j, int i) {
    int a = g.node(j, i), b = g.node(j + 1, i), c = g.node(j + 1, i + 1), e = g.node(j, i + 1);
    edge(a, b);
    edge(e, c);
    edge(a, e);
    edge(b, c);
    corner(a);
    corner(b);
    corner(c);
    corner(e);
  };

  for (int j = 0; j < g.nxc; ++j)
    for (int i = 0; i < g.M; ++i) cell(j, i);
  for (const auto& cc : g.chims)
    for (int j = cc.j0; j < cc.j1; ++j)
      for (int i = g.M; i < g.M + cc.rows; ++i) cell(j, i);

  // Modal radiation condition on both end columns.  Trapezoid weights make
  // the sampled cosines exactly orthogonal, so the projection is clean.
  ModalBasis basis = make_modal_basis(k, g.snapped.dtn_terms);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(g.n_nodes);
  for (int side = 0; side < 2; ++side) {
    int j = side == 0 ? 0 : g.nxc;
    std::vector<double> w(g.M + 1, d);
    w[0] = w[g.M] = 0.5 * d;
    for (int n = 0; n < basis.n_terms; ++n) {
      cplx coef = -iu * basis.beta[n];
      for (int p = 0; p <= g.M; ++p) {
        double gp = w[p] * transverse_mode(n, g.y_of(p));
        if (gp == 0.0) continue;
        for (int q = 0; q <= g.M; ++q) {
          double gq = w[q] * transverse_mode(n, g.y_of(q));
          if (gq != 0.0) trips.emplace_back(g.node(j, p), g.node(j, q), coef * gp * gq);
        }
      }
    }
    if (side == 0) {
      cplx drive = -2.0 * iu * k * piston_wave(k, g.x_of(0), +1);
      for (int p = 0; p <= g.M; ++p) rhs[g.node(j, p)] += drive * w[p];
    }
  }

  FDSystem sys;
  sys.grid = g;
  sys.A.resize(g.n_nodes, g.n_nodes);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  sys.rhs = std::move(rhs);
  return sys;
}

struct FDOutput {
  FDGrid grid;
  Eigen::VectorXcd total, scattered;
  ScatteringResult coeffs;
};

inline cplx fd_overlap(const FDGrid& g, const Eigen::VectorXcd& u_s, int j) {
  const double d = g.delta;
  cplx acc = 0;
  for (int i = 0; i <= g.M; ++i) {
    double w = (i == 0 || i == g.M) ? 0.5 * d : d;
    acc += w * u_s[g.node(j, i)];
  }
  double k = g.snapped.k, xs = g.x_of(j);
  return std::sqrt(2.0 * k) * std::exp(-iu * k * std::abs(xs)) * acc;
}

inline FDOutput fd_solve_full(const WaveguideSpec& spec, double delta, double snap_tol = -1.0) {
  FDGrid g = make_fd_grid(spec, delta, snap_tol);
  FDSystem sys = assemble_fd(g);

  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
  lu.compute(sys.A);
  if (lu.info() != Eigen::Success)
    throw SolverError("finite difference factorization failed: " + lu.lastErrorMessage());
  Eigen::VectorXcd u = lu.solve(sys.rhs);
  double rel = (sys.A * u - sys.rhs).norm() / sys.rhs.norm();
  if (!(rel <= 1e-8)) throw SolverError("finite difference system near-singular, residual " + fmt17(rel));

  FDOutput out;
  out.grid = g;
  out.total = std::move(u);
  out.scattered = out.total;
  const double k = g.snapped.k;
  for (int j = 0; j <= g.nxc; ++j) {
    cplx inc = piston_wave(k, g.x_of(j), +1);
    for (int i = 0; i < g.col_rows[j]; ++i) out.scattered[g.node(j, i)] -= inc;
  }

  // interior stations one wavelength-ish inside the ends, mirrored columns
  int js = std::clamp(int(std::lround((pi / k) / g.delta)), 1, g.nxc / 2);
  ScatteringResult sr;
  sr.s_minus = fd_overlap(g, out.scattered, js);
  sr.s_plus = fd_overlap(g, out.scattered, g.nxc - js);
  sr.station_minus = g.x_of(js);
  sr.station_plus = g.x_of(g.nxc - js);
  sr.reflection = sr.s_minus;
  sr.transmission = 1.0 + sr.s_plus;
  std::tie(sr.energy_defect, sr.optical_defect) = defects_from(sr.s_minus, sr.s_plus);
  out.coeffs = sr;
  return out;
}

inline ScatteringResult fd_solve(const WaveguideSpec& spec, double delta,
                                 double snap_tol = -1.0) {
  return fd_solve_full(spec, delta, snap_tol).coeffs;
}

}  // namespace wginvis
