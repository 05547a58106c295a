#pragma once

#include <limits>

#include "wginvis/solver.hpp"

namespace wginvis {

struct ScatteringResult {
  cplx s_minus{}, s_plus{};        // outgoing piston amplitudes (drive-relative)
  cplx reflection{}, transmission{};
  double energy_defect = 0;        // | |R|^2 + |T|^2 - 1 |
  double optical_defect = 0;       // | Re s+ + (|s+|^2 + |s-|^2)/2 |
  double energy_integral_defect = std::numeric_limits<double>::quiet_NaN();  // volume identity
  double station_minus = 0, station_plus = 0;
};

inline std::pair<double, double> defects_from(cplx s_minus, cplx s_plus) {
  cplx R = s_minus, T = 1.0 + s_plus;
  double energy = std::abs(std::norm(R) + std::norm(T) - 1.0);
  double optical = std::abs(s_plus.real() + 0.5 * (std::norm(s_plus) + std::norm(s_minus)));
  return {energy, optical};
}

// Piston content of the scattered field on one duct section.  The cosine
// overlap kills the higher modes, so any interior grid line past the
// chimneys works; the exponential unwinds the piston phase back to x = 0.
inline cplx overlap_amplitude(const SolveOutput& out, double x_station) {
  TraceLine tr = out.mesh.trace_line(x_station);
  Eigen::MatrixXd G = mode_overlaps(out.basis, tr);
  cplx c0 = 0;
  for (size_t i = 0; i < tr.nodes.size(); ++i) c0 += G(0, int(i)) * out.scattered[tr.nodes[i]];
  double k = out.basis.k;
  return std::sqrt(2.0 * k) * std::exp(-iu * k * std::abs(x_station)) * c0;
}

// Stations half a piston wavelength inside each end, snapped to grid lines.
inline std::pair<double, double> default_stations(const SolveOutput& out) {
  double off = pi / out.basis.k;
  return {out.mesh.nearest_grid_line(out.mesh.x_min + off),
          out.mesh.nearest_grid_line(out.mesh.x_max - off)};
}

// Both sides of the identity tying Im s+ to the scattered-field energy
// integral over the truncated domain plus the evanescent tails past the ends.
struct VolumeIdentity {
  double volume_side = 0;       // grad/mass integral plus tail correction
  double coefficient_side = 0;  // Im s+
  double tail = 0;
  double defect_abs = 0;        // |volume_side - coefficient_side|
  double defect_rel = 0;        // same, relative to the gradient integral
};

inline VolumeIdentity volume_identity(const SolveOutput& out, cplx s_plus) {
  VolumeIdentity v;
  const auto& u = out.scattered;
  double grad = (u.adjoint() * (out.fm.stiffness.cast<cplx>() * u))(0).real();
  double mass = (u.adjoint() * (out.fm.mass.cast<cplx>() * u))(0).real();
  double k = out.basis.k;
  double vol = grad - k * k * mass;

  for (int side = 0; side < 2; ++side) {
    const auto& tr = side == 0 ? out.trace_minus : out.trace_plus;
    const auto& G = side == 0 ? out.G_minus : out.G_plus;
    for (int n = 1; n < out.basis.n_terms; ++n) {
      cplx tn = 0;
      for (size_t i = 0; i < tr.nodes.size(); ++i) tn += G(n, int(i)) * u[tr.nodes[i]];
      v.tail += std::abs(out.basis.beta[n]) * std::norm(tn);
    }
  }
  v.volume_side = vol + v.tail;
  v.coefficient_side = s_plus.imag();
  v.defect_abs = std::abs(v.volume_side - v.coefficient_side);
  v.defect_rel = v.defect_abs / std::max(grad, 1e-14);
  return v;
}

inline ScatteringResult extract_by_overlap(const SolveOutput& out, double st_minus,
                                           double st_plus) {
  ScatteringResult r;
  r.station_minus = st_minus;
  r.station_plus = st_plus;
  r.s_minus = overlap_amplitude(out, st_minus);
  r.s_plus = overlap_amplitude(out, st_plus);
  r.reflection = r.s_minus;
  r.transmission = 1.0 + r.s_plus;
  std::tie(r.energy_defect, r.optical_defect) = defects_from(r.s_minus, r.s_plus);
  r.energy_integral_defect = volume_identity(out, r.s_plus).defect_abs;
  return r;
}

inline ScatteringResult extract_by_overlap(const SolveOutput& out) {
  auto [sm, sp] = default_stations(out);
  return extract_by_overlap(out, sm, sp);
}

// Flux-form extraction on the end sections: pairs the scattered field with
// the conjugated piston modes through the Green identity.  Uses the element
// gradient of the computed field, so it carries a different discretization
// error than the overlap route.
inline std::pair<cplx, cplx> extract_by_flux(const SolveOutput& out) {
  double k = out.basis.k;
  int npts = std::max(6, out.basis.n_terms + 1);
  std::vector<double> gx, gw;
  gauss_rule(npts, gx, gw);
  cplx acc_minus = 0, acc_plus = 0;  // i*s^- and i*s^+
  for (const auto& be : out.mesh.boundary) {
    if (be.tag == Mesh::wall) continue;
    double nu = (be.tag == Mesh::sigma_plus) ? +1.0 : -1.0;  // outward = nu * d/dx
    double x = out.mesh.node_x[be.v0];
    double y0 = out.mesh.node_y[be.v0], y1 = out.mesh.node_y[be.v1];
    double len = std::abs(y1 - y0);
    for (int q = 0; q < npts; ++q) {
      double t = gx[q];
      auto [xi, eta] = edge_ref_point(out.mesh, be, t);
      cplx us = p2_value_at(out.mesh, be.tri, xi, eta, out.total) - piston_wave(k, x, +1);
      cplx dxus = p2_grad_at(out.mesh, be.tri, xi, eta, out.total)(0) -
                  iu * k * piston_wave(k, x, +1);
      double w = gw[q] * len;
      for (int sgn : {-1, +1}) {
        cplx wbar = std::conj(piston_wave(k, x, sgn));
        cplx dx_wbar = std::conj(iu * double(sgn) * k * piston_wave(k, x, sgn));
        cplx val = w * (nu * dxus * wbar - us * nu * dx_wbar);
        (sgn < 0 ? acc_minus : acc_plus) += val;
      }
    }
  }
  return {-iu * acc_minus, -iu * acc_plus};
}

inline VolumeIdentity volume_identity(const SolveOutput& out, const ScatteringResult& sr) {
  return volume_identity(out, sr.s_plus);
}

}  // namespace wginvis
