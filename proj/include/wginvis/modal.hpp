#pragma once

#include <Eigen/Dense>

#include "wginvis/common.hpp"

namespace wginvis {

// Square root with the cut along the positive real axis, so the imaginary
// part is never negative.  Propagating duct modes get real output, cut-off
// ones get purely imaginary output with positive sign (decay, not growth).
inline cplx sqrt_upper(cplx z) {
  cplx r = std::sqrt(z);
  if (z.imag() < 0.0) r = -r;
  if (r.imag() < 0.0) r = -r;  // principal cut edge cases
  return r;
}

// Orthonormal cosine basis of the unit cross-section.
inline double transverse_mode(int n, double y) {
  if (n == 0) return 1.0;
  return std::sqrt(2.0) * std::cos(n * pi * y);
}

inline cplx axial_wavenumber(double k, int n) {
  return sqrt_upper(cplx(k * k - double(n) * n * pi * pi, 0.0));
}

struct ModalBasis {
  double k = 0;
  int n_terms = 0;                // retained transverse modes 0..n_terms-1
  std::vector<double> lambda;     // (n*pi)^2
  std::vector<cplx> beta;         // axial wavenumbers, Im >= 0
};

inline ModalBasis make_modal_basis(double k, int n_terms) {
  if (!(k > 0.0) || !(k < pi))
    throw ConfigError("wavenumber must lie strictly between 0 and pi, got " + fmt17(k));
  if (n_terms < 1) throw ConfigError("need at least one retained duct mode");
  ModalBasis b;
  b.k = k;
  b.n_terms = n_terms;
  for (int n = 0; n < n_terms; ++n) {
    double lam = double(n) * n * pi * pi;
    if (std::abs(k * k - lam) < 1e-12 * pi * pi)
      throw ConfigError("wavenumber within 1e-12 of the cutoff of mode " + std::to_string(n));
    b.lambda.push_back(lam);
    b.beta.push_back(axial_wavenumber(k, n));
  }
  return b;
}

// Right/left-going piston mode, unit energy flux normalization.
inline cplx piston_wave(double k, double x, int sign = +1) {
  return std::exp(iu * (sign * k * x)) / std::sqrt(2.0 * k);
}

// A vertical line of quadratic nodes (vertex, midpoint, vertex, ...) sorted
// by y.  Produced by the mesh; consumed by modal overlaps and extraction.
struct TraceLine {
  double x = 0;
  std::vector<int> nodes;
  std::vector<double> y;
  int n_edges() const { return int(nodes.size()) / 2; }
};

// Overlap integrals of each retained mode against each quadratic trace shape
// function: G(n, i) = integral phi_n * psi_i dy.  The Gauss order tracks the
// retained mode count so the highest cosine is still resolved.
inline Eigen::MatrixXd mode_overlaps(const ModalBasis& b, const TraceLine& tr) {
  int nn = int(tr.nodes.size());
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(b.n_terms, nn);
  int npts = std::max(6, b.n_terms + 1);
  std::vector<double> gx, gw;
  gauss_rule(npts, gx, gw);
  for (int e = 0; e < tr.n_edges(); ++e) {
    double y0 = tr.y[2 * e], y1 = tr.y[2 * e + 2];
    double len = y1 - y0;
    for (int q = 0; q < npts; ++q) {
      double t = gx[q], y = y0 + len * t;
      auto s = seg_shapes(t);
      for (int n = 0; n < b.n_terms; ++n) {
        double f = transverse_mode(n, y) * gw[q] * len;
        for (int l = 0; l < 3; ++l) G(n, 2 * e + l) += f * s[l];
      }
    }
  }
  return G;
}

// Modal content of a nodal trace vector.
inline Eigen::VectorXcd modal_coefficients(const Eigen::MatrixXd& G,
                                           const Eigen::VectorXcd& trace_values) {
  return G * trace_values;
}

// Weak outgoing-map block used in assembly: B(i,j) = sum_n i*beta_n g_n(i) g_n(j).
// Complex symmetric; negative semidefinite real part on the cut-off modes.
inline Eigen::MatrixXcd dtn_weak_block(const ModalBasis& b, const Eigen::MatrixXd& G) {
  int nn = int(G.cols());
  Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(nn, nn);
  for (int n = 0; n < b.n_terms; ++n) {
    Eigen::VectorXd g = G.row(n).transpose();
    B += (iu * b.beta[n]) * (g * g.transpose()).cast<cplx>();
  }
  return B;
}

// Nodal realization: maps trace values to the outgoing normal derivative
// sum_n i*beta_n (v, phi_n) phi_n evaluated at the trace nodes.
inline Eigen::MatrixXcd dtn_matrix(const ModalBasis& b, const TraceLine& tr) {
  Eigen::MatrixXd G = mode_overlaps(b, tr);
  int nn = int(tr.nodes.size());
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(nn, nn);
  for (int n = 0; n < b.n_terms; ++n) {
    Eigen::VectorXd ev(nn);
    for (int i = 0; i < nn; ++i) ev(i) = transverse_mode(n, tr.y[i]);
    D += (iu * b.beta[n]) * (ev * G.row(n)).cast<cplx>();
  }
  return D;
}

}  // namespace wginvis
