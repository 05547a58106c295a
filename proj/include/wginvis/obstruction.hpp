#pragma once

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "wginvis/fem.hpp"
#include "wginvis/geometry.hpp"

namespace wginvis {

// Smallest eigenvalue of the Neumann Laplacian on a bounded piece of the
// guide, restricted to fields with zero mean on both vertical end sections.
// Below k_star = min(sqrt(mu1), pi) a perfectly transparent response T = 1 is
// impossible for this geometry, which is the quantity this module certifies.

struct ConstrainedEigensystem {
  Eigen::SparseMatrix<double> stiffness, mass;
  Eigen::VectorXd c_minus, c_plus;  // end-section mean functionals
  int n_dofs = 0;
};

// Integral of every trace shape function over the tagged section.  Simpson
// weights are exact for quadratics, so the discrete constraint is the exact
// mean of the finite element field.
inline Eigen::VectorXd trace_mean_functional(const Mesh& mesh, int tag) {
  TraceLine tr = mesh.boundary_trace(tag);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(mesh.n_nodes());
  for (int e = 0; e < tr.n_edges(); ++e) {
    double len = tr.y[2 * e + 2] - tr.y[2 * e];
    c[tr.nodes[2 * e]] += len / 6.0;
    c[tr.nodes[2 * e + 1]] += 2.0 * len / 3.0;
    c[tr.nodes[2 * e + 2]] += len / 6.0;
  }
  return c;
}

inline ConstrainedEigensystem assemble_constrained_eigenproblem(const Mesh& mesh) {
  FemMatrices fm = fem_matrices(mesh);
  ConstrainedEigensystem sys;
  sys.stiffness = std::move(fm.stiffness);
  sys.mass = std::move(fm.mass);
  sys.c_minus = trace_mean_functional(mesh, Mesh::sigma_minus);
  sys.c_plus = trace_mean_functional(mesh, Mesh::sigma_plus);
  sys.n_dofs = mesh.n_nodes();
  return sys;
}

struct EigenSolveReport {
  double mu1 = 0;
  Eigen::VectorXd eigenvector;  // mass-normalized
  double residual = 0;
  int iterations = 0;
};

namespace detail {

// Least-squares multipliers for the stationarity residual K u + C lambda - mu M u.
// C has two columns, so the normal equations are a closed 2x2 solve.
inline double constrained_residual(const ConstrainedEigensystem& sys, const Eigen::VectorXd& u,
                                   double mu) {
  Eigen::VectorXd r0 = sys.stiffness * u - mu * (sys.mass * u);
  Eigen::Matrix2d G;
  G(0, 0) = sys.c_minus.squaredNorm();
  G(0, 1) = G(1, 0) = sys.c_minus.dot(sys.c_plus);
  G(1, 1) = sys.c_plus.squaredNorm();
  Eigen::Vector2d b(-sys.c_minus.dot(r0), -sys.c_plus.dot(r0));
  Eigen::Vector2d lam = G.ldlt().solve(b);
  Eigen::VectorXd r = r0 + lam[0] * sys.c_minus + lam[1] * sys.c_plus;
  double scale = (sys.stiffness * u).norm();
  return scale > 0 ? r.norm() / scale : r.norm();
}

inline Eigen::SparseMatrix<double> augmented_matrix(const ConstrainedEigensystem& sys,
                                                    double shift) {
  int n = sys.n_dofs;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(sys.stiffness.nonZeros() + sys.mass.nonZeros() + 4 * n);
  for (int c = 0; c < sys.stiffness.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.stiffness, c); it; ++it)
      trips.emplace_back(int(it.row()), int(it.col()), it.value());
  if (shift != 0.0)
    for (int c = 0; c < sys.mass.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(sys.mass, c); it; ++it)
        trips.emplace_back(int(it.row()), int(it.col()), -shift * it.value());
  for (int i = 0; i < n; ++i) {
    if (sys.c_minus[i] != 0.0) {
      trips.emplace_back(i, n, sys.c_minus[i]);
      trips.emplace_back(n, i, sys.c_minus[i]);
    }
    if (sys.c_plus[i] != 0.0) {
      trips.emplace_back(i, n + 1, sys.c_plus[i]);
      trips.emplace_back(n + 1, i, sys.c_plus[i]);
    }
  }
  Eigen::SparseMatrix<double> A(n + 2, n + 2);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

}  // namespace detail

// Inverse iteration on the saddle-point form.  The augmented solve keeps the
// iterate exactly in the constraint space, which is the deflation of the two
// multiplier directions.  Once the plain sweep has localized the eigenvalue a
// single Rayleigh-shifted refactorization polishes the residual.
inline EigenSolveReport smallest_eigenvalue(const ConstrainedEigensystem& sys, double tol = 1e-10,
                                            int max_iter = 200, std::uint64_t seed = 20240901) {
  int n = sys.n_dofs;
  EigenSolveReport rep;
  Rng rng(seed);
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = rng.uniform(-1.0, 1.0);
  u /= std::sqrt(u.dot(sys.mass * u));

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  double shift = 0.0;
  auto refactor = [&](double s) {
    lu.compute(detail::augmented_matrix(sys, s));
    if (lu.info() != Eigen::Success)
      throw SolverError("eigen factorization failed: " + lu.lastErrorMessage());
    shift = s;
  };
  refactor(0.0);

  double mu = 0, res = std::numeric_limits<double>::infinity();
  bool shifted = false;
  Eigen::VectorXd rhs(n + 2);
  for (rep.iterations = 1; rep.iterations <= max_iter; ++rep.iterations) {
    rhs.head(n) = sys.mass * u;
    rhs[n] = rhs[n + 1] = 0.0;
    Eigen::VectorXd z = lu.solve(rhs);
    u = z.head(n);
    double nrm = std::sqrt(u.dot(sys.mass * u));
    if (!(nrm > 0) || !std::isfinite(nrm)) throw SolverError("eigen iteration broke down");
    u /= nrm;
    mu = u.dot(sys.stiffness * u);
    res = detail::constrained_residual(sys, u, mu);
    if (res <= tol) break;
    if (!shifted && res <= 1e-4) {
      // Rayleigh quotient error is quadratic in the residual, so the shifted
      // operator is safely nonsingular while nearly annihilating mode one.
      refactor(mu);
      shifted = true;
    }
  }
  if (res > tol)
    throw NonConvergence("eigen iteration stalled at residual " + fmt17(res) + " after " +
                         std::to_string(max_iter) + " iterations");
  rep.mu1 = mu;
  rep.eigenvector = u;
  rep.residual = res;
  return rep;
}

struct ObstructionResult {
  double mu1 = 0;
  double lambda1 = pi * pi;  // first nonzero transverse eigenvalue of the strip
  double k_star_bound = 0;
  Eigen::VectorXd eigenvector;
  double minmax_upper = std::numeric_limits<double>::infinity();
  double x_minus = 0, x_plus = 0;
  int n_dofs = 0;
  double residual = 0;
  int iterations = 0;
};

inline double k_star_bound(double mu1) { return std::min(std::sqrt(mu1), pi); }

// Test functions vibrating in one chimney each bound mu1 from above by the
// worst quarter-wave rate over the attached chimneys.
inline double minmax_upper_bound(const std::vector<Chimney>& chimneys) {
  double worst = 0;
  for (const auto& c : chimneys) worst = std::max(worst, std::pow(pi / (2.0 * c.height), 2));
  return chimneys.empty() ? std::numeric_limits<double>::infinity() : worst;
}

inline ObstructionResult obstruction_bound(const WaveguideSpec& spec, double x_minus,
                                           double x_plus, double tol = 1e-10,
                                           int max_iter = 200) {
  if (!(x_plus > x_minus)) throw ConfigError("obstruction interval is empty");
  for (const auto& c : spec.chimneys) {
    if (!(c.width > 0.0) || !(c.height > 0.0))
      throw ConfigError("chimney dimensions must be positive");
    if (!(footprint_left(c) > x_minus) || !(footprint_right(c) < x_plus))
      throw ConfigError("chimney footprint must lie strictly inside the obstruction interval");
  }
  for (size_t a = 0; a < spec.chimneys.size(); ++a)
    for (size_t b = a + 1; b < spec.chimneys.size(); ++b) {
      const auto &ca = spec.chimneys[a], &cb = spec.chimneys[b];
      if (std::max(footprint_left(ca), footprint_left(cb)) <
          std::min(footprint_right(ca), footprint_right(cb)))
        throw ConfigError("chimney footprints overlap");
    }

  Mesh mesh = generate_mesh_interval(spec, x_minus, x_plus);
  ConstrainedEigensystem sys = assemble_constrained_eigenproblem(mesh);
  EigenSolveReport rep = smallest_eigenvalue(sys, tol, max_iter);

  ObstructionResult out;
  out.mu1 = rep.mu1;
  out.k_star_bound = k_star_bound(rep.mu1);
  out.eigenvector = std::move(rep.eigenvector);
  out.minmax_upper = minmax_upper_bound(spec.chimneys);
  out.x_minus = x_minus;
  out.x_plus = x_plus;
  out.n_dofs = sys.n_dofs;
  out.residual = rep.residual;
  out.iterations = rep.iterations;
  return out;
}

// Default truncation: the chimney footprint hull widened by one strip height
// on each side.  The choice only moves the sharpness of the bound, never its
// validity, and it stays exposed for sweeps.
inline ObstructionResult obstruction_bound(const WaveguideSpec& spec, double tol = 1e-10,
                                           int max_iter = 200) {
  double lo = -1.0, hi = 1.0;
  if (!spec.chimneys.empty()) {
    lo = std::numeric_limits<double>::infinity();
    hi = -std::numeric_limits<double>::infinity();
    for (const auto& c : spec.chimneys) {
      lo = std::min(lo, footprint_left(c));
      hi = std::max(hi, footprint_right(c));
    }
    lo -= 1.0;
    hi += 1.0;
  }
  return obstruction_bound(spec, lo, hi, tol, max_iter);
}

}  // namespace wginvis
