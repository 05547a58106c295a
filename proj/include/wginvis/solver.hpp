#pragma once

#include <Eigen/SparseLU>

#include "wginvis/fem.hpp"

namespace wginvis {

struct AssembledSystem {
  Eigen::SparseMatrix<cplx> A;  // complex symmetric: volume part minus outgoing maps
  Eigen::VectorXcd rhs;
  TraceLine trace_minus, trace_plus;
  Eigen::MatrixXd G_minus, G_plus;  // mode overlaps on the end sections
};

// Weak form of the truncated problem: volume Helmholtz block, outgoing-map
// blocks on both end sections, drive from the right-going piston entering at
// the left end (its trace there is -2ik times the incident wave; it cancels
// identically on the right end).
inline AssembledSystem assemble(const Mesh& mesh, const ModalBasis& basis,
                                const FemMatrices& fm) {
  AssembledSystem sys;
  double k = basis.k;
  using T = Eigen::Triplet<cplx>;
  std::vector<T> at;
  at.reserve(fm.stiffness.nonZeros() + 8 * basis.n_terms * basis.n_terms);
  for (int c = 0; c < fm.stiffness.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(fm.stiffness, c); it; ++it)
      at.emplace_back(int(it.row()), c, cplx(it.value(), 0.0));
    for (Eigen::SparseMatrix<double>::InnerIterator it(fm.mass, c); it; ++it)
      at.emplace_back(int(it.row()), c, cplx(-k * k * it.value(), 0.0));
  }

  sys.trace_minus = mesh.boundary_trace(Mesh::sigma_minus);
  sys.trace_plus = mesh.boundary_trace(Mesh::sigma_plus);
  sys.G_minus = mode_overlaps(basis, sys.trace_minus);
  sys.G_plus = mode_overlaps(basis, sys.trace_plus);

  for (const auto* side : {&sys.trace_minus, &sys.trace_plus}) {
    const auto& G = side == &sys.trace_minus ? sys.G_minus : sys.G_plus;
    int nn = int(side->nodes.size());
    for (int n = 0; n < basis.n_terms; ++n) {
      cplx f = -iu * basis.beta[n];
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
          at.emplace_back(side->nodes[i], side->nodes[j], f * G(n, i) * G(n, j));
    }
  }

  sys.A.resize(mesh.n_nodes(), mesh.n_nodes());
  sys.A.setFromTriplets(at.begin(), at.end());

  sys.rhs = Eigen::VectorXcd::Zero(mesh.n_nodes());
  cplx drive = -2.0 * iu * k * piston_wave(k, mesh.x_min, +1);
  for (size_t i = 0; i < sys.trace_minus.nodes.size(); ++i)
    sys.rhs[sys.trace_minus.nodes[i]] += drive * sys.G_minus(0, int(i));
  return sys;
}

struct SolveInfo {
  int n_dofs = 0;
  double rel_residual = 0;
  double pivot_geomean = 0;  // geometric mean pivot magnitude of the factorization
};

inline Eigen::VectorXcd solve_direct(const AssembledSystem& sys, SolveInfo& info) {
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
  lu.compute(sys.A);
  info.n_dofs = int(sys.A.rows());
  if (lu.info() != Eigen::Success)
    throw SolverError("solve failed: factorization reported a zero pivot (" +
                      lu.lastErrorMessage() + ")");
  info.pivot_geomean = std::exp(lu.logAbsDeterminant().real() / double(sys.A.rows()));
  Eigen::VectorXcd u = lu.solve(sys.rhs);
  info.rel_residual = (sys.A * u - sys.rhs).norm() / sys.rhs.norm();
  if (!(info.rel_residual <= 1e-10))
    throw SolverError("solve failed: near-singular system, relative residual " +
                      fmt17(info.rel_residual) + ", geometric-mean pivot magnitude " +
                      fmt17(info.pivot_geomean));
  return u;
}

inline Eigen::VectorXcd incident_field(const Mesh& mesh, double k) {
  Eigen::VectorXcd w(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) w[i] = piston_wave(k, mesh.node_x[i], +1);
  return w;
}

struct SolveOutput {
  WaveguideSpec spec;
  Mesh mesh;
  ModalBasis basis;
  FemMatrices fm;
  Eigen::MatrixXd G_minus, G_plus;
  TraceLine trace_minus, trace_plus;
  Eigen::VectorXcd total, scattered;
  SolveInfo info;
};

inline SolveOutput solve_scattering(const WaveguideSpec& spec) {
  SolveOutput out;
  out.spec = spec;
  out.basis = make_modal_basis(spec.k, spec.dtn_terms);
  out.mesh = generate_mesh(spec);
  out.fm = fem_matrices(out.mesh);
  auto sys = assemble(out.mesh, out.basis, out.fm);
  out.total = solve_direct(sys, out.info);
  out.scattered = out.total - incident_field(out.mesh, spec.k);
  out.G_minus = std::move(sys.G_minus);
  out.G_plus = std::move(sys.G_plus);
  out.trace_minus = std::move(sys.trace_minus);
  out.trace_plus = std::move(sys.trace_plus);
  return out;
}

inline void write_field(const Mesh& mesh, const Eigen::VectorXcd& u, std::ostream& os) {
  os << "x y re im abs\n";
  for (int i = 0; i < mesh.n_nodes(); ++i)
    os << fmt17(mesh.node_x[i]) << " " << fmt17(mesh.node_y[i]) << " " << fmt17(u[i].real())
       << " " << fmt17(u[i].imag()) << " " << fmt17(std::abs(u[i])) << "\n";
  os << "elements\n";
  for (const auto& t : mesh.tris)
    os << t[0] << " " << t[1] << " " << t[2] << " " << t[3] << " " << t[4] << " " << t[5] << "\n";
}

}  // namespace wginvis
