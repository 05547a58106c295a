#pragma once

#include <Eigen/Sparse>

#include "wginvis/geometry.hpp"

namespace wginvis {

namespace detail {

// Six-point degree-4 triangle rule; weights sum to 1 and scale by area.
struct TriQuadPoint {
  double l1, l2, w;  // reference coords (xi, eta) and weight
};
inline const std::array<TriQuadPoint, 6>& tri_quad() {
  static const double a = 0.445948490915965;
  static const double b = 0.091576213509771;
  static const double wa = 0.223381589678011;
  static const double wb = 0.109951743655322;
  static const std::array<TriQuadPoint, 6> q = {{{a, a, wa},
                                                 {1 - 2 * a, a, wa},
                                                 {a, 1 - 2 * a, wa},
                                                 {b, b, wb},
                                                 {1 - 2 * b, b, wb},
                                                 {b, 1 - 2 * b, wb}}};
  return q;
}

inline std::array<double, 6> p2_values(double xi, double eta) {
  double l0 = 1 - xi - eta, l1 = xi, l2 = eta;
  return {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
          4 * l0 * l1,       4 * l1 * l2,       4 * l2 * l0};
}

inline std::array<std::array<double, 2>, 6> p2_grads(double xi, double eta) {
  double l0 = 1 - xi - eta, l1 = xi, l2 = eta;
  return {{{-(4 * l0 - 1), -(4 * l0 - 1)},
           {4 * l1 - 1, 0},
           {0, 4 * l2 - 1},
           {4 * (l0 - l1), -4 * l1},
           {4 * l2, 4 * l1},
           {-4 * l2, 4 * (l0 - l2)}}};
}

}  // namespace detail

struct FemMatrices {
  Eigen::SparseMatrix<double> stiffness, mass;
};

inline FemMatrices fem_matrices(const Mesh& mesh) {
  using T = Eigen::Triplet<double>;
  std::vector<T> kt, mt;
  kt.reserve(mesh.tris.size() * 36);
  mt.reserve(mesh.tris.size() * 36);
  const auto& quad = detail::tri_quad();

  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    const auto& tri = mesh.tris[t];
    double x0 = mesh.node_x[tri[0]], y0 = mesh.node_y[tri[0]];
    double j00 = mesh.node_x[tri[1]] - x0, j01 = mesh.node_x[tri[2]] - x0;
    double j10 = mesh.node_y[tri[1]] - y0, j11 = mesh.node_y[tri[2]] - y0;
    double det = j00 * j11 - j01 * j10;
    if (det <= 0) throw SolverError("degenerate element " + std::to_string(t));
    // rows of inv(J)^T
    double a00 = j11 / det, a01 = -j10 / det;
    double a10 = -j01 / det, a11 = j00 / det;

    double Ke[6][6] = {}, Me[6][6] = {};
    for (const auto& qp : quad) {
      auto N = detail::p2_values(qp.l1, qp.l2);
      auto dN = detail::p2_grads(qp.l1, qp.l2);
      double w = 0.5 * qp.w * det;
      double gx[6], gy[6];
      for (int i = 0; i < 6; ++i) {
        gx[i] = a00 * dN[i][0] + a01 * dN[i][1];
        gy[i] = a10 * dN[i][0] + a11 * dN[i][1];
      }
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          Ke[i][j] += w * (gx[i] * gx[j] + gy[i] * gy[j]);
          Me[i][j] += w * N[i] * N[j];
        }
    }
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        kt.emplace_back(tri[i], tri[j], Ke[i][j]);
        mt.emplace_back(tri[i], tri[j], Me[i][j]);
      }
  }

  FemMatrices fm;
  fm.stiffness.resize(mesh.n_nodes(), mesh.n_nodes());
  fm.mass.resize(mesh.n_nodes(), mesh.n_nodes());
  fm.stiffness.setFromTriplets(kt.begin(), kt.end());
  fm.mass.setFromTriplets(mt.begin(), mt.end());
  return fm;
}

// Value and gradient of a quadratic nodal field inside one element.
inline cplx p2_value_at(const Mesh& mesh, int tri, double xi, double eta,
                        const Eigen::VectorXcd& u) {
  auto N = detail::p2_values(xi, eta);
  cplx v = 0;
  for (int i = 0; i < 6; ++i) v += N[i] * u[mesh.tris[tri][i]];
  return v;
}

inline Eigen::Vector2cd p2_grad_at(const Mesh& mesh, int tri, double xi, double eta,
                                   const Eigen::VectorXcd& u) {
  const auto& tn = mesh.tris[tri];
  double x0 = mesh.node_x[tn[0]], y0 = mesh.node_y[tn[0]];
  double j00 = mesh.node_x[tn[1]] - x0, j01 = mesh.node_x[tn[2]] - x0;
  double j10 = mesh.node_y[tn[1]] - y0, j11 = mesh.node_y[tn[2]] - y0;
  double det = j00 * j11 - j01 * j10;
  double a00 = j11 / det, a01 = -j10 / det;
  double a10 = -j01 / det, a11 = j00 / det;
  auto dN = detail::p2_grads(xi, eta);
  Eigen::Vector2cd g = Eigen::Vector2cd::Zero();
  for (int i = 0; i < 6; ++i) {
    g(0) += (a00 * dN[i][0] + a01 * dN[i][1]) * u[tn[i]];
    g(1) += (a10 * dN[i][0] + a11 * dN[i][1]) * u[tn[i]];
  }
  return g;
}

// Reference coordinates of a point on a boundary edge of its triangle,
// parameterized by t in [0,1] from v0 to v1 (edges are straight).
inline std::pair<double, double> edge_ref_point(const Mesh& mesh, const Mesh::BEdge& be,
                                                double t) {
  const auto& tn = mesh.tris[be.tri];
  auto ref_of = [&](int v) -> std::pair<double, double> {
    if (v == tn[0]) return {0, 0};
    if (v == tn[1]) return {1, 0};
    if (v == tn[2]) return {0, 1};
    throw SolverError("boundary edge vertex not in adjacent element");
  };
  auto [x0, y0] = ref_of(be.v0);
  auto [x1, y1] = ref_of(be.v1);
  return {x0 + (x1 - x0) * t, y0 + (y1 - y0) * t};
}

}  // namespace wginvis
