#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <unordered_map>

#include "wginvis/modal.hpp"

namespace wginvis {

struct Chimney {
  double x_center = 0;
  double height = 0;
  double width = 0;
};

struct WaveguideSpec {
  double k = 0.8 * pi;
  std::vector<Chimney> chimneys;
  double trunc_half_length = 5.0;  // duct truncated to |x| <= this
  int dtn_terms = 20;
  double mesh_target_h = 0.05;
  double mesh_target_h_y = 0.0;  // 0: same as mesh_target_h
  int min_cells_across = 2;      // elements across each chimney width
  int corner_levels = 1;         // grading levels toward junction corners
};

inline double footprint_left(const Chimney& c) { return c.x_center - 0.5 * c.width; }
inline double footprint_right(const Chimney& c) { return c.x_center + 0.5 * c.width; }

// Heights sitting on an odd quarter-wavelength multiple make the chimney
// column resonate and the far-field model loses validity; keep a guard band.
inline double resonance_distance(double k, double height) {
  double quarter = 0.5 * pi / k;
  double q = height / quarter;
  double best = 1e300;
  for (double o = 1.0; o <= q + 2.0; o += 2.0)
    best = std::min(best, std::abs(height - o * quarter));
  return best;
}

inline std::vector<std::string> validate_spec(const WaveguideSpec& s) {
  std::vector<std::string> bad;
  if (!(s.k > 0.0) || !(s.k < pi)) bad.push_back("wavenumber outside (0, pi): " + fmt17(s.k));
  if (!(s.trunc_half_length > 0.0)) bad.push_back("truncation half-length must be positive");
  if (s.dtn_terms < 1) bad.push_back("dtn_terms must be at least 1");
  if (!(s.mesh_target_h > 0.0)) bad.push_back("mesh_target_h must be positive");
  if (s.mesh_target_h_y < 0.0) bad.push_back("mesh_target_h_y must be nonnegative");
  if (s.min_cells_across < 2) bad.push_back("min_cells_across must be at least 2");
  if (s.corner_levels < 0) bad.push_back("corner_levels must be nonnegative");

  for (size_t m = 0; m < s.chimneys.size(); ++m) {
    const auto& c = s.chimneys[m];
    std::string tag = "chimney " + std::to_string(m) + ": ";
    if (!(c.height > 0.0)) bad.push_back(tag + "height must be positive");
    if (!(c.width > 0.0)) bad.push_back(tag + "width must be positive");
    if (s.k > 0.0 && s.k < pi && c.height > 0.0) {
      double quarter = 0.5 * pi / s.k;
      if (resonance_distance(s.k, c.height) < 1e-3 * quarter)
        bad.push_back(tag + "height " + fmt17(c.height) +
                      " is within the resonance guard band of an odd multiple of " + fmt17(quarter));
    }
    if (!s.chimneys.empty() && std::abs(c.width - s.chimneys[0].width) >
                                   1e-12 * std::max(1.0, s.chimneys[0].width))
      bad.push_back(tag + "all chimneys in one spec must share a width");
  }

  auto sorted = s.chimneys;
  std::sort(sorted.begin(), sorted.end(),
            [](const Chimney& a, const Chimney& b) { return a.x_center < b.x_center; });
  for (size_t m = 0; m + 1 < sorted.size(); ++m)
    if (footprint_right(sorted[m]) >= footprint_left(sorted[m + 1]))
      bad.push_back("chimney footprints overlap or touch near x = " +
                    fmt17(footprint_right(sorted[m])));

  if (s.k > 0.0 && s.k < pi)
    for (size_t m = 0; m < s.chimneys.size(); ++m) {
      double margin = 2.0 * pi / s.k;
      double edge = std::max(std::abs(footprint_left(s.chimneys[m])),
                             std::abs(footprint_right(s.chimneys[m])));
      if (!(edge < s.trunc_half_length - margin))
        bad.push_back("chimney " + std::to_string(m) +
                      " footprint closer than one wavelength to the truncation boundary");
    }
  return bad;
}

// ---------------------------------------------------------------------------

struct Mesh {
  std::vector<double> node_x, node_y;  // vertices first, then edge midpoints
  int n_vertices = 0;
  std::vector<std::array<int, 6>> tris;  // v0 v1 v2 m01 m12 m20, CCW
  std::vector<int> region;               // -1 duct, m >= 0 chimney index

  enum Tag { wall = 0, sigma_minus = 1, sigma_plus = 2 };
  struct BEdge {
    int v0, v1, mid, tri, tag;
  };
  std::vector<BEdge> boundary;

  std::vector<double> grid_x;  // vertical grid lines of the duct
  std::vector<double> grid_y;  // horizontal grid lines of the duct
  double x_min = 0, x_max = 0;
  int nx = 0, ny = 0;

  std::unordered_map<std::uint64_t, int> edge_mid;  // vertex pair -> midpoint node

  int n_nodes() const { return int(node_x.size()); }

  std::uint64_t ekey(int a, int b) const {
    if (a > b) std::swap(a, b);
    return std::uint64_t(a) * std::uint64_t(n_vertices) + std::uint64_t(b);
  }

  int strip_vertex(int ix, int iy) const { return iy * (nx + 1) + ix; }

  double nearest_grid_line(double x0) const {
    auto it = std::lower_bound(grid_x.begin(), grid_x.end(), x0);
    double best = grid_x.front();
    auto consider = [&](double v) {
      if (std::abs(v - x0) < std::abs(best - x0)) best = v;
    };
    if (it != grid_x.end()) consider(*it);
    if (it != grid_x.begin()) consider(*std::prev(it));
    return best;
  }

  // Vertical chain of quadratic nodes across the duct at a grid line.
  TraceLine trace_line(double x0) const {
    double snapped = nearest_grid_line(x0);
    if (std::abs(snapped - x0) > 1e-9 * std::max(1.0, std::abs(x0)))
      throw SolverError("extraction station " + fmt17(x0) + " not aligned with a mesh grid line");
    int ix = int(std::lower_bound(grid_x.begin(), grid_x.end(), snapped) - grid_x.begin());
    TraceLine tr;
    tr.x = snapped;
    for (int iy = 0; iy < ny; ++iy) {
      int a = strip_vertex(ix, iy), b = strip_vertex(ix, iy + 1);
      tr.nodes.push_back(a);
      tr.y.push_back(node_y[a]);
      int mid = edge_mid.at(const_cast<Mesh*>(this)->ekey(a, b));
      tr.nodes.push_back(mid);
      tr.y.push_back(node_y[mid]);
    }
    int top = strip_vertex(ix, ny);
    tr.nodes.push_back(top);
    tr.y.push_back(node_y[top]);
    return tr;
  }

  TraceLine boundary_trace(int tag) const {
    std::vector<const BEdge*> sel;
    for (const auto& e : boundary)
      if (e.tag == tag) sel.push_back(&e);
    if (sel.empty()) throw SolverError("no boundary edges carry the requested tag");
    std::sort(sel.begin(), sel.end(), [&](const BEdge* a, const BEdge* b) {
      return std::min(node_y[a->v0], node_y[a->v1]) < std::min(node_y[b->v0], node_y[b->v1]);
    });
    TraceLine tr;
    tr.x = node_x[sel[0]->v0];
    for (size_t i = 0; i < sel.size(); ++i) {
      int lo = sel[i]->v0, hi = sel[i]->v1;
      if (node_y[lo] > node_y[hi]) std::swap(lo, hi);
      tr.nodes.push_back(lo);
      tr.y.push_back(node_y[lo]);
      tr.nodes.push_back(sel[i]->mid);
      tr.y.push_back(node_y[sel[i]->mid]);
    }
    const auto& last = *sel.back();
    int hi = node_y[last.v0] > node_y[last.v1] ? last.v0 : last.v1;
    tr.nodes.push_back(hi);
    tr.y.push_back(node_y[hi]);
    return tr;
  }
};

namespace detail {

// Uniform subdivision with the outermost cells shrunk by 2^-levels toward
// flagged ends; cell count stays fixed so refinement ratios stay exact.
inline void subdivide(std::vector<double>& out, double a, double b, int n, int shrink_left,
                      int shrink_right) {
  std::vector<double> w(n, 1.0);
  if (n >= 2) {
    if (shrink_left > 0) w.front() = std::ldexp(1.0, -shrink_left);
    if (shrink_right > 0) w.back() = std::ldexp(1.0, -shrink_right);
  }
  double total = 0;
  for (double v : w) total += v;
  double acc = 0;
  for (int i = 0; i < n - 1; ++i) {
    acc += w[i];
    out.push_back(a + (b - a) * (acc / total));
  }
  out.push_back(b);
}

inline int pow2_cells(double len, double h, int min_cells) {
  int n = min_cells;
  while (len / n > h && n < (1 << 24)) n *= 2;
  return n;
}

}  // namespace detail

inline Mesh generate_mesh_interval(const WaveguideSpec& spec, double xa, double xb) {
  constexpr int node_budget = 3'000'000;
  double hx = spec.mesh_target_h;
  double hy = spec.mesh_target_h_y > 0 ? spec.mesh_target_h_y : hx;

  auto chims = spec.chimneys;
  std::sort(chims.begin(), chims.end(),
            [](const Chimney& a, const Chimney& b) { return a.x_center < b.x_center; });
  int g = chims.empty() ? 0 : spec.corner_levels;

  // x grid: anchors at the domain ends and every footprint edge.
  std::vector<double> X{xa};
  std::vector<std::pair<int, int>> foot_range(chims.size());  // x index span per chimney
  double cursor = xa;
  size_t mnext = 0;
  bool prev_was_footprint = false;
  while (true) {
    bool has_chim = mnext < chims.size();
    double seg_end = has_chim ? footprint_left(chims[mnext]) : xb;
    if (seg_end > cursor + 1e-14) {  // gap segment
      int n = std::max(1, int(std::ceil((seg_end - cursor) / hx - 1e-12)));
      detail::subdivide(X, cursor, seg_end, n, prev_was_footprint ? g : 0, has_chim ? g : 0);
      cursor = seg_end;
    }
    if (!has_chim) break;
    double l = footprint_left(chims[mnext]), r = footprint_right(chims[mnext]);
    int i0 = int(X.size()) - 1;
    int n = detail::pow2_cells(r - l, hx, spec.min_cells_across);
    detail::subdivide(X, l, r, n, g, g);
    foot_range[mnext] = {i0, int(X.size()) - 1};
    cursor = r;
    prev_was_footprint = true;
    ++mnext;
  }

  // y grid of the duct.
  std::vector<double> Y{0.0};
  {
    int n = std::max(1, int(std::ceil(1.0 / hy - 1e-12)));
    detail::subdivide(Y, 0.0, 1.0, n, 0, g);
  }
  int nx = int(X.size()) - 1, ny = int(Y.size()) - 1;

  Mesh mesh;
  mesh.grid_x = X;
  mesh.grid_y = Y;
  mesh.x_min = xa;
  mesh.x_max = xb;
  mesh.nx = nx;
  mesh.ny = ny;

  // Duct vertices, row-major from the floor.
  for (int iy = 0; iy <= ny; ++iy)
    for (int ix = 0; ix <= nx; ++ix) {
      mesh.node_x.push_back(X[ix]);
      mesh.node_y.push_back(Y[iy]);
    }

  // Chimney vertices; the bottom row aliases the duct's top row.
  struct ChimGrid {
    int i0, i1, nrows;
    std::vector<double> Yc;
    std::vector<int> base_row_offset;  // vertex id offset per added row
  };
  std::vector<ChimGrid> cgrids(chims.size());
  for (size_t m = 0; m < chims.size(); ++m) {
    auto& cg = cgrids[m];
    cg.i0 = foot_range[m].first;
    cg.i1 = foot_range[m].second;
    cg.Yc = {1.0};
    int n = std::max(1, int(std::ceil(chims[m].height / hy - 1e-12)));
    detail::subdivide(cg.Yc, 1.0, 1.0 + chims[m].height, n, g, 0);
    cg.nrows = int(cg.Yc.size()) - 1;
    for (int r = 1; r <= cg.nrows; ++r) {
      cg.base_row_offset.push_back(int(mesh.node_x.size()));
      for (int ix = cg.i0; ix <= cg.i1; ++ix) {
        mesh.node_x.push_back(X[ix]);
        mesh.node_y.push_back(cg.Yc[r]);
      }
    }
  }
  mesh.n_vertices = int(mesh.node_x.size());
  if (mesh.n_vertices * 4 > node_budget)
    throw ConfigError("mesh_target_h " + fmt17(hx) + " needs ~" +
                      std::to_string(mesh.n_vertices * 4) +
                      " nodes, over the " + std::to_string(node_budget) + " budget");

  auto chim_vertex = [&](size_t m, int ix, int r) -> int {
    if (r == 0) return mesh.strip_vertex(ix, ny);
    return cgrids[m].base_row_offset[r - 1] + (ix - cgrids[m].i0);
  };

  // Triangles; the diagonal alternates by cell parity so mirror images of a
  // spec mesh to mirror images.
  std::unordered_map<std::uint64_t, std::vector<int>> edge_tris;
  auto add_tri = [&](int a, int b, int c, int reg) {
    mesh.tris.push_back({a, b, c, -1, -1, -1});
    mesh.region.push_back(reg);
  };
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      int A = mesh.strip_vertex(ix, iy), B = mesh.strip_vertex(ix + 1, iy);
      int C = mesh.strip_vertex(ix + 1, iy + 1), D = mesh.strip_vertex(ix, iy + 1);
      if ((ix + iy) % 2 == 0) {
        add_tri(A, B, C, -1);
        add_tri(A, C, D, -1);
      } else {
        add_tri(A, B, D, -1);
        add_tri(B, C, D, -1);
      }
    }
  for (size_t m = 0; m < chims.size(); ++m) {
    const auto& cg = cgrids[m];
    for (int r = 0; r < cg.nrows; ++r)
      for (int ix = cg.i0; ix < cg.i1; ++ix) {
        int A = chim_vertex(m, ix, r), B = chim_vertex(m, ix + 1, r);
        int C = chim_vertex(m, ix + 1, r + 1), D = chim_vertex(m, ix, r + 1);
        if ((ix + ny + r) % 2 == 0) {
          add_tri(A, B, C, int(m));
          add_tri(A, C, D, int(m));
        } else {
          add_tri(A, B, D, int(m));
          add_tri(B, C, D, int(m));
        }
      }
  }

  // Quadratic midpoints on unique vertex pairs.
  auto midpoint = [&](int a, int b) -> int {
    auto key = mesh.ekey(a, b);
    auto it = mesh.edge_mid.find(key);
    if (it != mesh.edge_mid.end()) return it->second;
    int id = int(mesh.node_x.size());
    mesh.node_x.push_back(0.5 * (mesh.node_x[a] + mesh.node_x[b]));
    mesh.node_y.push_back(0.5 * (mesh.node_y[a] + mesh.node_y[b]));
    mesh.edge_mid.emplace(key, id);
    return id;
  };
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    auto& tri = mesh.tris[t];
    tri[3] = midpoint(tri[0], tri[1]);
    tri[4] = midpoint(tri[1], tri[2]);
    tri[5] = midpoint(tri[2], tri[0]);
    for (int e = 0; e < 3; ++e)
      edge_tris[mesh.ekey(tri[e], tri[(e + 1) % 3])].push_back(int(t));
  }
  if (mesh.n_nodes() > node_budget)
    throw ConfigError("node budget exceeded after quadratic enrichment");

  for (auto& [key, tris] : edge_tris) {
    if (tris.size() != 1) continue;
    int a = int(key / std::uint64_t(mesh.n_vertices));
    int b = int(key % std::uint64_t(mesh.n_vertices));
    int tag = Mesh::wall;
    if (mesh.node_x[a] == xa && mesh.node_x[b] == xa) tag = Mesh::sigma_minus;
    if (mesh.node_x[a] == xb && mesh.node_x[b] == xb) tag = Mesh::sigma_plus;
    mesh.boundary.push_back({a, b, mesh.edge_mid.at(key), tris[0], tag});
  }
  std::sort(mesh.boundary.begin(), mesh.boundary.end(),
            [](const Mesh::BEdge& p, const Mesh::BEdge& q) {
              return std::tie(p.v0, p.v1) < std::tie(q.v0, q.v1);
            });
  return mesh;
}

inline Mesh generate_mesh(const WaveguideSpec& spec) {
  auto bad = validate_spec(spec);
  if (!bad.empty()) {
    std::string msg = "invalid waveguide spec:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw ConfigError(msg);
  }
  return generate_mesh_interval(spec, -spec.trunc_half_length, spec.trunc_half_length);
}

inline void write_mesh(const Mesh& mesh, std::ostream& os) {
  os << "nodes " << mesh.n_nodes() << " vertices " << mesh.n_vertices << "\n";
  for (int i = 0; i < mesh.n_nodes(); ++i)
    os << i << " " << fmt17(mesh.node_x[i]) << " " << fmt17(mesh.node_y[i]) << "\n";
  os << "elements " << mesh.tris.size() << "\n";
  for (size_t t = 0; t < mesh.tris.size(); ++t) {
    os << t;
    for (int j = 0; j < 6; ++j) os << " " << mesh.tris[t][j];
    os << " " << (mesh.region[t] < 0 ? std::string("duct")
                                     : "chimney" + std::to_string(mesh.region[t]))
       << "\n";
  }
  static const char* tag_names[] = {"wall", "inlet", "outlet"};
  os << "boundary_edges " << mesh.boundary.size() << "\n";
  for (const auto& e : mesh.boundary)
    os << e.v0 << " " << e.v1 << " " << e.mid << " " << tag_names[e.tag] << "\n";
}

}  // namespace wginvis
