#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "wginvis/geometry.hpp"

using namespace wginvis;
using Catch::Approx;

namespace {

WaveguideSpec reference_layout() {
  WaveguideSpec s;
  s.k = 0.8 * pi;
  double q = pi / s.k;
  s.chimneys = {{-3.0 * pi / (4.0 * s.k), q, 0.3},
                {0.0, q, 0.3},
                {3.0 * pi / (4.0 * s.k), q, 0.3}};
  s.trunc_half_length = 5.0;
  return s;
}

bool mentions(const std::vector<std::string>& msgs, const std::string& word) {
  for (const auto& m : msgs)
    if (m.find(word) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("validation accepts the reference layout", "[geometry]") {
  REQUIRE(validate_spec(reference_layout()).empty());
}

TEST_CASE("validation names each violation", "[geometry]") {
  WaveguideSpec s = reference_layout();

  SECTION("quarter-wave resonant height") {
    s.chimneys[0].height = 0.5 * pi / s.k;
    REQUIRE(mentions(validate_spec(s), "resonance"));
  }
  SECTION("overlapping footprints") {
    s.chimneys = {{0.0, 1.0, 0.3}, {0.1, 1.0, 0.3}};
    REQUIRE(mentions(validate_spec(s), "overlap"));
  }
  SECTION("wavenumber outside the single-mode band") {
    s.k = 3.5;
    REQUIRE(mentions(validate_spec(s), "wavenumber"));
  }
  SECTION("chimney too close to the truncation boundary") {
    s.chimneys = {{4.0, 1.0, 0.3}};
    REQUIRE(mentions(validate_spec(s), "truncation"));
  }
  SECTION("nonpositive dimensions") {
    s.chimneys[1].height = -1.0;
    REQUIRE(mentions(validate_spec(s), "height"));
  }
}

TEST_CASE("strip mesh end sections carry exactly the inlet and outlet tags", "[geometry]") {
  WaveguideSpec s;
  s.trunc_half_length = 1.0;
  s.mesh_target_h = 0.5;
  Mesh mesh = generate_mesh(s);

  for (int tag : {Mesh::sigma_minus, Mesh::sigma_plus}) {
    double xs = tag == Mesh::sigma_minus ? -1.0 : 1.0;
    std::vector<std::pair<double, double>> spans;
    for (const auto& e : mesh.boundary) {
      if (e.tag != tag) continue;
      REQUIRE(mesh.node_x[e.v0] == Approx(xs).margin(1e-12));
      REQUIRE(mesh.node_x[e.v1] == Approx(xs).margin(1e-12));
      double a = mesh.node_y[e.v0], b = mesh.node_y[e.v1];
      spans.emplace_back(std::min(a, b), std::max(a, b));
    }
    REQUIRE_FALSE(spans.empty());
    std::sort(spans.begin(), spans.end());
    REQUIRE(spans.front().first == Approx(0.0).margin(1e-12));
    REQUIRE(spans.back().second == Approx(1.0).margin(1e-12));
    for (size_t i = 0; i + 1 < spans.size(); ++i)
      REQUIRE(spans[i].second == Approx(spans[i + 1].first).margin(1e-12));
  }
  for (const auto& e : mesh.boundary) {
    REQUIRE((e.tag == Mesh::wall || e.tag == Mesh::sigma_minus || e.tag == Mesh::sigma_plus));
    if (e.tag == Mesh::wall) {
      double y = mesh.node_y[e.v0];
      bool horizontal = std::abs(y) < 1e-12 || std::abs(y - 1.0) < 1e-12;
      REQUIRE(horizontal);
    }
  }
}

namespace {

int cells_across_footprint(const Mesh& mesh, const Chimney& c) {
  int count = 0;
  for (double x : mesh.grid_x)
    if (x > footprint_left(c) + 1e-12 && x < footprint_right(c) - 1e-12) ++count;
  return count + 1;
}

}  // namespace

TEST_CASE("chimney width resolution honors the floor and doubles on refinement",
          "[geometry]") {
  WaveguideSpec s;
  s.k = 0.8 * pi;
  s.chimneys = {{0.2, 1.3, 0.3}};
  s.trunc_half_length = 5.0;
  s.min_cells_across = 4;
  s.mesh_target_h = 0.4;

  Mesh coarse = generate_mesh(s);
  REQUIRE(cells_across_footprint(coarse, s.chimneys[0]) >= 4);

  s.mesh_target_h = 0.1;
  int at_h = cells_across_footprint(generate_mesh(s), s.chimneys[0]);
  s.mesh_target_h = 0.05;
  int at_half = cells_across_footprint(generate_mesh(s), s.chimneys[0]);
  REQUIRE(at_half - 1 >= 2 * (at_h - 1));

  bool has_chimney_elements = false;
  for (size_t t = 0; t < coarse.tris.size(); ++t)
    if (coarse.region[t] == 0) {
      has_chimney_elements = true;
      for (int j = 0; j < 6; ++j) REQUIRE(coarse.node_y[coarse.tris[t][j]] >= 1.0 - 1e-12);
    }
  REQUIRE(has_chimney_elements);
}

TEST_CASE("mirrored layouts mesh to mirrored vertex sets", "[geometry]") {
  WaveguideSpec a;
  a.k = 0.8 * pi;
  a.chimneys = {{-0.7, 1.0, 0.25}, {0.4, 1.1, 0.25}};
  a.trunc_half_length = 5.0;
  a.mesh_target_h = 0.2;

  WaveguideSpec b = a;
  b.chimneys = {{-0.4, 1.1, 0.25}, {0.7, 1.0, 0.25}};

  auto points = [](const Mesh& m, double sign) {
    std::vector<std::pair<double, double>> p;
    for (int i = 0; i < m.n_nodes(); ++i) p.emplace_back(sign * m.node_x[i], m.node_y[i]);
    std::sort(p.begin(), p.end());
    return p;
  };
  Mesh ma = generate_mesh(a), mb = generate_mesh(b);
  REQUIRE(ma.n_nodes() == mb.n_nodes());
  auto pa = points(ma, -1.0), pb = points(mb, +1.0);
  double worst = 0;
  for (size_t i = 0; i < pa.size(); ++i)
    worst = std::max({worst, std::abs(pa[i].first - pb[i].first),
                      std::abs(pa[i].second - pb[i].second)});
  REQUIRE(worst < 1e-9);
}

TEST_CASE("no two mesh nodes coincide", "[geometry]") {
  WaveguideSpec s;
  s.k = 0.8 * pi;
  s.chimneys = {{-0.5, 1.25, 0.3}, {0.5, 0.9, 0.3}};
  s.trunc_half_length = 5.0;
  s.mesh_target_h = 0.15;
  Mesh mesh = generate_mesh(s);

  std::vector<std::pair<double, double>> p;
  for (int i = 0; i < mesh.n_nodes(); ++i) p.emplace_back(mesh.node_x[i], mesh.node_y[i]);
  std::sort(p.begin(), p.end());
  for (size_t i = 0; i + 1 < p.size(); ++i) {
    bool same = std::abs(p[i].first - p[i + 1].first) < 1e-12 &&
                std::abs(p[i].second - p[i + 1].second) < 1e-12;
    REQUIRE_FALSE(same);
  }

  for (const auto& t : mesh.tris) {
    double x0 = mesh.node_x[t[0]], y0 = mesh.node_y[t[0]];
    double x1 = mesh.node_x[t[1]], y1 = mesh.node_y[t[1]];
    double x2 = mesh.node_x[t[2]], y2 = mesh.node_y[t[2]];
    REQUIRE((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0) > 0.0);
  }
}

TEST_CASE("extraction stations must lie on grid lines", "[geometry]") {
  WaveguideSpec s;
  s.trunc_half_length = 1.0;
  s.mesh_target_h = 0.25;
  Mesh mesh = generate_mesh(s);

  REQUIRE_THROWS_AS(mesh.trace_line(0.1234567), SolverError);

  TraceLine tr = mesh.trace_line(mesh.grid_x[1]);
  REQUIRE(tr.y.front() == Approx(0.0).margin(1e-12));
  REQUIRE(tr.y.back() == Approx(1.0).margin(1e-12));
  REQUIRE(int(tr.nodes.size()) == 2 * mesh.ny + 1);
  for (size_t i = 0; i + 1 < tr.y.size(); ++i) REQUIRE(tr.y[i] < tr.y[i + 1]);
}

TEST_CASE("mesh text export round-trips its counts", "[geometry]") {
  WaveguideSpec s;
  s.k = 0.8 * pi;
  s.chimneys = {{0.0, 1.0, 0.3}};
  s.trunc_half_length = 5.0;
  s.mesh_target_h = 0.4;
  Mesh mesh = generate_mesh(s);

  std::stringstream ss;
  write_mesh(mesh, ss);

  std::string word;
  int n_nodes, n_vertices;
  ss >> word >> n_nodes;
  REQUIRE(word == "nodes");
  ss >> word >> n_vertices;
  REQUIRE(word == "vertices");
  REQUIRE(n_nodes == mesh.n_nodes());
  REQUIRE(n_vertices == mesh.n_vertices);
  for (int i = 0; i < n_nodes; ++i) {
    int id;
    double x, y;
    ss >> id >> x >> y;
    REQUIRE(id == i);
    REQUIRE(x == mesh.node_x[i]);  // 17 significant digits round-trip exactly
    REQUIRE(y == mesh.node_y[i]);
  }
  int n_elems;
  ss >> word >> n_elems;
  REQUIRE(word == "elements");
  REQUIRE(n_elems == int(mesh.tris.size()));
  bool saw_chimney_region = false;
  for (int t = 0; t < n_elems; ++t) {
    int id, v;
    ss >> id;
    for (int j = 0; j < 6; ++j) {
      ss >> v;
      REQUIRE(v == mesh.tris[t][j]);
    }
    std::string region;
    ss >> region;
    if (region == "chimney0") saw_chimney_region = true;
  }
  REQUIRE(saw_chimney_region);
  int n_bedges;
  ss >> word >> n_bedges;
  REQUIRE(word == "boundary_edges");
  REQUIRE(n_bedges == int(mesh.boundary.size()));
}
