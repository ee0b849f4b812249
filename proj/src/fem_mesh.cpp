/**
 * @file fem_mesh.cpp
 * @brief Conforming polar meshes: construction, quality measures, text I/O,
 *        and uniform-bin point location.
 */

#include "signshift/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <utility>

namespace signshift::fem {

namespace {

double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

struct Ring {
  double radius = 0.0;
  int count = 0;
  int first = 0;  // index of the vertex at angle 0
};

Ring add_ring(Mesh& mesh, double radius, int count, int marker) {
  Ring ring{radius, count, mesh.vertex_count()};
  for (int j = 0; j < count; ++j) {
    const double th = 2.0 * M_PI * j / count;
    mesh.vertices.emplace_back(radius * std::cos(th), radius * std::sin(th));
    mesh.vertex_marker.push_back(marker);
  }
  return ring;
}

void push_triangle(Mesh& mesh, int a, int b, int c) {
  const Vec2& pa = mesh.vertices[a];
  if (cross2(mesh.vertices[b] - pa, mesh.vertices[c] - pa) < 0.0)
    std::swap(b, c);
  mesh.triangles.push_back({a, b, c});
}

// Band between rings of equal count: two triangles per quad.
void connect_uniform(Mesh& mesh, const Ring& in, const Ring& out) {
  for (int j = 0; j < in.count; ++j) {
    const int j1 = (j + 1) % in.count;
    push_triangle(mesh, in.first + j, out.first + j, out.first + j1);
    push_triangle(mesh, in.first + j, out.first + j1, in.first + j1);
  }
}

// Band where the outer ring has twice the vertices: three triangles per
// inner sector.
void connect_doubling(Mesh& mesh, const Ring& in, const Ring& out) {
  for (int j = 0; j < in.count; ++j) {
    const int j1 = (j + 1) % in.count;
    const int b0 = out.first + 2 * j;
    const int b1 = out.first + 2 * j + 1;
    const int b2 = out.first + (2 * j + 2) % out.count;
    push_triangle(mesh, in.first + j, b0, b1);
    push_triangle(mesh, in.first + j, b1, in.first + j1);
    push_triangle(mesh, in.first + j1, b1, b2);
  }
}

// Geometric ladder of same-count rings from `cur` up to `top`; the last ring
// lands exactly on `top` and carries `top_marker`.
Ring rise_uniform(Mesh& mesh, Ring cur, double top, int steps,
                  int top_marker) {
  const double base = cur.radius;
  for (int j = 1; j <= steps; ++j) {
    const double r =
        j == steps ? top : base * std::pow(top / base, double(j) / steps);
    Ring next = add_ring(mesh, r, cur.count,
                         j == steps ? top_marker : kInteriorVertex);
    connect_uniform(mesh, cur, next);
    cur = next;
  }
  return cur;
}

}  // namespace

// ============================================================================
// Mesh measures
// ============================================================================

double Mesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  const Vec2& a = vertices[tri[0]];
  return 0.5 * cross2(vertices[tri[1]] - a, vertices[tri[2]] - a);
}

double Mesh::triangle_quality(int t) const {
  const auto& tri = triangles[t];
  const double a = (vertices[tri[1]] - vertices[tri[0]]).norm();
  const double b = (vertices[tri[2]] - vertices[tri[1]]).norm();
  const double c = (vertices[tri[0]] - vertices[tri[2]]).norm();
  const double area = triangle_area(t);
  // 2 * inradius / circumradius = 16 A^2 / (abc (a + b + c)).
  return 16.0 * area * area / (a * b * c * (a + b + c));
}

double Mesh::min_quality() const {
  double q = std::numeric_limits<double>::infinity();
  for (int t = 0; t < triangle_count(); ++t)
    q = std::min(q, triangle_quality(t));
  return q;
}

double Mesh::total_area() const {
  double a = 0.0;
  for (int t = 0; t < triangle_count(); ++t) a += triangle_area(t);
  return a;
}

Vec2 Mesh::centroid(int t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

Eigen::Matrix<double, 2, 3> Mesh::basis_gradients(int t) const {
  const auto& tri = triangles[t];
  const double inv = 1.0 / (2.0 * triangle_area(t));
  Eigen::Matrix<double, 2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Vec2& pj = vertices[tri[(i + 1) % 3]];
    const Vec2& pk = vertices[tri[(i + 2) % 3]];
    g(0, i) = (pj.y() - pk.y()) * inv;
    g(1, i) = (pk.x() - pj.x()) * inv;
  }
  return g;
}

void Mesh::validate() const {
  const int nv = vertex_count();
  if (static_cast<int>(vertex_marker.size()) != nv)
    throw InconsistentMesh("mesh: one marker per vertex required");
  if (region.size() != triangles.size())
    throw InconsistentMesh("mesh: one region tag per triangle required");
  for (int t = 0; t < triangle_count(); ++t) {
    for (int v : triangles[t])
      if (v < 0 || v >= nv)
        throw InconsistentMesh("mesh: vertex index out of range");
    if (!(triangle_area(t) > 0.0))
      throw InconsistentMesh("mesh: triangle not positively oriented");
    if (region[t] < 0) throw InconsistentMesh("mesh: negative region tag");
  }
  for (int v : boundary_ring) {
    if (v < 0 || v >= nv)
      throw InconsistentMesh("mesh: boundary ring index out of range");
    if (std::abs(vertices[v].norm() - outer_radius) > 1e-12 * outer_radius)
      throw InconsistentMesh("mesh: boundary vertex off the outer circle");
  }
}

// ============================================================================
// Construction
// ============================================================================

Mesh build_polar_mesh(const std::vector<double>& conforming_radii,
                      double outer_radius, int n_angular,
                      int n_radial_per_band) {
  if (!(outer_radius > 0.0))
    throw BadResolution("polar mesh: outer radius must be positive");
  int tiers = 0;
  {
    int c = n_angular;
    while (c > 8 && c % 2 == 0) {
      c /= 2;
      ++tiers;
    }
    if (c != 8 || n_angular < 16)
      throw BadResolution("polar mesh: n_angular must be 8 * 2^t, t >= 1");
  }
  if (n_radial_per_band < 1)
    throw BadResolution("polar mesh: n_radial_per_band must be >= 1");
  for (std::size_t i = 0; i < conforming_radii.size(); ++i) {
    const double r = conforming_radii[i];
    if (!(r > 0.0) || !(r < outer_radius))
      throw BadResolution("polar mesh: conforming radii must lie in (0, R)");
    if (i > 0 && !(r > conforming_radii[i - 1]))
      throw BadResolution("polar mesh: conforming radii must increase");
  }

  const int m = n_angular;
  std::vector<double> tops(conforming_radii);
  tops.push_back(outer_radius);
  const double c0 = tops.front();
  const int c0_marker =
      conforming_radii.empty() ? kOuterVertex : kConformingVertex;

  Mesh mesh;
  mesh.outer_radius = outer_radius;
  mesh.vertices.emplace_back(0.0, 0.0);
  mesh.vertex_marker.push_back(kInteriorVertex);

  // Center fan at the innermost ring; 45-degree sectors keep it well shaped
  // at any radius.
  Ring cur = add_ring(mesh, c0 / double(1 << tiers), 8, kInteriorVertex);
  for (int j = 0; j < 8; ++j)
    push_triangle(mesh, 0, cur.first + j, cur.first + (j + 1) % 8);

  // Tiers toward c0, doubling the angular count each octave of radius so the
  // arc length stays near 2 pi c0 / m throughout.
  for (int t = tiers - 1; t >= 0; --t) {
    const double top = c0 / double(1 << t);
    const int count = m >> t;
    Ring trans = add_ring(mesh, cur.radius * (1.0 + 7.5 / count), count,
                          kInteriorVertex);
    connect_doubling(mesh, cur, trans);
    cur = trans;
    const int steps = std::max(
        1, static_cast<int>(std::lround(count * std::log(top / cur.radius) /
                                        (2.0 * M_PI))));
    cur = rise_uniform(mesh, cur, top, steps,
                       t == 0 ? c0_marker : kInteriorVertex);
  }

  // Bands between conforming radii, full angular count, geometric spacing.
  for (std::size_t b = 1; b < tops.size(); ++b) {
    const double lo = tops[b - 1], hi = tops[b];
    const int steps = std::max(
        n_radial_per_band,
        static_cast<int>(std::lround(m * std::log(hi / lo) / (2.0 * M_PI))));
    const int marker =
        b + 1 == tops.size() ? kOuterVertex : kConformingVertex;
    cur = rise_uniform(mesh, cur, hi, steps, marker);
  }

  mesh.boundary_ring.resize(m);
  for (int j = 0; j < m; ++j) mesh.boundary_ring[j] = cur.first + j;

  mesh.region.resize(mesh.triangle_count());
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double rc = mesh.centroid(t).norm();
    mesh.region[t] = static_cast<int>(
        std::upper_bound(conforming_radii.begin(), conforming_radii.end(), rc) -
        conforming_radii.begin());
  }

  mesh.validate();
  if (mesh.min_quality() < kQualityFloor)
    throw BadResolution("polar mesh: parameters produce degenerate triangles");
  return mesh;
}

// ============================================================================
// Interface edges
// ============================================================================

std::vector<InterfaceEdge> region_boundary_edges(const Mesh& mesh) {
  std::map<std::pair<int, int>, std::pair<int, int>> adjacency;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int e = 0; e < 3; ++e) {
      const int a = std::min(tri[e], tri[(e + 1) % 3]);
      const int b = std::max(tri[e], tri[(e + 1) % 3]);
      auto [it, fresh] = adjacency.try_emplace({a, b}, t, -1);
      if (!fresh) it->second.second = t;
    }
  }
  std::vector<InterfaceEdge> edges;
  for (const auto& [key, tris] : adjacency) {
    if (tris.second < 0) continue;
    const int r0 = mesh.region[tris.first], r1 = mesh.region[tris.second];
    if (r0 == r1) continue;
    InterfaceEdge edge;
    edge.v0 = key.first;
    edge.v1 = key.second;
    edge.tri_lo = r0 < r1 ? tris.first : tris.second;
    edge.tri_hi = r0 < r1 ? tris.second : tris.first;
    edges.push_back(edge);
  }
  return edges;
}

// ============================================================================
// Text I/O
// ============================================================================

void write_mesh_text(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("mesh write: cannot open " + path);
  out << "vertices " << mesh.vertex_count() << " triangles "
      << mesh.triangle_count() << "\n";
  char line[96];
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    std::snprintf(line, sizeof line, "%.17g %.17g %d\n", mesh.vertices[v].x(),
                  mesh.vertices[v].y(), mesh.vertex_marker[v]);
    out << line;
  }
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    out << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << mesh.region[t]
        << "\n";
  }
  if (!out) throw IoError("mesh write: failed writing " + path);
}

Mesh read_mesh_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("mesh read: cannot open " + path);
  std::string kw_v, kw_t;
  long nv = 0, nt = 0;
  if (!(in >> kw_v >> nv >> kw_t >> nt) || kw_v != "vertices" ||
      kw_t != "triangles" || nv < 0 || nt < 0)
    throw ParseError("mesh read: expected header 'vertices N triangles M'");

  Mesh mesh;
  mesh.vertices.reserve(nv);
  mesh.vertex_marker.reserve(nv);
  for (long v = 0; v < nv; ++v) {
    double x = 0.0, y = 0.0;
    int marker = 0;
    if (!(in >> x >> y >> marker))
      throw ParseError("mesh read: malformed vertex line");
    mesh.vertices.emplace_back(x, y);
    mesh.vertex_marker.push_back(marker);
  }
  mesh.triangles.reserve(nt);
  mesh.region.reserve(nt);
  for (long t = 0; t < nt; ++t) {
    std::array<int, 3> tri{};
    int region = 0;
    if (!(in >> tri[0] >> tri[1] >> tri[2] >> region))
      throw ParseError("mesh read: malformed triangle line");
    mesh.triangles.push_back(tri);
    mesh.region.push_back(region);
  }

  // The boundary ring is implicit in the format: marker-2 vertices ordered
  // by angle in [0, 2 pi).
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (mesh.vertex_marker[v] == kOuterVertex) mesh.boundary_ring.push_back(v);
  std::sort(mesh.boundary_ring.begin(), mesh.boundary_ring.end(),
            [&](int a, int b) {
              auto key = [&](int v) {
                const double th =
                    std::atan2(mesh.vertices[v].y(), mesh.vertices[v].x());
                return th < 0.0 ? th + 2.0 * M_PI : th;
              };
              return key(a) < key(b);
            });
  for (int v : mesh.boundary_ring)
    mesh.outer_radius = std::max(mesh.outer_radius, mesh.vertices[v].norm());
  mesh.validate();
  return mesh;
}

// ============================================================================
// Point location
// ============================================================================

PointLocator::PointLocator(const Mesh& mesh) : mesh_(&mesh) {
  lo_ = Vec2(std::numeric_limits<double>::max(),
             std::numeric_limits<double>::max());
  hi_ = -lo_;
  for (const Vec2& v : mesh.vertices) {
    lo_ = lo_.cwiseMin(v);
    hi_ = hi_.cwiseMax(v);
  }
  const int n = std::clamp(
      static_cast<int>(std::sqrt(mesh.triangle_count() / 2.0)), 8, 512);
  nx_ = ny_ = n;
  bins_.resize(static_cast<std::size_t>(nx_) * ny_);
  const Vec2 span = hi_ - lo_;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    Vec2 tlo = lo_ + span, thi = lo_;
    for (int v : mesh.triangles[t]) {
      tlo = tlo.cwiseMin(mesh.vertices[v]);
      thi = thi.cwiseMax(mesh.vertices[v]);
    }
    const int x0 = std::clamp(
        static_cast<int>((tlo.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
    const int x1 = std::clamp(
        static_cast<int>((thi.x() - lo_.x()) / span.x() * nx_), 0, nx_ - 1);
    const int y0 = std::clamp(
        static_cast<int>((tlo.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
    const int y1 = std::clamp(
        static_cast<int>((thi.y() - lo_.y()) / span.y() * ny_), 0, ny_ - 1);
    for (int gy = y0; gy <= y1; ++gy)
      for (int gx = x0; gx <= x1; ++gx)
        bins_[static_cast<std::size_t>(gy) * nx_ + gx].push_back(t);
  }
}

int PointLocator::locate(const Vec2& p) const {
  if ((p.x() < lo_.x()) || (p.x() > hi_.x()) || (p.y() < lo_.y()) ||
      (p.y() > hi_.y()))
    return -1;
  const Vec2 span = hi_ - lo_;
  const int gx =
      std::clamp(static_cast<int>((p.x() - lo_.x()) / span.x() * nx_), 0,
                 nx_ - 1);
  const int gy =
      std::clamp(static_cast<int>((p.y() - lo_.y()) / span.y() * ny_), 0,
                 ny_ - 1);
  for (int t : bins_[static_cast<std::size_t>(gy) * nx_ + gx]) {
    const auto& tri = mesh_->triangles[t];
    const Vec2& a = mesh_->vertices[tri[0]];
    const Vec2& b = mesh_->vertices[tri[1]];
    const Vec2& c = mesh_->vertices[tri[2]];
    const double area2 = cross2(b - a, c - a);
    const double l0 = cross2(b - p, c - p) / area2;
    const double l1 = cross2(c - p, a - p) / area2;
    const double l2 = cross2(a - p, b - p) / area2;
    if (l0 >= -1e-10 && l1 >= -1e-10 && l2 >= -1e-10) return t;
  }
  return -1;
}

}  // namespace signshift::fem
