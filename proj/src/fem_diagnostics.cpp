/**
 * @file fem_diagnostics.cpp
 * @brief Interface diagnostics: region norms, pull-back mismatch in the
 *        interface tube, coefficient-gap energies, and the flux-jump
 *        surrogate on the interface.
 */

#include <algorithm>
#include <cmath>

#include "signshift/fem.hpp"

namespace signshift::fem {

namespace {

constexpr double kQa = 2.0 / 3.0, kQb = 1.0 / 6.0;
constexpr double kBary[3][3] = {
    {kQa, kQb, kQb}, {kQb, kQa, kQb}, {kQb, kQb, kQa}};

using Vec2c = Eigen::Vector2cd;

double cross2(const Vec2& a, const Vec2& b) {
  return a.x() * b.y() - a.y() * b.x();
}

Vec2c nodal_gradient(const Mesh& mesh, int t, const Eigen::VectorXcd& u) {
  const Eigen::Matrix<double, 2, 3> g = mesh.basis_gradients(t);
  Vec2c out = Vec2c::Zero();
  for (int i = 0; i < 3; ++i) {
    const Complex ui = u[mesh.triangles[t][i]];
    out.x() += ui * g(0, i);
    out.y() += ui * g(1, i);
  }
  return out;
}

Complex interpolate(const Mesh& mesh, int t, const Vec2& x,
                    const Eigen::VectorXcd& u) {
  const auto& tri = mesh.triangles[t];
  const Vec2& a = mesh.vertices[tri[0]];
  const Vec2& b = mesh.vertices[tri[1]];
  const Vec2& c = mesh.vertices[tri[2]];
  const double area2 = cross2(b - a, c - a);
  const double l0 = cross2(b - x, c - x) / area2;
  const double l1 = cross2(c - x, a - x) / area2;
  return l0 * u[tri[0]] + l1 * u[tri[1]] + (1.0 - l0 - l1) * u[tri[2]];
}

Vec2c apply_real(const Mat2& m, const Vec2c& v) {
  const Vec2 re = m * v.real().matrix().eval();
  const Vec2 im = m * v.imag().matrix().eval();
  return Vec2c(Complex(re.x(), im.x()), Complex(re.y(), im.y()));
}

// Re(g^H M g) for real symmetric M; the imaginary part cancels.
double quadratic(const Mat2& m, const Vec2c& g) {
  const Vec2 re = g.real(), im = g.imag();
  return re.dot(m * re) + im.dot(m * im);
}

}  // namespace

Diagnostics compute_diagnostics(const SolutionField& field,
                                const std::vector<RegionSpec>& regions,
                                const geometry::InterfaceGeometry& geom,
                                const reflection::ReflectionMap& F,
                                const std::vector<ObservationRegion>& observed,
                                double tau) {
  const Mesh& mesh = *field.mesh;
  const Eigen::VectorXcd& u = field.values;
  for (int r : mesh.region)
    if (r >= static_cast<int>(regions.size()))
      throw InconsistentMesh("diagnostics: mesh band without coefficients");
  if (!(tau > 0.0) || tau > geom.tube_half_width())
    throw ValidationError("diagnostics: tau must lie in (0, tube width]");

  Diagnostics diag;

  // --- region norms -------------------------------------------------------
  for (const auto& obs : observed) {
    double acc = 0.0;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const double rc = mesh.centroid(t).norm();
      if (rc < obs.r_inner || rc >= obs.r_outer) continue;
      const auto& tri = mesh.triangles[t];
      const double w = mesh.triangle_area(t) / 3.0;
      for (int q = 0; q < 3; ++q) {
        Complex val = 0.0;
        for (int i = 0; i < 3; ++i) val += kBary[q][i] * u[tri[i]];
        acc += w * std::norm(val);
      }
    }
    diag.region_l2[obs.name] = std::sqrt(acc);
  }

  // --- pull-back quantities on the inner tube -----------------------------
  const PointLocator locator(mesh);
  double mismatch = 0.0, gap = 0.0, sigma_gap = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const RegionSpec& inside = regions[mesh.region[t]];
    if (inside.sign >= 0) continue;
    const double dist = geom.signed_distance(mesh.centroid(t));
    if (!(dist > 0.0) || dist >= tau) continue;

    const auto& tri = mesh.triangles[t];
    const double w = mesh.triangle_area(t) / 3.0;
    const Vec2c grad_u = nodal_gradient(mesh, t, u);
    for (int q = 0; q < 3; ++q) {
      const Vec2 y = kBary[q][0] * mesh.vertices[tri[0]] +
                     kBary[q][1] * mesh.vertices[tri[1]] +
                     kBary[q][2] * mesh.vertices[tri[2]];
      Complex uy = 0.0;
      for (int i = 0; i < 3; ++i) uy += kBary[q][i] * u[tri[i]];

      Vec2 x;
      try {
        x = F.inverse(y);
      } catch (const Error&) {
        ++diag.pullback_misses;
        continue;
      }
      const int tx = locator.locate(x);
      if (tx < 0) {
        ++diag.pullback_misses;
        continue;
      }

      const Complex v = interpolate(mesh, tx, x, u);
      const Mat2 df = F.jacobian(x);
      const double jac = F.jacobian_det(x);
      const Mat2 df_inv_t = df.inverse().transpose();
      const Vec2c grad_v = apply_real(df_inv_t, nodal_gradient(mesh, tx, u));

      mismatch += w * (std::norm(uy - v) + (grad_u - grad_v).squaredNorm());

      const Mat2 pushed_a =
          df * regions[mesh.region[tx]].a(x) * df.transpose() / jac;
      gap += w * std::abs(quadratic(inside.a(y) - pushed_a, grad_u));

      const double pushed_sigma = regions[mesh.region[tx]].sigma(x) / jac;
      sigma_gap += w * std::abs(inside.sigma(y) - pushed_sigma) * std::norm(uy);
    }
  }
  diag.tube_h1_mismatch = std::sqrt(mismatch);
  diag.gap_energy = gap;
  diag.sigma_gap_mass = sigma_gap;

  // --- flux jump across the interface -------------------------------------
  double jump_acc = 0.0;
  for (const InterfaceEdge& edge : region_boundary_edges(mesh)) {
    const RegionSpec& lo = regions[mesh.region[edge.tri_lo]];
    const RegionSpec& hi = regions[mesh.region[edge.tri_hi]];
    if (lo.sign == hi.sign) continue;  // band change without a sign change
    const int t_in = lo.sign < 0 ? edge.tri_lo : edge.tri_hi;
    const int t_out = lo.sign < 0 ? edge.tri_hi : edge.tri_lo;

    const Vec2& a = mesh.vertices[edge.v0];
    const Vec2& b = mesh.vertices[edge.v1];
    const double len = (b - a).norm();
    const Vec2 mid = 0.5 * (a + b);
    Vec2 nu((b - a).y() / len, -(b - a).x() / len);
    if (nu.dot(mesh.centroid(t_out) - mesh.centroid(t_in)) < 0.0) nu = -nu;

    Vec2 x;
    try {
      x = F.inverse(mid);
    } catch (const Error&) {
      ++diag.pullback_misses;
      continue;
    }
    const Mat2 df = F.jacobian(x);
    const double jac = F.jacobian_det(x);
    const Mat2 pushed_a =
        df * regions[mesh.region[t_out]].a(x) * df.transpose() / jac;
    const Vec2c grad_v =
        apply_real(df.inverse().transpose(), nodal_gradient(mesh, t_out, u));
    const Vec2c grad_in = nodal_gradient(mesh, t_in, u);

    const Vec2c flux =
        apply_real(pushed_a, grad_v) -
        apply_real(regions[mesh.region[t_in]].a(mid), grad_in);
    const Complex jump = flux.x() * nu.x() + flux.y() * nu.y();
    jump_acc += len * std::norm(jump);
  }
  diag.flux_jump = std::sqrt(jump_acc);
  return diag;
}

}  // namespace signshift::fem
