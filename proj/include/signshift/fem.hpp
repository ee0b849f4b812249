/**
 * @file fem.hpp
 * @brief P1 finite elements on interface-conforming polar meshes: mesh
 *        construction and I/O, complex-symmetric assembly with an outgoing
 *        closure, pivot-tracked sparse solves, and the interface diagnostics
 *        built by pulling the solution back through a reflection.
 *
 * The mesh conforms to every coefficient circle, so quadrature never samples
 * a coefficient across the interface, and the outer ring is exactly uniform,
 * which makes the nonlocal radiating closure a circulant block.
 */
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "signshift/errors.hpp"
#include "signshift/geometry.hpp"
#include "signshift/reflection.hpp"

namespace signshift::fem {

using geometry::Mat2;
using geometry::Vec2;
using Complex = std::complex<double>;

/// Complex-valued volume source field.
using ComplexField = std::function<Complex(const Vec2&)>;

// ============================================================================
// Mesh
// ============================================================================

/// Minimum acceptable triangle quality 2 * inradius / circumradius (an
/// equilateral triangle scores 1).
inline constexpr double kQualityFloor = 0.2;

/// Vertex markers stored in mesh files.
enum VertexMarker : int {
  kInteriorVertex = 0,
  kConformingVertex = 1,  ///< on a coefficient circle
  kOuterVertex = 2,       ///< on the artificial boundary r = R
};

/// Conforming triangulation of the disk r <= R. Triangles carry the index of
/// the annular band (between consecutive conforming radii) that contains
/// them; band 0 is the innermost disk. All triangles are counterclockwise.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> region;          ///< per-triangle band index
  std::vector<int> vertex_marker;   ///< VertexMarker per vertex
  std::vector<int> boundary_ring;   ///< outer vertices in angular order
  double outer_radius = 0.0;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }

  double triangle_area(int t) const;
  /// 2 * inradius / circumradius, in (0, 1].
  double triangle_quality(int t) const;
  double min_quality() const;
  double total_area() const;
  Vec2 centroid(int t) const;
  /// Gradients of the three nodal basis functions (columns), constant per
  /// triangle.
  Eigen::Matrix<double, 2, 3> basis_gradients(int t) const;

  /// Structural checks: index ranges, positive orientation, size agreement,
  /// outer ring on r = R. Throws InconsistentMesh.
  void validate() const;
};

/// Triangulate the disk r <= outer_radius with full vertex rings placed
/// exactly on every conforming radius. The outer ring has n_angular uniform
/// vertices; the angular count halves toward the center (keeping near-unit
/// aspect ratio) down to an 8-triangle fan. Each band between consecutive
/// conforming radii gets at least n_radial_per_band radial layers.
///
/// Throws BadResolution unless n_angular is 8 * 2^t and >= 16, and the radii
/// are strictly increasing inside (0, outer_radius).
Mesh build_polar_mesh(const std::vector<double>& conforming_radii,
                      double outer_radius, int n_angular,
                      int n_radial_per_band);

/// Edge shared by triangles of different bands, i.e. lying on a conforming
/// circle. tri_lo is on the inner side.
struct InterfaceEdge {
  int v0 = 0, v1 = 0;
  int tri_lo = 0, tri_hi = 0;
};

/// All edges separating distinct bands, in deterministic order.
std::vector<InterfaceEdge> region_boundary_edges(const Mesh& mesh);

/// Plain-text mesh format:
///   vertices N triangles M
///   x y marker          (N lines)
///   i j k region        (M lines)
/// Doubles round-trip exactly. Throws IoError / ParseError.
void write_mesh_text(const Mesh& mesh, const std::string& path);
Mesh read_mesh_text(const std::string& path);

/// Uniform-bin point location; returns the containing triangle or -1.
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh);
  int locate(const Vec2& p) const;

 private:
  const Mesh* mesh_;
  Vec2 lo_, hi_;
  int nx_ = 0, ny_ = 0;
  std::vector<std::vector<int>> bins_;
};

// ============================================================================
// Medium and assembly
// ============================================================================

/// Coefficients on one mesh band: diffusion magnitude A (SPD), mass
/// magnitude sigma (> 0), and the sign s0 = +-1 multiplying both in the
/// equation. sign = -1 marks the inclusion D.
struct RegionSpec {
  reflection::MatrixField a;
  reflection::ScalarField sigma;
  int sign = +1;
};

/// Outgoing closure on r = R.
struct ClosureConfig {
  enum class Kind {
    ModalDtn,             ///< truncated modal map, circulant boundary block
    FirstOrderAbsorbing,  ///< du/dr = ik u - u / (2R)
  };
  Kind kind = Kind::ModalDtn;
  int max_modes = -1;  ///< DtN truncation; -1 keeps every resolvable mode
};

/// Assembled bilinear form, split into delta-independent real pieces so a
/// sweep over loss values can rebuild the system cheaply:
///   K(delta) = (-S+ + S- + k^2 (Msig+ - Msig-)) + i delta (S- + Mall)
///              + closure.
struct FemSystem {
  const Mesh* mesh = nullptr;
  double k = 0.0;
  Eigen::SparseMatrix<double> s_plus, s_minus;       ///< A-stiffness by sign
  Eigen::SparseMatrix<double> msig_plus, msig_minus; ///< sigma-mass by sign
  Eigen::SparseMatrix<double> m_all;                 ///< unit mass, whole disk
  Eigen::SparseMatrix<Complex> closure;              ///< boundary block
  Eigen::VectorXcd load;

  Eigen::SparseMatrix<Complex> system_matrix(double delta) const;
};

/// Galerkin assembly. Element stiffness uses exact P1 gradients; mass and
/// load use the interior 3-point (degree-2) rule; coefficients are evaluated
/// through the triangle's own band, never across an interface. The result is
/// exactly symmetric: ||K - K^T||_max = 0. Set threaded = false to force the
/// serial reference path (the threaded path is bitwise identical).
/// Throws InconsistentMesh if regions does not cover every band.
FemSystem assemble(const Mesh& mesh, const std::vector<RegionSpec>& regions,
                   double k, const ClosureConfig& closure,
                   const ComplexField& source, bool threaded = true);

// ============================================================================
// Solves
// ============================================================================

/// Nodal complex solution tied to its mesh. Rejects non-finite values.
struct SolutionField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXcd values;
  double delta = 0.0;
  std::uint64_t scenario_hash = 0;

  SolutionField() = default;
  SolutionField(const Mesh& m, Eigen::VectorXcd v, double d,
                std::uint64_t hash);

  Complex value(int vertex) const { return values[vertex]; }
};

struct SolveResult {
  SolutionField field;
  /// min |U_ii| / max |U_ii| over the LU factor; collapses toward zero at
  /// resonance.
  double pivot_indicator = 0.0;
  /// ||K u - b|| / ||b|| after the solve (0 for b = 0).
  double residual = 0.0;
};

/// Sparse LU solve of K(delta) u = load. Throws SingularSystem when the
/// factorization fails outright; near-singular systems are reported through
/// pivot_indicator instead.
SolveResult solve(const FemSystem& system, double delta,
                  std::uint64_t scenario_hash = 0);

/// Discrete power balance: loss dissipation plus radiated boundary power
/// minus source input, relative to the largest term. A Galerkin solution
/// satisfies it to machine precision at any resolution; it measures solver
/// consistency, not discretization error.
double energy_identity_residual(const FemSystem& system,
                                const SolutionField& field);

/// CSV export, header "x,y,re,im", one row per vertex. Throws IoError.
void write_solution_csv(const SolutionField& field, const std::string& path);

// ============================================================================
// Diagnostics
// ============================================================================

/// Named annulus r_inner <= r < r_outer used for region norms.
struct ObservationRegion {
  std::string name;
  double r_inner = 0.0;
  double r_outer = 0.0;
};

/// Interface health numbers for one solution. All entries are nonnegative.
struct Diagnostics {
  std::map<std::string, double> region_l2;
  /// ||u - u o F^{-1}||_{H^1} over the inner tube of width tau.
  double tube_h1_mismatch = 0.0;
  /// integral over the tube of |<(A - F*A) grad u, grad u>|.
  double gap_energy = 0.0;
  /// integral over the tube of |sigma - F*sigma| |u|^2 (magnitude fields;
  /// the sign lives in the verdict machinery, not here).
  double sigma_gap_mass = 0.0;
  /// Edge-length-weighted L2 jump of (F*A grad(u o F^{-1}) - A grad u) . nu
  /// across the interface (a first-order surrogate, not the H^{-1/2} norm).
  double flux_jump = 0.0;
  /// Quadrature points whose reflected image left the mesh (skipped).
  int pullback_misses = 0;
};

/// Evaluate the diagnostics by pulling the solution back through F on the
/// inner tube of width tau: values by point location + linear interpolation,
/// gradients by the chain rule with the analytic Jacobian of F.
Diagnostics compute_diagnostics(const SolutionField& field,
                                const std::vector<RegionSpec>& regions,
                                const geometry::InterfaceGeometry& geom,
                                const reflection::ReflectionMap& F,
                                const std::vector<ObservationRegion>& observed,
                                double tau);

}  // namespace signshift::fem
