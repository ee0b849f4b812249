/**
 * @file complementing.hpp
 * @brief Algebraic boundary-compatibility check for pairs of symmetric
 *        positive definite coefficient matrices across an interface.
 *
 * For a unit normal e and tangential directions xi (xi . e = 0), define
 *   Delta_j(xi) = <A_j e, e><A_j xi, xi> - <A_j e, xi>^2.
 * The pair (A_1, A_2) is compatible when Delta_2(xi) != Delta_1(xi) for all
 * tangential xi != 0, i.e. when the reduced quadratic form of the difference
 * is definite on the tangent space. The associated decaying profile in the
 * half-space problem has exponent eta = (-i b - sqrt(Delta)) / a.
 */
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "signshift/errors.hpp"
#include "signshift/geometry.hpp"

namespace signshift::complementing {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws NotSymmetric / NotPositiveDefinite / DimensionMismatch.
void validate_spd(const Matrix& A, int dim);

/// Delta_A(e; xi) = <Ae,e><Axi,xi> - <Ae,xi>^2. Requires |e| = 1 (1e-12).
/// Strictly positive for xi outside span(e) when A is SPD.
double delta_form(const Matrix& A, const Vector& e, const Vector& xi);

/// Decay exponent eta = (-i<Axi,e> - sqrt(Delta)) / <Ae,e> of the mode
/// t -> exp(eta t) solving the constant-coefficient half-space problem in
/// direction e with tangential frequency xi. Requires xi . e = 0 (tolerance
/// 1e-12 |xi|, NotTangent otherwise) and xi != 0. Re(eta) < 0.
std::complex<double> decay_exponent(const Matrix& A, const Vector& e, const Vector& xi);

// ============================================================================
// Pairwise check
// ============================================================================

struct PairReport {
  bool holds = false;
  /// min |eigenvalue| of the reduced form, normalized by (|A1| + |A2|)^2.
  double margin = 0.0;
  /// +1 when Delta_2 > Delta_1 on the tangent space, -1 for <, 0 when failed.
  int sign = 0;
  /// Eigenvalues of the reduced tangential form, ascending.
  Vector eigenvalues;
  /// Present iff holds == false: a tangential direction with
  /// Delta_2 = Delta_1 (exact root when the reduced form is indefinite,
  /// otherwise the minimal-gap direction).
  std::optional<Vector> witness;
};

/// Definiteness test of Delta_2 - Delta_1 on the tangent space of e.
/// The reduced (d-1)x(d-1) form is assembled by polarization on an
/// orthonormal tangent basis; "holds" requires all eigenvalues of one strict
/// sign with min|eig| > 1e-9 max(1, |M|).
PairReport check_pair(const Matrix& A1, const Matrix& A2, const Vector& e);

// ============================================================================
// Interface check
// ============================================================================

using MatrixField = std::function<Eigen::Matrix2d(const geometry::Vec2&)>;

struct InterfaceSample {
  geometry::BoundaryPoint where;
  PairReport report;
};

struct InterfaceReport {
  bool applies = false;  ///< every sample holds with margin above tolerance
  std::vector<InterfaceSample> samples;
  /// Per component: +1 when A_in - A_out is uniformly positive definite at
  /// the samples, -1 for the reverse ordering, 0 when neither.
  std::vector<int> ordering;
};

/// Samples each component uniformly in parameter (at least 8 samples per
/// component) and runs check_pair with e = outward normal, A1 = outside
/// limit, A2 = inside limit.
InterfaceReport check_interface(const geometry::InterfaceGeometry& geom,
                                const MatrixField& A_out, const MatrixField& A_in,
                                int samples_per_component);

}  // namespace signshift::complementing
