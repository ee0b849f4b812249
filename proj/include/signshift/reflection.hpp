/**
 * @file reflection.hpp
 * @brief Boundary reflections, push-forwards of coefficients, and the
 *        classifier that decides which well-posedness mechanism applies.
 *
 * A reflection F exchanges the two sides of the interface tube while fixing
 * the interface pointwise. Pushing the exterior coefficients through F and
 * comparing them with the interior ones near the interface is the core test:
 * a definite gap certifies stability, an exact match flags resonance.
 */
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "signshift/complementing.hpp"
#include "signshift/geometry.hpp"

namespace signshift::reflection {

using geometry::InterfaceGeometry;
using geometry::Mat2;
using geometry::Vec2;

using MatrixField = std::function<Mat2(const Vec2&)>;
using ScalarField = std::function<double(const Vec2&)>;

// ============================================================================
// ReflectionMap
// ============================================================================

enum class ReflectionKind { Standard, Curvature, Kelvin, Composite };

/// Diffeomorphism of the interface tube fixing (part of) the interface.
///
/// map() sends a point at signed distance s to one at signed distance -s'
/// on the far side; the three constructions are the normal reflection, the
/// curvature-weighted reflection (normal stretch 1 + t*c with c = beta *
/// curvature), and inversion in a circle. Composites chain two maps.
class ReflectionMap {
 public:
  /// Normal reflection through the interface. Requires tau <= tube width.
  static ReflectionMap standard(const InterfaceGeometry& geom, double tau);

  /// Curvature-weighted reflection; beta in (-1, 0] (0 degenerates to the
  /// standard reflection). Throws InvalidBeta outside that range and
  /// TubeTooWide when the normal stretch could reach 1/2 inside the tube.
  static ReflectionMap curvature(const InterfaceGeometry& geom, double beta,
                                 double tau);

  /// Inversion in the circle |x - center| = radius.
  static ReflectionMap kelvin(const Vec2& center, double radius);

  /// Composition outer(inner(x)).
  static ReflectionMap compose(ReflectionMap outer, ReflectionMap inner);

  ReflectionKind kind() const { return kind_; }
  double tube() const { return tau_; }

  Vec2 map(const Vec2& x) const;
  Vec2 inverse(const Vec2& y) const;
  Mat2 jacobian(const Vec2& x) const;       ///< derivative of map at x
  double jacobian_det(const Vec2& x) const; ///< |det jacobian|, > 0 on domain

  bool in_domain(const Vec2& x) const;
  bool in_image(const Vec2& y) const;

  /// True when F fixes the given interface component pointwise (probed at
  /// boundary points to 1e-8). Only fixed components are certified by the
  /// gap verifiers or eligible as resonance patches.
  bool fixes_component(const InterfaceGeometry& geom, int component) const;

 private:
  ReflectionMap() = default;

  ReflectionKind kind_ = ReflectionKind::Standard;
  const InterfaceGeometry* geom_ = nullptr;
  double beta_ = 0.0;
  double tau_ = 0.0;
  Vec2 center_ = Vec2::Zero();
  double radius_ = 1.0;
  std::vector<ReflectionMap> parts_;  // composite: parts_[0](parts_[1](x))
};

// ============================================================================
// Push-forwards
// ============================================================================

/// (F*A)(y) = DF A DF^T / J at x = F^{-1}(y). Symmetric positive definite
/// wherever A is.
Mat2 pushforward_matrix(const ReflectionMap& F, const MatrixField& A,
                        const Vec2& y);

/// (F*sigma)(y) = sigma(x) / J(x) at x = F^{-1}(y).
double pushforward_scalar(const ReflectionMap& F, const ScalarField& sigma,
                          const Vec2& y);

// ============================================================================
// Medium and verdicts
// ============================================================================

/// Piecewise coefficient fields: value inside D and outside D. The global
/// accessors resolve the side through the geometry.
struct MediumFields {
  MatrixField a_inside;
  MatrixField a_outside;
  ScalarField sigma_inside;
  ScalarField sigma_outside;

  Mat2 a(const InterfaceGeometry& geom, const Vec2& x) const {
    return geom.inside(x) ? a_inside(x) : a_outside(x);
  }
  double sigma(const InterfaceGeometry& geom, const Vec2& x) const {
    return geom.inside(x) ? sigma_inside(x) : sigma_outside(x);
  }
};

/// Which stability mechanism a scenario satisfies.
///  - Complementing: the interface coefficient pair passes the pointwise
///    boundary check (no reflection needed).
///  - MatrixGap: +-(A - F*A) >= c dist^alpha on every fixed component.
///  - ScalarGap: one-sided matrix ordering plus a sigma gap >= c dist^beta.
///  - Resonant: coefficients agree with their push-forward near a patch.
enum class VerdictTag { Complementing, MatrixGap, ScalarGap, Resonant, Unknown };

struct SampleDiagnostic {
  int component = 0;
  double dist = 0.0;   ///< distance to the interface
  double ratio = 0.0;  ///< gap eigenvalue (or sigma gap) divided by dist^exp
};

struct ConditionVerdict {
  VerdictTag tag = VerdictTag::Unknown;
  double exponent = 0.0;  ///< alpha (MatrixGap) or beta (ScalarGap)
  double fitted_c = 0.0;  ///< empirical min of ratio over certified samples
  /// Per component: +1 when the local field dominates the reflected one
  /// (A - F*A, sigma - F*sigma), -1 for the mirrored alternative, 0 none.
  std::vector<int> component_sign;
  std::vector<SampleDiagnostic> samples;
};

// ============================================================================
// Verifiers and classifier
// ============================================================================

/// Leading-order eigenvalues of the normalized curvature-reflection defect
/// (J^{-1} DF^T DF - I) / (2 t) in the frame (tangents..., normal), for a
/// boundary point with the given principal curvatures. Returns d values:
/// trace - 2 * curv[i] - beta * trace (tangential), (1 + beta) * trace
/// (normal), with trace = sum of curvatures.
std::vector<double> curvature_gap_spectrum(const std::vector<double>& curvatures,
                                           double beta);

/// Tests +-(A - F*A) >= c dist^alpha on the inner tube, per component.
ConditionVerdict verify_matrix_gap(const InterfaceGeometry& geom,
                                   const ReflectionMap& F,
                                   const MediumFields& medium, double alpha,
                                   int n_samples);

/// Tests the paired conditions (F*A - A >= 0 and sigma - F*sigma >= c
/// dist^beta) or the mirrored alternative, per component.
ConditionVerdict verify_scalar_gap(const InterfaceGeometry& geom,
                                   const ReflectionMap& F,
                                   const MediumFields& medium, double beta_exp,
                                   int n_samples);

struct PatchMatch {
  bool matched = false;
  int component = 0;
  Vec2 anchor = Vec2::Zero();
  double mismatch = 0.0;  ///< best relative coefficient mismatch over anchors
};

/// Looks for a boundary patch where (A, sigma) equals (F*A, F*sigma) to
/// within 1e-10 relative, probing patches around anchor points on every
/// component fixed by F. One matching patch suffices.
PatchMatch resonant_patch_test(const InterfaceGeometry& geom,
                               const ReflectionMap& F,
                               const MediumFields& medium, int anchors);

struct ClassifyOptions {
  std::vector<double> matrix_gap_exponents{0.0, 1.0};
  std::vector<double> scalar_gap_exponents{1.0};
  int samples_per_component = 64;
  int patch_anchors = 16;
};

/// Runs the checks in fixed order: interface complementing, matrix gap over
/// the exponent menu, scalar gap, resonance patch; first success wins.
/// Deterministic for fixed inputs.
ConditionVerdict classify(const InterfaceGeometry& geom, const ReflectionMap& F,
                          const MediumFields& medium,
                          const ClassifyOptions& opts = {});

}  // namespace signshift::reflection
