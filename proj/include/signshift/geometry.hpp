/**
 * @file geometry.hpp
 * @brief Interface curves, signed distance, foot points and tube sampling.
 *
 * The interface Gamma is a disjoint union of closed curves (circles and
 * ellipses). The inclusion D is the set of points enclosed by an odd number
 * of components, so a two-circle interface describes either two disjoint
 * disks or an annulus. Signed distance is positive inside D; boundary
 * normals point out of D.
 */
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "signshift/errors.hpp"

namespace signshift::geometry {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// ============================================================================
// ClosedCurve
// ============================================================================

/// A circle or rotated ellipse, parametrized by the elliptic angle t.
/// Curve-local quantities (normal, curvature) refer to the curve's own
/// interior; the D-side orientation is applied by InterfaceGeometry.
class ClosedCurve {
 public:
  enum class Kind { Circle, Ellipse };

  static ClosedCurve circle(const Vec2& center, double radius);
  static ClosedCurve ellipse(const Vec2& center, double semi_major,
                             double semi_minor, double rotation);

  Kind kind() const { return kind_; }
  const Vec2& center() const { return center_; }
  double semi_major() const { return a_; }
  double semi_minor() const { return b_; }
  double rotation() const { return rot_; }

  Vec2 point(double t) const;
  Vec2 tangent(double t) const;         ///< unit, direction of increasing t
  Vec2 outward_normal(double t) const;  ///< unit, away from the curve interior
  double curvature(double t) const;     ///< w.r.t. outward normal; circle: 1/r
  double curvature_rate(double t) const;  ///< d(curvature)/d(arclength)
  double speed(double t) const;           ///< |dP/dt|

  /// Minimal osculating radius: radius for a circle, b^2/a for an ellipse.
  double reach() const;
  double perimeter() const;
  bool encloses(const Vec2& x) const;  ///< strict interior test

  /// Parameter of the closest curve point (global minimum). Safeguarded
  /// Newton refined to 1e-12; throws NonConvergence after 100 iterations.
  double nearest_param(const Vec2& x) const;

 private:
  ClosedCurve() = default;
  Vec2 to_local(const Vec2& x) const;

  Kind kind_ = Kind::Circle;
  Vec2 center_ = Vec2::Zero();
  double a_ = 1.0, b_ = 1.0, rot_ = 0.0;
  double cr_ = 1.0, sr_ = 0.0;  // cached cos/sin of rotation
};

// ============================================================================
// InterfaceGeometry
// ============================================================================

/// A point on Gamma with the D-oriented frame.
struct BoundaryPoint {
  int component = 0;
  double param = 0.0;  ///< curve parameter on the owning component
  Vec2 position = Vec2::Zero();
  Vec2 normal = Vec2::Zero();   ///< unit, out of D
  Vec2 tangent = Vec2::Zero();  ///< unit, so that d(normal)/ds = curvature * tangent
  double curvature = 0.0;       ///< sign follows the out-of-D normal
};

/// A tube sample with its projection data.
struct TubeSample {
  Vec2 position = Vec2::Zero();
  double signed_distance = 0.0;  ///< > 0 inside D
  BoundaryPoint foot;
};

class InterfaceGeometry {
 public:
  /// Validates: half_width in (0, reach), components pairwise separated by
  /// more than twice the half-width. Throws TubeTooWide otherwise.
  InterfaceGeometry(std::vector<ClosedCurve> components, double tube_half_width);

  const std::vector<ClosedCurve>& components() const { return components_; }
  int component_count() const { return static_cast<int>(components_.size()); }
  double tube_half_width() const { return tau_; }
  double reach() const { return reach_; }

  bool inside(const Vec2& x) const;  ///< x in D (even-odd rule)
  /// Whether the curve interior of component c lies on the D side.
  bool interior_is_inside(int c) const { return orient_[c] > 0; }

  double signed_distance(const Vec2& x) const;

  /// D-oriented frame at (component, param).
  BoundaryPoint boundary_point(int component, double param) const;
  double curvature_rate(const BoundaryPoint& p) const;

  /// Nearest-point projection. Throws AmbiguousProjection when the distance
  /// reaches the owning component's reach.
  BoundaryPoint foot_point(const Vec2& x) const;

  /// Deterministic quasi-uniform tube samples. side=+1 samples the inner
  /// tube (in D), side=-1 the outer tube. At least 10% of the samples lie
  /// within half_width/10 of Gamma; counts are allocated per component
  /// proportionally to perimeter (at least 8 each).
  std::vector<TubeSample> sample_tube(int side, int n) const;

 private:
  std::pair<int, double> nearest_component(const Vec2& x) const;

  std::vector<ClosedCurve> components_;
  std::vector<int> orient_;  // +1: curve interior is the D side
  std::vector<double> perimeter_;
  double tau_ = 0.0;
  double reach_ = 0.0;
};

}  // namespace signshift::geometry
