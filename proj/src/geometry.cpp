/**
 * @file geometry.cpp
 * @brief Interface curves, signed distance, foot points and tube sampling.
 */
#include "signshift/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace signshift::geometry {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_param(double t) {
  t = std::fmod(t, kTwoPi);
  if (t < 0) t += kTwoPi;
  return t;
}
}  // namespace

// ============================================================================
// ClosedCurve
// ============================================================================

ClosedCurve ClosedCurve::circle(const Vec2& center, double radius) {
  if (!(radius > 0)) throw Error("circle radius must be positive");
  ClosedCurve c;
  c.kind_ = Kind::Circle;
  c.center_ = center;
  c.a_ = c.b_ = radius;
  c.rot_ = 0.0;
  c.cr_ = 1.0;
  c.sr_ = 0.0;
  return c;
}

ClosedCurve ClosedCurve::ellipse(const Vec2& center, double semi_major,
                                 double semi_minor, double rotation) {
  if (!(semi_major >= semi_minor && semi_minor > 0))
    throw Error("ellipse axes must satisfy a >= b > 0");
  ClosedCurve c;
  c.kind_ = semi_major == semi_minor ? Kind::Circle : Kind::Ellipse;
  c.center_ = center;
  c.a_ = semi_major;
  c.b_ = semi_minor;
  c.rot_ = rotation;
  c.cr_ = std::cos(rotation);
  c.sr_ = std::sin(rotation);
  return c;
}

Vec2 ClosedCurve::to_local(const Vec2& x) const {
  const Vec2 d = x - center_;
  return {cr_ * d.x() + sr_ * d.y(), -sr_ * d.x() + cr_ * d.y()};
}

Vec2 ClosedCurve::point(double t) const {
  const double u = a_ * std::cos(t), v = b_ * std::sin(t);
  return {center_.x() + cr_ * u - sr_ * v, center_.y() + sr_ * u + cr_ * v};
}

double ClosedCurve::speed(double t) const {
  const double s = std::sin(t), c = std::cos(t);
  return std::sqrt(a_ * a_ * s * s + b_ * b_ * c * c);
}

Vec2 ClosedCurve::tangent(double t) const {
  const double w = speed(t);
  const double u = -a_ * std::sin(t) / w, v = b_ * std::cos(t) / w;
  return {cr_ * u - sr_ * v, sr_ * u + cr_ * v};
}

Vec2 ClosedCurve::outward_normal(double t) const {
  const double w = speed(t);
  const double u = b_ * std::cos(t) / w, v = a_ * std::sin(t) / w;
  return {cr_ * u - sr_ * v, sr_ * u + cr_ * v};
}

double ClosedCurve::curvature(double t) const {
  const double w = speed(t);
  return a_ * b_ / (w * w * w);
}

double ClosedCurve::curvature_rate(double t) const {
  const double w = speed(t);
  const double w6 = w * w * w * w * w * w;
  return -3.0 * a_ * b_ * (a_ * a_ - b_ * b_) * std::sin(t) * std::cos(t) / w6;
}

double ClosedCurve::reach() const { return b_ * b_ / a_; }

double ClosedCurve::perimeter() const {
  if (kind_ == Kind::Circle) return kTwoPi * a_;
  // Composite Simpson on the speed; the integrand is smooth and periodic.
  const int n = 1024;
  const double h = kTwoPi / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t0 = i * h;
    sum += speed(t0) + 4.0 * speed(t0 + 0.5 * h) + speed(t0 + h);
  }
  return sum * h / 6.0;
}

bool ClosedCurve::encloses(const Vec2& x) const {
  const Vec2 p = to_local(x);
  const double u = p.x() / a_, v = p.y() / b_;
  return u * u + v * v < 1.0;
}

double ClosedCurve::nearest_param(const Vec2& x) const {
  const Vec2 p = to_local(x);
  if (kind_ == Kind::Circle) {
    const double r = p.norm();
    if (r < 1e-300) return 0.0;  // center: every parameter is nearest
    return wrap_param(std::atan2(p.y(), p.x()));
  }
  // Objective gradient g(t) = (Q(t) - p) . Q'(t); minima have g=0, g'>0.
  const auto g = [&](double t) {
    const double s = std::sin(t), c = std::cos(t);
    return (b_ * b_ - a_ * a_) * s * c + a_ * p.x() * s - b_ * p.y() * c;
  };
  const auto dist2 = [&](double t) {
    const double du = a_ * std::cos(t) - p.x(), dv = b_ * std::sin(t) - p.y();
    return du * du + dv * dv;
  };
  // Coarse scan for the global minimum, then a bracketed Newton refinement.
  const int n = 256;
  int best = 0;
  double best_d = std::numeric_limits<double>::max();
  for (int i = 0; i < n; ++i) {
    const double d = dist2(i * kTwoPi / n);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  double lo = (best - 1) * kTwoPi / n, hi = (best + 1) * kTwoPi / n;
  double glo = g(lo), ghi = g(hi);
  // The coarse argmin guarantees a minimum inside the bracket; widen until
  // the stationarity residual changes sign across it.
  for (int grow = 0; grow < 4 && !(glo <= 0.0 && ghi >= 0.0); ++grow) {
    lo -= kTwoPi / n;
    hi += kTwoPi / n;
    glo = g(lo);
    ghi = g(hi);
  }
  if (!(glo <= 0.0 && ghi >= 0.0))
    throw NonConvergence("ellipse projection: no stationary bracket");
  // Safeguarded Newton on g: every iterate keeps the sign change, so the
  // bracket collapses onto the stationary point (bisection at worst).
  double t = 0.5 * (lo + hi);
  double gt = g(t);
  for (int it = 0; it < 100; ++it) {
    if (hi - lo < 1e-13) return wrap_param(t);
    if (gt >= 0.0) {
      hi = t;
    } else {
      lo = t;
    }
    const double s = std::sin(t), c = std::cos(t);
    const double gp =
        (b_ * b_ - a_ * a_) * (c * c - s * s) + a_ * p.x() * c + b_ * p.y() * s;
    double tn = gp != 0.0 ? t - gt / gp : 0.5 * (lo + hi);
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    t = tn;
    gt = g(t);
  }
  throw NonConvergence("ellipse projection did not converge in 100 iterations");
}

// ============================================================================
// InterfaceGeometry
// ============================================================================

InterfaceGeometry::InterfaceGeometry(std::vector<ClosedCurve> components,
                                     double tube_half_width)
    : components_(std::move(components)), tau_(tube_half_width) {
  if (components_.empty()) throw Error("interface needs at least one component");
  reach_ = std::numeric_limits<double>::max();
  for (const auto& c : components_) reach_ = std::min(reach_, c.reach());
  if (!(tau_ > 0) || tau_ >= reach_)
    throw TubeTooWide("tube half-width must lie in (0, reach)");

  // Components must be pairwise separated by more than the full tube width,
  // so tubes of distinct components never touch (sampled check).
  const int ns = 512;
  for (size_t i = 0; i < components_.size(); ++i) {
    for (size_t j = i + 1; j < components_.size(); ++j) {
      double dmin = std::numeric_limits<double>::max();
      for (int s = 0; s < ns; ++s) {
        const Vec2 p = components_[i].point(s * kTwoPi / ns);
        dmin = std::min(dmin, (p - components_[j].point(components_[j].nearest_param(p))).norm());
      }
      if (dmin <= 2.0 * tau_)
        throw TubeTooWide("interface components closer than twice the tube half-width");
    }
  }

  // Orientation: does the curve-outward normal leave D?
  perimeter_.resize(components_.size());
  orient_.resize(components_.size());
  const double eps = 1e-3 * std::min(tau_, reach_);
  for (size_t c = 0; c < components_.size(); ++c) {
    perimeter_[c] = components_[c].perimeter();
    const Vec2 probe = components_[c].point(0.0) + eps * components_[c].outward_normal(0.0);
    orient_[c] = inside(probe) ? -1 : +1;
  }
}

bool InterfaceGeometry::inside(const Vec2& x) const {
  int count = 0;
  for (const auto& c : components_) count += c.encloses(x) ? 1 : 0;
  return (count % 2) == 1;
}

double InterfaceGeometry::signed_distance(const Vec2& x) const {
  const auto [c, t] = nearest_component(x);
  const double d = (x - components_[c].point(t)).norm();
  return inside(x) ? d : -d;
}

std::pair<int, double> InterfaceGeometry::nearest_component(const Vec2& x) const {
  int best = 0;
  double best_t = 0.0, best_d = std::numeric_limits<double>::max();
  for (int c = 0; c < component_count(); ++c) {
    const double t = components_[c].nearest_param(x);
    const double d = (x - components_[c].point(t)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
      best_t = t;
    }
  }
  return {best, best_t};
}

BoundaryPoint InterfaceGeometry::boundary_point(int component, double param) const {
  const ClosedCurve& curve = components_[component];
  const int s = orient_[component];
  BoundaryPoint p;
  p.component = component;
  p.param = wrap_param(param);
  p.position = curve.point(param);
  p.normal = s * curve.outward_normal(param);
  p.tangent = curve.tangent(param);
  p.curvature = s * curve.curvature(param);
  return p;
}

double InterfaceGeometry::curvature_rate(const BoundaryPoint& p) const {
  return orient_[p.component] * components_[p.component].curvature_rate(p.param);
}

BoundaryPoint InterfaceGeometry::foot_point(const Vec2& x) const {
  const auto [c, t] = nearest_component(x);
  const double d = (x - components_[c].point(t)).norm();
  if (d >= components_[c].reach())
    throw AmbiguousProjection("projection requested at or beyond the reach");
  return boundary_point(c, t);
}

std::vector<TubeSample> InterfaceGeometry::sample_tube(int side, int n) const {
  if (side != 1 && side != -1) throw Error("tube side must be +1 (inner) or -1 (outer)");
  if (n < 1) throw Error("sample count must be positive");
  const int nc = component_count();
  double total = 0.0;
  for (double p : perimeter_) total += p;
  std::vector<TubeSample> out;
  out.reserve(n + 8 * nc);
  // Low-discrepancy parameter/distance sequences; every 10th sample falls in
  // the near-boundary stratum |sd| < tau/10.
  constexpr double kGold = 0.6180339887498949;
  constexpr double kSqrt2 = 1.4142135623730951;
  for (int c = 0; c < nc; ++c) {
    const int nc_samples = std::max(8, static_cast<int>(std::lround(n * perimeter_[c] / total)));
    for (int i = 0; i < nc_samples; ++i) {
      const double t = kTwoPi * std::fmod(i * kGold + 0.137 * (c + 1), 1.0);
      const double u = std::fmod(i * kSqrt2 + 0.29, 1.0);
      const double d = (i % 10 == 0) ? (0.02 + 0.96 * u) * tau_ / 10.0
                                     : (0.1 + 0.88 * u) * tau_;
      TubeSample s;
      s.foot = boundary_point(c, t);
      s.position = s.foot.position - side * d * s.foot.normal;
      s.signed_distance = side * d;
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace signshift::geometry
