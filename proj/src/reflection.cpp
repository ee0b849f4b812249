/**
 * @file reflection.cpp
 * @brief Reflection maps, push-forwards, gap verifiers and the classifier.
 */
#include "signshift/reflection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace signshift::reflection {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Offset of x from its foot point along the outward normal: x = p + t nu
/// with t = -signed_distance (positive outside D).
double normal_offset(const geometry::BoundaryPoint& bp, const Vec2& x) {
  return (x - bp.position).dot(bp.normal);
}

/// Stable root of t (1 + t c) = s with t -> s as c -> 0. Throws OutsideTube
/// past the fold of the quadratic.
double unstretch(double s, double c) {
  const double disc = 1.0 + 4.0 * c * s;
  if (disc <= 0.0) throw OutsideTube("curvature reflection: no preimage at this depth");
  return 2.0 * s / (1.0 + std::sqrt(disc));
}

}  // namespace

// ============================================================================
// ReflectionMap: construction
// ============================================================================

ReflectionMap ReflectionMap::standard(const InterfaceGeometry& geom, double tau) {
  if (!(tau > 0.0) || tau > geom.tube_half_width())
    throw TubeTooWide("reflection tube must lie within the geometry tube");
  ReflectionMap f;
  f.kind_ = ReflectionKind::Standard;
  f.geom_ = &geom;
  f.tau_ = tau;
  return f;
}

ReflectionMap ReflectionMap::curvature(const InterfaceGeometry& geom, double beta,
                                       double tau) {
  if (!(beta > -1.0) || beta > 0.0)
    throw InvalidBeta("curvature reflection requires beta in (-1, 0]");
  if (!(tau > 0.0) || tau > geom.tube_half_width())
    throw TubeTooWide("reflection tube must lie within the geometry tube");
  // Scan the curvature range so the normal stretch 1 + t c stays above 1/2
  // and the mapped offset keeps a unique foot point.
  double c_abs = 0.0, c_pos = 0.0;
  for (int comp = 0; comp < geom.component_count(); ++comp) {
    for (int j = 0; j < 512; ++j) {
      const double phi = 2.0 * M_PI * j / 512.0;
      const double c = beta * geom.boundary_point(comp, phi).curvature;
      c_abs = std::max(c_abs, std::abs(c));
      c_pos = std::max(c_pos, c);
    }
  }
  if (tau * c_abs > 0.49)
    throw TubeTooWide("curvature reflection: normal stretch reaches 1/2 in the tube");
  if (tau * (1.0 + tau * c_pos) >= 0.999 * geom.reach())
    throw TubeTooWide("curvature reflection: image tube exceeds the reach");
  ReflectionMap f;
  f.kind_ = ReflectionKind::Curvature;
  f.geom_ = &geom;
  f.beta_ = beta;
  f.tau_ = tau;
  return f;
}

ReflectionMap ReflectionMap::kelvin(const Vec2& center, double radius) {
  if (!(radius > 0.0)) throw ValidationError("kelvin: radius must be positive");
  ReflectionMap f;
  f.kind_ = ReflectionKind::Kelvin;
  f.center_ = center;
  f.radius_ = radius;
  f.tau_ = kInf;
  return f;
}

ReflectionMap ReflectionMap::compose(ReflectionMap outer, ReflectionMap inner) {
  ReflectionMap f;
  f.kind_ = ReflectionKind::Composite;
  f.tau_ = std::min(outer.tau_, inner.tau_);
  f.parts_.push_back(std::move(outer));
  f.parts_.push_back(std::move(inner));
  return f;
}

// ============================================================================
// ReflectionMap: evaluation
// ============================================================================

Vec2 ReflectionMap::map(const Vec2& x) const {
  switch (kind_) {
    case ReflectionKind::Standard:
    case ReflectionKind::Curvature: {
      const auto bp = geom_->foot_point(x);
      const double t = normal_offset(bp, x);
      if (std::abs(t) > tau_ * (1.0 + 1e-12))
        throw OutsideTube("reflection evaluated outside its tube");
      const double c = beta_ * bp.curvature;
      return bp.position - t * (1.0 + t * c) * bp.normal;
    }
    case ReflectionKind::Kelvin: {
      const Vec2 w = x - center_;
      const double s2 = w.squaredNorm();
      if (s2 < 1e-18 * radius_ * radius_)
        throw SingularAtCenter("kelvin transform evaluated at its center");
      return center_ + (radius_ * radius_ / s2) * w;
    }
    case ReflectionKind::Composite:
      return parts_[0].map(parts_[1].map(x));
  }
  throw ValidationError("unreachable reflection kind");
}

Vec2 ReflectionMap::inverse(const Vec2& y) const {
  switch (kind_) {
    case ReflectionKind::Standard:
    case ReflectionKind::Kelvin:
      return map(y);  // involutions
    case ReflectionKind::Curvature: {
      const auto bp = geom_->foot_point(y);
      const double s = -normal_offset(bp, y);  // solve t (1 + t c) = s
      const double t = unstretch(s, beta_ * bp.curvature);
      if (std::abs(t) > tau_ * (1.0 + 1e-12))
        throw OutsideTube("reflection preimage outside its tube");
      return bp.position + t * bp.normal;
    }
    case ReflectionKind::Composite:
      return parts_[1].inverse(parts_[0].inverse(y));
  }
  throw ValidationError("unreachable reflection kind");
}

Mat2 ReflectionMap::jacobian(const Vec2& x) const {
  switch (kind_) {
    case ReflectionKind::Standard:
    case ReflectionKind::Curvature: {
      const auto bp = geom_->foot_point(x);
      const double t = normal_offset(bp, x);
      if (std::abs(t) > tau_ * (1.0 + 1e-12))
        throw OutsideTube("reflection evaluated outside its tube");
      const double kappa = bp.curvature;
      const double c = beta_ * kappa;
      const double c_rate = beta_ * geom_->curvature_rate(bp);
      const double g = t * (1.0 + t * c);  // mapped offset
      const double denom = 1.0 + t * kappa;
      const Vec2 T = bp.tangent, nu = bp.normal;
      return ((1.0 - g * kappa) / denom) * (T * T.transpose()) -
             ((t * t * c_rate) / denom) * (nu * T.transpose()) -
             (1.0 + 2.0 * t * c) * (nu * nu.transpose());
    }
    case ReflectionKind::Kelvin: {
      const Vec2 w = x - center_;
      const double s2 = w.squaredNorm();
      if (s2 < 1e-18 * radius_ * radius_)
        throw SingularAtCenter("kelvin transform evaluated at its center");
      const double f = radius_ * radius_ / s2;
      return f * (Mat2::Identity() - 2.0 * (w * w.transpose()) / s2);
    }
    case ReflectionKind::Composite:
      return parts_[0].jacobian(parts_[1].map(x)) * parts_[1].jacobian(x);
  }
  throw ValidationError("unreachable reflection kind");
}

double ReflectionMap::jacobian_det(const Vec2& x) const {
  switch (kind_) {
    case ReflectionKind::Standard:
    case ReflectionKind::Curvature: {
      const auto bp = geom_->foot_point(x);
      const double t = normal_offset(bp, x);
      const double kappa = bp.curvature;
      const double c = beta_ * kappa;
      const double g = t * (1.0 + t * c);
      const double det =
          ((1.0 - g * kappa) * (1.0 + 2.0 * t * c)) / (1.0 + t * kappa);
      if (!(det > 0.0)) throw OutsideTube("reflection jacobian degenerates here");
      return det;
    }
    case ReflectionKind::Kelvin: {
      const double s2 = (x - center_).squaredNorm();
      if (s2 < 1e-18 * radius_ * radius_)
        throw SingularAtCenter("kelvin transform evaluated at its center");
      const double r2 = radius_ * radius_;
      return (r2 / s2) * (r2 / s2);
    }
    case ReflectionKind::Composite:
      return parts_[0].jacobian_det(parts_[1].map(x)) * parts_[1].jacobian_det(x);
  }
  throw ValidationError("unreachable reflection kind");
}

bool ReflectionMap::in_domain(const Vec2& x) const {
  switch (kind_) {
    case ReflectionKind::Standard:
    case ReflectionKind::Curvature:
      try {
        return std::abs(normal_offset(geom_->foot_point(x), x)) <=
               tau_ * (1.0 + 1e-12);
      } catch (const Error&) {
        return false;
      }
    case ReflectionKind::Kelvin:
      return (x - center_).squaredNorm() >= 1e-18 * radius_ * radius_;
    case ReflectionKind::Composite:
      if (!parts_[1].in_domain(x)) return false;
      return parts_[0].in_domain(parts_[1].map(x));
  }
  return false;
}

bool ReflectionMap::in_image(const Vec2& y) const {
  switch (kind_) {
    case ReflectionKind::Standard:
    case ReflectionKind::Kelvin:
      return in_domain(y);
    case ReflectionKind::Curvature:
      try {
        const auto bp = geom_->foot_point(y);
        const double t = unstretch(-normal_offset(bp, y), beta_ * bp.curvature);
        return std::abs(t) <= tau_ * (1.0 + 1e-12);
      } catch (const Error&) {
        return false;
      }
    case ReflectionKind::Composite:
      if (!parts_[0].in_image(y)) return false;
      return parts_[1].in_image(parts_[0].inverse(y));
  }
  return false;
}

bool ReflectionMap::fixes_component(const InterfaceGeometry& geom,
                                    int component) const {
  for (int j = 0; j < 8; ++j) {
    const Vec2 p = geom.boundary_point(component, 2.0 * M_PI * j / 8.0).position;
    try {
      if ((map(p) - p).norm() > 1e-8 * std::max(1.0, p.norm())) return false;
    } catch (const Error&) {
      return false;
    }
  }
  return true;
}

// ============================================================================
// Push-forwards
// ============================================================================

Mat2 pushforward_matrix(const ReflectionMap& F, const MatrixField& A,
                        const Vec2& y) {
  const Vec2 x = F.inverse(y);
  const Mat2 DF = F.jacobian(x);
  const double J = F.jacobian_det(x);
  return (DF * A(x) * DF.transpose()) / J;
}

double pushforward_scalar(const ReflectionMap& F, const ScalarField& sigma,
                          const Vec2& y) {
  const Vec2 x = F.inverse(y);
  return sigma(x) / F.jacobian_det(x);
}

// ============================================================================
// Curvature gap spectrum
// ============================================================================

std::vector<double> curvature_gap_spectrum(const std::vector<double>& curvatures,
                                           double beta) {
  if (!(beta > -1.0) || beta > 0.0)
    throw InvalidBeta("curvature gap spectrum requires beta in (-1, 0]");
  double trace = 0.0;
  for (double k : curvatures) {
    if (!std::isfinite(k)) throw ValidationError("curvatures must be finite");
    trace += k;
  }
  std::vector<double> eig;
  eig.reserve(curvatures.size() + 1);
  for (double k : curvatures) eig.push_back(trace - 2.0 * k - beta * trace);
  eig.push_back((1.0 + beta) * trace);
  return eig;
}

// ============================================================================
// Verifiers
// ============================================================================

namespace {

struct GapRow {
  int component = 0;
  double dist = 0.0;
  double ratio_local = 0.0;      // local-dominates alternative
  double ratio_reflected = 0.0;  // reflected-dominates alternative
  bool psd_local = true;         // scalar-gap matrix clause, per alternative
  bool psd_reflected = true;
};

struct GapScan {
  std::vector<GapRow> rows;
  std::vector<char> covered;
  int n_components = 0;
};

/// Shared sampling pass: evaluates the push-forward defect on inner-tube
/// samples of every component fixed by F.
GapScan scan_gaps(const InterfaceGeometry& geom, const ReflectionMap& F,
                  const MediumFields& medium, double exponent, bool scalar_mode,
                  int n_samples) {
  GapScan scan;
  scan.n_components = geom.component_count();
  scan.covered.assign(scan.n_components, 0);
  for (int c = 0; c < scan.n_components; ++c)
    scan.covered[c] = F.fixes_component(geom, c) ? 1 : 0;

  const MatrixField a_global = [&](const Vec2& x) { return medium.a(geom, x); };
  const ScalarField s_global = [&](const Vec2& x) { return medium.sigma(geom, x); };

  for (const auto& s : geom.sample_tube(+1, n_samples)) {
    const int comp = s.foot.component;
    if (!scan.covered[comp]) continue;
    GapRow row;
    row.component = comp;
    row.dist = s.signed_distance;
    if (!F.in_image(s.position)) {
      row.ratio_local = row.ratio_reflected = -kInf;
      row.psd_local = row.psd_reflected = false;
      scan.rows.push_back(row);
      continue;
    }
    const Mat2 a_here = medium.a(geom, s.position);
    Mat2 G = pushforward_matrix(F, a_global, s.position) - a_here;
    G = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Mat2> es(G);
    const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(1);
    const double w = std::pow(row.dist, exponent);
    if (scalar_mode) {
      const double tol = 1e-9 * std::max(1.0, a_here.norm());
      const double d_sigma =
          pushforward_scalar(F, s_global, s.position) - medium.sigma(geom, s.position);
      row.psd_local = lmin >= -tol;          // pairs with sigma - F*sigma >= ...
      row.psd_reflected = -lmax >= -tol;     // pairs with F*sigma - sigma >= ...
      row.ratio_local = -d_sigma / w;
      row.ratio_reflected = d_sigma / w;
    } else {
      row.ratio_local = -lmax / w;   // lambda_min(A - F*A) / dist^alpha
      row.ratio_reflected = lmin / w;
    }
    scan.rows.push_back(row);
  }
  return scan;
}

ConditionVerdict assemble_verdict(const GapScan& scan, VerdictTag tag_if_ok,
                                  double exponent) {
  ConditionVerdict v;
  v.exponent = exponent;
  v.component_sign.assign(scan.n_components, 0);

  std::vector<double> c_local(scan.n_components, kInf);
  std::vector<double> c_reflected(scan.n_components, kInf);
  std::vector<char> ok_local(scan.n_components, 1);
  std::vector<char> ok_reflected(scan.n_components, 1);
  std::vector<char> seen(scan.n_components, 0);
  for (const auto& r : scan.rows) {
    seen[r.component] = 1;
    c_local[r.component] = std::min(c_local[r.component], r.ratio_local);
    c_reflected[r.component] = std::min(c_reflected[r.component], r.ratio_reflected);
    ok_local[r.component] &= r.psd_local ? 1 : 0;
    ok_reflected[r.component] &= r.psd_reflected ? 1 : 0;
  }

  bool all_certified = true;
  double fitted = kInf;
  for (int c = 0; c < scan.n_components; ++c) {
    if (!scan.covered[c] || !seen[c]) {
      all_certified = false;
      continue;
    }
    if (ok_local[c] && c_local[c] > 1e-9) {
      v.component_sign[c] = +1;
      fitted = std::min(fitted, c_local[c]);
    } else if (ok_reflected[c] && c_reflected[c] > 1e-9) {
      v.component_sign[c] = -1;
      fitted = std::min(fitted, c_reflected[c]);
    } else {
      all_certified = false;
    }
  }

  for (const auto& r : scan.rows) {
    const int sgn = v.component_sign[r.component];
    SampleDiagnostic d;
    d.component = r.component;
    d.dist = r.dist;
    d.ratio = sgn > 0    ? r.ratio_local
              : sgn < 0  ? r.ratio_reflected
                         : std::max(r.ratio_local, r.ratio_reflected);
    v.samples.push_back(d);
  }

  if (all_certified && scan.n_components > 0) {
    v.tag = tag_if_ok;
    v.fitted_c = fitted;
  } else {
    v.tag = VerdictTag::Unknown;
    v.fitted_c = 0.0;
  }
  return v;
}

}  // namespace

ConditionVerdict verify_matrix_gap(const InterfaceGeometry& geom,
                                   const ReflectionMap& F,
                                   const MediumFields& medium, double alpha,
                                   int n_samples) {
  if (!(alpha >= 0.0) || alpha >= 2.0)
    throw ValidationError("matrix gap exponent must lie in [0, 2)");
  const auto scan = scan_gaps(geom, F, medium, alpha, false, n_samples);
  return assemble_verdict(scan, VerdictTag::MatrixGap, alpha);
}

ConditionVerdict verify_scalar_gap(const InterfaceGeometry& geom,
                                   const ReflectionMap& F,
                                   const MediumFields& medium, double beta_exp,
                                   int n_samples) {
  if (!(beta_exp > 0.0))
    throw ValidationError("scalar gap exponent must be positive");
  const auto scan = scan_gaps(geom, F, medium, beta_exp, true, n_samples);
  return assemble_verdict(scan, VerdictTag::ScalarGap, beta_exp);
}

PatchMatch resonant_patch_test(const InterfaceGeometry& geom,
                               const ReflectionMap& F,
                               const MediumFields& medium, int anchors) {
  anchors = std::max(1, anchors);
  const MatrixField a_global = [&](const Vec2& x) { return medium.a(geom, x); };
  const ScalarField s_global = [&](const Vec2& x) { return medium.sigma(geom, x); };
  const double tau = std::min(geom.tube_half_width(), F.tube());

  PatchMatch best;
  best.mismatch = kInf;
  for (int comp = 0; comp < geom.component_count(); ++comp) {
    if (!F.fixes_component(geom, comp)) continue;
    for (int a = 0; a < anchors; ++a) {
      const double phi = 2.0 * M_PI * a / anchors;
      const auto anchor = geom.boundary_point(comp, phi);
      const double dphi =
          0.5 * tau / std::max(1e-12, geom.components()[comp].speed(phi));
      double mismatch = 0.0;
      for (double f_phi : {-1.0, 0.0, 1.0}) {
        const auto bp = geom.boundary_point(comp, phi + f_phi * dphi);
        for (double f_s : {0.1, 0.4, 0.8}) {
          const Vec2 y = bp.position - (f_s * tau) * bp.normal;  // inside D
          if (!F.in_image(y)) {
            mismatch = kInf;
            break;
          }
          const Mat2 a_here = medium.a(geom, y);
          const double sigma_here = medium.sigma(geom, y);
          const double da =
              (pushforward_matrix(F, a_global, y) - a_here).norm() /
              std::max(1.0, a_here.norm());
          const double ds =
              std::abs(pushforward_scalar(F, s_global, y) - sigma_here) /
              std::max(1.0, std::abs(sigma_here));
          mismatch = std::max(mismatch, std::max(da, ds));
        }
        if (mismatch == kInf) break;
      }
      if (mismatch < best.mismatch) {
        best.mismatch = mismatch;
        best.component = comp;
        best.anchor = anchor.position;
      }
      if (mismatch <= 1e-10) {
        best.matched = true;
        best.mismatch = mismatch;
        best.component = comp;
        best.anchor = anchor.position;
        return best;
      }
    }
  }
  return best;
}

// ============================================================================
// Classifier
// ============================================================================

ConditionVerdict classify(const InterfaceGeometry& geom, const ReflectionMap& F,
                          const MediumFields& medium, const ClassifyOptions& opts) {
  const auto interface_report = complementing::check_interface(
      geom, medium.a_outside, medium.a_inside, opts.samples_per_component);
  if (interface_report.applies) {
    ConditionVerdict v;
    v.tag = VerdictTag::Complementing;
    v.component_sign = interface_report.ordering;
    v.fitted_c = kInf;
    for (const auto& s : interface_report.samples) {
      v.fitted_c = std::min(v.fitted_c, s.report.margin);
      v.samples.push_back({s.where.component, 0.0, s.report.margin});
    }
    return v;
  }

  const int n = opts.samples_per_component * geom.component_count();
  for (double alpha : opts.matrix_gap_exponents) {
    auto v = verify_matrix_gap(geom, F, medium, alpha, n);
    if (v.tag == VerdictTag::MatrixGap) return v;
  }
  for (double beta : opts.scalar_gap_exponents) {
    auto v = verify_scalar_gap(geom, F, medium, beta, n);
    if (v.tag == VerdictTag::ScalarGap) return v;
  }

  const auto patch = resonant_patch_test(geom, F, medium, opts.patch_anchors);
  ConditionVerdict v;
  v.component_sign.assign(geom.component_count(), 0);
  if (patch.matched) {
    v.tag = VerdictTag::Resonant;
    v.samples.push_back({patch.component, 0.0, patch.mismatch});
  }
  return v;
}

}  // namespace signshift::reflection
