/**
 * @file complementing.cpp
 * @brief Algebraic boundary-compatibility check across an interface.
 */
#include "signshift/complementing.hpp"

#include <cmath>

namespace signshift::complementing {

void validate_spd(const Matrix& A, int dim) {
  if (A.rows() != dim || A.cols() != dim)
    throw DimensionMismatch("coefficient matrix has wrong dimensions");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NotSymmetric("coefficient matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw NotPositiveDefinite("coefficient matrix is not positive definite");
}

namespace {

void validate_unit(const Vector& e) {
  if (std::abs(e.norm() - 1.0) > 1e-12)
    throw Error("normal direction must be a unit vector");
}

double raw_delta(const Matrix& A, const Vector& e, const Vector& xi) {
  const Vector Ae = A * e;
  return Ae.dot(e) * xi.dot(A * xi) - std::pow(Ae.dot(xi), 2);
}

/// Orthonormal basis of the tangent space e^perp via a Householder
/// reflector mapping e to +-e_last (deterministic, frame stable).
Matrix tangent_basis(const Vector& e) {
  const int d = static_cast<int>(e.size());
  Vector u = e;
  const double s = u(d - 1) >= 0.0 ? 1.0 : -1.0;
  u(d - 1) += s;
  const double un2 = u.squaredNorm();
  Matrix H = Matrix::Identity(d, d);
  if (un2 > 1e-28) H -= (2.0 / un2) * (u * u.transpose());
  return H.leftCols(d - 1);  // columns orthonormal and orthogonal to e
}

}  // namespace

double delta_form(const Matrix& A, const Vector& e, const Vector& xi) {
  const int d = static_cast<int>(e.size());
  validate_spd(A, d);
  if (xi.size() != d) throw DimensionMismatch("direction dimensions disagree");
  validate_unit(e);
  return raw_delta(A, e, xi);
}

std::complex<double> decay_exponent(const Matrix& A, const Vector& e, const Vector& xi) {
  const int d = static_cast<int>(e.size());
  validate_spd(A, d);
  if (xi.size() != d) throw DimensionMismatch("direction dimensions disagree");
  validate_unit(e);
  const double xin = xi.norm();
  if (xin == 0.0) throw Error("tangential frequency must be nonzero");
  if (std::abs(xi.dot(e)) > 1e-12 * xin)
    throw NotTangent("tangential frequency must be orthogonal to the normal");
  const double a = e.dot(A * e);
  const double b = e.dot(A * xi);
  const double delta = raw_delta(A, e, xi);
  // A SPD and xi not parallel to e imply delta > 0 (strict Cauchy-Schwarz
  // in the A-inner product); clamp roundoff.
  const double root = std::sqrt(std::max(delta, 0.0));
  return std::complex<double>(-root / a, -b / a);
}

PairReport check_pair(const Matrix& A1, const Matrix& A2, const Vector& e) {
  const int d = static_cast<int>(e.size());
  if (d < 2) throw DimensionMismatch("dimension must be at least 2");
  validate_spd(A1, d);
  validate_spd(A2, d);
  validate_unit(e);

  const Matrix P = tangent_basis(e);
  const auto q = [&](const Vector& w) {
    const Vector xi = P * w;
    return raw_delta(A2, e, xi) - raw_delta(A1, e, xi);
  };

  // Assemble the reduced form by polarization on the tangent basis.
  const int m = d - 1;
  Matrix M(m, m);
  Vector diag(m);
  for (int i = 0; i < m; ++i) diag(i) = q(Vector::Unit(m, i));
  for (int i = 0; i < m; ++i) {
    M(i, i) = diag(i);
    for (int j = i + 1; j < m; ++j) {
      Vector w = Vector::Unit(m, i) + Vector::Unit(m, j);
      M(i, j) = M(j, i) = 0.5 * (q(w) - diag(i) - diag(j));
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  const Vector lam = es.eigenvalues();
  const double lam_min = lam(0), lam_max = lam(m - 1);
  const double norm_m = std::max(std::abs(lam_min), std::abs(lam_max));
  const double min_abs = lam.cwiseAbs().minCoeff();

  PairReport rep;
  rep.eigenvalues = lam;
  const double a_scale = A1.operatorNorm() + A2.operatorNorm();
  rep.margin = min_abs / (a_scale * a_scale);
  rep.holds = lam_min * lam_max > 0.0 && min_abs > 1e-9 * std::max(1.0, norm_m);
  rep.sign = rep.holds ? (lam_min > 0.0 ? +1 : -1) : 0;
  if (!rep.holds) {
    Vector w;
    if (lam_min < 0.0 && lam_max > 0.0) {
      // Exact root of the reduced form on the plane spanned by the extreme
      // eigenvectors (they are orthogonal, so cross terms vanish).
      w = es.eigenvectors().col(m - 1) * std::sqrt(-lam_min) +
          es.eigenvectors().col(0) * std::sqrt(lam_max);
    } else {
      int idx = 0;
      lam.cwiseAbs().minCoeff(&idx);
      w = es.eigenvectors().col(idx);
    }
    Vector xi = P * w;
    rep.witness = xi / xi.norm();
  }
  return rep;
}

InterfaceReport check_interface(const geometry::InterfaceGeometry& geom,
                                const MatrixField& A_out, const MatrixField& A_in,
                                int samples_per_component) {
  const int n = std::max(8, samples_per_component);
  InterfaceReport rep;
  rep.applies = true;
  rep.ordering.assign(geom.component_count(), 0);
  for (int c = 0; c < geom.component_count(); ++c) {
    bool in_gt_out = true, out_gt_in = true;
    for (int i = 0; i < n; ++i) {
      const auto bp = geom.boundary_point(c, 2.0 * M_PI * i / n);
      const Eigen::Matrix2d Ao = A_out(bp.position);
      const Eigen::Matrix2d Ai = A_in(bp.position);
      Vector e(2);
      e << bp.normal.x(), bp.normal.y();
      InterfaceSample s{bp, check_pair(Ao, Ai, e)};
      if (!s.report.holds || s.report.margin <= 1e-9) rep.applies = false;
      const Eigen::Matrix2d E = Ai - Ao;
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(E, Eigen::EigenvaluesOnly);
      const double tol = 1e-9 * (Ao.norm() + Ai.norm());
      if (!(es.eigenvalues()(0) > tol)) in_gt_out = false;
      if (!(es.eigenvalues()(1) < -tol)) out_gt_in = false;
      rep.samples.push_back(std::move(s));
    }
    rep.ordering[c] = in_gt_out ? +1 : (out_gt_in ? -1 : 0);
  }
  return rep;
}

}  // namespace signshift::complementing
