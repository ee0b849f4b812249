/**
 * @file fem_system.cpp
 * @brief Complex-symmetric P1 assembly, outgoing closures, pivot-tracked
 *        sparse LU solves, the discrete power balance, and solution export.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>
#include <vector>

#include "signshift/fem.hpp"
#include "signshift/modal.hpp"

namespace signshift::fem {

namespace {

// Interior 3-point rule, exact on quadratics; points stay off the edges so
// coefficient lookups are unambiguous near interfaces.
constexpr double kQa = 2.0 / 3.0, kQb = 1.0 / 6.0;
constexpr double kBary[3][3] = {
    {kQa, kQb, kQb}, {kQb, kQa, kQb}, {kQb, kQb, kQa}};

using Triplet = Eigen::Triplet<double>;

// Per-block assembly output; blocks are concatenated in index order so the
// threaded path reproduces the serial reference bitwise.
struct BlockOut {
  std::vector<Triplet> s_plus, s_minus, msig_plus, msig_minus, m_all;
  std::vector<std::pair<int, Complex>> load;
};

void assemble_block(const Mesh& mesh, const std::vector<RegionSpec>& regions,
                    const ComplexField& source, int t_begin, int t_end,
                    BlockOut& out) {
  for (int t = t_begin; t < t_end; ++t) {
    const auto& tri = mesh.triangles[t];
    const RegionSpec& spec = regions[mesh.region[t]];
    const double area = mesh.triangle_area(t);
    const Eigen::Matrix<double, 2, 3> grad = mesh.basis_gradients(t);

    Vec2 pts[3];
    for (int q = 0; q < 3; ++q)
      pts[q] = kBary[q][0] * mesh.vertices[tri[0]] +
               kBary[q][1] * mesh.vertices[tri[1]] +
               kBary[q][2] * mesh.vertices[tri[2]];

    Mat2 a_sum = Mat2::Zero();
    double sig[3];
    for (int q = 0; q < 3; ++q) {
      a_sum += spec.a(pts[q]);
      sig[q] = spec.sigma(pts[q]);
    }
    a_sum *= area / 3.0;

    auto& stiff = spec.sign > 0 ? out.s_plus : out.s_minus;
    auto& mass = spec.sign > 0 ? out.msig_plus : out.msig_minus;
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) {
        const double s = grad.col(i).dot(a_sum * grad.col(j));
        double msig = 0.0, mone = 0.0;
        for (int q = 0; q < 3; ++q) {
          const double w = (area / 3.0) * kBary[q][i] * kBary[q][j];
          msig += w * sig[q];
          mone += w;
        }
        // Keep global entries in the upper triangle; the mirror is exact.
        const int row = std::min(tri[i], tri[j]);
        const int col = std::max(tri[i], tri[j]);
        stiff.emplace_back(row, col, s);
        mass.emplace_back(row, col, msig);
        out.m_all.emplace_back(row, col, mone);
      }
    }
    for (int q = 0; q < 3; ++q) {
      const Complex f = source(pts[q]);
      for (int i = 0; i < 3; ++i)
        out.load.emplace_back(tri[i], (area / 3.0) * kBary[q][i] * f);
    }
  }
}

// Upper-triangle triplets -> exactly symmetric sparse matrix (the lower part
// is a bitwise copy of the upper).
Eigen::SparseMatrix<double> symmetric_from_upper(
    int n, const std::vector<Triplet>& upper) {
  Eigen::SparseMatrix<double> u(n, n);
  u.setFromTriplets(upper.begin(), upper.end());
  Eigen::SparseMatrix<double> full = u.selfadjointView<Eigen::Upper>();
  full.makeCompressed();
  return full;
}

Eigen::SparseMatrix<Complex> dtn_closure(const Mesh& mesh, double k,
                                         int max_modes) {
  const int mb = static_cast<int>(mesh.boundary_ring.size());
  if (mb < 8) throw InconsistentMesh("closure: boundary ring missing");
  const double R = mesh.outer_radius;
  int nmax = mb / 2 - 1;
  if (max_modes >= 0) nmax = std::min(nmax, max_modes);

  std::vector<Complex> lam(nmax + 1);
  for (int n = 0; n <= nmax; ++n) lam[n] = modal::dtn_coefficient(n, k, R);

  // Circulant stencil over the angular offset d; mirrored explicitly so the
  // boundary block is exactly symmetric.
  std::vector<Complex> c(mb);
  const double scale = 2.0 * M_PI * R / (double(mb) * mb);
  for (int d = 0; d <= mb / 2; ++d) {
    Complex val = lam[0];
    for (int n = 1; n <= nmax; ++n)
      val += 2.0 * lam[n] * std::cos(2.0 * M_PI * n * d / mb);
    c[d] = scale * val;
    if (d > 0 && d < mb) c[(mb - d) % mb] = c[d];
  }

  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(static_cast<std::size_t>(mb) * mb);
  for (int i = 0; i < mb; ++i)
    for (int j = 0; j < mb; ++j)
      trip.emplace_back(mesh.boundary_ring[i], mesh.boundary_ring[j],
                        c[(j - i + mb) % mb]);
  Eigen::SparseMatrix<Complex> b(mesh.vertex_count(), mesh.vertex_count());
  b.setFromTriplets(trip.begin(), trip.end());
  b.makeCompressed();
  return b;
}

Eigen::SparseMatrix<Complex> absorbing_closure(const Mesh& mesh, double k) {
  const int mb = static_cast<int>(mesh.boundary_ring.size());
  if (mb < 8) throw InconsistentMesh("closure: boundary ring missing");
  const Complex coef(-1.0 / (2.0 * mesh.outer_radius), k);  // ik - 1/(2R)
  std::vector<Eigen::Triplet<Complex>> trip;
  for (int j = 0; j < mb; ++j) {
    const int a = mesh.boundary_ring[j];
    const int b = mesh.boundary_ring[(j + 1) % mb];
    const double len = (mesh.vertices[b] - mesh.vertices[a]).norm();
    trip.emplace_back(a, a, coef * (len / 3.0));
    trip.emplace_back(b, b, coef * (len / 3.0));
    trip.emplace_back(a, b, coef * (len / 6.0));
    trip.emplace_back(b, a, coef * (len / 6.0));
  }
  Eigen::SparseMatrix<Complex> m(mesh.vertex_count(), mesh.vertex_count());
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

// Re(u^H S u) for real symmetric S.
double real_quadratic(const Eigen::SparseMatrix<double>& s,
                      const Eigen::VectorXcd& u) {
  const Eigen::VectorXd re = u.real(), im = u.imag();
  return re.dot(s * re) + im.dot(s * im);
}

/// SparseLU that exposes the extreme |U_ii| of its factorization; their
/// ratio collapses toward zero when the system approaches singularity.
class PivotTrackingLU
    : public Eigen::SparseLU<Eigen::SparseMatrix<Complex>,
                             Eigen::COLAMDOrdering<int>> {
 public:
  std::pair<double, double> pivot_extremes() const {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int j = 0; j < m_Lstore.cols(); ++j) {
      for (SCMatrix::InnerIterator it(m_Lstore, j); it; ++it) {
        if (it.index() > j) break;
        if (it.index() == j) {
          const double a = std::abs(it.value());
          lo = std::min(lo, a);
          hi = std::max(hi, a);
          break;
        }
      }
    }
    return {lo, hi};
  }
};

}  // namespace

// ============================================================================
// Assembly
// ============================================================================

Eigen::SparseMatrix<Complex> FemSystem::system_matrix(double delta) const {
  const Eigen::SparseMatrix<double> re =
      -s_plus + s_minus + k * k * (msig_plus - msig_minus);
  const Eigen::SparseMatrix<double> im = s_minus + m_all;
  Eigen::SparseMatrix<Complex> sys =
      re.cast<Complex>() + Complex(0.0, delta) * im.cast<Complex>() + closure;
  sys.makeCompressed();
  return sys;
}

FemSystem assemble(const Mesh& mesh, const std::vector<RegionSpec>& regions,
                   double k, const ClosureConfig& closure,
                   const ComplexField& source, bool threaded) {
  mesh.validate();
  if (!(k > 0.0)) throw ValidationError("assemble: k must be positive");
  for (int r : mesh.region)
    if (r >= static_cast<int>(regions.size()))
      throw InconsistentMesh("assemble: mesh band without coefficients");
  for (const auto& spec : regions)
    if (!spec.a || !spec.sigma || std::abs(spec.sign) != 1)
      throw ValidationError("assemble: region needs a, sigma, sign = +-1");

  const int nt = mesh.triangle_count();
  constexpr int kBlock = 512;
  const int nblocks = (nt + kBlock - 1) / kBlock;
  std::vector<BlockOut> blocks(nblocks);

#pragma omp parallel for schedule(dynamic) if (threaded)
  for (int b = 0; b < nblocks; ++b)
    assemble_block(mesh, regions, source, b * kBlock,
                   std::min(nt, (b + 1) * kBlock), blocks[b]);

  FemSystem sys;
  sys.mesh = &mesh;
  sys.k = k;
  std::vector<Triplet> sp, sm, mp, mm, ma;
  sys.load = Eigen::VectorXcd::Zero(mesh.vertex_count());
  for (const BlockOut& b : blocks) {
    sp.insert(sp.end(), b.s_plus.begin(), b.s_plus.end());
    sm.insert(sm.end(), b.s_minus.begin(), b.s_minus.end());
    mp.insert(mp.end(), b.msig_plus.begin(), b.msig_plus.end());
    mm.insert(mm.end(), b.msig_minus.begin(), b.msig_minus.end());
    ma.insert(ma.end(), b.m_all.begin(), b.m_all.end());
    for (const auto& [idx, val] : b.load) sys.load[idx] += val;
  }
  const int n = mesh.vertex_count();
  sys.s_plus = symmetric_from_upper(n, sp);
  sys.s_minus = symmetric_from_upper(n, sm);
  sys.msig_plus = symmetric_from_upper(n, mp);
  sys.msig_minus = symmetric_from_upper(n, mm);
  sys.m_all = symmetric_from_upper(n, ma);
  sys.closure = closure.kind == ClosureConfig::Kind::ModalDtn
                    ? dtn_closure(mesh, k, closure.max_modes)
                    : absorbing_closure(mesh, k);
  return sys;
}

// ============================================================================
// Solves
// ============================================================================

SolutionField::SolutionField(const Mesh& m, Eigen::VectorXcd v, double d,
                             std::uint64_t hash)
    : mesh(&m), values(std::move(v)), delta(d), scenario_hash(hash) {
  if (values.size() != m.vertex_count())
    throw ValidationError("solution field: one value per vertex required");
  if (!values.allFinite())
    throw ValidationError("solution field: non-finite nodal value");
}

SolveResult solve(const FemSystem& system, double delta,
                  std::uint64_t scenario_hash) {
  Eigen::SparseMatrix<Complex> K = system.system_matrix(delta);
  PivotTrackingLU lu;
  lu.analyzePattern(K);
  lu.factorize(K);
  if (lu.info() != Eigen::Success)
    throw SingularSystem("fem solve: LU factorization failed");
  Eigen::VectorXcd u = lu.solve(system.load);
  if (!u.allFinite())
    throw SingularSystem("fem solve: factorization produced non-finite values");

  SolveResult out;
  const double bnorm = system.load.norm();
  out.residual = bnorm > 0.0 ? (K * u - system.load).norm() / bnorm : u.norm();
  const auto [lo, hi] = lu.pivot_extremes();
  out.pivot_indicator = hi > 0.0 ? lo / hi : 0.0;
  out.field = SolutionField(*system.mesh, std::move(u), delta, scenario_hash);
  return out;
}

double energy_identity_residual(const FemSystem& system,
                                const SolutionField& field) {
  const Eigen::VectorXcd& u = field.values;
  const double dissipated =
      field.delta *
      (real_quadratic(system.s_minus, u) + real_quadratic(system.m_all, u));
  const double radiated = u.dot(system.closure * u).imag();
  const double injected = u.dot(system.load).imag();
  const double scale = std::max(
      {std::abs(dissipated), std::abs(radiated), std::abs(injected), 1e-300});
  return std::abs(dissipated + radiated - injected) / scale;
}

void write_solution_csv(const SolutionField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("solution write: cannot open " + path);
  out << "x,y,re,im\n";
  char line[160];
  for (int v = 0; v < field.mesh->vertex_count(); ++v) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n",
                  field.mesh->vertices[v].x(), field.mesh->vertices[v].y(),
                  field.values[v].real(), field.values[v].imag());
    out << line;
  }
  if (!out) throw IoError("solution write: failed writing " + path);
}

}  // namespace signshift::fem
