/**
 * @file modal.cpp
 * @brief Layered radial solves with exact outgoing closure; see modal.hpp.
 */
#include "signshift/modal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace signshift::modal {
namespace {

constexpr double kPi = 3.14159265358979323846;

// 5-point Gauss-Legendre rule on [-1, 1].
constexpr double kGx[5] = {-0.906179845938663992797626878299,
                           -0.538469310105683091036314420700, 0.0,
                           0.538469310105683091036314420700,
                           0.906179845938663992797626878299};
constexpr double kGw[5] = {0.236926885056189087514264040720,
                           0.478628670499366468041291514836,
                           0.568888888888888888888888888889,
                           0.478628670499366468041291514836,
                           0.236926885056189087514264040720};

// ============================================================================
// Symmetric tridiagonal accumulator (real)
// ============================================================================

struct TriSym {
  std::vector<double> diag, off;

  explicit TriSym(int n) : diag(n, 0.0), off(n > 1 ? n - 1 : 0, 0.0) {}

  void add(int i, double d00, double d01, double d11) {
    diag[i] += d00;
    off[i] += d01;
    diag[i + 1] += d11;
  }

  // u^H B u; real because B is real symmetric.
  double quad(const std::vector<Complex>& u) const {
    double s = 0.0;
    for (std::size_t i = 0; i < diag.size(); ++i) s += diag[i] * std::norm(u[i]);
    for (std::size_t i = 0; i < off.size(); ++i)
      s += 2.0 * off[i] * (std::conj(u[i]) * u[i + 1]).real();
    return s;
  }
};

// ============================================================================
// Tridiagonal LU with partial pivoting (one-shot solve)
// ============================================================================

struct PivotRange {
  double min_abs = std::numeric_limits<double>::infinity();
  double max_abs = 0.0;
};

// Solves the system given by subdiagonal dl, diagonal d, superdiagonal du
// (entries dl[i] = A[i+1][i], du[i] = A[i][i+1]); b becomes the solution.
// Partial pivoting keeps |multiplier| <= 1; the pivoted U gains a second
// superdiagonal du2.
PivotRange solve_tridiagonal(std::vector<Complex> dl, std::vector<Complex> d,
                             std::vector<Complex> du,
                             std::vector<Complex>& b) {
  const int n = static_cast<int>(d.size());
  std::vector<Complex> du2(n > 2 ? n - 2 : 0, 0.0);
  for (int i = 0; i + 1 < n; ++i) {
    if (std::abs(dl[i]) <= std::abs(d[i])) {
      if (d[i] == 0.0)
        throw SingularSystem("radial mode system: exact zero pivot");
      const Complex m = dl[i] / d[i];
      d[i + 1] -= m * du[i];
      b[i + 1] -= m * b[i];
    } else {
      const Complex m = d[i] / dl[i];
      const Complex upper = du[i];
      const Complex next = d[i + 1];
      d[i] = dl[i];
      du[i] = next;
      d[i + 1] = upper - m * next;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] *= -m;
      }
      std::swap(b[i], b[i + 1]);
      b[i + 1] -= m * b[i];
    }
  }
  PivotRange piv;
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(d[i]);
    piv.min_abs = std::min(piv.min_abs, a);
    piv.max_abs = std::max(piv.max_abs, a);
  }
  if (d[n - 1] == 0.0)
    throw SingularSystem("radial mode system: exact zero pivot");
  b[n - 1] /= d[n - 1];
  if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
  for (int i = n - 3; i >= 0; --i)
    b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
  return piv;
}

// ============================================================================
// Assembly helpers
// ============================================================================

struct RadialGrid {
  std::vector<double> nodes;      // nodes[0] = 0, nodes.back() = R
  std::vector<int> element_layer; // per element (nodes.size() - 1)
};

RadialGrid build_grid(const LayeredMedium& medium, int resolution) {
  if (resolution < 1) throw BadResolution("radial resolution must be >= 1");
  const auto& breaks = medium.breakpoints();
  RadialGrid grid;
  grid.nodes.push_back(0.0);
  const double R = medium.radius();
  for (int j = 0; j < medium.layer_count(); ++j) {
    const double lo = breaks[j], hi = breaks[j + 1];
    const int cells = std::max(
        64, static_cast<int>(std::ceil(resolution * (hi - lo) / R)));
    for (int c = 1; c <= cells; ++c) {
      // Breakpoints become grid nodes exactly; interior nodes are uniform.
      grid.nodes.push_back(c == cells ? hi : lo + (hi - lo) * c / cells);
      grid.element_layer.push_back(j);
    }
  }
  return grid;
}

// Mass element with weight r, blended 1:1 consistent:lumped. The truncation
// term of the interior row is h^2 k^4 u (1/12 - theta/6) for blend weight
// theta, so theta = 1/2 cancels the leading phase (dispersion) error.
void add_mass(TriSym& m, int i, double p, double q, double w) {
  const double h = q - p;
  m.add(i, w * h * (7.0 * p + 3.0 * q) / 24.0, w * h * (p + q) / 24.0,
        w * h * (3.0 * p + 7.0 * q) / 24.0);
}

// Stiffness element with weight r: (p + q) / (2h) * [[1,-1],[-1,1]].
void add_stiffness(TriSym& s, int i, double p, double q, double w) {
  const double v = w * (p + q) / (2.0 * (q - p));
  s.add(i, v, -v, v);
}

// Angular-momentum element: w * int phi_i phi_j / r dr. The p = 0 element
// has a finite [1][1] entry only; its row/column 0 never enters (mode != 0
// pins the center node to zero).
void add_inverse_r(TriSym& m, int i, double p, double q, double w) {
  const double h = q - p;
  if (p == 0.0) {
    m.add(i, 0.0, 0.0, w * 0.5);
    return;
  }
  double g00 = 0.0, g01 = 0.0, g11 = 0.0;
  for (int g = 0; g < 5; ++g) {
    const double r = 0.5 * (p + q) + 0.5 * h * kGx[g];
    const double wt = 0.5 * h * kGw[g] / r;
    const double a = (q - r) / h, b = (r - p) / h;
    g00 += wt * a * a;
    g01 += wt * a * b;
    g11 += wt * b * b;
  }
  m.add(i, w * g00, w * g01, w * g11);
}

}  // namespace

// ============================================================================
// Special functions
// ============================================================================

std::pair<double, double> bessel_jy(int n, double x) {
  if (n < 0) throw ValidationError("bessel_jy: order must be nonnegative");
  if (x < 0.0) throw ValidationError("bessel_jy: argument must be nonnegative");
  if (x == 0.0)
    return {n == 0 ? 1.0 : 0.0, -std::numeric_limits<double>::infinity()};
  return {std::cyl_bessel_j(static_cast<double>(n), x),
          std::cyl_neumann(static_cast<double>(n), x)};
}

Complex hankel1(int n, double x) {
  const int m = std::abs(n);
  const auto [j, y] = bessel_jy(m, x);
  Complex h(j, y);
  if (n < 0 && (m % 2) != 0) h = -h;  // H_{-n} = (-1)^n H_n
  return h;
}

Complex dtn_coefficient(int n, double k, double R) {
  if (k <= 0.0 || R <= 0.0)
    throw ValidationError("dtn_coefficient: k and R must be positive");
  const int m = std::abs(n);
  const double z = k * R;
  // Deeply evanescent orders: |Y_m(z)| ~ Gamma(m) (2/z)^m / pi overflows, so
  // track the ratio Y_m / Y_{m-1} by the (upward-stable) recurrence instead.
  // J is below underflow there, H'/H collapses to Y'/Y, and the radiating
  // imaginary part 2 / (pi R |H_m|^2) underflows to an honest zero.
  const double log_y =
      m > 2 ? std::lgamma(m) + m * std::log(2.0 / z) - std::log(M_PI) : 0.0;
  const int m0 = static_cast<int>(std::ceil(z)) + 2;
  if (log_y > 600.0 && m0 < m) {
    const auto [j_lo, y_lo] = bessel_jy(m0 - 1, z);
    const auto [j_hi, y_hi] = bessel_jy(m0, z);
    (void)j_lo;
    (void)j_hi;
    double t = y_hi / y_lo;  // Y_j / Y_{j-1}
    for (int j = m0 + 1; j <= m; ++j) t = 2.0 * (j - 1) / z - 1.0 / t;
    return Complex(k / t - m / R, 0.0);
  }
  const Complex h = hankel1(m, z);
  const Complex hp =
      m == 0 ? -hankel1(1, z) : hankel1(m - 1, z) - (m / z) * hankel1(m, z);
  return k * hp / h;
}

// ============================================================================
// LayeredMedium
// ============================================================================

LayeredMedium::LayeredMedium(std::vector<double> breakpoints,
                             std::vector<LayerCoef> layers, double k,
                             double delta)
    : breaks_(std::move(breakpoints)), coefs_(std::move(layers)), k_(k),
      delta_(delta) {
  if (breaks_.size() < 2 || coefs_.size() + 1 != breaks_.size())
    throw ValidationError("layered medium: need one coefficient per interval");
  if (breaks_.front() != 0.0)
    throw ValidationError("layered medium: breakpoints must start at 0");
  for (std::size_t i = 0; i + 1 < breaks_.size(); ++i)
    if (!(breaks_[i] < breaks_[i + 1]))
      throw ValidationError("layered medium: breakpoints must increase");
  if (!(k_ > 0.0)) throw ValidationError("layered medium: k must be positive");
  if (!(delta_ >= 0.0))
    throw ValidationError("layered medium: loss must be nonnegative");
  for (const auto& c : coefs_) {
    if (!(c.a > 0.0) || !(c.sigma > 0.0))
      throw ValidationError("layered medium: coefficients must be positive");
    if (c.sign != 1 && c.sign != -1)
      throw ValidationError("layered medium: sign must be +1 or -1");
  }
  const auto& outer = coefs_.back();
  if (outer.a != 1.0 || outer.sigma != 1.0 || outer.sign != 1)
    throw ValidationError(
        "layered medium: outermost layer must be (1, 1, +1) so the outgoing "
        "closure at R is exact");
}

double ring_profile(const RingSource& s, double r) {
  if (!(s.width > 0.0)) throw ValidationError("ring source: width must be > 0");
  const double xi = (r - s.radius) / s.width;
  if (std::abs(xi) >= 1.0) return 0.0;
  const double c = std::cos(0.5 * kPi * xi);
  return c * c;
}

// ============================================================================
// solve_radial_mode
// ============================================================================

RadialModeSolution solve_radial_mode(const LayeredMedium& medium, int n,
                                     const RadialProfile& f_n, int resolution) {
  const RadialGrid grid = build_grid(medium, resolution);
  const int n_nodes = static_cast<int>(grid.nodes.size());
  const int n_elems = n_nodes - 1;
  const double k = medium.wavenumber();
  const double delta = medium.loss();
  const double R = medium.radius();
  const int nn = std::abs(n);

  // Real building blocks, split by layer sign. The complex system is
  //   K = (-S+ + S- + k^2 Msig+ - k^2 Msig- - N+ + N-)
  //       + i delta (S- + M_all + N-) + R * dtn * e_R e_R^T,
  // which encodes diffusion factor -1 - i delta on sign -1 layers, mass
  // k^2 sign sigma + i delta everywhere, and the outgoing closure.
  TriSym s_plus(n_nodes), s_minus(n_nodes);
  TriSym msig_plus(n_nodes), msig_minus(n_nodes), m_all(n_nodes);
  TriSym n_plus(n_nodes), n_minus(n_nodes);
  std::vector<Complex> b(n_nodes, 0.0);

  for (int e = 0; e < n_elems; ++e) {
    const double p = grid.nodes[e], q = grid.nodes[e + 1];
    const LayerCoef& c = medium.layer(grid.element_layer[e]);
    TriSym& s = c.sign > 0 ? s_plus : s_minus;
    TriSym& ms = c.sign > 0 ? msig_plus : msig_minus;
    add_stiffness(s, e, p, q, c.a);
    add_mass(ms, e, p, q, c.sigma);
    add_mass(m_all, e, p, q, 1.0);
    if (nn != 0) {
      TriSym& nm = c.sign > 0 ? n_plus : n_minus;
      add_inverse_r(nm, e, p, q, c.a * static_cast<double>(nn) * nn);
    }
    const double h = q - p;
    for (int g = 0; g < 5; ++g) {
      const double r = 0.5 * (p + q) + 0.5 * h * kGx[g];
      const Complex fw = f_n(r) * (0.5 * h * kGw[g] * r);
      b[e] += fw * ((q - r) / h);
      b[e + 1] += fw * ((r - p) / h);
    }
  }

  const Complex lam = dtn_coefficient(n, k, R);

  std::vector<Complex> kd(n_nodes), ko(n_nodes - 1);
  for (int i = 0; i < n_nodes; ++i) {
    const double re = -s_plus.diag[i] + s_minus.diag[i] +
                      k * k * (msig_plus.diag[i] - msig_minus.diag[i]) -
                      n_plus.diag[i] + n_minus.diag[i];
    const double im = delta * (s_minus.diag[i] + m_all.diag[i] + n_minus.diag[i]);
    kd[i] = Complex(re, im);
  }
  for (int i = 0; i + 1 < n_nodes; ++i) {
    const double re = -s_plus.off[i] + s_minus.off[i] +
                      k * k * (msig_plus.off[i] - msig_minus.off[i]) -
                      n_plus.off[i] + n_minus.off[i];
    const double im = delta * (s_minus.off[i] + m_all.off[i] + n_minus.off[i]);
    ko[i] = Complex(re, im);
  }
  // Outgoing closure. The lumped component of the mass blend perturbs the
  // last row by +(1-theta) (k^2 + i delta) (h^2 R / 6) u'(R) relative to the
  // exact Galerkin row, a second-order impedance mismatch that reflects;
  // with u'(R) = lam u(R) the matching correction folds into the closure.
  const double h_last = grid.nodes[n_nodes - 1] - grid.nodes[n_nodes - 2];
  const Complex boundary_coef =
      R * lam * (1.0 - Complex(k * k, delta) * (h_last * h_last / 12.0));
  kd[n_nodes - 1] += boundary_coef;

  RadialModeSolution out;
  out.mode = n;
  out.r = grid.nodes;
  out.dtn = lam;

  // Modes n != 0 vanish like r^|n| at the center: pin node 0 to zero and
  // solve the reduced system. Mode 0 keeps the natural (no-flux) center.
  const int lo = nn == 0 ? 0 : 1;
  std::vector<Complex> dl(ko.begin() + lo, ko.end());
  std::vector<Complex> d(kd.begin() + lo, kd.end());
  std::vector<Complex> du(ko.begin() + lo, ko.end());
  std::vector<Complex> x(b.begin() + lo, b.end());
  const PivotRange piv = solve_tridiagonal(std::move(dl), std::move(d),
                                           std::move(du), x);

  out.u.assign(n_nodes, 0.0);
  std::copy(x.begin(), x.end(), out.u.begin() + lo);
  out.pivot_indicator =
      piv.max_abs > 0.0 ? piv.min_abs / piv.max_abs : 0.0;

  // Diagnostics: imaginary-part quadratics (power balance) and the residual
  // of the solved rows at interior breakpoints (discrete flux balance).
  out.dissipation_quadratic =
      s_minus.quad(out.u) + m_all.quad(out.u) + n_minus.quad(out.u);
  out.radiation = boundary_coef.imag() * std::norm(out.u.back());
  Complex input = 0.0;
  for (int i = 0; i < n_nodes; ++i) input += std::conj(out.u[i]) * b[i];
  out.source_input = input.imag();

  double b_scale = 0.0;
  for (const Complex& v : b) b_scale = std::max(b_scale, std::abs(v));
  if (b_scale == 0.0) b_scale = 1.0;
  const auto& breaks = medium.breakpoints();
  std::size_t next_break = 1;
  for (int i = lo; i < n_nodes; ++i) {
    if (next_break + 1 >= breaks.size()) break;
    if (grid.nodes[i] != breaks[next_break]) continue;
    ++next_break;
    Complex res = kd[i] * out.u[i] - b[i];
    if (i > 0) res += ko[i - 1] * out.u[i - 1];
    if (i + 1 < n_nodes) res += ko[i] * out.u[i + 1];
    out.transmission_residual =
        std::max(out.transmission_residual, std::abs(res) / b_scale);
  }
  return out;
}

double power_balance_residual(const LayeredMedium& medium,
                              const RadialModeSolution& mode) {
  const double lhs =
      medium.loss() * mode.dissipation_quadratic + mode.radiation;
  const double rhs = mode.source_input;
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale < 1e-280) return 0.0;
  return std::abs(lhs - rhs) / scale;
}

// ============================================================================
// ModalField
// ============================================================================

namespace {

// Integrates g over [ra, rb] clipped to the grid support with a per-cell
// 2-point Gauss rule (exact for the cubic integrands of the L2 norm).
template <typename G>
double integrate_clipped(const std::vector<double>& nodes, double ra,
                         double rb, const G& g) {
  constexpr double kG2 = 0.577350269189625764509148780502;
  double total = 0.0;
  for (std::size_t e = 0; e + 1 < nodes.size(); ++e) {
    const double lo = std::max(ra, nodes[e]);
    const double hi = std::min(rb, nodes[e + 1]);
    if (hi <= lo) continue;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    total += half * (g(e, mid - half * kG2) + g(e, mid + half * kG2));
  }
  return total;
}

double mode_energy(const RadialModeSolution& f) {
  return integrate_clipped(
      f.r, 0.0, f.r.back(), [&](std::size_t e, double r) {
        const double t = (r - f.r[e]) / (f.r[e + 1] - f.r[e]);
        return std::norm(f.u[e] * (1.0 - t) + f.u[e + 1] * t) * r;
      });
}

}  // namespace

Complex ModalField::eval(double r, double theta) const {
  Complex total = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto& f = fields[m];
    if (f.u.empty()) continue;
    const auto it = std::upper_bound(f.r.begin(), f.r.end(), r);
    if (it == f.r.begin() || it == f.r.end()) {
      if (r == f.r.back()) {
        total += f.u.back() * std::polar(1.0, modes[m] * theta);
        continue;
      }
      if (r < f.r.front() || r > f.r.back()) continue;
    }
    const std::size_t e = static_cast<std::size_t>(it - f.r.begin()) - 1;
    const double t = (r - f.r[e]) / (f.r[e + 1] - f.r[e]);
    const Complex ur = f.u[e] * (1.0 - t) + f.u[e + 1] * t;
    total += ur * std::polar(1.0, modes[m] * theta);
  }
  return total;
}

double ModalField::l2_annulus(double ra, double rb) const {
  double total = 0.0;
  for (const auto& f : fields) {
    if (f.u.empty()) continue;
    total += integrate_clipped(f.r, ra, rb, [&](std::size_t e, double r) {
      const double t = (r - f.r[e]) / (f.r[e + 1] - f.r[e]);
      return std::norm(f.u[e] * (1.0 - t) + f.u[e + 1] * t) * r;
    });
  }
  return std::sqrt(2.0 * kPi * total);
}

double ModalField::h1_annulus(double ra, double rb) const {
  double total = 0.0;
  for (std::size_t m = 0; m < fields.size(); ++m) {
    const auto& f = fields[m];
    if (f.u.empty()) continue;
    const double n2 = static_cast<double>(modes[m]) * modes[m];
    total += integrate_clipped(f.r, ra, rb, [&](std::size_t e, double r) {
      const double h = f.r[e + 1] - f.r[e];
      const double t = (r - f.r[e]) / h;
      const Complex ur = f.u[e] * (1.0 - t) + f.u[e + 1] * t;
      const Complex dur = (f.u[e + 1] - f.u[e]) / h;
      double v = (std::norm(dur) + std::norm(ur)) * r;
      if (n2 > 0.0) v += n2 * std::norm(ur) / r;
      return v;
    });
  }
  return std::sqrt(2.0 * kPi * total);
}

double ModalField::power_balance(const LayeredMedium& medium) const {
  double lhs = 0.0, rhs = 0.0;
  for (const auto& f : fields) {
    lhs += medium.loss() * f.dissipation_quadratic + f.radiation;
    rhs += f.source_input;
  }
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale < 1e-280) return 0.0;
  return std::abs(lhs - rhs) / scale;
}

// ============================================================================
// modal_solution
// ============================================================================

ModalField modal_solution(const LayeredMedium& medium,
                          const std::vector<RingSource>& sources, int n_modes,
                          int resolution) {
  const double kr = medium.wavenumber() * medium.radius();
  if (n_modes < static_cast<int>(std::ceil(2.0 * kr)))
    throw ValidationError(
        "modal_solution: mode count must be at least twice the boundary "
        "wavenumber k R");
  for (const auto& s : sources) {
    if (!(s.width > 0.0) || !(s.radius > 0.0))
      throw ValidationError("modal_solution: ring sources need positive "
                            "radius and width");
    if (s.radius + s.width > medium.radius())
      throw ValidationError(
          "modal_solution: ring source must lie inside the disk");
  }

  ModalField out;
  std::vector<double> shared_grid;  // zero modes reuse the grid of solved ones
  for (int n = -n_modes; n <= n_modes; ++n) {
    std::vector<const RingSource*> active;
    for (const auto& s : sources)
      if (s.mode == n) active.push_back(&s);
    out.modes.push_back(n);
    if (active.empty()) {
      // No source in this mode: the unique solution is identically zero.
      RadialModeSolution zero;
      zero.mode = n;
      zero.dtn = dtn_coefficient(n, medium.wavenumber(), medium.radius());
      out.fields.push_back(std::move(zero));
      continue;
    }
    const RadialProfile f_n = [&active, n](double r) {
      Complex total = 0.0;
      for (const RingSource* s : active)
        total += s->amplitude * std::polar(1.0, -n * s->rotation) *
                 ring_profile(*s, r);
      return total;
    };
    out.fields.push_back(solve_radial_mode(medium, n, f_n, resolution));
    if (shared_grid.empty()) shared_grid = out.fields.back().r;
  }
  if (shared_grid.empty())
    shared_grid = build_grid(medium, resolution).nodes;
  for (auto& f : out.fields) {
    if (f.u.empty()) {
      f.r = shared_grid;
      f.u.assign(shared_grid.size(), 0.0);
    }
  }

  double total_energy = 0.0;
  double edge_energy = 0.0;
  for (std::size_t m = 0; m < out.fields.size(); ++m) {
    const double e = mode_energy(out.fields[m]);
    total_energy += e;
    if (std::abs(out.modes[m]) == n_modes) edge_energy += e;
  }
  out.tail_energy = total_energy > 0.0 ? edge_energy / total_energy : 0.0;
  return out;
}

}  // namespace signshift::modal
