/**
 * @file modal.hpp
 * @brief Semi-analytic solver for circularly layered media: Fourier modes in
 *        angle, conservative P1 radial solves, exact per-mode outgoing
 *        closure built from Hankel functions.
 *
 * Serves as the accuracy oracle for the general finite element solver on
 * rotationally symmetric scenarios, and as the reference implementation of
 * the outgoing radiation condition.
 */
#pragma once

#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "signshift/errors.hpp"

namespace signshift::modal {

using Complex = std::complex<double>;

// ============================================================================
// Special-function kernel
// ============================================================================

/// (J_n(x), Y_n(x)) for n >= 0, x >= 0; relative accuracy 1e-12 for x <= 50,
/// n <= 60. Y_n(0) reports -infinity. Throws ValidationError on x < 0, n < 0.
std::pair<double, double> bessel_jy(int n, double x);

/// First-kind Hankel function J_n + i Y_n; any integer order.
Complex hankel1(int n, double x);

/// Outgoing Dirichlet-to-Neumann coefficient of mode n on the circle r = R:
/// k H'_n(kR) / H_n(kR). Im > 0 (radiation), even in n, approaches ik for
/// large kR.
Complex dtn_coefficient(int n, double k, double R);

// ============================================================================
// Layered medium and sources
// ============================================================================

/// Per-layer isotropic data: diffusion magnitude a > 0, mass magnitude
/// sigma > 0, and the sign (-1 marks layers inside the inclusion D).
struct LayerCoef {
  double a = 1.0;
  double sigma = 1.0;
  int sign = +1;
};

/// Radially layered medium on [0, R]: breakpoints 0 = r_0 < ... < r_m = R
/// with one LayerCoef per interval. The outermost layer must be (1, 1, +1)
/// so the outgoing closure at R is exact. Layers with sign -1 carry the
/// lossy factor -1 - i delta on the diffusion term; the zeroth-order term
/// gains +i delta everywhere.
class LayeredMedium {
 public:
  LayeredMedium(std::vector<double> breakpoints, std::vector<LayerCoef> layers,
                double k, double delta);

  double radius() const { return breaks_.back(); }
  double wavenumber() const { return k_; }
  double loss() const { return delta_; }
  int layer_count() const { return static_cast<int>(coefs_.size()); }
  const std::vector<double>& breakpoints() const { return breaks_; }
  const LayerCoef& layer(int j) const { return coefs_[j]; }

 private:
  std::vector<double> breaks_;
  std::vector<LayerCoef> coefs_;
  double k_ = 1.0;
  double delta_ = 0.0;
};

/// Separable ring source amp * bump((r - radius)/width) * e^{i mode (theta -
/// rotation)} with a cosine-squared radial bump. Keeps the angular
/// decomposition exact.
struct RingSource {
  int mode = 0;
  double radius = 0.5;
  double width = 0.1;
  Complex amplitude = 1.0;
  double rotation = 0.0;
};

/// Radial bump factor of the source at radius r (no angular part).
double ring_profile(const RingSource& s, double r);

// ============================================================================
// Radial mode solve
// ============================================================================

using RadialProfile = std::function<Complex(double)>;

struct RadialModeSolution {
  int mode = 0;
  std::vector<double> r;        ///< layer-conforming grid, r[0] = 0
  std::vector<Complex> u;       ///< nodal values, u[0] = 0 for mode != 0
  Complex dtn = 0.0;            ///< closure coefficient used at R
  double pivot_indicator = 1.0; ///< min |pivot| / max |pivot| of the LU
  /// Ingredients of the discrete power balance (all real):
  double dissipation_quadratic = 0.0;  ///< u^H (S_D + M + N_D) u
  double radiation = 0.0;              ///< Im(closure row coef) |u(R)|^2
  double source_input = 0.0;           ///< Im(u^H b)
  double transmission_residual = 0.0;  ///< max breakpoint row residual / |b|
};

/// Solves the mode-n radial problem with right-hand side f_n on a grid of
/// roughly `resolution` cells (>= 64 per layer). Mass matrices use the 1:1
/// consistent:lumped blend, which cancels the leading phase (dispersion)
/// error of the piecewise-linear scheme.
RadialModeSolution solve_radial_mode(const LayeredMedium& medium, int n,
                                     const RadialProfile& f_n, int resolution);

/// |delta * dissipation + radiation - input| relative to the largest term.
/// Algebraically zero for exact arithmetic; roundoff-level in practice.
double power_balance_residual(const LayeredMedium& medium,
                              const RadialModeSolution& mode);

// ============================================================================
// Full modal synthesis
// ============================================================================

struct ModalField {
  std::vector<int> modes;                  ///< ascending, -N..N
  std::vector<RadialModeSolution> fields;  ///< aligned with modes
  double tail_energy = 0.0;                ///< outermost-mode energy fraction

  Complex eval(double r, double theta) const;
  /// Norms over the annulus {ra <= |x| <= rb} via the angular Parseval
  /// identity (exact in theta, elementwise quadrature in r).
  double l2_annulus(double ra, double rb) const;
  double h1_annulus(double ra, double rb) const;
  /// Aggregate power balance residual over all modes.
  double power_balance(const LayeredMedium& medium) const;
};

/// Solves every mode |n| <= n_modes. Requires n_modes >= 2 k R (angular
/// resolution of the wavenumber); modes without matching sources are zero.
ModalField modal_solution(const LayeredMedium& medium,
                          const std::vector<RingSource>& sources, int n_modes,
                          int resolution);

}  // namespace signshift::modal
