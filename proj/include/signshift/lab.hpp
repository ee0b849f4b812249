/**
 * @file lab.hpp
 * @brief Scenario configuration, loss-sweep orchestration, stabilization and
 *        resonance verdicts, and report emission.
 *
 * A scenario bundles concentric-circle geometry, per-band coefficients, a
 * reflection, a source, the loss ladder, observation regions and a solver
 * choice. The sweep classifies the medium, solves down the ladder, fits the
 * growth exponent of the observed norms and renders a machine-readable
 * verdict. Reports are byte-deterministic for identical configurations.
 */
#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "signshift/fem.hpp"
#include "signshift/modal.hpp"
#include "signshift/reflection.hpp"

namespace signshift::lab {

using geometry::InterfaceGeometry;
using geometry::Mat2;
using geometry::Vec2;
using Complex = std::complex<double>;

// ============================================================================
// ScenarioConfig
// ============================================================================

/// Coefficients of one radial band (magnitudes; the sign alternates with the
/// enclosing-circle parity). sigma is either the constant `sigma`, or, when
/// `kelvin_sigma` is set, the inversion pull-back of 1: (rho^2/|x|^2)^2 with
/// rho the reflection radius.
struct BandCoef {
  Mat2 a = Mat2::Identity();
  double sigma = 1.0;
  bool kelvin_sigma = false;
};

enum class Backend { Fem, Modal };

enum class SourceKind { Ring, Bump };

/// Source description. Ring: amplitude * bump((r - radius)/width) *
/// e^{i mode (theta - rotation)}. Bump: amplitude * (1 - |x-c|^2/w^2)^2 on
/// the disk |x - c| < w (angularly rich; FEM backend only).
struct SourceSpec {
  SourceKind kind = SourceKind::Ring;
  int mode = 0;
  double radius = 0.0;  ///< ring radius
  double width = 0.1;
  Complex amplitude = 1.0;
  double rotation = 0.0;
  Vec2 center = Vec2::Zero();  ///< bump center
};

struct RegionSpecNamed {
  std::string name;
  double r_inner = 0.0;
  double r_outer = 0.0;
};

/// Parsed and validated scenario. Invariants enforced by load_scenario:
///   - interface radii strictly increasing, inside (0, r0); r0 < domain R;
///   - one band per gap, outermost band has A = I, sigma = 1;
///   - source support inside B_{r0} and disjoint from the interface;
///   - observation regions avoid the interface and stay inside B_{r0};
///   - modal backend only for isotropic constant-coefficient bands and ring
///     sources.
struct ScenarioConfig {
  std::string name;

  // geometry
  std::vector<double> interface_radii;
  double domain_radius = 2.0;    ///< R, radius of the meshed disk
  double r0 = 1.5;               ///< coefficient/source/observation budget
  double tube_half_width = 0.1;  ///< tube for classification and diagnostics

  // medium
  double k = 1.0;
  std::vector<BandCoef> bands;  ///< innermost first, interface_radii.size()+1
  std::vector<int> band_sign;   ///< derived: -1 inside D (odd enclosure)

  // reflection
  reflection::ReflectionKind refl_kind = reflection::ReflectionKind::Standard;
  double refl_beta = -0.5;   ///< curvature reflection parameter
  double refl_radius = 1.0;  ///< Kelvin circle radius (center at origin)

  // source, sweep, regions
  SourceSpec source;
  std::vector<double> deltas;  ///< strictly descending
  std::vector<RegionSpecNamed> regions;

  // solver
  Backend backend = Backend::Fem;
  int n_angular = 128;
  int n_radial_per_band = 1;
  fem::ClosureConfig closure;
  int resolution = 2048;  ///< modal radial resolution
  int n_modes = 24;       ///< modal angular truncation
  bool threaded = true;

  std::uint64_t hash = 0;  ///< FNV-1a of the canonical serialization

  // ---- derived builders ----
  InterfaceGeometry make_geometry() const;
  /// The geometry must outlive the returned map (it is captured by pointer
  /// for the standard and curvature kinds).
  reflection::ReflectionMap make_reflection(const InterfaceGeometry& geom) const;
  reflection::MediumFields make_medium_fields() const;
  std::vector<fem::RegionSpec> make_fem_regions() const;
  modal::LayeredMedium make_modal_medium(double delta) const;
  modal::RingSource make_ring_source(double extra_rotation) const;
  /// Pointwise source field f(x) with the given additional rotation.
  std::function<Complex(const Vec2&)> make_source_field(
      double extra_rotation) const;
};

/// Parses and validates a scenario file (JSON). Throws ParseError on
/// malformed input or unknown keys, ValidationError naming the violated
/// invariant otherwise.
ScenarioConfig load_scenario(const std::string& path);

/// load_scenario on an in-memory JSON document (used by tests and the CLI).
ScenarioConfig parse_scenario(const std::string& text, const std::string& name);

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a(const std::string& bytes);

// ============================================================================
// Sweep results
// ============================================================================

/// One solve of the ladder. All norms are magnitudes of the discrete field;
/// `seconds` is wall time and never enters emitted files.
struct DeltaRecord {
  double delta = 0.0;
  bool ok = false;
  std::string failure;  ///< SingularSystem message when !ok
  std::map<std::string, double> l2;  ///< per observation region
  std::map<std::string, double> h1;
  double gap_energy = 0.0;
  double sigma_gap_mass = 0.0;
  double tube_h1_mismatch = 0.0;
  double flux_jump = 0.0;
  double pivot_indicator = 0.0;
  double energy_residual = 0.0;  ///< discrete power balance
  double h1_domain_sq = 0.0;     ///< ||u||^2_{H1} over the whole disk
  double source_pairing = 0.0;   ///< |integral of f * conj(u)|
  double seconds = 0.0;
  /// Sampled field rows (x, y, re, im); filled when fields are requested.
  std::vector<std::array<double, 4>> field_rows;
};

/// Least-squares growth statistics of one observed region over a run.
struct GrowthFit {
  double p = 0.0;             ///< ||u|| ~ delta^{-p} on the smallest 3 deltas
  double fit_residual = 0.0;  ///< RMS misfit in log10
  bool monotone = false;      ///< norms grew across the smallest 3 deltas
  bool stabilized = false;    ///< change <= 5% across the smallest 2 deltas
  int points = 0;             ///< successful solves feeding the fit
};

/// One source variant (the resonance protocol adds a rotated copy).
struct SweepRun {
  double rotation = 0.0;  ///< extra source rotation of this run
  std::vector<DeltaRecord> records;          ///< descending delta
  std::map<std::string, GrowthFit> growth;   ///< per observation region
  bool stabilized = false;                   ///< all regions stabilized
};

struct SweepReport {
  std::string scenario;
  std::uint64_t hash = 0;
  std::string backend;  ///< "fem" or "modal"
  std::string closure;  ///< "dtn" / "absorbing" (fem), "exact" (modal)
  reflection::ConditionVerdict classifier;
  /// One run normally; two (second rotated by 1 radian) when the classifier
  /// reports a resonant medium.
  std::vector<SweepRun> runs;
  /// Fitted constant of the energy growth bound: max over successful deltas
  /// of ||u||^2_{H1} / (|<f,u>|/delta + ||f||^2).
  double energy_growth_c = 0.0;
  double f_l2_sq = 0.0;        ///< ||f||^2_{L2} of the unrotated source
  double total_seconds = 0.0;  ///< never enters emitted files
};

struct SweepOptions {
  bool keep_fields = false;  ///< retain per-delta field samples for export
};

/// Classifies the medium, then solves the ladder in descending order for
/// each source variant. Singular solves are recorded, never fatal.
SweepReport run_sweep(const ScenarioConfig& scenario,
                      const SweepOptions& options = {});

// ============================================================================
// Verdicts
// ============================================================================

enum class ResonanceTag { Stable, Resonant, Inconclusive };

struct ResonanceVerdict {
  ResonanceTag tag = ResonanceTag::Inconclusive;
  double p = 0.0;
  double fit_residual = 0.0;
  bool monotone = false;
  std::string region;  ///< region the verdict was decided on
};

/// Verdict for one observation region, taking the max-growth run:
/// Resonant iff monotone growth over the smallest three deltas, p >= 0.25
/// and fit residual <= 0.1; else Stable iff the region stabilized; else
/// Inconclusive. Throws InsufficientData with fewer than 4 successful deltas.
ResonanceVerdict detect_resonance(const SweepReport& report,
                                  const std::string& region);

/// Aggregate verdict: Resonant when any region resonates (max p wins),
/// Stable when every region of every run stabilized, else Inconclusive.
ResonanceVerdict detect_resonance(const SweepReport& report);

// ============================================================================
// Oracle comparison
// ============================================================================

struct OracleComparison {
  double error_coarse = 0.0;  ///< relative L2 vs the modal reference
  double error_fine = 0.0;
  double order = 0.0;  ///< log2(error_coarse / error_fine)
};

/// Solves the scenario with the finite element backend at two angular
/// resolutions and compares against the modal reference on the whole disk.
/// Requires a modal-representable scenario.
OracleComparison compare_oracle(const ScenarioConfig& scenario, double delta,
                                int n_angular_coarse, int n_angular_fine);

// ============================================================================
// Report emission
// ============================================================================

/// Writes `sweep.csv` (rows delta x region, pinned column order), a rotated
/// twin per extra run, `verdict.json`, and per-delta `field_*.csv` when the
/// records carry field samples. Deterministic bytes for identical reports.
/// Returns the list of files written (relative to out_dir).
std::vector<std::string> emit_report(const SweepReport& report,
                                     const std::string& out_dir);

}  // namespace signshift::lab
