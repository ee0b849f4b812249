/**
 * @file sweep.cpp
 * @brief Classify-then-sweep driver: loss ladders over both backends, growth
 *        fits, resonance verdicts and the finite element / modal cross-check.
 */
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "signshift/lab.hpp"

namespace signshift::lab {

namespace {

// ============================================================================
// Quadrature helpers (3-point degree-2 rule, matching the assembly)
// ============================================================================

constexpr double kBary[3][3] = {{2.0 / 3, 1.0 / 6, 1.0 / 6},
                                {1.0 / 6, 2.0 / 3, 1.0 / 6},
                                {1.0 / 6, 1.0 / 6, 2.0 / 3}};

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

/// ||u||^2_{H1} over triangles whose centroid radius lies in [ra, rb);
/// the same centroid test the diagnostics use for region norms.
double h1_sq_over(const fem::Mesh& mesh, const Eigen::VectorXcd& u, double ra,
                  double rb) {
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double rc = mesh.centroid(t).norm();
    if (rc < ra || rc >= rb) continue;
    const auto& tri = mesh.triangles[t];
    const double area = mesh.triangle_area(t);
    const Eigen::Matrix<double, 2, 3> g = mesh.basis_gradients(t);
    Eigen::Vector2cd grad = Eigen::Vector2cd::Zero();
    for (int i = 0; i < 3; ++i) grad += g.col(i) * u[tri[i]];
    acc += area * grad.squaredNorm();
    const double w = area / 3.0;
    for (int q = 0; q < 3; ++q) {
      Complex val = 0.0;
      for (int i = 0; i < 3; ++i) val += kBary[q][i] * u[tri[i]];
      acc += w * std::norm(val);
    }
  }
  return acc;
}

/// ||f||^2_{L2} of a pointwise field over the meshed disk.
double source_l2_sq(const fem::Mesh& mesh,
                    const std::function<Complex(const Vec2&)>& f) {
  double acc = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double w = mesh.triangle_area(t) / 3.0;
    for (int q = 0; q < 3; ++q) {
      Vec2 x = Vec2::Zero();
      for (int i = 0; i < 3; ++i) x += kBary[q][i] * mesh.vertices[tri[i]];
      acc += w * std::norm(f(x));
    }
  }
  return acc;
}

// ============================================================================
// Modal helpers
// ============================================================================

/// ||f||^2 of a single ring source: |amp|^2 2 pi integral of profile^2 r dr.
double ring_l2_sq(const modal::RingSource& s) {
  const double lo = std::max(0.0, s.radius - s.width);
  const double hi = s.radius + s.width;
  const int n = 4096;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double r = lo + i * h;
    const double p = modal::ring_profile(s, r);
    const double v = p * p * r;
    acc += (i == 0 || i == n) ? 0.5 * v : v;
  }
  return std::norm(s.amplitude) * 2.0 * M_PI * acc * h;
}

/// |<f, u>| for a single-mode source against the matching radial mode,
/// trapezoid on the mode's own grid.
double modal_pairing(const modal::ModalField& field,
                     const modal::RingSource& s) {
  for (std::size_t i = 0; i < field.modes.size(); ++i) {
    if (field.modes[i] != s.mode) continue;
    const modal::RadialModeSolution& m = field.fields[i];
    const Complex fn = s.amplitude * std::polar(1.0, -s.mode * s.rotation);
    Complex acc = 0.0;
    for (std::size_t j = 0; j + 1 < m.r.size(); ++j) {
      const double h = m.r[j + 1] - m.r[j];
      const Complex a = modal::ring_profile(s, m.r[j]) * std::conj(m.u[j]) * m.r[j];
      const Complex b = modal::ring_profile(s, m.r[j + 1]) *
                        std::conj(m.u[j + 1]) * m.r[j + 1];
      acc += 0.5 * h * (a + b);
    }
    return std::abs(2.0 * M_PI * fn * acc);
  }
  return 0.0;
}

// ============================================================================
// Growth fits
// ============================================================================

/// Least squares of log10 ||u|| against log10 delta over the smallest (up to)
/// three successful deltas; p is minus the slope.
GrowthFit fit_growth(const std::vector<std::pair<double, double>>& points) {
  GrowthFit fit;
  const int n = static_cast<int>(points.size());
  const int m = std::min(3, n);
  fit.points = m;
  if (m < 2) return fit;
  // points are ordered by descending delta; the smallest ones sit at the end.
  std::vector<double> lx(m), ly(m), vals(m);
  for (int i = 0; i < m; ++i) {
    const auto& [delta, value] = points[n - m + i];
    lx[i] = std::log10(delta);
    ly[i] = std::log10(std::max(value, 1e-300));
    vals[i] = value;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double denom = m * sxx - sx * sx;
  const double slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  const double intercept = (sy - slope * sx) / m;
  fit.p = -slope;
  double rss = 0.0;
  for (int i = 0; i < m; ++i) {
    const double e = ly[i] - (slope * lx[i] + intercept);
    rss += e * e;
  }
  fit.fit_residual = std::sqrt(rss / m);
  fit.monotone = true;
  for (int i = 0; i + 1 < m; ++i)
    if (!(vals[i + 1] > vals[i])) fit.monotone = false;
  const double prev = vals[m - 2], last = vals[m - 1];
  fit.stabilized = std::abs(last - prev) <= 0.05 * std::max(prev, 1e-300);
  return fit;
}

/// Fills the per-region growth fits and the run-level stabilization flag.
void finish_run(SweepRun& run, const std::vector<RegionSpecNamed>& regions) {
  run.stabilized = true;
  for (const auto& reg : regions) {
    std::vector<std::pair<double, double>> pts;
    for (const DeltaRecord& rec : run.records) {
      if (!rec.ok) continue;
      const auto it = rec.l2.find(reg.name);
      if (it != rec.l2.end()) pts.emplace_back(rec.delta, it->second);
    }
    const GrowthFit fit = fit_growth(pts);
    run.stabilized = run.stabilized && fit.stabilized;
    run.growth[reg.name] = fit;
  }
}

int successful_solves(const SweepRun& run) {
  int n = 0;
  for (const DeltaRecord& rec : run.records) n += rec.ok ? 1 : 0;
  return n;
}

}  // namespace

// ============================================================================
// Sweep driver
// ============================================================================

SweepReport run_sweep(const ScenarioConfig& sc, const SweepOptions& options) {
  const double t0 = now_seconds();
  SweepReport report;
  report.scenario = sc.name;
  report.hash = sc.hash;

  const InterfaceGeometry geom = sc.make_geometry();
  const reflection::ReflectionMap F = sc.make_reflection(geom);
  const reflection::MediumFields medium = sc.make_medium_fields();
  report.classifier = reflection::classify(geom, F, medium);

  // A resonant medium gets a second, rotated source: growth that survives the
  // rotation is a property of the medium, not of one lucky right-hand side.
  std::vector<double> rotations{0.0};
  if (report.classifier.tag == reflection::VerdictTag::Resonant)
    rotations.push_back(1.0);

  if (sc.backend == Backend::Fem) {
    report.backend = "fem";
    report.closure = sc.closure.kind == fem::ClosureConfig::Kind::ModalDtn
                         ? "dtn"
                         : "absorbing";
    const fem::Mesh mesh = fem::build_polar_mesh(
        sc.interface_radii, sc.domain_radius, sc.n_angular, sc.n_radial_per_band);
    const std::vector<fem::RegionSpec> regions = sc.make_fem_regions();
    std::vector<fem::ObservationRegion> observed;
    for (const auto& r : sc.regions) observed.push_back({r.name, r.r_inner, r.r_outer});
    report.f_l2_sq = source_l2_sq(mesh, sc.make_source_field(0.0));

    for (double rot : rotations) {
      SweepRun run;
      run.rotation = rot;
      const fem::FemSystem system = fem::assemble(
          mesh, regions, sc.k, sc.closure, sc.make_source_field(rot), sc.threaded);
      for (double delta : sc.deltas) {
        DeltaRecord rec;
        rec.delta = delta;
        const double ts = now_seconds();
        try {
          const fem::SolveResult sol = fem::solve(system, delta, sc.hash);
          const Eigen::VectorXcd& u = sol.field.values;
          rec.ok = true;
          rec.pivot_indicator = sol.pivot_indicator;
          const fem::Diagnostics diag = fem::compute_diagnostics(
              sol.field, regions, geom, F, observed, sc.tube_half_width);
          rec.l2 = diag.region_l2;
          for (const auto& obs : observed)
            rec.h1[obs.name] =
                std::sqrt(h1_sq_over(mesh, u, obs.r_inner, obs.r_outer));
          rec.gap_energy = diag.gap_energy;
          rec.sigma_gap_mass = diag.sigma_gap_mass;
          rec.tube_h1_mismatch = diag.tube_h1_mismatch;
          rec.flux_jump = diag.flux_jump;
          rec.energy_residual = fem::energy_identity_residual(system, sol.field);
          rec.h1_domain_sq =
              h1_sq_over(mesh, u, 0.0, std::numeric_limits<double>::infinity());
          rec.source_pairing = std::abs(u.dot(system.load));
          if (options.keep_fields) {
            rec.field_rows.reserve(mesh.vertex_count());
            for (int v = 0; v < mesh.vertex_count(); ++v)
              rec.field_rows.push_back({mesh.vertices[v].x(), mesh.vertices[v].y(),
                                        u[v].real(), u[v].imag()});
          }
        } catch (const SingularSystem& e) {
          rec.ok = false;
          rec.failure = e.what();
        }
        rec.seconds = now_seconds() - ts;
        run.records.push_back(std::move(rec));
      }
      finish_run(run, sc.regions);
      report.runs.push_back(std::move(run));
    }
  } else {
    report.backend = "modal";
    report.closure = "exact";
    report.f_l2_sq = ring_l2_sq(sc.make_ring_source(0.0));
    for (double rot : rotations) {
      SweepRun run;
      run.rotation = rot;
      const modal::RingSource source = sc.make_ring_source(rot);
      for (double delta : sc.deltas) {
        DeltaRecord rec;
        rec.delta = delta;
        const double ts = now_seconds();
        try {
          const modal::LayeredMedium med = sc.make_modal_medium(delta);
          const modal::ModalField field =
              modal::modal_solution(med, {source}, sc.n_modes, sc.resolution);
          rec.ok = true;
          for (const auto& reg : sc.regions) {
            rec.l2[reg.name] = field.l2_annulus(reg.r_inner, reg.r_outer);
            rec.h1[reg.name] = field.h1_annulus(reg.r_inner, reg.r_outer);
          }
          rec.pivot_indicator = 1.0;
          for (const auto& m : field.fields)
            rec.pivot_indicator = std::min(rec.pivot_indicator, m.pivot_indicator);
          rec.energy_residual = field.power_balance(med);
          const double h1 = field.h1_annulus(0.0, sc.domain_radius);
          rec.h1_domain_sq = h1 * h1;
          rec.source_pairing = modal_pairing(field, source);
          // The pull-back diagnostics are mesh-bound; they stay zero here.
          if (options.keep_fields) {
            const int nr = 48, nt = 96;
            rec.field_rows.reserve(nr * nt);
            for (int i = 1; i <= nr; ++i) {
              const double r = sc.domain_radius * i / nr;
              for (int j = 0; j < nt; ++j) {
                const double theta = 2.0 * M_PI * j / nt;
                const Complex v = field.eval(r, theta);
                rec.field_rows.push_back({r * std::cos(theta),
                                          r * std::sin(theta), v.real(),
                                          v.imag()});
              }
            }
          }
        } catch (const SingularSystem& e) {
          rec.ok = false;
          rec.failure = e.what();
        }
        rec.seconds = now_seconds() - ts;
        run.records.push_back(std::move(rec));
      }
      finish_run(run, sc.regions);
      report.runs.push_back(std::move(run));
    }
  }

  for (const DeltaRecord& rec : report.runs.front().records) {
    if (!rec.ok) continue;
    const double denom = rec.source_pairing / rec.delta + report.f_l2_sq;
    if (denom > 0.0)
      report.energy_growth_c =
          std::max(report.energy_growth_c, rec.h1_domain_sq / denom);
  }

  report.total_seconds = now_seconds() - t0;
  return report;
}

// ============================================================================
// Resonance verdicts
// ============================================================================

ResonanceVerdict detect_resonance(const SweepReport& report,
                                  const std::string& region) {
  const GrowthFit* best = nullptr;
  for (const SweepRun& run : report.runs) {
    if (successful_solves(run) < 4) continue;
    const auto it = run.growth.find(region);
    if (it == run.growth.end())
      throw ValidationError("detect_resonance: unknown region '" + region + "'");
    if (best == nullptr || it->second.p > best->p) best = &it->second;
  }
  if (best == nullptr)
    throw InsufficientData(
        "detect_resonance: fewer than 4 successful solves in every run");

  ResonanceVerdict v;
  v.region = region;
  v.p = best->p;
  v.fit_residual = best->fit_residual;
  v.monotone = best->monotone;
  if (best->monotone && best->p >= 0.25 && best->fit_residual <= 0.1)
    v.tag = ResonanceTag::Resonant;
  else if (best->stabilized)
    v.tag = ResonanceTag::Stable;
  else
    v.tag = ResonanceTag::Inconclusive;
  return v;
}

ResonanceVerdict detect_resonance(const SweepReport& report) {
  if (report.runs.empty())
    throw InsufficientData("detect_resonance: the report contains no runs");
  ResonanceVerdict max_p, resonant;
  bool have = false, have_resonant = false;
  for (const auto& [name, fit] : report.runs.front().growth) {
    const ResonanceVerdict v = detect_resonance(report, name);
    if (!have || v.p > max_p.p) {
      max_p = v;
      have = true;
    }
    if (v.tag == ResonanceTag::Resonant &&
        (!have_resonant || v.p > resonant.p)) {
      resonant = v;
      have_resonant = true;
    }
  }
  if (!have)
    throw InsufficientData("detect_resonance: the report observes no regions");
  if (have_resonant) return resonant;
  bool all_stable = true;
  for (const SweepRun& run : report.runs) all_stable = all_stable && run.stabilized;
  max_p.tag = all_stable ? ResonanceTag::Stable : ResonanceTag::Inconclusive;
  return max_p;
}

// ============================================================================
// Oracle comparison
// ============================================================================

OracleComparison compare_oracle(const ScenarioConfig& sc, double delta,
                                int n_angular_coarse, int n_angular_fine) {
  for (const auto& b : sc.bands) {
    const bool isotropic =
        b.a(0, 1) == 0.0 && b.a(1, 0) == 0.0 && b.a(0, 0) == b.a(1, 1);
    if (!isotropic || b.kelvin_sigma)
      throw ValidationError(
          "compare_oracle: the modal reference needs isotropic constant bands");
  }
  if (sc.source.kind != SourceKind::Ring)
    throw ValidationError("compare_oracle: the modal reference needs a ring source");

  const modal::LayeredMedium med = sc.make_modal_medium(delta);
  const modal::ModalField ref = modal::modal_solution(
      med, {sc.make_ring_source(0.0)}, sc.n_modes, sc.resolution);

  const auto fem_error = [&](int n_angular) {
    const fem::Mesh mesh = fem::build_polar_mesh(
        sc.interface_radii, sc.domain_radius, n_angular, sc.n_radial_per_band);
    const fem::FemSystem system =
        fem::assemble(mesh, sc.make_fem_regions(), sc.k, sc.closure,
                      sc.make_source_field(0.0), sc.threaded);
    const fem::SolveResult sol = fem::solve(system, delta, sc.hash);
    const Eigen::VectorXcd& u = sol.field.values;
    double err = 0.0, ref_sq = 0.0;
    for (int t = 0; t < mesh.triangle_count(); ++t) {
      const auto& tri = mesh.triangles[t];
      const double w = mesh.triangle_area(t) / 3.0;
      for (int q = 0; q < 3; ++q) {
        Vec2 x = Vec2::Zero();
        Complex uh = 0.0;
        for (int i = 0; i < 3; ++i) {
          x += kBary[q][i] * mesh.vertices[tri[i]];
          uh += kBary[q][i] * u[tri[i]];
        }
        const Complex ur = ref.eval(x.norm(), std::atan2(x.y(), x.x()));
        err += w * std::norm(uh - ur);
        ref_sq += w * std::norm(ur);
      }
    }
    return std::sqrt(err / ref_sq);
  };

  OracleComparison out;
  out.error_coarse = fem_error(n_angular_coarse);
  out.error_fine = fem_error(n_angular_fine);
  out.order = std::log2(out.error_coarse / out.error_fine);
  return out;
}

}  // namespace signshift::lab
