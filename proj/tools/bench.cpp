/**
 * @file bench.cpp
 * @brief Assembly benchmark: threaded kernels against the serial reference,
 *        plus solve-time scaling over mesh resolution.
 */
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "signshift/lab.hpp"

namespace {

using namespace signshift;
using namespace signshift::lab;

// The three-band medium with a radially varying mass coefficient: the most
// expensive assembly path the project ships.
const char* kScenario = R"json({
  "geometry": {"interface_radii": [0.5, 1.0], "domain_radius": 2.5,
               "r0": 2.1, "tube_half_width": 0.15},
  "medium": {"frequency": 0.9516, "bands": [
    {"a": "identity", "sigma": 1.0},
    {"a": "identity", "sigma": "kelvin"},
    {"a": "identity", "sigma": 1.0}]},
  "reflection": {"kind": "kelvin", "radius": 1.0},
  "source": {"kind": "ring", "mode": 8, "radius": 1.75, "width": 0.2},
  "regions": [{"name": "mid", "r_inner": 1.2, "r_outer": 1.6}],
  "solver": {"backend": "fem", "n_angular": 128}
})json";

double now() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

template <typename Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const double t0 = now();
    fn();
    best = std::min(best, now() - t0);
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const bool full = argc > 1 && std::strcmp(argv[1], "--full") == 0;
  const ScenarioConfig sc = parse_scenario(kScenario, "bench");

#ifdef _OPENMP
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (compiled without OpenMP)\n");
#endif
  std::printf("%9s %9s %10s %12s %12s %8s %10s\n", "n_angular", "vertices",
              "triangles", "serial [s]", "threaded [s]", "speedup",
              "solve [s]");

  std::vector<int> tiers{64, 128, 256};
  if (full) tiers.push_back(512);

  std::vector<double> log_dofs, log_solve;
  for (int n : tiers) {
    const fem::Mesh mesh = fem::build_polar_mesh(
        sc.interface_radii, sc.domain_radius, n, sc.n_radial_per_band);
    const auto regions = sc.make_fem_regions();
    const auto source = sc.make_source_field(0.0);

    fem::FemSystem system;
    const double t_serial = best_of(3, [&] {
      system = fem::assemble(mesh, regions, sc.k, sc.closure, source, false);
    });
    const double t_threaded = best_of(3, [&] {
      system = fem::assemble(mesh, regions, sc.k, sc.closure, source, true);
    });
    const double t_solve =
        best_of(2, [&] { (void)fem::solve(system, 1e-3, sc.hash); });

    std::printf("%9d %9d %10d %12.4f %12.4f %8.2f %10.4f\n", n,
                mesh.vertex_count(), mesh.triangle_count(), t_serial,
                t_threaded, t_serial / t_threaded, t_solve);
    log_dofs.push_back(std::log(static_cast<double>(mesh.vertex_count())));
    log_solve.push_back(std::log(t_solve));
  }

  // Least-squares slope of log(solve time) against log(dofs).
  const int m = static_cast<int>(log_dofs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < m; ++i) {
    sx += log_dofs[i];
    sy += log_solve[i];
    sxx += log_dofs[i] * log_dofs[i];
    sxy += log_dofs[i] * log_solve[i];
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  std::printf("\nfitted solve-time exponent vs dofs: %.2f\n", slope);
  return 0;
}
