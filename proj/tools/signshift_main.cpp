/**
 * @file signshift_main.cpp
 * @brief Command line front end: classify a scenario's medium, run loss
 *        sweeps, export the modal reference solution and check the interface
 *        coefficient pair.
 */
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "signshift/complementing.hpp"
#include "signshift/lab.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace signshift;

const char* tag_name(reflection::VerdictTag tag) {
  switch (tag) {
    case reflection::VerdictTag::Complementing: return "Complementing";
    case reflection::VerdictTag::MatrixGap: return "MatrixGap";
    case reflection::VerdictTag::ScalarGap: return "ScalarGap";
    case reflection::VerdictTag::Resonant: return "Resonant";
    default: return "Unknown";
  }
}

const char* tag_name(lab::ResonanceTag tag) {
  switch (tag) {
    case lab::ResonanceTag::Stable: return "Stable";
    case lab::ResonanceTag::Resonant: return "Resonant";
    default: return "Inconclusive";
  }
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

int run_classify(const std::string& config) {
  const lab::ScenarioConfig sc = lab::load_scenario(config);
  const auto geom = sc.make_geometry();
  const auto F = sc.make_reflection(geom);
  const auto medium = sc.make_medium_fields();
  const auto v = reflection::classify(geom, F, medium);

  json out;
  out["scenario"] = sc.name;
  out["hash"] = hash_hex(sc.hash);
  out["tag"] = tag_name(v.tag);
  out["exponent"] = v.exponent;
  out["fitted_c"] = v.fitted_c;
  out["component_sign"] = v.component_sign;
  json samples = json::array();
  for (const auto& s : v.samples)
    samples.push_back(json{
        {"component", s.component}, {"dist", s.dist}, {"ratio", s.ratio}});
  out["samples"] = samples;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_sweep_cmd(const std::string& config, std::string out_dir, bool fields) {
  const lab::ScenarioConfig sc = lab::load_scenario(config);
  if (out_dir.empty()) out_dir = sc.name + "_report";
  lab::SweepOptions opt;
  opt.keep_fields = fields;
  const lab::SweepReport rep = lab::run_sweep(sc, opt);
  const auto files = lab::emit_report(rep, out_dir);
  for (const auto& f : files) std::printf("wrote %s/%s\n", out_dir.c_str(), f.c_str());
  std::printf("classifier %s\n", tag_name(rep.classifier.tag));
  try {
    const lab::ResonanceVerdict v = lab::detect_resonance(rep);
    std::printf("verdict %s p=%.4g region=%s\n", tag_name(v.tag), v.p,
                v.region.c_str());
  } catch (const InsufficientData& e) {
    std::printf("verdict InsufficientData (%s)\n", e.what());
  }
  return 0;
}

int run_oracle_solve(const std::string& config, double delta,
                     const std::string& out_file) {
  const lab::ScenarioConfig sc = lab::load_scenario(config);
  for (const auto& b : sc.bands) {
    const bool isotropic =
        b.a(0, 1) == 0.0 && b.a(1, 0) == 0.0 && b.a(0, 0) == b.a(1, 1);
    if (!isotropic || b.kelvin_sigma)
      throw ValidationError(
          "oracle-solve: the modal reference needs isotropic constant bands");
  }
  if (sc.source.kind != lab::SourceKind::Ring)
    throw ValidationError("oracle-solve: the modal reference needs a ring source");
  if (!(delta > 0.0))
    throw ValidationError("oracle-solve: delta must be positive");

  const auto medium = sc.make_modal_medium(delta);
  const auto field = modal::modal_solution(medium, {sc.make_ring_source(0.0)},
                                           sc.n_modes, sc.resolution);
  std::string body = "x,y,re,im\n";
  const int nr = 96, nt = 128;
  char row[160];
  for (int i = 1; i <= nr; ++i) {
    const double r = sc.domain_radius * i / nr;
    for (int j = 0; j < nt; ++j) {
      const double theta = 2.0 * M_PI * j / nt;
      const std::complex<double> v = field.eval(r, theta);
      std::snprintf(row, sizeof row, "%.17g,%.17g,%.17g,%.17g\n",
                    r * std::cos(theta), r * std::sin(theta), v.real(),
                    v.imag());
      body += row;
    }
  }
  if (out_file.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(out_file, std::ios::binary);
    out << body;
    if (!out) throw IoError("oracle-solve: cannot write '" + out_file + "'");
    std::printf("wrote %s\n", out_file.c_str());
  }
  return 0;
}

int run_check_complementing(const std::string& config) {
  const lab::ScenarioConfig sc = lab::load_scenario(config);
  const auto geom = sc.make_geometry();
  const auto medium = sc.make_medium_fields();
  const auto rep = complementing::check_interface(geom, medium.a_outside,
                                                  medium.a_inside, 64);
  json out;
  out["scenario"] = sc.name;
  out["applies"] = rep.applies;
  out["ordering"] = rep.ordering;
  json samples = json::array();
  for (const auto& s : rep.samples)
    samples.push_back(json{{"component", s.where.component},
                           {"param", s.where.param},
                           {"holds", s.report.holds},
                           {"margin", s.report.margin},
                           {"sign", s.report.sign}});
  out["samples"] = samples;
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transmission-problem laboratory for sign-changing media"};
  app.require_subcommand(1);

  std::string config, out_dir, out_file;
  bool fields = false;
  double delta = 1e-2;

  auto* classify = app.add_subcommand(
      "classify", "Classify the medium's stability mechanism");
  classify->add_option("config", config, "scenario file")->required();

  auto* sweep = app.add_subcommand(
      "sweep", "Run the loss ladder and emit sweep.csv / verdict.json");
  sweep->add_option("config", config, "scenario file")->required();
  sweep->add_option("--out", out_dir, "output directory (default <name>_report)");
  sweep->add_flag("--fields", fields, "also export per-delta field samples");

  auto* oracle = app.add_subcommand(
      "oracle-solve", "Export the modal reference solution as CSV");
  oracle->add_option("config", config, "scenario file")->required();
  oracle->add_option("--delta", delta, "loss parameter")->required();
  oracle->add_option("--out", out_file, "output file (default stdout)");

  auto* check = app.add_subcommand(
      "check-complementing", "Check the interface coefficient pair");
  check->add_option("config", config, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (classify->parsed()) return run_classify(config);
    if (sweep->parsed()) return run_sweep_cmd(config, out_dir, fields);
    if (oracle->parsed()) return run_oracle_solve(config, delta, out_file);
    if (check->parsed()) return run_check_complementing(config);
  } catch (const signshift::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
