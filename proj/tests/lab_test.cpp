/**
 * @file lab_test.cpp
 * @brief Scenario parsing/validation, sweep behavior on the bundled
 *        scenarios, resonance verdicts, report emission and the modal
 *        cross-check.
 */
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "signshift/lab.hpp"

using namespace signshift;
using namespace signshift::lab;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fixture(const std::string& name) {
  return std::string(SIGNSHIFT_FIXTURE_DIR) + "/" + name + ".json";
}

/// Minimal valid scenario, mutated by the validation tests.
ordered_json base_scenario() {
  ordered_json j;
  j["geometry"] = {{"interface_radii", {1.0}},
                   {"domain_radius", 2.0},
                   {"r0", 1.5},
                   {"tube_half_width", 0.1}};
  j["medium"] = {{"frequency", 1.0},
                 {"bands", ordered_json::array(
                               {{{"a", "identity"}, {"sigma", 0.5}},
                                {{"a", "identity"}, {"sigma", 1.0}}})}};
  j["reflection"] = {{"kind", "kelvin"}, {"radius", 1.0}};
  j["source"] = {{"kind", "ring"}, {"mode", 2}, {"radius", 1.3}, {"width", 0.15}};
  j["regions"] = ordered_json::array(
      {{{"name", "core"}, {"r_inner", 0.0}, {"r_outer", 0.6}}});
  j["solver"] = {{"backend", "fem"}, {"n_angular", 128}};
  return j;
}

template <typename Err>
void expect_error(const ordered_json& doc, const std::string& needle) {
  try {
    parse_scenario(doc.dump(), "mutated");
    FAIL() << "expected an error mentioning '" << needle << "'";
  } catch (const Err& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
        << "actual message: " << e.what();
  }
}

/// Sweeps are cached: several tests inspect the same report.
const SweepReport& resonant_report() {
  static const SweepReport rep =
      run_sweep(load_scenario(fixture("resonant_annulus")));
  return rep;
}

const SweepReport& kelvin_half_report() {
  static const SweepReport rep =
      run_sweep(load_scenario(fixture("kelvin_sigma_half")));
  return rep;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

// ============================================================================
// Parsing and validation
// ============================================================================

TEST(LoadScenario, BundledScenariosParseAndValidate) {
  const ScenarioConfig aniso_inclusion = load_scenario(fixture("aniso_inclusion"));
  EXPECT_EQ(aniso_inclusion.name, "aniso_inclusion");
  EXPECT_EQ(aniso_inclusion.interface_radii.size(), 1u);
  EXPECT_EQ(aniso_inclusion.bands.size(), 2u);
  EXPECT_EQ(aniso_inclusion.band_sign, (std::vector<int>{-1, +1}));
  EXPECT_EQ(aniso_inclusion.backend, Backend::Fem);
  EXPECT_DOUBLE_EQ(aniso_inclusion.bands[0].a(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(aniso_inclusion.bands[0].a(0, 1), 0.5);

  const ScenarioConfig res = load_scenario(fixture("resonant_annulus"));
  EXPECT_EQ(res.bands.size(), 3u);
  EXPECT_EQ(res.band_sign, (std::vector<int>{+1, -1, +1}));
  EXPECT_TRUE(res.bands[1].kelvin_sigma);
  EXPECT_EQ(res.deltas.size(), 6u);
  EXPECT_EQ(res.source.mode, 8);

  const ScenarioConfig modal = load_scenario(fixture("contrast3_modal"));
  EXPECT_EQ(modal.backend, Backend::Modal);
}

TEST(LoadScenario, BandParityMatchesGeometryEvenOddRule) {
  const ScenarioConfig res = load_scenario(fixture("resonant_annulus"));
  const InterfaceGeometry geom = res.make_geometry();
  EXPECT_FALSE(geom.inside(Vec2(0.2, 0.0)));  // inner disk: outside D
  EXPECT_TRUE(geom.inside(Vec2(0.75, 0.0)));  // annulus: the inclusion
  EXPECT_FALSE(geom.inside(Vec2(1.5, 0.0)));
}

TEST(LoadScenario, HashIgnoresKeyOrderAndTracksContent) {
  const ordered_json a = base_scenario();
  ordered_json b;  // same content, different insertion order
  b["solver"] = a["solver"];
  b["regions"] = a["regions"];
  b["source"] = a["source"];
  b["reflection"] = a["reflection"];
  b["medium"] = a["medium"];
  b["geometry"] = a["geometry"];
  const auto ha = parse_scenario(a.dump(), "x").hash;
  const auto hb = parse_scenario(b.dump(2), "x").hash;
  EXPECT_EQ(ha, hb);

  ordered_json c = base_scenario();
  c["medium"]["frequency"] = 1.25;
  EXPECT_NE(parse_scenario(c.dump(), "x").hash, ha);
}

TEST(LoadScenario, UnknownKeysAreParseErrors) {
  ordered_json j = base_scenario();
  j["geometry"]["typo_key"] = 1.0;
  expect_error<ParseError>(j, "typo_key");
  EXPECT_THROW(parse_scenario("{not json", "x"), ParseError);
  EXPECT_THROW(load_scenario("/nonexistent/path.json"), ParseError);
}

TEST(Validate, SourceSupportMustAvoidTheInterface) {
  ordered_json j = base_scenario();
  j["source"]["radius"] = 1.05;  // support [0.9, 1.2] straddles r = 1
  expect_error<ValidationError>(j, "supp f");
  j = base_scenario();
  j["source"]["radius"] = 1.45;  // support [1.3, 1.6] leaves B_{r0}
  expect_error<ValidationError>(j, "supp f");
}

TEST(Validate, TruncationBallMustContainObservationBall) {
  ordered_json j = base_scenario();
  j["geometry"]["r0"] = 2.5;  // r0 beyond the outer radius
  expect_error<ValidationError>(j, "B_{R0}");
}

TEST(Validate, RegionsMustAvoidTheInterfaceAndStayInside) {
  ordered_json j = base_scenario();
  j["regions"][0]["r_outer"] = 1.05;  // annulus touches r = 1
  expect_error<ValidationError>(j, "K compactly");
  j = base_scenario();
  j["regions"][0] = {{"name", "outer"}, {"r_inner", 1.2}, {"r_outer", 1.55}};
  expect_error<ValidationError>(j, "K compactly");
}

TEST(Validate, OutermostBandMustBeFreeSpace) {
  ordered_json j = base_scenario();
  j["medium"]["bands"][1]["sigma"] = 2.0;
  expect_error<ValidationError>(j, "A(x) = I");
}

TEST(Validate, KelvinSigmaRequiresKelvinReflection) {
  ordered_json j = base_scenario();
  j["medium"]["bands"][0]["sigma"] = "kelvin";
  j["reflection"] = {{"kind", "standard"}};
  expect_error<ValidationError>(j, "kelvin");
}

TEST(Validate, ModalBackendRequiresIsotropicBands) {
  ordered_json j = base_scenario();
  j["medium"]["bands"][0]["a"] = {{3.0, 0.5}, {0.5, 2.0}};
  j["solver"]["backend"] = "modal";
  expect_error<ValidationError>(j, "isotropic");
}

TEST(Validate, LossLadderMustDescend) {
  ordered_json j = base_scenario();
  j["sweep"] = {{"deltas", {1e-3, 1e-2}}};
  expect_error<ValidationError>(j, "descending");
}

// ============================================================================
// Sweeps on the bundled scenarios
// ============================================================================

TEST(Sweep, ComplementingScenarioIsStableUnderVanishingLoss) {
  const SweepReport rep = run_sweep(load_scenario(fixture("contrast3_modal")));
  EXPECT_EQ(rep.backend, "modal");
  EXPECT_EQ(rep.classifier.tag, reflection::VerdictTag::Complementing);
  ASSERT_EQ(rep.runs.size(), 1u);  // no rotated twin for stable media
  EXPECT_TRUE(rep.runs[0].stabilized);
  for (const auto& rec : rep.runs[0].records) {
    ASSERT_TRUE(rec.ok) << "solve failed at delta " << rec.delta;
    EXPECT_LE(rec.energy_residual, 1e-10);
  }
  for (const auto& [region, fit] : rep.runs[0].growth) {
    EXPECT_LE(std::abs(fit.p), 0.05) << region;
    EXPECT_TRUE(fit.stabilized) << region;
  }
  EXPECT_EQ(detect_resonance(rep).tag, ResonanceTag::Stable);
}

TEST(Sweep, ScalarGapScenarioIsStableUnderVanishingLoss) {
  const SweepReport& rep = kelvin_half_report();
  EXPECT_EQ(rep.classifier.tag, reflection::VerdictTag::ScalarGap);
  EXPECT_DOUBLE_EQ(rep.classifier.exponent, 1.0);
  ASSERT_EQ(rep.runs.size(), 1u);
  EXPECT_TRUE(rep.runs[0].stabilized);
  for (const auto& rec : rep.runs[0].records) {
    ASSERT_TRUE(rec.ok);
    EXPECT_LE(rec.energy_residual, 1e-10);
  }
  for (const auto& [region, fit] : rep.runs[0].growth)
    EXPECT_LE(std::abs(fit.p), 0.05) << region;
  EXPECT_EQ(detect_resonance(rep).tag, ResonanceTag::Stable);
}

TEST(Sweep, ResonantScenarioGrowsAsLossVanishes) {
  const SweepReport& rep = resonant_report();
  EXPECT_EQ(rep.classifier.tag, reflection::VerdictTag::Resonant);
  ASSERT_EQ(rep.runs.size(), 2u);  // the resonance protocol adds a rotation
  EXPECT_DOUBLE_EQ(rep.runs[1].rotation, 1.0);
  for (const auto& run : rep.runs) EXPECT_FALSE(run.stabilized);

  const ResonanceVerdict overall = detect_resonance(rep);
  EXPECT_EQ(overall.tag, ResonanceTag::Resonant);
  EXPECT_GE(overall.p, 0.5);
  EXPECT_TRUE(overall.monotone);

  const ResonanceVerdict mid = detect_resonance(rep, "annulus_mid");
  EXPECT_EQ(mid.tag, ResonanceTag::Resonant);
  EXPECT_GE(mid.p, 0.5);
  EXPECT_LE(mid.fit_residual, 0.1);

  // The response must actually blow up, not merely trend upward.
  const auto& records = rep.runs[0].records;
  EXPECT_GE(records.back().l2.at("annulus_mid") /
                records.front().l2.at("annulus_mid"),
            1e3);
}

TEST(Sweep, StableScenariosNeverReportResonance) {
  for (const char* name : {"aniso_inclusion", "contrast3_modal"}) {
    const SweepReport rep = run_sweep(load_scenario(fixture(name)));
    EXPECT_EQ(rep.runs.size(), 1u) << name;
    EXPECT_NE(detect_resonance(rep).tag, ResonanceTag::Resonant) << name;
  }
  EXPECT_NE(detect_resonance(kelvin_half_report()).tag, ResonanceTag::Resonant);
}

TEST(Sweep, RegionNormsAgreeAcrossBackends) {
  ScenarioConfig modal_sc = load_scenario(fixture("kelvin_sigma_half"));
  modal_sc.backend = Backend::Modal;
  const SweepReport mod = run_sweep(modal_sc);
  const SweepReport& fem = kelvin_half_report();
  ASSERT_EQ(mod.runs[0].records.size(), fem.runs[0].records.size());
  for (std::size_t i = 0; i < fem.runs[0].records.size(); ++i) {
    const DeltaRecord& rf = fem.runs[0].records[i];
    const DeltaRecord& rm = mod.runs[0].records[i];
    if (rf.delta < 1e-4) continue;
    for (const auto& [region, value] : rf.l2)
      EXPECT_NEAR(value, rm.l2.at(region), 0.02 * rm.l2.at(region))
          << region << " at delta " << rf.delta;
  }
}

TEST(Sweep, EnergyGrowthConstantStaysModestForStableMedia) {
  EXPECT_LE(kelvin_half_report().energy_growth_c, 10.0);
  EXPECT_GT(kelvin_half_report().energy_growth_c, 0.0);
}

// ============================================================================
// Verdicts
// ============================================================================

TEST(Verdict, ShortLadderIsInsufficientData) {
  SweepReport rep;
  SweepRun run;
  for (double d : {1e-1, 1e-2, 1e-3}) {
    DeltaRecord rec;
    rec.delta = d;
    rec.ok = true;
    rec.l2["core"] = 1.0;
    run.records.push_back(rec);
  }
  run.growth["core"] = GrowthFit{};
  rep.runs.push_back(run);
  EXPECT_THROW(detect_resonance(rep, "core"), InsufficientData);
  EXPECT_THROW(detect_resonance(rep), InsufficientData);
}

TEST(Verdict, UnknownRegionIsRejected) {
  EXPECT_THROW(detect_resonance(resonant_report(), "nonsense"),
               ValidationError);
}

// ============================================================================
// Report emission
// ============================================================================

TEST(Report, EmitsPinnedCsvShapeAndDeterministicVerdict) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "signshift_lab_report";
  fs::remove_all(dir);

  const SweepReport rep = run_sweep(load_scenario(fixture("contrast3_modal")));
  const auto files = emit_report(rep, dir.string());
  ASSERT_EQ(files, (std::vector<std::string>{"sweep.csv", "verdict.json"}));

  std::ifstream csv(dir / "sweep.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header,
            "delta,region,l2,h1,gap_energy,sigma_gap_mass,tube_h1_mismatch,"
            "flux_jump,pivot_indicator");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 6 * 2);  // six deltas, two regions

  const std::string first = slurp(dir / "verdict.json");
  emit_report(rep, dir.string());
  EXPECT_EQ(slurp(dir / "verdict.json"), first);  // byte-identical rerun
  EXPECT_NE(first.find("\"tag\": \"Stable\""), std::string::npos);
  EXPECT_NE(first.find("\"backend\": \"modal\""), std::string::npos);
  fs::remove_all(dir);
}

TEST(Report, ResonantRunsEmitTheRotatedTwin) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "signshift_lab_resonant";
  fs::remove_all(dir);
  const auto files = emit_report(resonant_report(), dir.string());
  ASSERT_EQ(files.size(), 3u);
  EXPECT_EQ(files[1], "sweep_rotated.csv");
  const std::string verdict = slurp(dir / "verdict.json");
  EXPECT_NE(verdict.find("\"tag\": \"Resonant\""), std::string::npos);
  fs::remove_all(dir);
}

TEST(Report, FieldSamplesAreExportedOnRequest) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "signshift_lab_fields";
  fs::remove_all(dir);
  SweepOptions opt;
  opt.keep_fields = true;
  const SweepReport rep =
      run_sweep(load_scenario(fixture("contrast3_modal")), opt);
  const auto files = emit_report(rep, dir.string());
  EXPECT_EQ(files.size(), 2u + 6u);  // csv + verdict + one field per delta
  std::ifstream field(dir / "field_0.1.csv");
  ASSERT_TRUE(field.good());
  std::string header;
  std::getline(field, header);
  EXPECT_EQ(header, "x,y,re,im");
  fs::remove_all(dir);
}

// ============================================================================
// Modal cross-check
// ============================================================================

TEST(Oracle, FiniteElementSolutionConvergesToTheModalReference) {
  const ScenarioConfig sc = load_scenario(fixture("kelvin_sigma_half"));
  const OracleComparison oc = compare_oracle(sc, 1e-2, 128, 256);
  EXPECT_LE(oc.error_fine, 0.01);
  EXPECT_GE(oc.order, 1.7);
  EXPECT_LE(oc.order, 2.3);
}

TEST(Oracle, RejectsScenariosWithoutAModalRepresentation) {
  const ScenarioConfig sc = load_scenario(fixture("resonant_annulus"));
  EXPECT_THROW(compare_oracle(sc, 1e-2, 64, 128), ValidationError);
}
