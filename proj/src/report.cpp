/**
 * @file report.cpp
 * @brief Deterministic sweep artifacts: the per-delta CSV tables, the verdict
 *        summary and optional field exports.
 */
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "signshift/lab.hpp"

namespace signshift::lab {

using json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out) throw IoError("report: cannot write '" + path.string() + "'");
}

std::string sweep_csv(const SweepRun& run) {
  std::string body =
      "delta,region,l2,h1,gap_energy,sigma_gap_mass,tube_h1_mismatch,"
      "flux_jump,pivot_indicator\n";
  for (const DeltaRecord& rec : run.records) {
    if (!rec.ok) continue;
    for (const auto& [region, l2] : rec.l2) {
      const auto h1 = rec.h1.find(region);
      body += fmt(rec.delta) + "," + region + "," + fmt(l2) + "," +
              fmt(h1 != rec.h1.end() ? h1->second : 0.0) + "," +
              fmt(rec.gap_energy) + "," + fmt(rec.sigma_gap_mass) + "," +
              fmt(rec.tube_h1_mismatch) + "," + fmt(rec.flux_jump) + "," +
              fmt(rec.pivot_indicator) + "\n";
    }
  }
  return body;
}

const char* tag_name(reflection::VerdictTag tag) {
  switch (tag) {
    case reflection::VerdictTag::Complementing: return "Complementing";
    case reflection::VerdictTag::MatrixGap: return "MatrixGap";
    case reflection::VerdictTag::ScalarGap: return "ScalarGap";
    case reflection::VerdictTag::Resonant: return "Resonant";
    default: return "Unknown";
  }
}

const char* tag_name(ResonanceTag tag) {
  switch (tag) {
    case ResonanceTag::Stable: return "Stable";
    case ResonanceTag::Resonant: return "Resonant";
    default: return "Inconclusive";
  }
}

json verdict_json(const ResonanceVerdict& v) {
  return json{{"tag", tag_name(v.tag)},
              {"p", v.p},
              {"fit_residual", v.fit_residual},
              {"monotone", v.monotone},
              {"region", v.region}};
}

}  // namespace

std::vector<std::string> emit_report(const SweepReport& report,
                                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("report: cannot create '" + out_dir + "'");

  std::vector<std::string> written;
  const auto emit = [&](const std::string& name, const std::string& body) {
    write_file(fs::path(out_dir) / name, body);
    written.push_back(name);
  };

  // --- CSV tables (run 0, then the rotated twin) ---------------------------
  if (!report.runs.empty()) emit("sweep.csv", sweep_csv(report.runs[0]));
  if (report.runs.size() > 1)
    emit("sweep_rotated.csv", sweep_csv(report.runs[1]));

  // --- verdict summary ------------------------------------------------------
  char hash_hex[24];
  std::snprintf(hash_hex, sizeof hash_hex, "%016" PRIx64, report.hash);

  json doc;
  doc["scenario"] = report.scenario;
  doc["hash"] = hash_hex;
  doc["backend"] = report.backend;
  doc["closure"] = report.closure;
  doc["classifier"] = json{{"tag", tag_name(report.classifier.tag)},
                           {"exponent", report.classifier.exponent},
                           {"fitted_c", report.classifier.fitted_c},
                           {"component_sign", report.classifier.component_sign}};

  json runs = json::array();
  double max_energy_residual = 0.0;
  for (const SweepRun& run : report.runs) {
    json jr;
    jr["rotation"] = run.rotation;
    jr["stabilized"] = run.stabilized;
    json deltas = json::array(), failed = json::array();
    for (const DeltaRecord& rec : run.records) {
      deltas.push_back(rec.delta);
      if (!rec.ok)
        failed.push_back(json{{"delta", rec.delta}, {"error", rec.failure}});
      else
        max_energy_residual = std::max(max_energy_residual, rec.energy_residual);
    }
    jr["deltas"] = deltas;
    jr["failed"] = failed;
    json growth;
    for (const auto& [region, fit] : run.growth)
      growth[region] = json{{"p", fit.p},
                            {"fit_residual", fit.fit_residual},
                            {"monotone", fit.monotone},
                            {"stabilized", fit.stabilized},
                            {"points", fit.points}};
    jr["growth"] = growth;
    runs.push_back(jr);
  }
  doc["runs"] = runs;
  doc["energy_growth_c"] = report.energy_growth_c;
  doc["f_l2_sq"] = report.f_l2_sq;
  doc["max_energy_residual"] = max_energy_residual;

  try {
    doc["verdict"] = verdict_json(detect_resonance(report));
    json regions;
    if (!report.runs.empty())
      for (const auto& [region, fit] : report.runs.front().growth)
        regions[region] = verdict_json(detect_resonance(report, region));
    doc["region_verdicts"] = regions;
  } catch (const InsufficientData& e) {
    doc["verdict"] = json{{"tag", "InsufficientData"}, {"error", e.what()}};
  }

  emit("verdict.json", doc.dump(2) + "\n");

  // --- optional field exports ----------------------------------------------
  for (std::size_t ri = 0; ri < report.runs.size(); ++ri) {
    const std::string stem = ri == 0 ? "field_" : "field_rotated_";
    for (const DeltaRecord& rec : report.runs[ri].records) {
      if (rec.field_rows.empty()) continue;
      std::string body = "x,y,re,im\n";
      for (const auto& row : rec.field_rows)
        body += fmt(row[0]) + "," + fmt(row[1]) + "," + fmt(row[2]) + "," +
                fmt(row[3]) + "\n";
      emit(stem + fmt_short(rec.delta) + ".csv", body);
    }
  }
  return written;
}

}  // namespace signshift::lab
