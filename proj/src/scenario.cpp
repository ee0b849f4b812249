/**
 * @file scenario.cpp
 * @brief Scenario file parsing, invariant validation, canonical hashing and
 *        the builders that turn a config into geometry, media and sources.
 */
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "signshift/lab.hpp"

namespace signshift::lab {

using json = nlohmann::ordered_json;

namespace {

// ============================================================================
// Parse helpers
// ============================================================================

[[noreturn]] void parse_fail(const std::string& context, const std::string& what) {
  throw ParseError("scenario: " + context + ": " + what);
}

[[noreturn]] void invalid(const std::string& invariant) {
  throw ValidationError("scenario: violated invariant: " + invariant);
}

/// Rejects keys outside the allowed set; typos should fail loudly.
void expect_keys(const json& obj, const std::set<std::string>& allowed,
                 const std::string& context) {
  if (!obj.is_object()) parse_fail(context, "expected an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      parse_fail(context, "unknown key '" + item.key() + "'");
}

double get_number(const json& obj, const std::string& key, double fallback,
                  bool required, const std::string& context) {
  if (!obj.contains(key)) {
    if (required) parse_fail(context, "missing key '" + key + "'");
    return fallback;
  }
  if (!obj[key].is_number()) parse_fail(context, "'" + key + "' must be a number");
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& key, int fallback,
            const std::string& context) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer())
    parse_fail(context, "'" + key + "' must be an integer");
  return obj[key].get<int>();
}

std::string get_string(const json& obj, const std::string& key,
                       const std::string& fallback, bool required,
                       const std::string& context) {
  if (!obj.contains(key)) {
    if (required) parse_fail(context, "missing key '" + key + "'");
    return fallback;
  }
  if (!obj[key].is_string()) parse_fail(context, "'" + key + "' must be a string");
  return obj[key].get<std::string>();
}

Complex get_complex(const json& obj, const std::string& key, Complex fallback,
                    const std::string& context) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj[key];
  if (v.is_number()) return Complex(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return Complex(v[0].get<double>(), v[1].get<double>());
  parse_fail(context, "'" + key + "' must be a number or [re, im]");
}

Mat2 parse_matrix(const json& v, const std::string& context) {
  if (v.is_string() && v.get<std::string>() == "identity")
    return Mat2::Identity();
  if (v.is_number()) return v.get<double>() * Mat2::Identity();
  if (v.is_array() && v.size() == 2 && v[0].is_array() && v[1].is_array() &&
      v[0].size() == 2 && v[1].size() == 2) {
    Mat2 m;
    m << v[0][0].get<double>(), v[0][1].get<double>(), v[1][0].get<double>(),
        v[1][1].get<double>();
    return m;
  }
  parse_fail(context, "matrix must be \"identity\", a scalar, or [[a,b],[c,d]]");
}

// ============================================================================
// Canonical serialization (hash input)
// ============================================================================

std::string canonical(const ScenarioConfig& sc) {
  // Fixed field order and %.17g floats: cosmetic reordering or whitespace in
  // the input file cannot change the hash.
  std::ostringstream os;
  auto put = [&os](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g|", v);
    os << buf;
  };
  os << "name=" << sc.name << "|radii=";
  for (double r : sc.interface_radii) put(r);
  os << "R=";
  put(sc.domain_radius);
  put(sc.r0);
  put(sc.tube_half_width);
  put(sc.k);
  os << "bands=";
  for (const auto& b : sc.bands) {
    put(b.a(0, 0));
    put(b.a(0, 1));
    put(b.a(1, 0));
    put(b.a(1, 1));
    put(b.sigma);
    os << (b.kelvin_sigma ? "K" : "c");
  }
  os << "|refl=" << static_cast<int>(sc.refl_kind);
  put(sc.refl_beta);
  put(sc.refl_radius);
  os << "src=" << static_cast<int>(sc.source.kind) << "," << sc.source.mode
     << ",";
  put(sc.source.radius);
  put(sc.source.width);
  put(sc.source.amplitude.real());
  put(sc.source.amplitude.imag());
  put(sc.source.rotation);
  put(sc.source.center.x());
  put(sc.source.center.y());
  os << "deltas=";
  for (double d : sc.deltas) put(d);
  os << "regions=";
  for (const auto& r : sc.regions) {
    os << r.name << ",";
    put(r.r_inner);
    put(r.r_outer);
  }
  os << "solver=" << static_cast<int>(sc.backend) << "," << sc.n_angular << ","
     << sc.n_radial_per_band << "," << static_cast<int>(sc.closure.kind) << ","
     << sc.closure.max_modes << "," << sc.resolution << "," << sc.n_modes;
  return os.str();
}

// ============================================================================
// Validation
// ============================================================================

void validate(const ScenarioConfig& sc) {
  if (!(sc.k > 0.0)) invalid("frequency k > 0");
  if (sc.interface_radii.empty())
    invalid("at least one interface circle is required");
  for (std::size_t i = 0; i < sc.interface_radii.size(); ++i) {
    if (!(sc.interface_radii[i] > 0.0))
      invalid("interface radii must be positive");
    if (i > 0 && !(sc.interface_radii[i] > sc.interface_radii[i - 1]))
      invalid("interface radii must be strictly increasing");
  }
  if (!(sc.r0 > sc.interface_radii.back()))
    invalid("B_{R0} must contain the interface");
  if (!(sc.domain_radius > sc.r0)) invalid("B_{R0} subset of B_R requires R0 < R");
  if (!(sc.tube_half_width > 0.0)) invalid("tube half-width must be positive");

  if (sc.bands.size() != sc.interface_radii.size() + 1)
    invalid("one coefficient band per radial gap (bands = radii + 1)");
  const BandCoef& outer = sc.bands.back();
  if (!outer.a.isApprox(Mat2::Identity(), 0.0) || outer.kelvin_sigma ||
      outer.sigma != 1.0)
    invalid("A(x) = I and sigma = 1 outside B_{R0}");
  for (const auto& b : sc.bands) {
    if (!b.a.isApprox(b.a.transpose(), 1e-14)) invalid("band A must be symmetric");
    const Eigen::SelfAdjointEigenSolver<Mat2> eig(b.a);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
      invalid("band A must be positive definite");
    if (!b.kelvin_sigma && !(b.sigma > 0.0)) invalid("band sigma must be positive");
  }
  for (const auto& b : sc.bands)
    if (b.kelvin_sigma && sc.refl_kind != reflection::ReflectionKind::Kelvin)
      invalid("kelvin sigma requires the kelvin reflection");

  // Source support must stay inside B_{R0} and away from the interface.
  double src_lo = 0.0, src_hi = 0.0;
  if (sc.source.kind == SourceKind::Ring) {
    if (!(sc.source.width > 0.0) || !(sc.source.radius > 0.0))
      invalid("ring source needs positive radius and width");
    src_lo = sc.source.radius - sc.source.width;
    src_hi = sc.source.radius + sc.source.width;
  } else {
    if (!(sc.source.width > 0.0)) invalid("bump source needs positive width");
    const double rc = sc.source.center.norm();
    src_lo = rc - sc.source.width;
    src_hi = rc + sc.source.width;
  }
  if (src_hi > sc.r0) invalid("supp f inside B_{R0} \\ Gamma");
  for (double ri : sc.interface_radii)
    if (ri > src_lo && ri < src_hi) invalid("supp f inside B_{R0} \\ Gamma");

  if (sc.deltas.empty()) invalid("the loss ladder must be nonempty");
  for (std::size_t i = 0; i < sc.deltas.size(); ++i) {
    if (!(sc.deltas[i] > 0.0)) invalid("loss values must be positive");
    if (i > 0 && !(sc.deltas[i] < sc.deltas[i - 1]))
      invalid("loss ladder must be strictly descending");
  }

  if (sc.regions.empty()) invalid("at least one observation region is required");
  std::set<std::string> names;
  for (const auto& r : sc.regions) {
    if (r.name.empty()) invalid("observation regions need names");
    if (!names.insert(r.name).second)
      invalid("observation region names must be unique");
    if (!(r.r_inner >= 0.0) || !(r.r_outer > r.r_inner))
      invalid("observation region radii must satisfy 0 <= inner < outer");
    if (!(r.r_outer < sc.r0)) invalid("K compactly inside B_{R0} \\ Gamma");
    for (double ri : sc.interface_radii)
      if (ri >= r.r_inner && ri <= r.r_outer)
        invalid("K compactly inside B_{R0} \\ Gamma");
  }

  if (sc.backend == Backend::Modal) {
    for (const auto& b : sc.bands) {
      const bool isotropic = b.a(0, 1) == 0.0 && b.a(1, 0) == 0.0 &&
                             b.a(0, 0) == b.a(1, 1);
      if (!isotropic || b.kelvin_sigma)
        invalid("modal backend requires isotropic constant bands");
    }
    if (sc.source.kind != SourceKind::Ring)
      invalid("modal backend requires a ring source");
  }
  if (sc.refl_kind == reflection::ReflectionKind::Kelvin &&
      !(sc.refl_radius > 0.0))
    invalid("kelvin reflection needs a positive radius");
}

}  // namespace

// ============================================================================
// Public parsing entry points
// ============================================================================

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    parse_fail(name, e.what());
  }
  expect_keys(doc,
              {"name", "geometry", "medium", "reflection", "source", "sweep",
               "regions", "solver"},
              "top level");

  ScenarioConfig sc;
  sc.name = get_string(doc, "name", name, false, "top level");

  // geometry
  if (!doc.contains("geometry")) parse_fail("top level", "missing key 'geometry'");
  const json& g = doc["geometry"];
  expect_keys(g, {"interface_radii", "domain_radius", "r0", "tube_half_width"},
              "geometry");
  if (!g.contains("interface_radii") || !g["interface_radii"].is_array())
    parse_fail("geometry", "'interface_radii' must be an array");
  for (const auto& v : g["interface_radii"]) {
    if (!v.is_number()) parse_fail("geometry", "radii must be numbers");
    sc.interface_radii.push_back(v.get<double>());
  }
  sc.domain_radius = get_number(g, "domain_radius", 0.0, true, "geometry");
  sc.r0 = get_number(g, "r0", 0.0, true, "geometry");
  sc.tube_half_width = get_number(g, "tube_half_width", 0.1, false, "geometry");

  // medium
  if (!doc.contains("medium")) parse_fail("top level", "missing key 'medium'");
  const json& med = doc["medium"];
  expect_keys(med, {"frequency", "bands"}, "medium");
  sc.k = get_number(med, "frequency", 0.0, true, "medium");
  if (!med.contains("bands") || !med["bands"].is_array())
    parse_fail("medium", "'bands' must be an array");
  for (const auto& bj : med["bands"]) {
    expect_keys(bj, {"a", "sigma"}, "medium.bands");
    BandCoef b;
    if (bj.contains("a")) b.a = parse_matrix(bj["a"], "medium.bands");
    if (bj.contains("sigma")) {
      const json& s = bj["sigma"];
      if (s.is_string()) {
        if (s.get<std::string>() != "kelvin")
          parse_fail("medium.bands", "sigma must be a number or \"kelvin\"");
        b.kelvin_sigma = true;
      } else if (s.is_number()) {
        b.sigma = s.get<double>();
      } else {
        parse_fail("medium.bands", "sigma must be a number or \"kelvin\"");
      }
    }
    sc.bands.push_back(b);
  }
  // Band parity: a band under an odd number of interface circles is in D.
  sc.band_sign.resize(sc.bands.size());
  for (std::size_t j = 0; j < sc.bands.size(); ++j) {
    const std::size_t enclosing = sc.interface_radii.size() - j;
    sc.band_sign[j] = (enclosing % 2 == 1) ? -1 : +1;
  }

  // reflection
  if (doc.contains("reflection")) {
    const json& rf = doc["reflection"];
    expect_keys(rf, {"kind", "beta", "radius"}, "reflection");
    const std::string kind = get_string(rf, "kind", "standard", false, "reflection");
    if (kind == "standard") {
      sc.refl_kind = reflection::ReflectionKind::Standard;
    } else if (kind == "curvature") {
      sc.refl_kind = reflection::ReflectionKind::Curvature;
    } else if (kind == "kelvin") {
      sc.refl_kind = reflection::ReflectionKind::Kelvin;
    } else {
      parse_fail("reflection", "kind must be standard, curvature or kelvin");
    }
    sc.refl_beta = get_number(rf, "beta", -0.5, false, "reflection");
    sc.refl_radius = get_number(rf, "radius", sc.interface_radii.back(), false,
                                "reflection");
  } else {
    sc.refl_radius = sc.interface_radii.empty() ? 1.0 : sc.interface_radii.back();
  }

  // source
  if (!doc.contains("source")) parse_fail("top level", "missing key 'source'");
  const json& src = doc["source"];
  expect_keys(src, {"kind", "mode", "radius", "width", "amplitude", "rotation",
                    "center"},
              "source");
  const std::string skind = get_string(src, "kind", "ring", false, "source");
  if (skind == "ring") {
    sc.source.kind = SourceKind::Ring;
    sc.source.mode = get_int(src, "mode", 0, "source");
    sc.source.radius = get_number(src, "radius", 0.0, true, "source");
  } else if (skind == "bump") {
    sc.source.kind = SourceKind::Bump;
    if (!src.contains("center") || !src["center"].is_array() ||
        src["center"].size() != 2)
      parse_fail("source", "bump source needs 'center': [x, y]");
    sc.source.center =
        Vec2(src["center"][0].get<double>(), src["center"][1].get<double>());
  } else {
    parse_fail("source", "kind must be ring or bump");
  }
  sc.source.width = get_number(src, "width", 0.1, false, "source");
  sc.source.amplitude = get_complex(src, "amplitude", 1.0, "source");
  sc.source.rotation = get_number(src, "rotation", 0.0, false, "source");

  // sweep
  if (doc.contains("sweep")) {
    const json& sw = doc["sweep"];
    expect_keys(sw, {"deltas"}, "sweep");
    if (sw.contains("deltas")) {
      if (!sw["deltas"].is_array()) parse_fail("sweep", "'deltas' must be an array");
      for (const auto& v : sw["deltas"]) sc.deltas.push_back(v.get<double>());
    }
  }
  if (sc.deltas.empty()) sc.deltas = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};

  // regions
  if (!doc.contains("regions")) parse_fail("top level", "missing key 'regions'");
  if (!doc["regions"].is_array()) parse_fail("regions", "must be an array");
  for (const auto& rj : doc["regions"]) {
    expect_keys(rj, {"name", "r_inner", "r_outer"}, "regions");
    RegionSpecNamed r;
    r.name = get_string(rj, "name", "", true, "regions");
    r.r_inner = get_number(rj, "r_inner", 0.0, true, "regions");
    r.r_outer = get_number(rj, "r_outer", 0.0, true, "regions");
    sc.regions.push_back(r);
  }

  // solver
  if (doc.contains("solver")) {
    const json& sv = doc["solver"];
    expect_keys(sv, {"backend", "n_angular", "n_radial_per_band", "closure",
                     "max_modes", "resolution", "n_modes", "threaded"},
                "solver");
    const std::string backend = get_string(sv, "backend", "fem", false, "solver");
    if (backend == "fem") {
      sc.backend = Backend::Fem;
    } else if (backend == "modal") {
      sc.backend = Backend::Modal;
    } else {
      parse_fail("solver", "backend must be fem or modal");
    }
    sc.n_angular = get_int(sv, "n_angular", 128, "solver");
    sc.n_radial_per_band = get_int(sv, "n_radial_per_band", 1, "solver");
    const std::string closure = get_string(sv, "closure", "dtn", false, "solver");
    if (closure == "dtn") {
      sc.closure.kind = fem::ClosureConfig::Kind::ModalDtn;
    } else if (closure == "absorbing") {
      sc.closure.kind = fem::ClosureConfig::Kind::FirstOrderAbsorbing;
    } else {
      parse_fail("solver", "closure must be dtn or absorbing");
    }
    sc.closure.max_modes = get_int(sv, "max_modes", -1, "solver");
    sc.resolution = get_int(sv, "resolution", 2048, "solver");
    sc.n_modes = get_int(sv, "n_modes", 24, "solver");
    if (sv.contains("threaded")) {
      if (!sv["threaded"].is_boolean())
        parse_fail("solver", "'threaded' must be a boolean");
      sc.threaded = sv["threaded"].get<bool>();
    }
  }

  validate(sc);
  sc.hash = fnv1a(canonical(sc));
  return sc;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("scenario: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string name = path;
  const auto slash = name.find_last_of('/');
  if (slash != std::string::npos) name = name.substr(slash + 1);
  const auto dot = name.find_last_of('.');
  if (dot != std::string::npos) name = name.substr(0, dot);
  return parse_scenario(buf.str(), name);
}

// ============================================================================
// Derived builders
// ============================================================================

InterfaceGeometry ScenarioConfig::make_geometry() const {
  std::vector<geometry::ClosedCurve> curves;
  for (double r : interface_radii)
    curves.push_back(geometry::ClosedCurve::circle(Vec2::Zero(), r));
  return InterfaceGeometry(std::move(curves), tube_half_width);
}

reflection::ReflectionMap ScenarioConfig::make_reflection(
    const InterfaceGeometry& geom) const {
  switch (refl_kind) {
    case reflection::ReflectionKind::Kelvin:
      return reflection::ReflectionMap::kelvin(Vec2::Zero(), refl_radius);
    case reflection::ReflectionKind::Curvature:
      return reflection::ReflectionMap::curvature(geom, refl_beta,
                                                  tube_half_width);
    default:
      return reflection::ReflectionMap::standard(geom, tube_half_width);
  }
}

reflection::MediumFields ScenarioConfig::make_medium_fields() const {
  // Side-aware accessors: pick the band flanking the nearest interface
  // circle with the requested parity, so both sides stay well defined
  // exactly on Gamma (a raw radial lookup could not pick a side there).
  // Adjacent bands always carry opposite signs, so the pick is unique.
  auto band_near = [radii = interface_radii, signs = band_sign](
                       const Vec2& x, int want_sign) -> std::size_t {
    const double r = x.norm();
    std::size_t nearest = 0;
    double best = std::abs(r - radii[0]);
    for (std::size_t i = 1; i < radii.size(); ++i) {
      const double d = std::abs(r - radii[i]);
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    return signs[nearest] == want_sign ? nearest : nearest + 1;
  };
  auto band_value = [bands = bands, rho = refl_radius](std::size_t j,
                                                       const Vec2& x) {
    const BandCoef& b = bands[j];
    if (!b.kelvin_sigma) return b.sigma;
    const double s = rho * rho / x.squaredNorm();
    return s * s;
  };
  reflection::MediumFields fields;
  fields.a_inside = [band_near, bands = bands](const Vec2& x) {
    return bands[band_near(x, -1)].a;
  };
  fields.a_outside = [band_near, bands = bands](const Vec2& x) {
    return bands[band_near(x, +1)].a;
  };
  fields.sigma_inside = [band_near, band_value](const Vec2& x) {
    return band_value(band_near(x, -1), x);
  };
  fields.sigma_outside = [band_near, band_value](const Vec2& x) {
    return band_value(band_near(x, +1), x);
  };
  return fields;
}

std::vector<fem::RegionSpec> ScenarioConfig::make_fem_regions() const {
  std::vector<fem::RegionSpec> out;
  for (std::size_t j = 0; j < bands.size(); ++j) {
    fem::RegionSpec spec;
    spec.a = [a = bands[j].a](const Vec2&) { return a; };
    if (bands[j].kelvin_sigma) {
      spec.sigma = [rho = refl_radius](const Vec2& x) {
        const double s = rho * rho / x.squaredNorm();
        return s * s;
      };
    } else {
      spec.sigma = [v = bands[j].sigma](const Vec2&) { return v; };
    }
    spec.sign = band_sign[j];
    out.push_back(std::move(spec));
  }
  return out;
}

modal::LayeredMedium ScenarioConfig::make_modal_medium(double delta) const {
  std::vector<double> breaks{0.0};
  for (double r : interface_radii) breaks.push_back(r);
  breaks.push_back(domain_radius);
  std::vector<modal::LayerCoef> layers;
  for (std::size_t j = 0; j < bands.size(); ++j)
    layers.push_back({bands[j].a(0, 0), bands[j].sigma, band_sign[j]});
  return modal::LayeredMedium(std::move(breaks), std::move(layers), k, delta);
}

modal::RingSource ScenarioConfig::make_ring_source(double extra_rotation) const {
  modal::RingSource s;
  s.mode = source.mode;
  s.radius = source.radius;
  s.width = source.width;
  s.amplitude = source.amplitude;
  s.rotation = source.rotation + extra_rotation;
  return s;
}

std::function<Complex(const Vec2&)> ScenarioConfig::make_source_field(
    double extra_rotation) const {
  if (source.kind == SourceKind::Ring) {
    const modal::RingSource s = make_ring_source(extra_rotation);
    return [s](const Vec2& x) {
      const double r = x.norm();
      const double profile = modal::ring_profile(s, r);
      if (profile == 0.0) return Complex(0.0);
      const double theta = std::atan2(x.y(), x.x());
      return s.amplitude * profile *
             std::polar(1.0, s.mode * (theta - s.rotation));
    };
  }
  // Bump: rotate the center about the origin by the extra rotation.
  const double c = std::cos(extra_rotation), s = std::sin(extra_rotation);
  Vec2 center(c * source.center.x() - s * source.center.y(),
              s * source.center.x() + c * source.center.y());
  return [center, w = source.width, amp = source.amplitude](const Vec2& x) {
    const double q = (x - center).squaredNorm() / (w * w);
    if (q >= 1.0) return Complex(0.0);
    return amp * (1.0 - q) * (1.0 - q);
  };
}

}  // namespace signshift::lab
