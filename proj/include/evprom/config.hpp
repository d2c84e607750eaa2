// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evprom/io.hpp"

namespace evprom {

struct ToleranceSet {
  double hf_newton = 1e-5;
  double rom_newton = 1e-4;
  double pod = 1e-5;
  double cubature = 1e-4;
  double gappy = 1e-5;
  double calibration = 0.1;  // reduced-solve tolerance while calibrating
  int max_iterations = 30;

  NewtonOptions hf_options() const { return {hf_newton, max_iterations}; }
  NewtonOptions rom_options() const { return {rom_newton, max_iterations}; }
  RomOptions rom_build() const { return {pod, cubature, gappy}; }
};

struct EnrichmentConfig {
  double threshold = 0.2;
  std::vector<int> quantities;  // dual quantity ids to monitor
  std::vector<int> regions = {-1};
};

struct OutputConfig {
  std::filesystem::path directory = "out";
  bool vtk = false;
};

struct PipelineConfig {
  std::filesystem::path base_dir = ".";
  double length_unit = 1.0;
  Mesh mesh;
  MaterialLaw law = MaterialLaw(ElasParams{});
  std::vector<LoadingProgram> offline;
  LoadingProgram online;
  ToleranceSet tolerances;
  EnrichmentConfig enrichment;
  OutputConfig output;
};

namespace detail {

// Unknown keys are configuration mistakes, not extensions to ignore.
inline void expect_keys(const nlohmann::json& j, const std::string& context,
                        std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(context + " must be an object");
  for (const auto& item : j.items()) {
    const bool known =
        std::any_of(allowed.begin(), allowed.end(),
                    [&](const char* k) { return item.key() == k; });
    if (!known)
      throw ConfigError("unknown key '" + item.key() + "' in " + context);
  }
}

inline double number_at(const nlohmann::json& j, const char* key,
                        const std::string& context) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw ConfigError(context + " needs a numeric '" + std::string(key) + "'");
  return j.at(key).get<double>();
}

inline std::vector<double> number_list(const nlohmann::json& j,
                                       const std::string& context) {
  if (!j.is_array()) throw ConfigError(context + " must be an array");
  std::vector<double> out;
  for (const nlohmann::json& v : j) {
    if (!v.is_number()) throw ConfigError(context + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline Vec3 vec3_at(const nlohmann::json& j, const std::string& context) {
  const std::vector<double> v = number_list(j, context);
  if (v.size() != 3) throw ConfigError(context + " must hold three numbers");
  return Vec3(v[0], v[1], v[2]);
}

inline PiecewiseLinear parse_signal(const nlohmann::json& j,
                                    const std::string& context) {
  expect_keys(j, context, {"times", "values"});
  return PiecewiseLinear(number_list(j.at("times"), context + ".times"),
                         number_list(j.at("values"), context + ".values"));
}

// Material coefficient: one number for a constant, or one value per entry
// of the material temperature grid.
inline TemperatureTable parse_coefficient(const nlohmann::json& j,
                                          const std::vector<double>& temps,
                                          const std::string& context) {
  if (j.is_number()) return TemperatureTable(j.get<double>());
  const std::vector<double> values = number_list(j, context);
  if (temps.empty())
    throw ConfigError(context + " is a list but 'temperatures' is missing");
  if (values.size() != temps.size())
    throw ConfigError(context + " must match the temperature grid size");
  return TemperatureTable(temps, values);
}

inline VecX pressure_shape_from_faces(const Mesh& mesh,
                                      const nlohmann::json& faces,
                                      const std::string& context) {
  expect_keys(faces, context,
              {"xmin", "xmax", "ymin", "ymax", "zmin", "zmax", "custom"});
  VecX shape = VecX::Zero(mesh.facets.size());
  for (const auto& item : faces.items()) {
    if (!item.value().is_number())
      throw ConfigError(context + "." + item.key() + " must be a number");
    const double coef = item.value().get<double>();
    bool found = false;
    for (size_t i = 0; i < mesh.facets.size(); ++i)
      if (mesh.facets[i].label == item.key()) {
        shape[i] += coef;
        found = true;
      }
    if (!found)
      throw ConfigError("no facet carries label '" + item.key() + "' (" +
                        context + ")");
  }
  return shape;
}

inline LoadingProgram parse_loading(const nlohmann::json& j, const Mesh& mesh,
                                    double length_unit,
                                    const std::filesystem::path& base_dir,
                                    const std::string& context) {
  expect_keys(j, context,
              {"label", "times", "pressure", "pressure_faces", "rotation",
               "axis_point", "axis_direction", "density", "temperature"});
  LoadingProgram lp;
  lp.length_unit = length_unit;
  if (j.contains("label")) lp.label = j.at("label").get<std::string>();
  lp.times = number_list(j.at("times"), context + ".times");
  if (j.contains("pressure"))
    lp.pressure = parse_signal(j.at("pressure"), context + ".pressure");
  if (j.contains("pressure_faces"))
    lp.pressure_shape = pressure_shape_from_faces(
        mesh, j.at("pressure_faces"), context + ".pressure_faces");
  if (j.contains("rotation"))
    lp.rotation_speed = parse_signal(j.at("rotation"), context + ".rotation");
  if (j.contains("axis_point"))
    lp.axis_point = vec3_at(j.at("axis_point"), context + ".axis_point");
  if (j.contains("axis_direction"))
    lp.axis_direction =
        vec3_at(j.at("axis_direction"), context + ".axis_direction");
  if (j.contains("density"))
    lp.density = number_at(j, "density", context);
  if (j.contains("temperature")) {
    const nlohmann::json& frames = j.at("temperature");
    if (!frames.is_array())
      throw ConfigError(context + ".temperature must be an array");
    for (const nlohmann::json& f : frames) {
      expect_keys(f, context + ".temperature entry", {"time", "uniform", "file"});
      TemperatureKeyframe key;
      key.time = number_at(f, "time", context + ".temperature entry");
      if (f.contains("uniform") == f.contains("file"))
        throw ConfigError(context +
                          ".temperature entry needs 'uniform' or 'file'");
      if (f.contains("uniform"))
        key.nodal = VecX::Constant(
            mesh.node_count(),
            number_at(f, "uniform", context + ".temperature entry"));
      else
        key.nodal = read_vector_csv(base_dir /
                                    f.at("file").get<std::string>());
      lp.temperature.push_back(std::move(key));
    }
  }
  lp.validate(mesh);
  return lp;
}

inline Mesh parse_mesh(const nlohmann::json& j,
                       const std::filesystem::path& base_dir) {
  expect_keys(j, "mesh", {"box", "file", "dirichlet"});
  if (j.contains("box") == j.contains("file"))
    throw ConfigError("mesh needs exactly one of 'box' or 'file'");
  Mesh mesh;
  if (j.contains("box")) {
    const nlohmann::json& b = j.at("box");
    expect_keys(b, "mesh.box",
                {"nx", "ny", "nz", "extent", "origin", "region_split_x"});
    const int nx = static_cast<int>(number_at(b, "nx", "mesh.box"));
    const int ny = static_cast<int>(number_at(b, "ny", "mesh.box"));
    const int nz = static_cast<int>(number_at(b, "nz", "mesh.box"));
    const Vec3 extent = vec3_at(b.at("extent"), "mesh.box.extent");
    const Vec3 origin = b.contains("origin")
                            ? vec3_at(b.at("origin"), "mesh.box.origin")
                            : Vec3(Vec3::Zero());
    std::optional<double> split;
    if (b.contains("region_split_x"))
      split = number_at(b, "region_split_x", "mesh.box");
    mesh = make_box_mesh(nx, ny, nz, extent, origin, split);
  } else {
    const std::filesystem::path path =
        base_dir / j.at("file").get<std::string>();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mesh file " + path.string());
    mesh = read_mesh(in);
  }
  if (j.contains("dirichlet"))
    set_dirichlet_face(mesh, j.at("dirichlet").get<std::string>());
  return mesh;
}

inline MaterialLaw parse_material(const nlohmann::json& j) {
  expect_keys(j, "material",
              {"type", "temperatures", "y1111", "y1122", "y1212", "alpha_th",
               "r0", "c", "d", "k", "m"});
  const std::string type = j.at("type").get<std::string>();
  std::vector<double> temps;
  if (j.contains("temperatures"))
    temps = number_list(j.at("temperatures"), "material.temperatures");
  ElasParams elas;
  elas.y1111 = parse_coefficient(j.at("y1111"), temps, "material.y1111");
  elas.y1122 = parse_coefficient(j.at("y1122"), temps, "material.y1122");
  elas.y1212 = parse_coefficient(j.at("y1212"), temps, "material.y1212");
  elas.alpha_th = j.contains("alpha_th")
                      ? parse_coefficient(j.at("alpha_th"), temps,
                                          "material.alpha_th")
                      : TemperatureTable(0.0);
  if (type == "elastic") {
    for (const char* key : {"r0", "c", "d", "k", "m"})
      if (j.contains(key))
        throw ConfigError("elastic material does not accept '" +
                          std::string(key) + "'");
    return MaterialLaw(elas);
  }
  if (type != "evp")
    throw ConfigError("material type must be 'elastic' or 'evp'");
  EvpParams evp;
  evp.elastic = elas;
  evp.r0 = parse_coefficient(j.at("r0"), temps, "material.r0");
  evp.c = parse_coefficient(j.at("c"), temps, "material.c");
  evp.d = parse_coefficient(j.at("d"), temps, "material.d");
  evp.k = parse_coefficient(j.at("k"), temps, "material.k");
  evp.m = parse_coefficient(j.at("m"), temps, "material.m");
  return MaterialLaw(evp);
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& doc,
                                   const std::filesystem::path& base_dir) {
  detail::expect_keys(doc, "configuration",
                      {"length_unit", "mesh", "material", "offline_loadings",
                       "online_loading", "tolerances", "enrichment",
                       "output"});
  PipelineConfig cfg;
  cfg.base_dir = base_dir;
  if (doc.contains("length_unit"))
    cfg.length_unit = detail::number_at(doc, "length_unit", "configuration");
  if (!(cfg.length_unit > 0.0))
    throw ConfigError("length_unit must be positive");
  cfg.mesh = detail::parse_mesh(doc.at("mesh"), base_dir);
  cfg.law = detail::parse_material(doc.at("material"));

  const nlohmann::json& offline = doc.at("offline_loadings");
  if (!offline.is_array() || offline.empty())
    throw ConfigError("offline_loadings must be a nonempty array");
  for (size_t i = 0; i < offline.size(); ++i)
    cfg.offline.push_back(detail::parse_loading(
        offline[i], cfg.mesh, cfg.length_unit, base_dir,
        "offline_loadings[" + std::to_string(i) + "]"));
  cfg.online = detail::parse_loading(doc.at("online_loading"), cfg.mesh,
                                     cfg.length_unit, base_dir,
                                     "online_loading");

  if (doc.contains("tolerances")) {
    const nlohmann::json& t = doc.at("tolerances");
    detail::expect_keys(t, "tolerances",
                        {"hf_newton", "rom_newton", "pod", "cubature", "gappy",
                         "calibration", "max_iterations"});
    ToleranceSet& ts = cfg.tolerances;
    if (t.contains("hf_newton"))
      ts.hf_newton = detail::number_at(t, "hf_newton", "tolerances");
    if (t.contains("rom_newton"))
      ts.rom_newton = detail::number_at(t, "rom_newton", "tolerances");
    if (t.contains("pod")) ts.pod = detail::number_at(t, "pod", "tolerances");
    if (t.contains("cubature"))
      ts.cubature = detail::number_at(t, "cubature", "tolerances");
    if (t.contains("gappy"))
      ts.gappy = detail::number_at(t, "gappy", "tolerances");
    if (t.contains("calibration"))
      ts.calibration = detail::number_at(t, "calibration", "tolerances");
    if (t.contains("max_iterations"))
      ts.max_iterations =
          static_cast<int>(detail::number_at(t, "max_iterations", "tolerances"));
    for (double v : {ts.hf_newton, ts.rom_newton, ts.pod, ts.cubature,
                     ts.gappy, ts.calibration})
      if (!(v > 0.0)) throw ConfigError("tolerances must be positive");
    if (ts.max_iterations < 1)
      throw ConfigError("max_iterations must be at least one");
  }

  // Default: monitor every dual quantity over the whole domain.
  for (int q = 0; q < static_cast<int>(dual_quantity_names().size()); ++q)
    cfg.enrichment.quantities.push_back(q);
  if (doc.contains("enrichment")) {
    const nlohmann::json& e = doc.at("enrichment");
    detail::expect_keys(e, "enrichment", {"threshold", "quantities", "regions"});
    if (e.contains("threshold")) {
      cfg.enrichment.threshold = detail::number_at(e, "threshold", "enrichment");
      if (!(cfg.enrichment.threshold > 0.0))
        throw ConfigError("enrichment threshold must be positive");
    }
    if (e.contains("quantities")) {
      cfg.enrichment.quantities.clear();
      const std::vector<std::string>& names = dual_quantity_names();
      for (const nlohmann::json& q : e.at("quantities")) {
        const std::string name = q.get<std::string>();
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end())
          throw ConfigError("unknown monitored quantity '" + name + "'");
        cfg.enrichment.quantities.push_back(
            static_cast<int>(it - names.begin()));
      }
      if (cfg.enrichment.quantities.empty())
        throw ConfigError("enrichment.quantities must not be empty");
    }
    if (e.contains("regions")) {
      cfg.enrichment.regions.clear();
      const std::vector<int> known = cfg.mesh.regions();
      for (const nlohmann::json& r : e.at("regions")) {
        if (!r.is_number_integer())
          throw ConfigError("enrichment.regions must hold integers");
        const int region = r.get<int>();
        if (region != -1 &&
            std::find(known.begin(), known.end(), region) == known.end())
          throw ConfigError("region " + std::to_string(region) +
                            " does not appear in the mesh");
        cfg.enrichment.regions.push_back(region);
      }
      if (cfg.enrichment.regions.empty())
        throw ConfigError("enrichment.regions must not be empty");
    }
  }

  if (doc.contains("output")) {
    const nlohmann::json& o = doc.at("output");
    detail::expect_keys(o, "output", {"directory", "vtk"});
    if (o.contains("directory"))
      cfg.output.directory = o.at("directory").get<std::string>();
    if (o.contains("vtk")) {
      if (!o.at("vtk").is_boolean())
        throw ConfigError("output.vtk must be a boolean");
      cfg.output.vtk = o.at("vtk").get<bool>();
    }
  }
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

// Output directory: the environment override wins, then relative paths
// anchor at the configuration file.
inline std::filesystem::path output_directory(const PipelineConfig& cfg) {
  if (const char* env = std::getenv("EVPROM_OUTPUT_DIR")) return env;
  if (cfg.output.directory.is_absolute()) return cfg.output.directory;
  return cfg.base_dir / cfg.output.directory;
}

}  // namespace evprom
