// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evprom/error_indicator.hpp"
#include "evprom/rom.hpp"

namespace evprom {

// All text artifacts use 17 significant digits so a reload (and a rerun)
// reproduces the exact same bytes.
inline std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Comma-separated rows, no header; an empty matrix writes an empty file.
inline void write_matrix_csv(const std::filesystem::path& path, const MatX& m) {
  std::string text;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) text += ',';
      text += format_full(m(i, j));
    }
    text += '\n';
  }
  write_text_file(path, text);
}

inline MatX read_matrix_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw IoError("bad numeric cell in " + path.string() + ": " + cell);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw IoError("ragged csv rows in " + path.string());
    rows.push_back(std::move(row));
  }
  MatX m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline void write_vector_csv(const std::filesystem::path& path, const VecX& v) {
  write_matrix_csv(path, MatX(v));
}

inline VecX read_vector_csv(const std::filesystem::path& path) {
  const MatX m = read_matrix_csv(path);
  if (m.size() == 0) return VecX();
  if (m.cols() != 1) throw IoError("expected one column in " + path.string());
  return m.col(0);
}

namespace detail {

// Symmetric tensors travel as 6 plain components (xx,yy,zz,xy,yz,zx).
inline void pack_symmetric(const Mat3& t, MatX& m, Eigen::Index row, int col) {
  m(row, col + 0) = t(0, 0);
  m(row, col + 1) = t(1, 1);
  m(row, col + 2) = t(2, 2);
  m(row, col + 3) = t(0, 1);
  m(row, col + 4) = t(1, 2);
  m(row, col + 5) = t(2, 0);
}

inline Mat3 unpack_symmetric(const MatX& m, Eigen::Index row, int col) {
  Mat3 t;
  t << m(row, col + 0), m(row, col + 3), m(row, col + 5),
      m(row, col + 3), m(row, col + 1), m(row, col + 4),
      m(row, col + 5), m(row, col + 4), m(row, col + 2);
  return t;
}

}  // namespace detail

inline MatX states_to_matrix(const std::vector<MaterialState>& states) {
  MatX m(states.size(), 13);
  for (size_t k = 0; k < states.size(); ++k) {
    detail::pack_symmetric(states[k].eps_p, m, k, 0);
    detail::pack_symmetric(states[k].alpha, m, k, 6);
    m(k, 12) = states[k].p;
  }
  return m;
}

inline std::vector<MaterialState> states_from_matrix(const MatX& m) {
  if (m.size() > 0 && m.cols() != 13)
    throw IoError("state matrix needs 13 columns");
  std::vector<MaterialState> states(m.rows());
  for (Eigen::Index k = 0; k < m.rows(); ++k) {
    states[k].eps_p = detail::unpack_symmetric(m, k, 0);
    states[k].alpha = detail::unpack_symmetric(m, k, 6);
    states[k].p = m(k, 12);
  }
  return states;
}

// Snapshot archive directory: archive.json plus one matrix per field per
// step.
inline void save_archive(const std::filesystem::path& dir,
                         const SnapshotArchive& archive) {
  nlohmann::json meta;
  meta["label"] = archive.label;
  meta["times"] = archive.times;
  std::vector<int> iterations;
  for (const StepSolution& s : archive.steps) iterations.push_back(s.iterations);
  meta["iterations"] = iterations;
  meta["steps"] = archive.steps.size();
  write_text_file(dir / "archive.json", meta.dump(2) + "\n");
  char name[64];
  for (size_t s = 0; s < archive.steps.size(); ++s) {
    const StepSolution& step = archive.steps[s];
    std::snprintf(name, sizeof(name), "u_%04zu.csv", s);
    write_vector_csv(dir / name, step.u);
    std::snprintf(name, sizeof(name), "stress_%04zu.csv", s);
    write_matrix_csv(dir / name, step.stress);
    std::snprintf(name, sizeof(name), "p_%04zu.csv", s);
    write_vector_csv(dir / name, step.p);
    std::snprintf(name, sizeof(name), "states_%04zu.csv", s);
    write_matrix_csv(dir / name, states_to_matrix(step.states));
  }
}

inline SnapshotArchive load_archive(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(dir / "archive.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad archive manifest in " + dir.string() + ": " + e.what());
  }
  SnapshotArchive archive;
  archive.label = meta.at("label").get<std::string>();
  archive.times = meta.at("times").get<std::vector<double>>();
  const auto iterations = meta.at("iterations").get<std::vector<int>>();
  const size_t steps = meta.at("steps").get<size_t>();
  char name[64];
  for (size_t s = 0; s < steps; ++s) {
    StepSolution step;
    step.time = archive.times.at(s);
    step.iterations = iterations.at(s);
    std::snprintf(name, sizeof(name), "u_%04zu.csv", s);
    step.u = read_vector_csv(dir / name);
    std::snprintf(name, sizeof(name), "stress_%04zu.csv", s);
    step.stress = read_matrix_csv(dir / name);
    std::snprintf(name, sizeof(name), "p_%04zu.csv", s);
    step.p = read_vector_csv(dir / name);
    std::snprintf(name, sizeof(name), "states_%04zu.csv", s);
    step.states = states_from_matrix(read_matrix_csv(dir / name));
    archive.steps.push_back(std::move(step));
  }
  return archive;
}

// Reduced model directory: model.json for the structure, CSV matrices for
// the bulk data.  Sampling matrices are rebuilt on load.
inline void save_model(const std::filesystem::path& dir,
                       const ReducedModel& model) {
  nlohmann::json meta;
  meta["primal_modes"] = model.primal.size();
  meta["primal_degenerate"] = model.primal.degenerate;
  meta["primal_total_energy"] = model.primal.total_energy;
  nlohmann::json duals = nlohmann::json::array();
  for (const DualField& d : model.duals) {
    nlohmann::json entry;
    entry["name"] = d.name;
    entry["quantity"] = d.quantity;
    entry["modes"] = d.gappy.basis.size();
    entry["degenerate"] = d.gappy.basis.degenerate;
    entry["total_energy"] = d.gappy.basis.total_energy;
    duals.push_back(entry);
  }
  meta["duals"] = duals;
  write_text_file(dir / "model.json", meta.dump(2) + "\n");

  write_matrix_csv(dir / "primal_modes.csv", model.primal.modes);
  write_vector_csv(dir / "primal_eigenvalues.csv", model.primal.eigenvalues);
  MatX quad(model.quadrature.size(), 2);
  for (int i = 0; i < model.quadrature.size(); ++i) {
    quad(i, 0) = model.quadrature.indices[i];
    quad(i, 1) = model.quadrature.weights[i];
  }
  write_matrix_csv(dir / "quadrature.csv", quad);
  for (const DualField& d : model.duals) {
    write_matrix_csv(dir / ("dual_" + d.name + "_modes.csv"),
                     d.gappy.basis.modes);
    write_vector_csv(dir / ("dual_" + d.name + "_eigenvalues.csv"),
                     d.gappy.basis.eigenvalues);
    VecX points(d.gappy.points.size());
    for (size_t i = 0; i < d.gappy.points.size(); ++i)
      points[i] = d.gappy.points[i];
    write_vector_csv(dir / ("dual_" + d.name + "_points.csv"), points);
  }
}

inline ReducedModel load_model(const std::filesystem::path& dir,
                               const IntegrationTable& table) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(dir / "model.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad model manifest in " + dir.string() + ": " + e.what());
  }
  ReducedBasis primal;
  primal.modes = read_matrix_csv(dir / "primal_modes.csv");
  primal.eigenvalues = read_vector_csv(dir / "primal_eigenvalues.csv");
  primal.degenerate = meta.at("primal_degenerate").get<bool>();
  primal.total_energy = meta.at("primal_total_energy").get<double>();
  if (primal.size() != meta.at("primal_modes").get<int>())
    throw IoError("primal mode count disagrees with manifest");

  const MatX quad = read_matrix_csv(dir / "quadrature.csv");
  ReducedQuadrature rq;
  rq.weights.resize(quad.rows());
  for (Eigen::Index i = 0; i < quad.rows(); ++i) {
    rq.indices.push_back(static_cast<int>(quad(i, 0)));
    rq.weights[i] = quad(i, 1);
  }

  std::vector<DualField> duals;
  for (const nlohmann::json& entry : meta.at("duals")) {
    DualField d;
    d.name = entry.at("name").get<std::string>();
    d.quantity = entry.at("quantity").get<int>();
    ReducedBasis basis;
    basis.modes = read_matrix_csv(dir / ("dual_" + d.name + "_modes.csv"));
    if (basis.modes.size() == 0) basis.modes.resize(table.size(), 0);
    basis.eigenvalues =
        read_vector_csv(dir / ("dual_" + d.name + "_eigenvalues.csv"));
    basis.degenerate = entry.at("degenerate").get<bool>();
    basis.total_energy = entry.at("total_energy").get<double>();
    if (basis.size() != entry.at("modes").get<int>())
      throw IoError("dual mode count disagrees with manifest");
    const VecX points =
        read_vector_csv(dir / ("dual_" + d.name + "_points.csv"));
    std::vector<int> include(points.size());
    for (Eigen::Index i = 0; i < points.size(); ++i)
      include[i] = static_cast<int>(points[i]);
    d.gappy = build_gappy(basis, include);
    duals.push_back(std::move(d));
  }
  return assemble_reduced_model(table, std::move(primal), std::move(rq),
                                std::move(duals));
}

// Calibration as one json document: pairs, fallbacks and fitted kernels.
// Kernel factorizations are rebuilt on load from the stored data.
inline void save_calibration(const std::filesystem::path& path,
                             const Calibration& cal) {
  nlohmann::json doc;
  doc["regions"] = cal.regions;
  nlohmann::json entries = nlohmann::json::array();
  for (const CalibrationEntry& e : cal.entries) {
    nlohmann::json j;
    j["quantity"] = e.quantity;
    j["region"] = e.region;
    j["inputs"] = e.inputs;
    j["targets"] = e.targets;
    j["fallback_residual"] = e.fallback_residual;
    j["fallback_error"] = e.fallback_error;
    j["degenerate"] = e.model.degenerate;
    j["target_mean"] = e.model.target_mean;
    j["prior_std"] = e.model.prior_std;
    j["length"] = e.model.length;
    j["signal"] = e.model.signal;
    j["noise"] = e.model.noise;
    entries.push_back(j);
  }
  doc["entries"] = entries;
  write_text_file(path, doc.dump(2) + "\n");
}

inline Calibration load_calibration(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad calibration file " + path.string() + ": " + e.what());
  }
  Calibration cal;
  cal.regions = doc.at("regions").get<std::vector<int>>();
  for (const nlohmann::json& j : doc.at("entries")) {
    CalibrationEntry e;
    e.quantity = j.at("quantity").get<int>();
    e.region = j.at("region").get<int>();
    e.inputs = j.at("inputs").get<std::vector<double>>();
    e.targets = j.at("targets").get<std::vector<double>>();
    e.fallback_residual = j.at("fallback_residual").get<double>();
    e.fallback_error = j.at("fallback_error").get<double>();
    GprModel& m = e.model;
    const int n = static_cast<int>(e.inputs.size());
    m.inputs.resize(n);
    m.targets.resize(n);
    for (int i = 0; i < n; ++i) {
      m.inputs[i] = e.inputs[i];
      m.targets[i] = e.targets[i];
    }
    m.degenerate = j.at("degenerate").get<bool>();
    m.target_mean = j.at("target_mean").get<double>();
    m.prior_std = j.at("prior_std").get<double>();
    m.length = j.at("length").get<double>();
    m.signal = j.at("signal").get<double>();
    m.noise = j.at("noise").get<double>();
    if (!m.degenerate) {
      const VecX yc = m.targets.array() - m.target_mean;
      detail::gpr_log_likelihood(m.inputs, yc, m.length, m.signal, m.noise,
                                 &m.chol, &m.alpha);
    }
    cal.entries.push_back(std::move(e));
  }
  return cal;
}

// Legacy ASCII VTK unstructured grid: nodal displacement vectors plus
// element-averaged scalars for the integration-point fields.
inline void write_vtk(
    const std::filesystem::path& path, const Mesh& mesh,
    const IntegrationTable& table, const VecX& u,
    const std::vector<std::pair<std::string, VecX>>& ip_fields) {
  std::string text;
  text += "# vtk DataFile Version 3.0\n";
  text += "evprom fields\n";
  text += "ASCII\n";
  text += "DATASET UNSTRUCTURED_GRID\n";
  text += "POINTS " + std::to_string(mesh.node_count()) + " double\n";
  for (const Vec3& x : mesh.nodes)
    text += format_full(x[0]) + " " + format_full(x[1]) + " " +
            format_full(x[2]) + "\n";

  int list_size = 0;
  for (const Element& e : mesh.elements)
    list_size += 1 + (e.kind == ElementKind::hex8 ? 8 : 4);
  text += "CELLS " + std::to_string(mesh.elements.size()) + " " +
          std::to_string(list_size) + "\n";
  for (const Element& e : mesh.elements) {
    const int n = e.kind == ElementKind::hex8 ? 8 : 4;
    text += std::to_string(n);
    for (int i = 0; i < n; ++i) text += " " + std::to_string(e.nodes[i]);
    text += "\n";
  }
  text += "CELL_TYPES " + std::to_string(mesh.elements.size()) + "\n";
  for (const Element& e : mesh.elements)
    text += e.kind == ElementKind::hex8 ? "12\n" : "10\n";

  if (u.size() == 3 * mesh.node_count()) {
    text += "POINT_DATA " + std::to_string(mesh.node_count()) + "\n";
    text += "VECTORS displacement double\n";
    for (int n = 0; n < mesh.node_count(); ++n)
      text += format_full(u[3 * n]) + " " + format_full(u[3 * n + 1]) + " " +
              format_full(u[3 * n + 2]) + "\n";
  }
  if (!ip_fields.empty()) {
    text += "CELL_DATA " + std::to_string(mesh.elements.size()) + "\n";
    for (const auto& [name, values] : ip_fields) {
      if (values.size() != table.size())
        throw IoError("ip field " + name + " does not match the table");
      text += "SCALARS " + name + " double 1\n";
      text += "LOOKUP_TABLE default\n";
      for (size_t e = 0; e < mesh.elements.size(); ++e) {
        const int first = table.element_first[e];
        const int last = e + 1 < mesh.elements.size()
                             ? table.element_first[e + 1]
                             : table.size();
        double mean = 0.0;
        for (int k = first; k < last; ++k) mean += values[k];
        text += format_full(mean / (last - first)) + "\n";
      }
    }
  }
  write_text_file(path, text);
}

}  // namespace evprom
