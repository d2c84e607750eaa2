// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evprom/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace evprom;

// Every failure mode keeps its own exit code so scripts can react.
int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << "\n";
    return 2;
  } catch (const BehaviorError& e) {
    std::cerr << "behavior error: " << e.what() << "\n";
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const PodError& e) {
    std::cerr << "compression error: " << e.what() << "\n";
    return 4;
  } catch (const EcmError& e) {
    std::cerr << "cubature error: " << e.what() << "\n";
    return 5;
  } catch (const GappyError& e) {
    std::cerr << "reconstruction error: " << e.what() << "\n";
    return 6;
  } catch (const CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << "\n";
    return 7;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 9;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

fs::path resolve_out(const PipelineConfig& cfg, const std::string& override_dir,
                     const std::string& fallback) {
  if (!override_dir.empty()) return override_dir;
  return output_directory(cfg) / fallback;
}

void cmd_offline(const std::string& config_path, const std::string& out_dir) {
  const PipelineConfig cfg = load_config(config_path);
  const IntegrationTable table = build_integration_table(cfg.mesh);
  const OfflineArtifacts art = run_offline(cfg, table);
  for (const SnapshotArchive& a : art.archives)
    std::cout << "archive " << a.label << ": " << a.steps.size() << " steps\n";
  std::cout << "primal basis: " << art.model.primal.size() << " modes\n";
  std::cout << "reduced quadrature: " << art.model.quadrature.size()
            << " of " << table.size() << " points\n";
  int fitted = 0;
  for (const CalibrationEntry& e : art.calibration.entries)
    if (!e.inputs.empty()) ++fitted;
  std::cout << "calibration: " << art.calibration.entries.size()
            << " entries, " << fitted << " with data\n";
  const fs::path dir = resolve_out(cfg, out_dir, "offline");
  save_offline(dir, art);
  std::cout << "saved offline artifacts to " << dir.string() << "\n";
}

void cmd_hf(const std::string& config_path, const std::string& label,
            const std::string& out_dir) {
  const PipelineConfig cfg = load_config(config_path);
  const IntegrationTable table = build_integration_table(cfg.mesh);
  const LoadingProgram* lp = &cfg.online;
  if (!label.empty() && label != cfg.online.label) {
    lp = nullptr;
    for (const LoadingProgram& cand : cfg.offline)
      if (cand.label == label) lp = &cand;
    if (lp == nullptr)
      throw ConfigError("no loading carries label '" + label + "'");
  }
  const SnapshotArchive archive =
      run_transient(cfg.mesh, table, cfg.law, *lp, cfg.tolerances.hf_options());
  std::cout << "transient " << archive.label << ": " << archive.steps.size()
            << " steps\n";
  const fs::path dir = resolve_out(cfg, out_dir, "hf_" + archive.label);
  save_archive(dir, archive);
  if (cfg.output.vtk) export_archive_vtk(dir, cfg.mesh, table, archive);
  std::cout << "saved transient to " << dir.string() << "\n";
}

void cmd_online(const std::string& config_path, const std::string& out_dir,
                const std::string& reference_dir, bool no_enrich) {
  const PipelineConfig cfg = load_config(config_path);
  const IntegrationTable table = build_integration_table(cfg.mesh);
  const OfflineArtifacts art =
      load_offline(output_directory(cfg) / "offline", table);

  SnapshotArchive reference;
  bool have_reference = false;
  fs::path ref_dir = reference_dir;
  if (ref_dir.empty()) {
    const fs::path candidate =
        output_directory(cfg) / ("hf_" + cfg.online.label);
    if (fs::exists(candidate / "archive.json")) ref_dir = candidate;
  }
  if (!ref_dir.empty()) {
    reference = load_archive(ref_dir);
    have_reference = true;
  }
  if (!no_enrich && !have_reference)
    throw ConfigError(
        "enrichment needs a reference transient: run the hf command first or "
        "pass --reference (or disable with --no-enrich)");

  const OnlineResult result =
      online_pipeline(cfg, table, art, have_reference ? &reference : nullptr,
                      !no_enrich);
  for (const MonitorRecord& r : result.log.records)
    if (r.enriched)
      std::cout << "step " << r.step << " (t=" << r.time
                << "): enriched, basis now " << r.basis_size << "\n";
  std::cout << "online " << cfg.online.label << ": "
            << result.solution.records.size() << " steps, "
            << result.enrichment_count << " enrichments, final basis "
            << result.model.primal.size() << "\n";
  const fs::path dir =
      resolve_out(cfg, out_dir, no_enrich ? "online_plain" : "online");
  save_online(dir, cfg, table, result);
  std::cout << "saved online results to " << dir.string() << "\n";
}

void cmd_export(const std::string& config_path, const std::string& archive_dir,
                const std::string& out_dir) {
  const PipelineConfig cfg = load_config(config_path);
  const IntegrationTable table = build_integration_table(cfg.mesh);
  const SnapshotArchive archive = load_archive(archive_dir);
  const fs::path dir = resolve_out(cfg, out_dir, "vtk_" + archive.label);
  export_archive_vtk(dir, cfg.mesh, table, archive);
  std::cout << "wrote " << archive.steps.size() << " vtk files to "
            << dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "evprom: transient elastoviscoplastic solver with snapshot "
      "compression, hyperreduction and error-driven enrichment"};
  app.require_subcommand(1);

  std::string config_path, out_dir, label, reference_dir, archive_dir;
  bool no_enrich = false;

  CLI::App* offline = app.add_subcommand(
      "offline", "run the reference transients, compress, calibrate");
  offline->add_option("config", config_path, "configuration file")->required();
  offline->add_option("--out", out_dir, "output directory override");

  CLI::App* hf = app.add_subcommand(
      "hf", "run one full-order transient and archive it");
  hf->add_option("config", config_path, "configuration file")->required();
  hf->add_option("--loading", label,
                 "loading label (default: the online loading)");
  hf->add_option("--out", out_dir, "output directory override");

  CLI::App* online = app.add_subcommand(
      "online", "run the reduced online transient with enrichment");
  online->add_option("config", config_path, "configuration file")->required();
  online->add_option("--reference", reference_dir,
                     "archived reference transient for errors and enrichment");
  online->add_flag("--no-enrich", no_enrich, "monitor only, never enrich");
  online->add_option("--out", out_dir, "output directory override");

  CLI::App* exporter = app.add_subcommand(
      "export", "write vtk files for an archived transient");
  exporter->add_option("config", config_path, "configuration file")->required();
  exporter->add_option("archive", archive_dir, "archive directory")->required();
  exporter->add_option("--out", out_dir, "output directory override");

  CLI11_PARSE(app, argc, argv);

  if (app.got_subcommand(offline))
    return run_guarded([&] { cmd_offline(config_path, out_dir); });
  if (app.got_subcommand(hf))
    return run_guarded([&] { cmd_hf(config_path, label, out_dir); });
  if (app.got_subcommand(online))
    return run_guarded(
        [&] { cmd_online(config_path, out_dir, reference_dir, no_enrich); });
  return run_guarded([&] { cmd_export(config_path, archive_dir, out_dir); });
}
