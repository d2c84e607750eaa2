// Copyright 2026 evprom developers
//
// SPDX-License-Identifier: MIT

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "evprom/config.hpp"

namespace evprom {

// Everything the offline phase produces: reference transients, the
// compressed model and the calibrated indicator.
struct OfflineArtifacts {
  std::vector<SnapshotArchive> archives;
  ReducedModel model;
  Calibration calibration;
};

inline OfflineArtifacts run_offline(const PipelineConfig& cfg,
                                    const IntegrationTable& table) {
  OfflineArtifacts art;
  for (const LoadingProgram& lp : cfg.offline)
    art.archives.push_back(
        run_transient(cfg.mesh, table, cfg.law, lp, cfg.tolerances.hf_options()));
  art.model =
      build_reduced_model(cfg.mesh, table, art.archives, cfg.tolerances.rom_build());
  art.calibration =
      calibrate(cfg.mesh, table, art.model, cfg.law, cfg.offline, art.archives,
                cfg.enrichment.regions, cfg.tolerances.calibration);
  return art;
}

inline void save_offline(const std::filesystem::path& dir,
                         const OfflineArtifacts& art) {
  nlohmann::json meta;
  meta["archives"] = art.archives.size();
  write_text_file(dir / "offline.json", meta.dump(2) + "\n");
  char name[64];
  for (size_t i = 0; i < art.archives.size(); ++i) {
    std::snprintf(name, sizeof(name), "archive_%04zu", i);
    save_archive(dir / name, art.archives[i]);
  }
  save_model(dir / "model", art.model);
  save_calibration(dir / "calibration.json", art.calibration);
}

inline OfflineArtifacts load_offline(const std::filesystem::path& dir,
                                     const IntegrationTable& table) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(dir / "offline.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad offline manifest in " + dir.string() + ": " + e.what());
  }
  OfflineArtifacts art;
  const size_t n = meta.at("archives").get<size_t>();
  char name[64];
  for (size_t i = 0; i < n; ++i) {
    std::snprintf(name, sizeof(name), "archive_%04zu", i);
    art.archives.push_back(load_archive(dir / name));
  }
  art.model = load_model(dir / "model", table);
  art.calibration = load_calibration(dir / "calibration.json");
  return art;
}

// One monitored (quantity, region) pair.
struct MonitorKey {
  int quantity = 0;
  int region = -1;
};

// Per-step monitoring row: one residual, indicator and reference error per
// monitor.  Errors are NaN when no reference transient is available; an
// enriched step reports zeros because it restarts from the reference.
struct MonitorRecord {
  int step = 0;
  double time = 0.0;
  bool enriched = false;
  int basis_size = 0;
  std::vector<double> residuals;
  std::vector<double> indicators;
  std::vector<double> errors;
};

struct EnrichmentLog {
  std::vector<MonitorKey> monitors;
  std::vector<MonitorRecord> records;
};

struct OnlineResult {
  RomSolution solution;
  EnrichmentLog log;
  ReducedModel model;  // final model, enriched when steps were injected
  int enrichment_count = 0;
};

namespace detail {

// Record standing in for an enriched step: the reference fields verbatim,
// with gappy coefficients fitted so later reconstructions stay consistent.
inline RomRecord reference_record(const ReducedModel& model, double time,
                                  const StepSolution& ref, const VecX& u_hat) {
  RomRecord rec;
  rec.time = time;
  rec.u_hat = u_hat;
  rec.iterations = 0;
  rec.enriched = true;
  for (const DualField& d : model.duals) {
    const VecX values = dual_quantity_values(ref.stress, ref.p, d.quantity);
    VecX samples(d.gappy.points.size());
    for (size_t i = 0; i < d.gappy.points.size(); ++i)
      samples[i] = values[d.gappy.points[i]];
    rec.dual_samples.push_back(samples);
    rec.dual_coeffs.push_back(gappy_coefficients(d.gappy, samples));
    rec.dual_fields.push_back(values);
  }
  return rec;
}

inline size_t dual_index_for(const ReducedModel& model, int quantity) {
  for (size_t d = 0; d < model.duals.size(); ++d)
    if (model.duals[d].quantity == quantity) return d;
  throw CalibrationError("model carries no dual for quantity " +
                         std::to_string(quantity));
}

}  // namespace detail

// Online transient with indicator-driven enrichment.  Whenever any
// monitored indicator exceeds the threshold, the reference step is added to
// the snapshot set, the model is rebuilt from scratch, and the transient
// continues from the reference solution at that step.  With enrichment off
// the model never changes; errors are still logged when a reference is
// given.
inline OnlineResult online_pipeline(const PipelineConfig& cfg,
                                    const IntegrationTable& table,
                                    const OfflineArtifacts& art,
                                    const SnapshotArchive* reference,
                                    bool enrich) {
  const LoadingProgram& lp = cfg.online;
  lp.validate(cfg.mesh);
  if (enrich && reference == nullptr)
    throw ConfigError("enrichment needs a reference transient");
  if (reference != nullptr &&
      (reference->steps.size() != lp.times.size() ||
       !std::equal(lp.times.begin(), lp.times.end(), reference->times.begin())))
    throw ConfigError("reference does not match the online time grid");

  OnlineResult out;
  for (int q : cfg.enrichment.quantities)
    for (int r : cfg.enrichment.regions)
      out.log.monitors.push_back({q, r});

  ReducedModel model = art.model;
  SnapshotArchive extra;
  extra.label = "enrichment";
  std::vector<MaterialState> states(model.eval_count());
  VecX u_hat = VecX::Zero(model.primal.size());

  for (size_t s = 0; s < lp.times.size(); ++s) {
    const double t = lp.times[s];
    const double dt = s == 0 ? lp.times[1] - lp.times[0] : t - lp.times[s - 1];
    const VecX f_red =
        project_external_force(cfg.mesh, table, model.primal.modes, lp, t);
    const VecX temp = lp.temperature_at(t, cfg.mesh.node_count());
    const ReducedStep step =
        rom_solve_step(model, table, cfg.law, f_red, temp, dt, states, u_hat,
                       cfg.tolerances.rom_options());
    RomRecord rec = make_rom_record(model, t, step);

    MonitorRecord mon;
    mon.step = static_cast<int>(s);
    mon.time = t;
    mon.basis_size = model.primal.size();
    bool trigger = false;
    for (const MonitorKey& key : out.log.monitors) {
      const CalibrationEntry& e =
          art.calibration.entry(key.quantity, key.region);
      const ErrorValue res = record_residual(table, model, rec, key.quantity,
                                             key.region, e.fallback_residual);
      const double ind = res.defined ? gpr_indicator(e.model, res.value) : 0.0;
      mon.residuals.push_back(res.defined ? res.value : 0.0);
      mon.indicators.push_back(ind);
      if (reference != nullptr) {
        const StepSolution& ref = reference->steps[s];
        const VecX ref_field =
            dual_quantity_values(ref.stress, ref.p, key.quantity);
        const size_t di = detail::dual_index_for(model, key.quantity);
        const ErrorValue err = relative_error(
            table, ref_field, rec.dual_fields[di], key.region, e.fallback_error);
        mon.errors.push_back(err.defined ? err.value : 0.0);
      } else {
        mon.errors.push_back(std::numeric_limits<double>::quiet_NaN());
      }
      if (ind > cfg.enrichment.threshold) trigger = true;
    }

    if (trigger && enrich) {
      const StepSolution& ref = reference->steps[s];
      out.enrichment_count += 1;
      extra.times.push_back(t);
      extra.steps.push_back(ref);
      std::vector<SnapshotArchive> all = art.archives;
      all.push_back(extra);
      model = build_reduced_model(cfg.mesh, table, all, cfg.tolerances.rom_build());
      u_hat = pod_project(model.primal, ref.u, [&table](const VecX& x, const VecX& y) {
        return l2_product(table, x, y);
      });
      states.resize(model.eval_count());
      for (int j = 0; j < model.eval_count(); ++j)
        states[j] = ref.states[model.eval_points[j]];
      rec = detail::reference_record(model, t, ref, u_hat);
      mon.enriched = true;
      mon.basis_size = model.primal.size();
      std::fill(mon.residuals.begin(), mon.residuals.end(), 0.0);
      std::fill(mon.indicators.begin(), mon.indicators.end(), 0.0);
      std::fill(mon.errors.begin(), mon.errors.end(), 0.0);
    } else {
      u_hat = step.u_hat;
      states = step.states;
    }
    out.solution.records.push_back(std::move(rec));
    out.log.records.push_back(std::move(mon));
  }
  out.model = std::move(model);
  return out;
}

// Persisted online run: monitors.json names the log columns, log.csv holds
// one row per step, and each step stores its reduced coordinates and the
// reconstructed dual fields.
inline void save_online(const std::filesystem::path& dir,
                        const PipelineConfig& cfg,
                        const IntegrationTable& table,
                        const OnlineResult& result) {
  nlohmann::json meta;
  meta["steps"] = result.solution.records.size();
  meta["enrichments"] = result.enrichment_count;
  nlohmann::json monitors = nlohmann::json::array();
  for (const MonitorKey& key : result.log.monitors) {
    nlohmann::json m;
    m["quantity"] = dual_quantity_names()[key.quantity];
    m["region"] = key.region;
    monitors.push_back(m);
  }
  meta["monitors"] = monitors;
  write_text_file(dir / "monitors.json", meta.dump(2) + "\n");

  const size_t nm = result.log.monitors.size();
  MatX log(result.log.records.size(), 4 + 3 * nm);
  for (size_t i = 0; i < result.log.records.size(); ++i) {
    const MonitorRecord& r = result.log.records[i];
    log(i, 0) = r.step;
    log(i, 1) = r.time;
    log(i, 2) = r.enriched ? 1.0 : 0.0;
    log(i, 3) = r.basis_size;
    for (size_t m = 0; m < nm; ++m) {
      log(i, 4 + 3 * m) = r.residuals[m];
      log(i, 5 + 3 * m) = r.indicators[m];
      log(i, 6 + 3 * m) = r.errors[m];
    }
  }
  write_matrix_csv(dir / "log.csv", log);

  char name[64];
  for (size_t s = 0; s < result.solution.records.size(); ++s) {
    const RomRecord& rec = result.solution.records[s];
    std::snprintf(name, sizeof(name), "u_hat_%04zu.csv", s);
    write_vector_csv(dir / name, rec.u_hat);
    for (size_t d = 0; d < result.model.duals.size(); ++d) {
      if (static_cast<int>(rec.dual_fields.size()) <= static_cast<int>(d)) break;
      std::snprintf(name, sizeof(name), "field_%s_%04zu.csv",
                    result.model.duals[d].name.c_str(), s);
      write_vector_csv(dir / name, rec.dual_fields[d]);
    }
    if (cfg.output.vtk) {
      std::snprintf(name, sizeof(name), "step_%04zu.vtk", s);
      const VecX u = result.model.primal.modes * rec.u_hat;
      std::vector<std::pair<std::string, VecX>> fields;
      for (size_t d = 0; d < result.model.duals.size(); ++d)
        fields.emplace_back(result.model.duals[d].name, rec.dual_fields[d]);
      write_vtk(dir / name, cfg.mesh, table, u, fields);
    }
  }
}

// Persisted reference transient plus optional VTK per step.
inline void export_archive_vtk(const std::filesystem::path& dir,
                               const Mesh& mesh, const IntegrationTable& table,
                               const SnapshotArchive& archive) {
  char name[64];
  for (size_t s = 0; s < archive.steps.size(); ++s) {
    const StepSolution& step = archive.steps[s];
    std::vector<std::pair<std::string, VecX>> fields;
    const std::vector<std::string>& names = dual_quantity_names();
    for (size_t q = 0; q < names.size(); ++q)
      fields.emplace_back(names[q],
                          dual_quantity_values(step.stress, step.p,
                                               static_cast<int>(q)));
    std::snprintf(name, sizeof(name), "step_%04zu.vtk", s);
    write_vtk(dir / name, mesh, table, step.u, fields);
  }
}

}  // namespace evprom
