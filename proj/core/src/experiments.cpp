#include "qwlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "qwlab/artifacts.hpp"
#include "qwlab/version.hpp"

namespace qwlab {

namespace {

LabState make_lab(const ExperimentConfig& cfg) {
  return LabState(cfg.fiber, cfg.source, cfg.detector);
}

TmMeasureOptions tm_options(const ExperimentConfig& cfg) {
  TmMeasureOptions opts;
  opts.phase_steps = cfg.tm_phase_steps;
  opts.reference = cfg.tm_reference == "external" ? ReferenceKind::External
                                                  : ReferenceKind::Internal;
  opts.reference_mode = cfg.tm_reference_mode;
  opts.exposure_s = cfg.tm_exposure_s;
  opts.flux = cfg.tm_flux;
  return opts;
}

// the matrix driving inverse design: either the interferometric
// reconstruction (the honest path) or the ground truth for diagnostics
TransmissionMatrix control_matrix(LabState& lab, const ExperimentConfig& cfg,
                                  double* fidelity_out) {
  if (cfg.control_tm == "oracle") {
    if (fidelity_out) *fidelity_out = 1.0;
    return lab.true_transmission_matrix();
  }
  ReconstructedTM recon = measure_tm(lab, tm_options(cfg));
  if (fidelity_out) {
    *fidelity_out = tm_fidelity(recon, lab.true_transmission_matrix());
  }
  return recon.tm;
}

RunManifest base_manifest(const ExperimentConfig& cfg, const char* command) {
  RunManifest m;
  m.command = command;
  m.version = kVersionString;
  m.timestamp = manifest_timestamp();
  m.seed = cfg.master_seed;
  m.config = cfg.resolved;
  return m;
}

void write_json(const std::string& dir, const std::string& name,
                const nlohmann::ordered_json& j, RunManifest& m) {
  std::string path = dir + "/" + name;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << j.dump(2) << '\n';
  os.close();
  add_manifest_file(m, dir, name);
}

// camera frames are grid_w x grid_h but only n_out modes are monitored;
// pad the tail so the PGM is rectangular
RVec pad_to_grid(const IntensityImage& img) {
  RVec padded = RVec::Zero(static_cast<long>(img.grid_w) * img.grid_h);
  padded.head(img.counts.size()) = img.counts;
  return padded;
}

void write_image(const std::string& dir, const std::string& name,
                 const IntensityImage& img, RunManifest& m) {
  write_pgm16(dir + "/" + name, pad_to_grid(img), img.grid_w, img.grid_h);
  add_manifest_file(m, dir, name);
  add_manifest_file(m, dir, name + ".json");
}

CVec basis_vector(int size, int index) {
  CVec v = CVec::Zero(size);
  v[index] = Cx(1.0, 0.0);
  return v;
}

std::vector<int> scan_window(int center, int span, int n_out) {
  int half = span / 2;
  int lo = std::max(0, center - half);
  int hi = std::min(n_out - 1, center + half);
  std::vector<int> w;
  for (int i = lo; i <= hi; ++i) w.push_back(i);
  return w;
}

}  // namespace

MeasureTmResult run_measure_tm(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  LabState lab = make_lab(cfg);

  MeasureTmResult result;
  result.recon = measure_tm(lab, tm_options(cfg));
  result.fidelity_vs_oracle =
      tm_fidelity(result.recon, lab.true_transmission_matrix());
  result.qwtm_path = cfg.out_dir + "/tm.qwtm";
  save_qwtm(result.qwtm_path, result.recon.tm);

  RunManifest m = base_manifest(cfg, "measure-tm");
  add_manifest_file(m, cfg.out_dir, "tm.qwtm");

  nlohmann::ordered_json report;
  report["n_out"] = result.recon.tm.n_out();
  report["n_in_h"] = result.recon.tm.n_in_h;
  report["n_in_v"] = result.recon.tm.n_in_v();
  report["phase_steps"] = result.recon.phase_steps;
  report["reference"] = cfg.tm_reference;
  report["reference_mode"] = result.recon.reference_mode;
  report["probed_columns"] = result.recon.probed_columns.size();
  report["unreliable_rows"] = result.recon.unreliable_count();
  report["fidelity_vs_oracle"] = result.fidelity_vs_oracle;
  write_json(cfg.out_dir, "tm_report.json", report, m);

  write_manifest(cfg.out_dir, m);
  return result;
}

TtmMatrixResult run_ttm_matrix(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  LabState lab = make_lab(cfg);

  std::vector<std::pair<int, int>> pairs;
  for (int x : cfg.f1_positions)
    for (int y : cfg.f2_positions) pairs.emplace_back(x, y);

  TtmMatrixResult result;
  const int n_inputs =
      static_cast<int>(cfg.ttm_inputs_h.size() * cfg.ttm_inputs_v.size());
  result.contrast = RMat::Constant(n_inputs, static_cast<int>(pairs.size()),
                                   std::numeric_limits<double>::quiet_NaN());
  result.sigma = result.contrast;
  result.valid.assign(n_inputs, std::vector<bool>(pairs.size(), false));
  for (const auto& [x, y] : pairs) {
    result.pair_labels.push_back("pair_" + std::to_string(x) + "_" +
                                 std::to_string(y));
  }

  RMat counts_near(n_inputs, static_cast<int>(pairs.size()));
  RMat counts_far(n_inputs, static_cast<int>(pairs.size()));

  int row = 0;
  for (int ih : cfg.ttm_inputs_h) {
    for (int iv : cfg.ttm_inputs_v) {
      result.input_labels.push_back("h" + std::to_string(ih) + "v" +
                                    std::to_string(iv));
      lab.set_input_field(SlmHalf::H, basis_vector(cfg.fiber.n_in_h, ih));
      lab.set_input_field(SlmHalf::V, basis_vector(cfg.fiber.n_in_v, iv));
      for (std::size_t c = 0; c < pairs.size(); ++c) {
        lab.set_delay(cfg.delta_near_mm);
        CoincidenceResult near = lab.count_coincidences(
            pairs[c].first, pairs[c].second, cfg.matrix_duration_s);
        lab.set_delay(cfg.delta_far_mm);
        CoincidenceResult far = lab.count_coincidences(
            pairs[c].first, pairs[c].second, cfg.matrix_duration_s);
        counts_near(row, c) = near.counts;
        counts_far(row, c) = far.counts;
        try {
          result.contrast(row, c) = nonclassical_contrast(near.rate, far.rate);
          result.valid[row][c] = true;
        } catch (const std::domain_error&) {
          // far rate vanished; the entry stays NaN / invalid
        }
        result.sigma(row, c) = contrast_sigma(near.counts, far.counts);
      }
      ++row;
    }
  }

  // speckle frames for the first basis input pair
  lab.set_input_field(SlmHalf::H,
                      basis_vector(cfg.fiber.n_in_h, cfg.ttm_inputs_h.front()));
  lab.set_input_field(SlmHalf::V,
                      basis_vector(cfg.fiber.n_in_v, cfg.ttm_inputs_v.front()));
  IntensityImage speckle_both =
      lab.intensity_image(PhotonSelect::Both, cfg.camera_exposure_s);
  result.grain_count = speckle_grain_count(speckle_both);
  result.speckle_contrast_both = speckle_contrast(speckle_both);

  RunManifest m = base_manifest(cfg, "ttm-matrix");

  auto write_block = [&](const std::string& name, const RMat& block) {
    std::vector<std::string> header = {"input"};
    header.insert(header.end(), result.pair_labels.begin(),
                  result.pair_labels.end());
    std::vector<std::vector<std::string>> rows;
    for (int r = 0; r < block.rows(); ++r) {
      std::vector<std::string> cells = {result.input_labels[r]};
      for (int c = 0; c < block.cols(); ++c)
        cells.push_back(csv_number(block(r, c)));
      rows.push_back(std::move(cells));
    }
    write_csv(cfg.out_dir + "/" + name, header, rows);
    add_manifest_file(m, cfg.out_dir, name);
  };
  write_block("contrast.csv", result.contrast);
  write_block("contrast_sigma.csv", result.sigma);
  write_block("counts_near.csv", counts_near);
  write_block("counts_far.csv", counts_far);

  write_image(cfg.out_dir, "speckle_h.pgm",
              lab.intensity_image(PhotonSelect::H, cfg.camera_exposure_s), m);
  write_image(cfg.out_dir, "speckle_v.pgm",
              lab.intensity_image(PhotonSelect::V, cfg.camera_exposure_s), m);
  write_image(cfg.out_dir, "speckle_both.pgm", speckle_both, m);

  int valid_entries = 0;
  double sum_abs = 0.0;
  for (int r = 0; r < result.contrast.rows(); ++r) {
    for (int c = 0; c < result.contrast.cols(); ++c) {
      if (result.valid[r][c]) {
        ++valid_entries;
        sum_abs += std::abs(result.contrast(r, c));
      }
    }
  }
  nlohmann::ordered_json summary;
  summary["inputs"] = result.input_labels;
  summary["pairs"] = result.pair_labels;
  summary["duration_s"] = cfg.matrix_duration_s;
  summary["delta_near_mm"] = cfg.delta_near_mm;
  summary["delta_far_mm"] = cfg.delta_far_mm;
  summary["visibility_near"] = mutual_coherence(cfg.source, cfg.delta_near_mm);
  summary["visibility_far"] = mutual_coherence(cfg.source, cfg.delta_far_mm);
  summary["valid_entries"] = valid_entries;
  summary["mean_abs_contrast"] =
      valid_entries ? sum_abs / valid_entries
                    : std::numeric_limits<double>::quiet_NaN();
  summary["speckle_grain_count"] = result.grain_count;
  summary["speckle_contrast"] = result.speckle_contrast_both;
  write_json(cfg.out_dir, "ttm_summary.json", summary, m);

  write_manifest(cfg.out_dir, m);
  return result;
}

FocusResult run_focus(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  LabState lab = make_lab(cfg);

  FocusResult result;
  result.window_f1 = scan_window(cfg.target_f1, cfg.scan_span, cfg.fiber.n_out);
  result.window_f2 = scan_window(cfg.target_f2, cfg.scan_span, cfg.fiber.n_out);
  for (int x : result.window_f1) {
    if (std::count(result.window_f2.begin(), result.window_f2.end(), x)) {
      throw ConfigError(
          "focus: scan windows overlap; move the targets apart or shrink "
          "focus.scan_span");
    }
  }

  RunManifest m = base_manifest(cfg, "focus");

  // flat-input reference frames set the speckle baseline for the
  // enhancement figures
  IntensityImage flat_h = lab.intensity_image(PhotonSelect::H, cfg.camera_exposure_s);
  IntensityImage flat_v = lab.intensity_image(PhotonSelect::V, cfg.camera_exposure_s);
  write_image(cfg.out_dir, "image_flat_h.pgm", flat_h, m);
  write_image(cfg.out_dir, "image_flat_v.pgm", flat_v, m);
  double flat_mean_h = flat_h.counts.mean();
  double flat_mean_v = flat_v.counts.mean();

  TransmissionMatrix tm = control_matrix(lab, cfg, &result.tm_fidelity);

  auto scan_csv = [&](const std::string& name, const RMat& rates) {
    std::vector<std::string> header = {"x"};
    for (int y : result.window_f2) header.push_back("y" + std::to_string(y));
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < result.window_f1.size(); ++i) {
      std::vector<std::string> cells = {std::to_string(result.window_f1[i])};
      for (int c = 0; c < rates.cols(); ++c)
        cells.push_back(csv_number(rates(static_cast<int>(i), c)));
      rows.push_back(std::move(cells));
    }
    write_csv(cfg.out_dir + "/" + name, header, rows);
    add_manifest_file(m, cfg.out_dir, name);
  };

  auto run_config = [&](const std::string& name, const SlmPattern& mask_h,
                        const SlmPattern& mask_v) {
    FocusConfigResult r;
    r.name = name;
    lab.set_slm(SlmHalf::H, mask_h);
    lab.set_slm(SlmHalf::V, mask_v);

    IntensityImage img_h = lab.intensity_image(PhotonSelect::H, cfg.camera_exposure_s);
    IntensityImage img_v = lab.intensity_image(PhotonSelect::V, cfg.camera_exposure_s);
    write_image(cfg.out_dir, "image_" + name + "_h.pgm", img_h, m);
    write_image(cfg.out_dir, "image_" + name + "_v.pgm", img_v, m);
    write_image(cfg.out_dir, "image_" + name + "_both.pgm",
                lab.intensity_image(PhotonSelect::Both, cfg.camera_exposure_s), m);
    r.intensity_enhancement_h =
        flat_mean_h > 0 ? img_h.counts[cfg.target_f1] / flat_mean_h : 0.0;
    r.intensity_enhancement_v =
        flat_mean_v > 0 ? img_v.counts[cfg.target_f2] / flat_mean_v : 0.0;

    const int nx = static_cast<int>(result.window_f1.size());
    const int ny = static_cast<int>(result.window_f2.size());
    r.scan_near.resize(nx, ny);
    r.scan_far.resize(nx, ny);
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        lab.set_delay(cfg.delta_near_mm);
        r.scan_near(i, j) = lab.count_coincidences(result.window_f1[i],
                                                   result.window_f2[j],
                                                   cfg.scan_duration_s)
                                .rate;
        lab.set_delay(cfg.delta_far_mm);
        r.scan_far(i, j) = lab.count_coincidences(result.window_f1[i],
                                                  result.window_f2[j],
                                                  cfg.scan_duration_s)
                               .rate;
      }
    }
    scan_csv("scan_" + name + "_near.csv", r.scan_near);
    scan_csv("scan_" + name + "_far.csv", r.scan_far);

    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        if (result.window_f1[i] == cfg.target_f1 &&
            result.window_f2[j] == cfg.target_f2) {
          r.target_rate_near = r.scan_near(i, j);
          r.target_rate_far = r.scan_far(i, j);
        } else {
          sum += r.scan_near(i, j);
          ++count;
        }
      }
    }
    r.background_mean_rate = count ? sum / count : 0.0;
    r.coincidence_enhancement =
        r.background_mean_rate > 0
            ? r.target_rate_near / r.background_mean_rate
            : std::numeric_limits<double>::quiet_NaN();
    r.contrast = r.target_rate_far > 0
                     ? nonclassical_contrast(r.target_rate_near, r.target_rate_far)
                     : std::numeric_limits<double>::quiet_NaN();
    r.singles_f1 = lab.singles_rate(cfg.target_f1, DetectorArm::F1);
    r.singles_f2 = lab.singles_rate(cfg.target_f2, DetectorArm::F2);
    return r;
  };

  auto [ind_h, ind_v] = focus_independent(tm, cfg.target_f1, cfg.target_f2);
  result.independent = run_config("independent", ind_h, ind_v);

  SuperpositionTarget target;
  target.x = cfg.target_f1;
  target.y = cfg.target_f2;
  auto [sup_h, sup_v] = superposition_masks(tm, target);
  result.superposition = run_config("superposition", sup_h, sup_v);

  nlohmann::ordered_json summary;
  summary["control_tm"] = cfg.control_tm;
  summary["tm_fidelity"] = result.tm_fidelity;
  summary["target_f1"] = cfg.target_f1;
  summary["target_f2"] = cfg.target_f2;
  for (const FocusConfigResult* r : {&result.independent, &result.superposition}) {
    nlohmann::ordered_json jr;
    jr["target_rate_near"] = r->target_rate_near;
    jr["target_rate_far"] = r->target_rate_far;
    jr["contrast"] = r->contrast;
    jr["background_mean_rate"] = r->background_mean_rate;
    jr["coincidence_enhancement"] = r->coincidence_enhancement;
    jr["intensity_enhancement_h"] = r->intensity_enhancement_h;
    jr["intensity_enhancement_v"] = r->intensity_enhancement_v;
    jr["singles_f1"] = r->singles_f1;
    jr["singles_f2"] = r->singles_f2;
    summary[r->name] = jr;
  }
  write_json(cfg.out_dir, "focus_summary.json", summary, m);

  write_manifest(cfg.out_dir, m);
  return result;
}

PhaseGridResult run_phase_grid(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  LabState lab = make_lab(cfg);

  PhaseGridResult result;
  const int n = cfg.phase_grid_size;
  for (int k = 0; k < n; ++k) result.phases.push_back(kTwoPi * k / n);
  result.contrast.resize(n, n);

  TransmissionMatrix tm = control_matrix(lab, cfg, nullptr);

  RMat rate_near(n, n), rate_far(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      SuperpositionTarget target;
      target.x = cfg.target_f1;
      target.y = cfg.target_f2;
      target.phase_h = result.phases[a];
      target.phase_v = result.phases[b];
      auto [mask_h, mask_v] = superposition_masks(tm, target);
      lab.set_slm(SlmHalf::H, mask_h);
      lab.set_slm(SlmHalf::V, mask_v);
      lab.set_delay(cfg.delta_near_mm);
      rate_near(a, b) =
          lab.count_coincidences(cfg.target_f1, cfg.target_f2, cfg.scan_duration_s)
              .rate;
      lab.set_delay(cfg.delta_far_mm);
      rate_far(a, b) =
          lab.count_coincidences(cfg.target_f1, cfg.target_f2, cfg.scan_duration_s)
              .rate;
      result.contrast(a, b) =
          rate_far(a, b) > 0
              ? nonclassical_contrast(rate_near(a, b), rate_far(a, b))
              : std::numeric_limits<double>::quiet_NaN();
    }
  }

  result.fit = fit_phase_law(result.contrast, result.phases, result.phases);

  RunManifest m = base_manifest(cfg, "phase-grid");
  std::vector<std::vector<std::string>> rows;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      rows.push_back({csv_number(result.phases[a]), csv_number(result.phases[b]),
                      csv_number(rate_near(a, b)), csv_number(rate_far(a, b)),
                      csv_number(result.contrast(a, b))});
    }
  }
  write_csv(cfg.out_dir + "/phase_grid.csv",
            {"phi_h", "phi_v", "rate_near", "rate_far", "contrast"}, rows);
  add_manifest_file(m, cfg.out_dir, "phase_grid.csv");

  nlohmann::ordered_json fit;
  fit["grid_size"] = n;
  fit["amplitude"] = result.fit.amplitude;
  fit["phase_offset"] = result.fit.phase_offset;
  fit["correlation"] = result.fit.correlation;
  fit["visibility_v0"] = cfg.source.visibility_v0;
  write_json(cfg.out_dir, "phase_fit.json", fit, m);

  write_manifest(cfg.out_dir, m);
  return result;
}

HomScanResult run_hom_scan(const ExperimentConfig& cfg) {
  ensure_dir(cfg.out_dir);
  LabState lab = make_lab(cfg);

  TransmissionMatrix tm = control_matrix(lab, cfg, nullptr);

  struct Setting {
    const char* name;
    double phase_v;
  };
  const Setting settings[] = {
      {"inphase", 0.0}, {"quadrature", kPi / 2.0}, {"antiphase", kPi}};

  RunManifest m = base_manifest(cfg, "hom-scan");
  HomScanResult result;

  for (const Setting& s : settings) {
    HomSettingResult r;
    r.name = s.name;
    r.phase_h = 0.0;
    r.phase_v = s.phase_v;
    r.deltas_mm = cfg.hom_deltas_mm;

    SuperpositionTarget target;
    target.x = cfg.target_f1;
    target.y = cfg.target_f2;
    target.phase_h = r.phase_h;
    target.phase_v = r.phase_v;
    auto [mask_h, mask_v] = superposition_masks(tm, target);
    lab.set_slm(SlmHalf::H, mask_h);
    lab.set_slm(SlmHalf::V, mask_v);

    std::vector<std::vector<std::string>> rows;
    std::vector<double> counts, sigmas;
    for (double delta : r.deltas_mm) {
      lab.set_delay(delta);
      CoincidenceResult c =
          lab.count_coincidences(cfg.target_f1, cfg.target_f2, cfg.scan_duration_s);
      r.rates.push_back(c.rate);
      counts.push_back(c.counts);
      sigmas.push_back(c.sigma);
      rows.push_back({csv_number(delta), csv_number(c.counts),
                      csv_number(c.rate), csv_number(c.sigma)});
    }
    std::string csv_name = std::string("hom_") + s.name + ".csv";
    write_csv(cfg.out_dir + "/" + csv_name,
              {"delta_mm", "counts", "rate", "sigma"}, rows);
    add_manifest_file(m, cfg.out_dir, csv_name);

    // near point: smallest |delta|; far baseline: everything beyond the
    // configured far delay (fallback: the farthest point measured)
    std::size_t near_idx = 0;
    double best = std::abs(r.deltas_mm[0]);
    double far_cut = std::abs(cfg.delta_far_mm);
    double far_sum = 0.0;
    int far_n = 0;
    double max_abs = 0.0;
    for (std::size_t i = 0; i < r.deltas_mm.size(); ++i) {
      double a = std::abs(r.deltas_mm[i]);
      if (a < best) {
        best = a;
        near_idx = i;
      }
      max_abs = std::max(max_abs, a);
      if (far_cut > 0 && a >= far_cut) {
        far_sum += r.rates[i];
        ++far_n;
      }
    }
    if (far_n == 0) {
      for (std::size_t i = 0; i < r.deltas_mm.size(); ++i) {
        if (std::abs(r.deltas_mm[i]) == max_abs) {
          far_sum += r.rates[i];
          ++far_n;
        }
      }
    }
    double r_far = far_n ? far_sum / far_n : 0.0;
    r.contrast = r_far > 0
                     ? nonclassical_contrast(r.rates[near_idx], r_far)
                     : std::numeric_limits<double>::quiet_NaN();
    if (std::isnan(r.contrast)) {
      r.classification = "degenerate";
    } else if (r.contrast > 0.3) {
      r.classification = "peak";
    } else if (r.contrast < -0.3) {
      r.classification = "dip";
    } else {
      r.classification = "flat";
    }
    double lo = *std::min_element(r.rates.begin(), r.rates.end());
    double hi = *std::max_element(r.rates.begin(), r.rates.end());
    double mean =
        std::accumulate(r.rates.begin(), r.rates.end(), 0.0) / r.rates.size();
    r.variation = mean > 0 ? (hi - lo) / mean : 0.0;

    result.settings.push_back(std::move(r));
  }

  nlohmann::ordered_json summary;
  for (const HomSettingResult& r : result.settings) {
    nlohmann::ordered_json jr;
    jr["phase_h"] = r.phase_h;
    jr["phase_v"] = r.phase_v;
    jr["contrast"] = r.contrast;
    jr["classification"] = r.classification;
    jr["variation"] = r.variation;
    summary[r.name] = jr;
  }
  write_json(cfg.out_dir, "hom_summary.json", summary, m);

  write_manifest(cfg.out_dir, m);
  return result;
}

}  // namespace qwlab
