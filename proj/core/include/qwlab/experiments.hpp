#pragma once

#include <string>
#include <vector>

#include "qwlab/config.hpp"
#include "qwlab/control.hpp"
#include "qwlab/tmrecon.hpp"
#include "qwlab/ttm.hpp"
#include "qwlab/virtlab.hpp"

namespace qwlab {

/*
 * The five canned experiment drivers behind the CLI subcommands.  Each one
 * builds a fresh virtual bench from the configuration, runs the protocol,
 * writes its artifacts plus a manifest into cfg.out_dir, and returns the
 * numbers so tests can assert on them without re-parsing files.
 */

struct MeasureTmResult {
  ReconstructedTM recon;
  double fidelity_vs_oracle = 0.0;
  std::string qwtm_path;
};

MeasureTmResult run_measure_tm(const ExperimentConfig& cfg);

struct TtmMatrixResult {
  RMat contrast;  // rows = basis pair inputs, cols = detector pairs
  RMat sigma;
  std::vector<std::vector<bool>> valid;
  std::vector<std::string> input_labels;
  std::vector<std::string> pair_labels;
  double grain_count = 0.0;
  double speckle_contrast_both = 0.0;
};

TtmMatrixResult run_ttm_matrix(const ExperimentConfig& cfg);

struct FocusConfigResult {
  std::string name;
  double target_rate_near = 0.0;
  double target_rate_far = 0.0;
  double contrast = 0.0;  // NaN when the far rate vanishes
  double background_mean_rate = 0.0;  // scan cells excluding the target
  double coincidence_enhancement = 0.0;
  // focused spot intensity over the mean of the flat-input image
  double intensity_enhancement_h = 0.0;
  double intensity_enhancement_v = 0.0;
  double singles_f1 = 0.0;
  double singles_f2 = 0.0;
  RMat scan_near;  // rates over the f1 window x the f2 window
  RMat scan_far;
};

struct FocusResult {
  FocusConfigResult independent;
  FocusConfigResult superposition;
  std::vector<int> window_f1;
  std::vector<int> window_f2;
  double tm_fidelity = 1.0;  // 1.0 exactly when control.tm = oracle
};

FocusResult run_focus(const ExperimentConfig& cfg);

struct PhaseGridResult {
  RMat contrast;  // phase_grid_size x phase_grid_size
  std::vector<double> phases;
  CosineFit fit;
};

PhaseGridResult run_phase_grid(const ExperimentConfig& cfg);

struct HomSettingResult {
  std::string name;
  double phase_h = 0.0;
  double phase_v = 0.0;
  std::vector<double> deltas_mm;
  std::vector<double> rates;
  double contrast = 0.0;
  std::string classification;  // peak | dip | flat
  double variation = 0.0;      // (max - min) / mean over the scan
};

struct HomScanResult {
  std::vector<HomSettingResult> settings;
};

HomScanResult run_hom_scan(const ExperimentConfig& cfg);

}  // namespace qwlab
