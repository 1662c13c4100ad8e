#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qwlab/virtlab.hpp"

namespace qwlab {

// anything wrong with user-supplied configuration; the CLI maps this to
// exit code 2
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/*
 * Flat `key = value` configuration format.  `#` starts a comment, blank
 * lines are ignored, later assignments win.  Unknown keys are rejected so
 * typos fail loudly instead of silently running defaults.
 */
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

// fully resolved run configuration: defaults, then config file, then
// command-line overrides
struct ExperimentConfig {
  FiberConfig fiber;
  SourceModel source;
  DetectorModel detector;

  std::uint64_t master_seed = 1;
  bool poisson = false;
  std::string out_dir = "qwlab-out";

  double delta_near_mm = 0.0;
  double delta_far_mm = 0.4;
  double matrix_duration_s = 900.0;
  double scan_duration_s = 290.0;

  // measure-tm
  int tm_phase_steps = 4;
  std::string tm_reference = "internal";  // internal | external
  int tm_reference_mode = 0;
  double tm_exposure_s = 0.01;
  double tm_flux = 1e6;

  // ttm-matrix: basis input modes per half and the two detector positions
  // per arm
  std::vector<int> ttm_inputs_h = {0, 1, 2, 3};
  std::vector<int> ttm_inputs_v = {0, 1, 2, 3};
  std::vector<int> f1_positions = {22, 27};
  std::vector<int> f2_positions = {72, 77};

  // focus / phase-grid / hom-scan
  int target_f1 = 22;
  int target_f2 = 77;
  int scan_span = 5;  // scan window width per arm, centered on the target
  int phase_grid_size = 8;
  std::vector<double> hom_deltas_mm;  // default: -0.5..0.5 in 41 steps
  std::string control_tm = "measured";  // measured | oracle
  double camera_exposure_s = 10.0;

  // echo of every resolved key for the run manifest
  std::map<std::string, std::string> resolved;
};

struct CliOverrides {
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool has_noise = false;
  bool poisson = false;
  bool has_out = false;
  std::string out_dir;
};

// merge defaults + file + overrides and validate; throws ConfigError
ExperimentConfig resolve_config(const std::map<std::string, std::string>& file_kv,
                                const CliOverrides& overrides);

std::vector<double> default_hom_deltas();

}  // namespace qwlab
