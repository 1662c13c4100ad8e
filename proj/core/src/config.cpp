#include "qwlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qwlab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" +
                      value + "'");
  }
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key +
                      "' expects a non-negative integer, got '" + value + "'");
  }
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) {
      throw std::invalid_argument(value);
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a number, got '" +
                      value + "'");
  }
}

std::vector<int> to_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      throw ConfigError("config: key '" + key + "' has an empty list entry");
    }
    out.push_back(static_cast<int>(to_int(key, item)));
  }
  if (out.empty()) {
    throw ConfigError("config: key '" + key + "' expects a comma list");
  }
  return out;
}

std::vector<double> to_double_list(const std::string& key,
                                   const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) {
      throw ConfigError("config: key '" + key + "' has an empty list entry");
    }
    out.push_back(to_double(key, item));
  }
  if (out.empty()) {
    throw ConfigError("config: key '" + key + "' expects a comma list");
  }
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "seed",
      "noise",
      "out",
      "fiber.n_in_h",
      "fiber.n_in_v",
      "fiber.n_out",
      "fiber.ambient_dim",
      "fiber.seed",
      "source.wavelength_nm",
      "source.filter_fwhm_nm",
      "source.visibility_v0",
      "source.coherence_scale_mm",
      "source.pair_rate",
      "detector.window_s",
      "detector.dark_rate",
      "detector.efficiency",
      "detector.seed",
      "delta.near_mm",
      "delta.far_mm",
      "duration.matrix_s",
      "duration.scan_s",
      "tm.phase_steps",
      "tm.reference",
      "tm.reference_mode",
      "tm.exposure_s",
      "tm.flux",
      "ttm.inputs_h",
      "ttm.inputs_v",
      "ttm.f1",
      "ttm.f2",
      "focus.target_f1",
      "focus.target_f2",
      "focus.scan_span",
      "phasegrid.size",
      "homscan.deltas_mm",
      "control.tm",
      "camera.exposure_s",
  };
  return keys;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        " is not of the form 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config: line " + std::to_string(line_no) +
                        " has an empty key");
    }
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    throw ConfigError("config: cannot open '" + path + "'");
  }
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::vector<double> default_hom_deltas() {
  std::vector<double> deltas;
  for (int i = 0; i <= 40; ++i) {
    deltas.push_back(-0.5 + 0.025 * i);
  }
  return deltas;
}

ExperimentConfig resolve_config(const std::map<std::string, std::string>& file_kv,
                                const CliOverrides& overrides) {
  for (const auto& [key, value] : file_kv) {
    (void)value;
    if (!known_keys().count(key)) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  ExperimentConfig cfg;
  cfg.hom_deltas_mm = default_hom_deltas();

  auto get = [&](const char* key) -> const std::string* {
    auto it = file_kv.find(key);
    return it == file_kv.end() ? nullptr : &it->second;
  };

  if (const auto* v = get("seed")) cfg.master_seed = to_u64("seed", *v);
  if (overrides.has_seed) cfg.master_seed = overrides.seed;

  std::string noise = "off";
  if (const auto* v = get("noise")) noise = *v;
  if (overrides.has_noise) noise = overrides.poisson ? "poisson" : "off";
  if (noise == "off") {
    cfg.poisson = false;
  } else if (noise == "poisson") {
    cfg.poisson = true;
  } else {
    throw ConfigError("config: noise must be 'off' or 'poisson', got '" + noise +
                      "'");
  }

  if (const auto* v = get("out")) cfg.out_dir = *v;
  if (overrides.has_out) cfg.out_dir = overrides.out_dir;
  if (cfg.out_dir.empty()) throw ConfigError("config: out directory is empty");

  if (const auto* v = get("fiber.n_in_h"))
    cfg.fiber.n_in_h = static_cast<int>(to_int("fiber.n_in_h", *v));
  if (const auto* v = get("fiber.n_in_v"))
    cfg.fiber.n_in_v = static_cast<int>(to_int("fiber.n_in_v", *v));
  if (const auto* v = get("fiber.n_out"))
    cfg.fiber.n_out = static_cast<int>(to_int("fiber.n_out", *v));
  if (const auto* v = get("fiber.ambient_dim"))
    cfg.fiber.ambient_dim = static_cast<int>(to_int("fiber.ambient_dim", *v));
  cfg.fiber.seed = cfg.master_seed;
  if (const auto* v = get("fiber.seed")) cfg.fiber.seed = to_u64("fiber.seed", *v);

  if (const auto* v = get("source.wavelength_nm"))
    cfg.source.wavelength_nm = to_double("source.wavelength_nm", *v);
  if (const auto* v = get("source.filter_fwhm_nm"))
    cfg.source.filter_fwhm_nm = to_double("source.filter_fwhm_nm", *v);
  if (const auto* v = get("source.visibility_v0"))
    cfg.source.visibility_v0 = to_double("source.visibility_v0", *v);
  if (const auto* v = get("source.coherence_scale_mm"))
    cfg.source.coherence_scale_mm = to_double("source.coherence_scale_mm", *v);
  if (const auto* v = get("source.pair_rate"))
    cfg.source.pair_rate = to_double("source.pair_rate", *v);

  if (const auto* v = get("detector.window_s"))
    cfg.detector.coincidence_window_s = to_double("detector.window_s", *v);
  if (const auto* v = get("detector.dark_rate"))
    cfg.detector.dark_rate = to_double("detector.dark_rate", *v);
  if (const auto* v = get("detector.efficiency"))
    cfg.detector.efficiency = to_double("detector.efficiency", *v);
  cfg.detector.seed = cfg.master_seed;
  if (const auto* v = get("detector.seed"))
    cfg.detector.seed = to_u64("detector.seed", *v);
  cfg.detector.noise_mode = cfg.poisson ? NoiseMode::Poisson : NoiseMode::Noiseless;

  if (const auto* v = get("delta.near_mm"))
    cfg.delta_near_mm = to_double("delta.near_mm", *v);
  if (const auto* v = get("delta.far_mm"))
    cfg.delta_far_mm = to_double("delta.far_mm", *v);
  if (const auto* v = get("duration.matrix_s"))
    cfg.matrix_duration_s = to_double("duration.matrix_s", *v);
  if (const auto* v = get("duration.scan_s"))
    cfg.scan_duration_s = to_double("duration.scan_s", *v);

  if (const auto* v = get("tm.phase_steps"))
    cfg.tm_phase_steps = static_cast<int>(to_int("tm.phase_steps", *v));
  if (const auto* v = get("tm.reference")) cfg.tm_reference = *v;
  if (const auto* v = get("tm.reference_mode"))
    cfg.tm_reference_mode = static_cast<int>(to_int("tm.reference_mode", *v));
  if (const auto* v = get("tm.exposure_s"))
    cfg.tm_exposure_s = to_double("tm.exposure_s", *v);
  if (const auto* v = get("tm.flux")) cfg.tm_flux = to_double("tm.flux", *v);

  if (const auto* v = get("ttm.inputs_h"))
    cfg.ttm_inputs_h = to_int_list("ttm.inputs_h", *v);
  if (const auto* v = get("ttm.inputs_v"))
    cfg.ttm_inputs_v = to_int_list("ttm.inputs_v", *v);
  if (const auto* v = get("ttm.f1")) cfg.f1_positions = to_int_list("ttm.f1", *v);
  if (const auto* v = get("ttm.f2")) cfg.f2_positions = to_int_list("ttm.f2", *v);

  if (const auto* v = get("focus.target_f1"))
    cfg.target_f1 = static_cast<int>(to_int("focus.target_f1", *v));
  if (const auto* v = get("focus.target_f2"))
    cfg.target_f2 = static_cast<int>(to_int("focus.target_f2", *v));
  if (const auto* v = get("focus.scan_span"))
    cfg.scan_span = static_cast<int>(to_int("focus.scan_span", *v));
  if (const auto* v = get("phasegrid.size"))
    cfg.phase_grid_size = static_cast<int>(to_int("phasegrid.size", *v));
  if (const auto* v = get("homscan.deltas_mm"))
    cfg.hom_deltas_mm = to_double_list("homscan.deltas_mm", *v);
  if (const auto* v = get("control.tm")) cfg.control_tm = *v;
  if (const auto* v = get("camera.exposure_s"))
    cfg.camera_exposure_s = to_double("camera.exposure_s", *v);

  // structural validation; library-level validate() calls catch the rest
  try {
    cfg.fiber.validate();
    cfg.source.validate();
    cfg.detector.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.tm_reference != "internal" && cfg.tm_reference != "external") {
    throw ConfigError("config: tm.reference must be 'internal' or 'external'");
  }
  if (cfg.control_tm != "measured" && cfg.control_tm != "oracle") {
    throw ConfigError("config: control.tm must be 'measured' or 'oracle'");
  }
  if (cfg.tm_phase_steps < 3) {
    throw ConfigError("config: tm.phase_steps must be >= 3");
  }
  if (cfg.tm_reference == "internal" &&
      (cfg.tm_reference_mode < 0 || cfg.tm_reference_mode >= cfg.fiber.n_in())) {
    throw ConfigError("config: tm.reference_mode out of range");
  }
  if (!(cfg.matrix_duration_s > 0) || !(cfg.scan_duration_s > 0)) {
    throw ConfigError("config: durations must be > 0");
  }
  if (!(cfg.camera_exposure_s > 0) || !(cfg.tm_exposure_s > 0) ||
      !(cfg.tm_flux > 0)) {
    throw ConfigError("config: exposures and flux must be > 0");
  }
  if (cfg.phase_grid_size < 2) {
    throw ConfigError("config: phasegrid.size must be >= 2");
  }
  if (cfg.scan_span < 1 || cfg.scan_span % 2 == 0) {
    throw ConfigError("config: focus.scan_span must be odd and >= 1");
  }

  auto check_positions = [&](const char* key, const std::vector<int>& v) {
    for (int p : v) {
      if (p < 0 || p >= cfg.fiber.n_out) {
        throw ConfigError(std::string("config: ") + key +
                          " position out of range");
      }
    }
  };
  check_positions("ttm.f1", cfg.f1_positions);
  check_positions("ttm.f2", cfg.f2_positions);
  for (int p : cfg.f1_positions) {
    if (std::count(cfg.f2_positions.begin(), cfg.f2_positions.end(), p)) {
      throw ConfigError("config: ttm.f1 and ttm.f2 must be disjoint");
    }
  }
  for (int i : cfg.ttm_inputs_h) {
    if (i < 0 || i >= cfg.fiber.n_in_h) {
      throw ConfigError("config: ttm.inputs_h mode out of range");
    }
  }
  for (int i : cfg.ttm_inputs_v) {
    if (i < 0 || i >= cfg.fiber.n_in_v) {
      throw ConfigError("config: ttm.inputs_v mode out of range");
    }
  }
  if (cfg.target_f1 < 0 || cfg.target_f1 >= cfg.fiber.n_out ||
      cfg.target_f2 < 0 || cfg.target_f2 >= cfg.fiber.n_out) {
    throw ConfigError("config: focus targets out of range");
  }
  if (cfg.target_f1 == cfg.target_f2) {
    throw ConfigError("config: focus targets must be distinct");
  }

  // the output location is deliberately not echoed: manifests live inside
  // the run directory and must not depend on where that directory is
  cfg.resolved["seed"] = std::to_string(cfg.master_seed);
  cfg.resolved["noise"] = cfg.poisson ? "poisson" : "off";
  cfg.resolved["fiber.n_in_h"] = std::to_string(cfg.fiber.n_in_h);
  cfg.resolved["fiber.n_in_v"] = std::to_string(cfg.fiber.n_in_v);
  cfg.resolved["fiber.n_out"] = std::to_string(cfg.fiber.n_out);
  cfg.resolved["fiber.ambient_dim"] = std::to_string(cfg.fiber.resolved_ambient());
  cfg.resolved["fiber.seed"] = std::to_string(cfg.fiber.seed);
  cfg.resolved["source.wavelength_nm"] = format_double(cfg.source.wavelength_nm);
  cfg.resolved["source.filter_fwhm_nm"] = format_double(cfg.source.filter_fwhm_nm);
  cfg.resolved["source.visibility_v0"] = format_double(cfg.source.visibility_v0);
  cfg.resolved["source.coherence_scale_mm"] =
      format_double(cfg.source.coherence_scale_mm);
  cfg.resolved["source.pair_rate"] = format_double(cfg.source.pair_rate);
  cfg.resolved["detector.window_s"] =
      format_double(cfg.detector.coincidence_window_s);
  cfg.resolved["detector.dark_rate"] = format_double(cfg.detector.dark_rate);
  cfg.resolved["detector.efficiency"] = format_double(cfg.detector.efficiency);
  cfg.resolved["detector.seed"] = std::to_string(cfg.detector.seed);
  cfg.resolved["delta.near_mm"] = format_double(cfg.delta_near_mm);
  cfg.resolved["delta.far_mm"] = format_double(cfg.delta_far_mm);
  cfg.resolved["duration.matrix_s"] = format_double(cfg.matrix_duration_s);
  cfg.resolved["duration.scan_s"] = format_double(cfg.scan_duration_s);
  cfg.resolved["tm.phase_steps"] = std::to_string(cfg.tm_phase_steps);
  cfg.resolved["tm.reference"] = cfg.tm_reference;
  cfg.resolved["tm.reference_mode"] = std::to_string(cfg.tm_reference_mode);
  cfg.resolved["tm.exposure_s"] = format_double(cfg.tm_exposure_s);
  cfg.resolved["tm.flux"] = format_double(cfg.tm_flux);
  cfg.resolved["ttm.inputs_h"] = join_ints(cfg.ttm_inputs_h);
  cfg.resolved["ttm.inputs_v"] = join_ints(cfg.ttm_inputs_v);
  cfg.resolved["ttm.f1"] = join_ints(cfg.f1_positions);
  cfg.resolved["ttm.f2"] = join_ints(cfg.f2_positions);
  cfg.resolved["focus.target_f1"] = std::to_string(cfg.target_f1);
  cfg.resolved["focus.target_f2"] = std::to_string(cfg.target_f2);
  cfg.resolved["focus.scan_span"] = std::to_string(cfg.scan_span);
  cfg.resolved["phasegrid.size"] = std::to_string(cfg.phase_grid_size);
  cfg.resolved["homscan.deltas_mm"] = join_doubles(cfg.hom_deltas_mm);
  cfg.resolved["control.tm"] = cfg.control_tm;
  cfg.resolved["camera.exposure_s"] = format_double(cfg.camera_exposure_s);

  return cfg;
}

}  // namespace qwlab
