// qwlab: command-line front end for the virtual two-photon fiber bench.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 degenerate physics
// (an observable the requested settings cannot produce), 1 anything else.

#include <cstdio>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "qwlab/artifacts.hpp"
#include "qwlab/config.hpp"
#include "qwlab/experiments.hpp"
#include "qwlab/version.hpp"

namespace {

std::string num(double v, const char* fmt = "%.6g") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

int dispatch(const std::string& command, const qwlab::ExperimentConfig& cfg) {
  using namespace qwlab;
  if (command == "measure-tm") {
    MeasureTmResult r = run_measure_tm(cfg);
    std::cout << "measure-tm: fidelity_vs_oracle=" << num(r.fidelity_vs_oracle)
              << " unreliable_rows=" << r.recon.unreliable_count()
              << " wrote " << r.qwtm_path << "\n";
  } else if (command == "ttm-matrix") {
    TtmMatrixResult r = run_ttm_matrix(cfg);
    int valid = 0;
    for (const auto& row : r.valid)
      for (bool v : row) valid += v ? 1 : 0;
    std::cout << "ttm-matrix: inputs=" << r.input_labels.size()
              << " pairs=" << r.pair_labels.size() << " valid_entries=" << valid
              << " grain_count=" << num(r.grain_count) << "\n";
  } else if (command == "focus") {
    FocusResult r = run_focus(cfg);
    std::cout << "focus independent: enhancement="
              << num(r.independent.coincidence_enhancement)
              << " contrast=" << num(r.independent.contrast) << "\n";
    std::cout << "focus superposition: enhancement="
              << num(r.superposition.coincidence_enhancement)
              << " contrast=" << num(r.superposition.contrast) << "\n";
  } else if (command == "phase-grid") {
    PhaseGridResult r = run_phase_grid(cfg);
    std::cout << "phase-grid: amplitude=" << num(r.fit.amplitude)
              << " phase_offset=" << num(r.fit.phase_offset)
              << " correlation=" << num(r.fit.correlation) << "\n";
  } else if (command == "hom-scan") {
    HomScanResult r = run_hom_scan(cfg);
    std::cout << "hom-scan:";
    for (const auto& s : r.settings) {
      std::cout << " " << s.name << "=" << s.classification
                << "(C=" << num(s.contrast) << ")";
    }
    std::cout << "\n";
  } else {
    return 2;  // unreachable: CLI11 validates the subcommand
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtual laboratory for two-photon interference in a "
               "multimode fiber"};
  app.set_version_flag("--version", qwlab::kVersionString);
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string verify_path;
  std::string noise;
  std::uint64_t seed = 0;
  std::string out_dir;

  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "master seed (overrides the config file)");
  app.add_option("--noise", noise, "counting noise: off or poisson")
      ->check(CLI::IsMember({"off", "poisson"}));
  app.add_option("--out", out_dir, "output directory for run artifacts");
  app.add_option("--verify", verify_path,
                 "check a run manifest against the files on disk and exit");

  const char* commands[] = {"measure-tm", "ttm-matrix", "focus", "phase-grid",
                            "hom-scan"};
  const char* descriptions[] = {
      "interferometric transmission-matrix measurement",
      "coincidence contrast over basis input pairs",
      "two-photon focusing, independent and superposed targets",
      "contrast versus the two SLM superposition phases",
      "coincidence rate versus pair delay at three phase settings"};
  for (int i = 0; i < 5; ++i) {
    app.add_subcommand(commands[i], descriptions[i])->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (!verify_path.empty()) {
      bool ok = qwlab::verify_manifest(verify_path, std::cout);
      std::cout << (ok ? "verify: OK\n" : "verify: FAILED\n");
      return ok ? 0 : 1;
    }

    auto subs = app.get_subcommands();
    if (subs.empty()) {
      std::cerr << app.help();
      return 2;
    }

    std::map<std::string, std::string> file_kv;
    if (!config_path.empty()) file_kv = qwlab::parse_config_file(config_path);
    qwlab::CliOverrides overrides;
    if (app.count("--seed")) {
      overrides.has_seed = true;
      overrides.seed = seed;
    }
    if (app.count("--noise")) {
      overrides.has_noise = true;
      overrides.poisson = noise == "poisson";
    }
    if (app.count("--out")) {
      overrides.has_out = true;
      overrides.out_dir = out_dir;
    }
    qwlab::ExperimentConfig cfg = qwlab::resolve_config(file_kv, overrides);

    return dispatch(subs.front()->get_name(), cfg);
  } catch (const qwlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "degenerate physics: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
